"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--size 30] [--repeats 3]
"""

import argparse
import time

import numpy as np

from entropic_lp import kernels
from entropic_lp.builders import ConicProblem, TransportProblem, build_conic, build_transport
from entropic_lp.dual_ascent import ascent_solve
from entropic_lp.gis import gis_augment, gis_solve
from entropic_lp.sinkhorn import sinkhorn_solve


def _transport(rng, size):
    mu = rng.integers(1, 20, size)
    nu = rng.integers(1, 20, size)
    nu[-1] += mu.sum() - nu.sum()
    if nu[-1] < 1:
        mu[-1] += 1 - nu[-1]
        nu[-1] = 1
    return TransportProblem(mu.tolist(), nu.tolist(), rng.integers(0, 10, (size, size)))


def _best(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=30, help="transport side length")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--epsilon", type=float, default=0.5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    tp = _transport(rng, args.size)
    lp = build_transport(tp)
    cost = rng.integers(0, 10, (3, 3, 3, 3))
    conic = build_conic(ConicProblem(3, 3, 3, 3, (2, 3, 1), (1, 2, 3), cost, normalized=False))
    aug = gis_augment(lp, args.epsilon)
    eps = args.epsilon
    cases = {
        f"sinkhorn {args.size}x{args.size}": lambda b: sinkhorn_solve(tp, eps, backend=b),
        f"gis {args.size}x{args.size}": lambda b: gis_solve(aug, backend=b),
        f"ascent {args.size}x{args.size}": lambda b: ascent_solve(lp, eps, backend=b, restrict_face=False),
        "ascent conic (3,3,3,3)": lambda b: ascent_solve(conic, eps, backend=b, restrict_face=False),
    }
    names = [m.BACKEND for m in kernels.available()]
    print(f"{'case':<26}" + "".join(f"{n:>12}" for n in names) + f"{'speedup':>10}{'max |dx|':>12}")
    for label, run in cases.items():
        row, sols = [], []
        for n in names:
            t, sol = _best(lambda: run(n), args.repeats)
            row.append(t)
            sols.append(sol.x)
        dx = max(float(np.max(np.abs(s - sols[0]))) for s in sols)
        speed = row[-1] / row[0] if len(row) > 1 else 1.0
        print(f"{label:<26}" + "".join(f"{t:>11.4f}s" for t in row) + f"{speed:>9.1f}x{dx:>12.1e}")


if __name__ == "__main__":
    main()
