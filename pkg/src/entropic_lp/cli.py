"""Command-line front end.

Exit codes: 0 success, 1 parse/validation failure, 2 method does not apply to
the instance, 3 solver did not converge.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .builders import ConicProblem, TransportProblem, build_conic, build_transport
from .combinatorics import ConicShape, cone_membership, conic_degree, volume_oracle
from .dual_ascent import ascent_solve
from .gis import OnesNotInRowSpace, gis_augment, gis_solve
from .model import StandardFormLP, validate
from .oracle import Infeasible, TooLarge, lp_optimum, mirror_solve
from .path import track
from .sinkhorn import sinkhorn_solve

TRACE_CSV_VERSION = 1

EXIT_OK, EXIT_INPUT, EXIT_MISMATCH, EXIT_NONCONVERGENCE = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def load_problem(path) -> tuple[str, object, StandardFormLP]:
    """Parse a problem file into ``(type, builder input or None, lp)``."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read problem file {path}: {exc}") from exc
    return parse_problem(doc)


def parse_problem(doc: dict):
    if not isinstance(doc, dict) or "type" not in doc:
        raise CliError('problem JSON must be an object with a "type" field')
    kind = doc["type"]
    try:
        if kind == "lp":
            lp = StandardFormLP(np.array(doc["A"]), doc["b"], doc["c"])
            report = validate(lp)
            if not report.ok:
                raise CliError("invalid LP: " + "; ".join(report.problems))
            return kind, None, lp
        if kind == "transport":
            tp = TransportProblem(doc["mu"], doc["nu"], doc["cost"])
            return kind, tp, build_transport(tp)
        if kind == "conic":
            cp = ConicProblem(
                doc["d1"], doc["e1"], doc["d2"], doc["e2"],
                doc["mu"], doc["nu"], doc["cost"], bool(doc.get("normalized", True)),
            )
            return kind, cp, build_conic(cp)
    except KeyError as exc:
        raise CliError(f"missing field {exc} for problem type {kind!r}") from exc
    except (ValueError, TypeError) as exc:
        raise CliError(f"invalid {kind} problem: {exc}") from exc
    raise CliError(f"unknown problem type {kind!r}")


def lp_document(lp: StandardFormLP) -> dict:
    return {
        "type": "lp",
        "A": lp.A.tolist(),
        "b": [float(v) for v in lp.b],
        "c": [float(v) for v in lp.c],
    }


def dumps(obj) -> str:
    """Canonical JSON; floats use Python's shortest round-trip repr."""
    return json.dumps(obj, sort_keys=True) + "\n"


def _fraction_str(v: Fraction) -> str:
    return str(v)


def _emit(obj, out):
    text = dumps(obj)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve(args) -> int:
    kind, inst, lp = load_problem(args.input)
    eps = args.epsilon
    if not eps > 0:
        raise CliError("--epsilon must be positive")
    kw = {"tol": args.tol}
    if args.max_iter is not None:
        kw["max_iter"] = args.max_iter
    if args.method == "sinkhorn":
        if kind != "transport":
            raise CliError("sinkhorn applies only to transport problems", EXIT_MISMATCH)
        sol = sinkhorn_solve(inst, eps, **kw)
    elif args.method == "gis":
        try:
            aug = gis_augment(lp, eps)
        except OnesNotInRowSpace as exc:
            raise CliError(f"gis not applicable: {exc}", EXIT_MISMATCH) from exc
        sol = gis_solve(aug, **kw)
    elif args.method == "ascent":
        sol = ascent_solve(lp, eps, **kw)
    else:
        sol = mirror_solve(lp, eps, **kw)
    r = sol.residuals
    _emit(
        {
            "method": sol.method,
            "epsilon": sol.epsilon,
            "x": [float(v) for v in sol.x],
            "p": [float(v) for v in sol.p],
            "iterations": sol.iterations,
            "converged": sol.converged,
            "residuals": {"primal_inf": r.primal_inf, "toric_inf": r.toric_inf, "dual_gap": r.dual_gap},
        },
        args.out,
    )
    return EXIT_OK if sol.converged else EXIT_NONCONVERGENCE


def trace_header(d: int, n: int) -> list[str]:
    return ["mu"] + [f"t_{i + 1}" for i in range(d)] + [f"x_{j + 1}" for j in range(n)] + ["cost"]


def write_trace_csv(trace, lp: StandardFormLP, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(trace_header(lp.d, lp.n))
        for s in trace.samples:
            w.writerow([repr(float(s.mu))] + [repr(float(v)) for v in s.t] + [repr(float(v)) for v in s.x] + [repr(s.cost)])


def cmd_path(args) -> int:
    _, _, lp = load_problem(args.input)
    if not args.epsilon0 > 0:
        raise CliError("--epsilon0 must be positive")
    if not 0 < args.theta < 1:
        raise CliError("--theta must lie in (0, 1)")
    trace = track(lp, args.epsilon0, theta=args.theta, mu_min=args.mu_min)
    if args.csv:
        write_trace_csv(trace, lp, args.csv)
    vertex = trace.final_vertex
    _emit(
        {
            "status": trace.status,
            "final_support": list(trace.final_support),
            "final_vertex": None if vertex is None else [float(v) for v in vertex],
            "final_vertex_exact": None if vertex is None else [_fraction_str(v) for v in vertex],
            "final_mu": trace.final.mu,
            "final_cost": trace.final.cost,
            "samples": len(trace.samples),
            "csv_version": TRACE_CSV_VERSION,
        },
        args.out,
    )
    return EXIT_NONCONVERGENCE if trace.status == "stalled" else EXIT_OK


def _shape(args) -> ConicShape:
    try:
        return ConicShape(args.d1, args.e1, args.d2, args.e2)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def cmd_degree(args) -> int:
    shape = _shape(args)
    deg = conic_degree(shape)
    print(deg)
    if args.verify:
        pts = shape.columns() + [(0,) * shape.d]
        vol = volume_oracle(pts)
        agree = vol == deg
        print(f"triangulation volume {vol}: {'agrees' if agree else 'DISAGREES'}")
        return EXIT_OK if agree else EXIT_INPUT
    return EXIT_OK


def cmd_cone(args) -> int:
    shape = _shape(args)
    try:
        y = [Fraction(v.strip()) for v in args.point.split(",")]
        res = cone_membership(shape, y)
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError(f"bad --point: {exc}") from exc
    _emit({"member": res.member, "slacks": {k: float(v) for k, v in res.slacks.items()}}, None)
    return EXIT_OK


def cmd_oracle(args) -> int:
    _, _, lp = load_problem(args.input)
    try:
        opt = lp_optimum(lp)
    except Infeasible:
        _emit({"feasible": False}, args.out)
        return EXIT_OK
    except TooLarge as exc:
        raise CliError(str(exc)) from exc
    _emit(
        {
            "feasible": True,
            "x": [float(v) for v in opt.x],
            "x_exact": [_fraction_str(v) for v in opt.x],
            "cost": float(opt.cost),
            "cost_exact": _fraction_str(opt.cost),
            "unique": opt.unique,
        },
        args.out,
    )
    return EXIT_OK


def cmd_build(args) -> int:
    _, _, lp = load_problem(args.input)
    if not args.emit_matrix:
        report = validate(lp)
        _emit({"ok": report.ok, "rank": report.rank, "d": lp.d, "n": lp.n}, None)
        return EXIT_OK
    _emit(lp_document(lp), args.out)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="entropic-lp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the entropic problem at fixed epsilon")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=["sinkhorn", "gis", "ascent", "mirror"], required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("path", help="track x*(mu) to the LP vertex")
    p.add_argument("--input", required=True)
    p.add_argument("--epsilon0", type=float, required=True)
    p.add_argument("--theta", type=float, default=0.8)
    p.add_argument("--mu-min", type=float, default=None)
    p.add_argument("--csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_path)

    for name, func, help_ in (
        ("degree", cmd_degree, "algebraic degree of conic coupling"),
        ("cone", cmd_cone, "feasibility cone membership"),
    ):
        p = sub.add_parser(name, help=help_)
        for dim in ("--d1", "--e1", "--d2", "--e2"):
            p.add_argument(dim, type=int, required=True)
        if name == "degree":
            p.add_argument("--verify", action="store_true", help="cross-check with the triangulation oracle")
        else:
            p.add_argument("--point", required=True, help='comma separated, e.g. "1,1,1,1"')
        p.set_defaults(func=func)

    p = sub.add_parser("oracle", help="exact LP optimum by vertex enumeration")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("build", help="emit the standard-form LP")
    p.add_argument("--input", required=True)
    p.add_argument("--emit-matrix", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_build)
    return ap


def run(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
