"""Brute-force reference solvers used to check everything else at desk scale.

``lp_optimum`` enumerates bases in exact rational arithmetic.
``mirror_solve`` is full-gradient ascent on the entropic dual, deliberately
unrelated to the coordinate-wise scaling methods it is compared against.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from itertools import combinations

import numpy as np

from .model import (
    EntropicSolution,
    StandardFormLP,
    exact_b,
    lift_solution,
    minimal_face,
    solution_report,
    solve_rational,
)

log = logging.getLogger(__name__)

MAX_BASES = 200_000


class Infeasible(ValueError):
    pass


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class Vertex:
    support: tuple[int, ...]
    x: tuple[Fraction, ...]
    cost: Fraction


@dataclass(frozen=True)
class VertexList:
    vertices: tuple[Vertex, ...]
    optimal_index: int


@dataclass(frozen=True)
class LPOptimum:
    x: tuple[Fraction, ...]
    cost: Fraction
    unique: bool
    vertices: VertexList

    def x_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.x])


def _exact_cost(c) -> list[Fraction]:
    return [Fraction(float(v)) for v in c]


def _candidate_bases(A: np.ndarray, b: np.ndarray, chunk: int = 20_000):
    """Nonsingular bases whose float solution is nonnegative up to round-off.

    Determinants of small integer matrices are integers, so ``|det| > 0.5``
    separates singular bases reliably at desk scale.
    """
    d, n = A.shape
    slack = 1e-9 * max(1.0, float(np.abs(b).max()))
    subsets = combinations(range(n), d)
    while True:
        batch = np.array([S for _, S in zip(range(chunk), subsets)], dtype=np.int64)
        if batch.size == 0:
            return
        B = np.transpose(A.T[batch].astype(float), (0, 2, 1))
        ok = np.abs(np.linalg.det(B)) > 0.5
        if ok.any():
            xs = np.linalg.solve(B[ok], np.broadcast_to(b, (int(ok.sum()), d))[..., None])[..., 0]
            yield from batch[ok][np.all(xs >= -slack, axis=1)]


def enumerate_vertices(lp: StandardFormLP, max_bases: int = MAX_BASES) -> VertexList:
    """All basic feasible solutions of ``{Ax = b, x >= 0}``, deduplicated.

    Bases are screened in floating point and every survivor is solved
    again in exact rational arithmetic, which alone decides feasibility.
    """
    d, n = lp.A.shape
    if math.comb(n, d) > max_bases:
        raise TooLarge(f"C({n}, {d}) = {math.comb(n, d)} bases exceeds {max_bases}")
    A = lp.A.tolist()
    b = exact_b(lp.b)
    c = _exact_cost(lp.c)
    seen = {}
    for S in _candidate_bases(lp.A, lp.b):
        S = tuple(int(j) for j in S)
        cols = [[A[i][j] for j in S] for i in range(d)]
        xs = solve_rational(cols, b)
        if xs is None or any(v < 0 for v in xs):
            continue
        x = [Fraction(0)] * n
        for j, v in zip(S, xs):
            x[j] = v
        key = tuple(x)
        if key not in seen:
            support = tuple(j for j in range(n) if x[j] != 0)
            seen[key] = Vertex(support, key, sum(cj * xj for cj, xj in zip(c, x)))
    if not seen:
        raise Infeasible("no basic feasible solution")
    verts = tuple(seen.values())
    best = min(range(len(verts)), key=lambda k: verts[k].cost)
    return VertexList(verts, best)


def lp_optimum(lp: StandardFormLP, max_bases: int = MAX_BASES) -> LPOptimum:
    """Exact optimum of ``min c.x, Ax = b, x >= 0`` by basis enumeration.

    ``unique`` is False when another vertex attains the same cost exactly.
    """
    vl = enumerate_vertices(lp, max_bases)
    best = vl.vertices[vl.optimal_index]
    ties = sum(1 for v in vl.vertices if v.cost == best.cost)
    return LPOptimum(best.x, best.cost, ties == 1, vl)


def _primitive_columns(A: np.ndarray) -> np.ndarray:
    """Distinct ray directions among the columns (scalar multiples merged)."""
    seen = {}
    for col in A.T:
        g = math.gcd(*(int(v) for v in col))
        key = tuple(int(v) // g for v in col) if g else tuple(int(v) for v in col)
        seen.setdefault(key, None)
    return np.array(list(seen), dtype=np.int64).T


@lru_cache(maxsize=8)
def _basis_inverses(key: bytes, shape: tuple[int, int]):
    """Nonsingular bases of a full-row-rank ray matrix and their float inverses."""
    R = np.frombuffer(key, dtype=np.int64).reshape(shape)
    d, m = shape
    subsets = np.array(list(combinations(range(m), d)), dtype=np.int64)
    B = np.transpose(R.T[subsets].astype(float), (0, 2, 1))
    ok = np.abs(np.linalg.det(B)) > 0.5
    return subsets[ok], np.linalg.inv(B[ok])


def lp_feasible(A, y, tol: float = 1e-9) -> bool:
    """Decide ``y in pos(A)``: is there ``x >= 0`` with ``A x = y``?

    By Caratheodory it suffices to check bases of linearly independent ray
    directions.  Candidates are screened in floating point (batched solves)
    and a positive answer is confirmed in exact rational arithmetic.
    """
    A = np.asarray(A, dtype=np.int64)
    y = np.asarray(y, dtype=float)
    if np.all(y == 0):
        return True
    R = np.ascontiguousarray(_primitive_columns(A))
    d, m = R.shape
    rank = np.linalg.matrix_rank(R)
    y_exact = [Fraction(float(v)) for v in y]
    scale = max(1.0, float(np.abs(y).max()))
    if rank == d:
        subsets, inv = _basis_inverses(R.tobytes(), R.shape)
        xs = inv @ y
        candidates = subsets[np.all(xs >= -tol * scale, axis=1)]
    else:
        # work in the column space; y must lie in it
        Q, _ = np.linalg.qr(R.astype(float))
        Q = Q[:, :rank]
        if np.linalg.norm(y - Q @ (Q.T @ y)) > tol * max(1.0, np.linalg.norm(y)):
            return False
        subsets = np.array(list(combinations(range(m), rank)), dtype=np.int64)
        B = np.transpose(R.T[subsets].astype(float), (0, 2, 1))
        xs = np.array([np.linalg.lstsq(Bk, y, rcond=None)[0] for Bk in B])
        fit = np.abs(np.einsum("kij,kj->ki", B, xs) - y).max(axis=1)
        candidates = subsets[np.all(xs >= -tol, axis=1) & (fit < 10 * tol * scale)]
    for S in candidates:
        cols = [[int(R[i, j]) for j in S] for i in range(d)]
        xs_exact = solve_rational(cols, y_exact)
        if xs_exact is not None and all(v >= 0 for v in xs_exact):
            return True
    return False


def _expm1_minus_id(u: np.ndarray) -> np.ndarray:
    small = np.abs(u) < 1e-3
    out = np.expm1(u) - u
    us = u[small]
    out[small] = us * us * (0.5 + us * (1.0 / 6.0 + us / 24.0))
    return out


def objective_increment(A, x, grad, dp, epsilon) -> float:
    """Change of the dual objective for the step ``p -> p + dp``.

    Written as ``grad.dp - eps * sum x_j (exp(u_j) - 1 - u_j)`` with
    ``u = A^T dp / eps`` so that tiny increments are not lost to cancellation.
    """
    u = A.T @ dp / epsilon
    return float(grad @ dp - epsilon * np.sum(x * _expm1_minus_id(u)))


def mirror_solve(
    lp: StandardFormLP,
    epsilon: float,
    tol: float = 1e-10,
    max_iter: int = 200_000,
    restrict_face: bool = True,
) -> EntropicSolution:
    """Full-gradient dual ascent with backtracking line search.

    The gradient of the dual is ``b - A x(p)`` with
    ``x(p) = exp((A^T p - c)/epsilon)``.  Trial steps start from a
    Barzilai-Borwein estimate (first step ``epsilon / |A|_1**2``) and are
    halved until the dual objective increases, so accepted steps never
    decrease it.  ``restrict_face`` solves on the minimal face of the
    polytope, as in :func:`~entropic_lp.dual_ascent.ascent_solve`.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if restrict_face:
        face = minimal_face(lp)
        if not face.trivial:
            return lift_solution(face, mirror_solve(face.lp, epsilon, tol, max_iter, restrict_face=False))
    A = lp.A.astype(float)
    p = np.zeros(lp.d)
    norm1 = np.abs(A).sum(axis=0).max()
    eta = epsilon / norm1**2
    x = np.exp((A.T @ p - lp.c) / epsilon)
    grad = lp.b - A @ x
    it = 0
    err = float(np.max(np.abs(grad)))
    while err > tol and it < max_iter:
        step = eta
        while True:
            dp = step * grad
            gain = objective_increment(A, x, grad, dp, epsilon)
            if gain > 0 or step < 1e-300:
                break
            step *= 0.5
        if not gain > 0:
            # no ascent left at machine precision
            break
        p_new = p + dp
        x_new = np.exp((A.T @ p_new - lp.c) / epsilon)
        grad_new = lp.b - A @ x_new
        dg = grad_new - grad
        curv = -float(dp @ dg)
        eta = float(dp @ dp) / curv if curv > 0 else 2.0 * step
        p, x, grad = p_new, x_new, grad_new
        err = float(np.max(np.abs(grad)))
        it += 1
    converged = err <= tol
    if not converged:
        log.warning("mirror_solve stopped after %d steps with residual %.3e", it, err)
    return EntropicSolution(
        x=x,
        p=p,
        epsilon=float(epsilon),
        iterations=it,
        residuals=solution_report(lp, x, p, epsilon),
        converged=converged,
        method="mirror",
    )
