"""Exact cyclic coordinate ascent on the entropic dual for any nonnegative integer A.

Updating the potential of row ``i`` means finding the unique positive root
``E = exp(p_i / epsilon)`` of ``sum_j a_ij kappa_j E**a_ij = b_i``.  For
0/1 matrices this is the Sinkhorn update; for conic coupling it is a
polynomial in ``E`` whose degree is the largest mass value.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from scipy.special import logsumexp

from . import kernels
from .model import (
    EntropicSolution,
    StandardFormLP,
    dual_objective,
    lift_solution,
    minimal_face,
    solution_report,
)

log = logging.getLogger(__name__)


class AscentError(ValueError):
    pass


@dataclass
class DualState:
    p: np.ndarray
    epsilon: float
    iteration: int = 0

    @classmethod
    def initial(cls, lp: StandardFormLP, epsilon: float) -> "DualState":
        return cls(np.zeros(lp.d), float(epsilon))

    def primal(self, lp: StandardFormLP) -> np.ndarray:
        return np.exp((lp.A.T @ self.p - lp.c) / self.epsilon)

    def objective(self, lp: StandardFormLP) -> float:
        return dual_objective(lp, self.p, self.epsilon)


def _log_poly_root(log_coeffs, exps, log_target, n_bisect=8):
    # phi(z) = log sum exp(lc + e z) - log_target is convex and increasing
    k = len(exps)
    hi = min((log_target - lc) / e for lc, e in zip(log_coeffs, exps))
    lo = min((log_target - math.log(k) - lc) / e for lc, e in zip(log_coeffs, exps))

    def phi(z):
        terms = [lc + e * z for lc, e in zip(log_coeffs, exps)]
        m = max(terms)
        w = [math.exp(t - m) for t in terms]
        s = sum(w)
        return m + math.log(s) - log_target, sum(e * wv for e, wv in zip(exps, w)) / s

    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        if phi(mid)[0] > 0:
            hi = mid
        else:
            lo = mid
    # Newton from the right of the root never overshoots a convex increasing phi
    z = hi
    for _ in range(100):
        val, slope = phi(z)
        znew = max(z - val / slope, lo)
        if abs(znew - z) <= 1e-15 * max(1.0, abs(z)):
            return znew
        z = znew
    return z


def positive_root(terms: Mapping[int, float], target: float) -> float:
    """Unique ``E > 0`` with ``sum_e terms[e] * E**e == target``.

    Exponents must be positive integers, coefficients nonnegative with at
    least one positive.

    >>> positive_root({1: 1.0, 2: 1.0}, 6.0)
    2.0
    """
    if not target > 0:
        raise ValueError("target must be positive")
    exps, log_coeffs = [], []
    for e, coeff in sorted(terms.items()):
        if int(e) != e or e < 1:
            raise ValueError(f"exponent {e} is not a positive integer")
        if coeff < 0:
            raise ValueError("coefficients must be nonnegative")
        if coeff > 0:
            exps.append(int(e))
            log_coeffs.append(math.log(coeff))
    if not exps:
        raise ValueError("all coefficients are zero")
    return math.exp(_log_poly_root(log_coeffs, exps, math.log(target)))


def coordinate_terms(lp: StandardFormLP, p, i: int, epsilon: float) -> dict[int, float]:
    """Coefficients of the univariate equation for row ``i`` at potentials ``p``.

    Maps each exponent ``e > 0`` occurring in row ``i`` to
    ``e * sum_{j : a_ij = e} exp((sum_{r != i} a_rj p_r - c_j) / epsilon)``.
    """
    p = np.asarray(p, dtype=float)
    row = lp.A[i]
    other = lp.A.T @ p - row * p[i]
    log_kappa = (other - lp.c) / epsilon
    terms = {}
    for e in np.unique(row[row > 0]):
        terms[int(e)] = float(e) * float(np.exp(logsumexp(log_kappa[row == e])))
    return terms


def coordinate_update(lp: StandardFormLP, state: DualState, i: int, backend=None) -> DualState:
    """Maximize the dual exactly along coordinate ``i`` (in place)."""
    eps = state.epsilon
    if lp.b[i] <= 0:
        raise AscentError(f"b[{i}] = {lp.b[i]} must be positive")
    z = state.p / eps
    s = (lp.A.T @ state.p - lp.c) / eps
    kernels.get(backend).ascent_coordinate(
        np.ascontiguousarray(lp.A, dtype=np.int64), s, z, np.log(lp.b), int(i)
    )
    state.p = z * eps
    return state


def ascent_solve(
    lp: StandardFormLP,
    epsilon: float,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    seed: Optional[int] = None,
    backend: Optional[str] = None,
    restrict_face: bool = True,
) -> EntropicSolution:
    """Cyclic exact coordinate ascent on the dual.

    Rows are visited in ascending order, or in a fresh random permutation
    each sweep when ``seed`` is given.  Stops when ``|Ax - b|_inf <= tol``;
    otherwise returns the last iterate with ``converged=False``.

    When ``b`` lies on the boundary of ``pos(A)`` some coordinates vanish on
    the whole polytope and the dual has no maximizer.  With
    ``restrict_face`` the problem is first restricted to its minimal face,
    solved there, and embedded back with exact zeros.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    nonzero = np.any(lp.A != 0, axis=1)
    bad = np.flatnonzero(nonzero & (lp.b <= 0))
    if bad.size:
        raise AscentError(f"rows {bad.tolist()} have nonpositive right-hand side")
    if restrict_face:
        face = minimal_face(lp)
        if not face.trivial:
            sol = ascent_solve(face.lp, epsilon, tol, max_iter, seed, backend, restrict_face=False)
            return lift_solution(face, sol)
    A = np.ascontiguousarray(lp.A, dtype=np.int64)
    log_b = np.log(lp.b)
    z = np.zeros(lp.d)
    s = np.ascontiguousarray(-lp.c / epsilon)
    impl = kernels.get(backend)
    if seed is None:
        sweeps, err = impl.ascent_run(A, log_b, lp.b, s, z, np.arange(lp.d, dtype=np.int64), tol, max_iter)
    else:
        rng = np.random.default_rng(seed)
        sweeps = 0
        err = math.inf
        while sweeps < max_iter:
            k, err = impl.ascent_run(A, log_b, lp.b, s, z, rng.permutation(lp.d).astype(np.int64), tol, 1)
            if k == 0:
                break
            sweeps += k
    converged = err <= tol
    if not converged:
        log.warning("coordinate ascent stopped after %d sweeps with residual %.3e", sweeps, err)
    x = np.exp(s)
    p = z * epsilon
    return EntropicSolution(
        x=x,
        p=p,
        epsilon=float(epsilon),
        iterations=int(sweeps),
        residuals=solution_report(lp, x, p, epsilon),
        converged=converged,
        method="ascent",
    )
