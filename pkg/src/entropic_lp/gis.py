"""Generalized iterative scaling (Darroch-Ratcliff) for standard-form LPs.

The LP is first rewritten with constant column sums: a slack row brings
every column sum up to ``a`` and a prepended column ``(0, ..., 0, a)``
absorbs the homogenizing coordinate.  The multiplicative iteration on the
augmented system converges to ``iota(x*(eps)) = (1, x*) / (|x*| + 1)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from . import kernels
from .model import (
    EntropicSolution,
    StandardFormLP,
    exact_b,
    ones_coefficients,
    solution_report,
)

log = logging.getLogger(__name__)


class OnesNotInRowSpace(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AugmentedLP:
    calA: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    a: int
    s: Fraction
    s_c: float
    epsilon: float
    lp: StandardFormLP

    @property
    def n(self) -> int:
        return self.lp.n


def gis_augment(lp: StandardFormLP, epsilon: float) -> AugmentedLP:
    """Constant-column-sum reformulation used by :func:`gis_solve`.

    Raises :class:`OnesNotInRowSpace` when ``(1, ..., 1)`` is not a rational
    combination of the rows of ``A`` (for conic coupling, add the
    normalization row).
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    lam = ones_coefficients(lp.A)
    if lam is None:
        raise OnesNotInRowSpace(
            "the all-ones vector is not in the row space of A; "
            "append the normalization constraint sum(x) = 1"
        )
    b_exact = exact_b(lp.b)
    s = sum(l * bi for l, bi in zip(lam, b_exact))
    if s <= 0:
        raise ValueError(f"total mass lambda.b = {s} must be positive")
    col_sums = lp.A.sum(axis=0)
    a = int(col_sums.max())
    d, n = lp.A.shape
    calA = np.zeros((d + 1, n + 1), dtype=np.int64)
    calA[:d, 1:] = lp.A
    calA[d, 1:] = a - col_sums
    calA[d, 0] = a
    b_total = sum(b_exact)
    beta_exact = [bi / (s + 1) for bi in b_exact] + [a - b_total / (s + 1)]
    beta = np.array([float(v) for v in beta_exact])
    log_sc = float(logsumexp(np.concatenate([[0.0], -lp.c / epsilon])))
    gamma = np.concatenate([[epsilon * log_sc], lp.c + epsilon * log_sc])
    for arr in (calA, beta, gamma):
        arr.setflags(write=False)
    return AugmentedLP(calA, beta, gamma, a, s, math.exp(log_sc), float(epsilon), lp)


@dataclass
class GISState:
    """Iterate ``y`` in log form plus multipliers ``w``.

    ``log y = calA^T w - gamma/epsilon`` holds exactly at every step; frozen
    coordinates carry ``log y = -inf``.
    """

    logy: np.ndarray
    w: np.ndarray
    iteration: int = 0

    @property
    def y(self) -> np.ndarray:
        return np.exp(self.logy)


def _active_system(aug: AugmentedLP):
    """Drop rows with ``beta_r = 0`` and freeze the columns they touch."""
    zero_rows = aug.beta <= 0
    frozen = np.any(aug.calA[zero_rows] > 0, axis=0) if zero_rows.any() else np.zeros(aug.calA.shape[1], bool)
    keep = ~zero_rows
    cal = np.ascontiguousarray(aug.calA[keep], dtype=float)
    return cal, aug.beta[keep], keep, frozen


def initial_state(aug: AugmentedLP) -> GISState:
    logy = -aug.gamma / aug.epsilon
    cal, beta, keep, frozen = _active_system(aug)
    logy = np.where(frozen, -np.inf, logy)
    return GISState(np.ascontiguousarray(logy), np.zeros(int(keep.sum())))


def gis_step(aug: AugmentedLP, state: GISState, normalize: bool = True, backend=None) -> GISState:
    """Advance one multiplicative update (in place)."""
    cal, beta, _, _ = _active_system(aug)
    kernels.get(backend).gis_run(cal, np.log(beta), beta, state.logy, state.w, float(aug.a), 0.0, 1, normalize)
    state.iteration += 1
    return state


def deaugment(y: np.ndarray) -> np.ndarray:
    return y[1:] / y[0]


def iota(x: np.ndarray) -> np.ndarray:
    """Embedding ``x -> (1, x) / (|x| + 1)`` of the original variables."""
    x = np.asarray(x, dtype=float)
    return np.concatenate([[1.0], x]) / (x.sum() + 1.0)


def gis_solve(
    aug: AugmentedLP,
    epsilon: Optional[float] = None,
    tol: float = 1e-10,
    max_iter: int = 1_000_000,
    normalize: bool = True,
    backend: Optional[str] = None,
) -> EntropicSolution:
    """Run generalized iterative scaling to ``|calA y - beta|_inf <= tol``.

    With ``normalize`` each multiplicative update is followed by rescaling
    ``y`` to unit total, which is a shift along the ones direction of the row
    space and leaves the fixed point unchanged.
    """
    if epsilon is not None and not math.isclose(epsilon, aug.epsilon, rel_tol=1e-12):
        raise ValueError(f"augmentation was built for epsilon={aug.epsilon}, not {epsilon}")
    eps = aug.epsilon
    cal, beta, keep, frozen = _active_system(aug)
    if frozen[0]:
        raise ValueError("homogenizing coordinate is forced to zero; problem infeasible")
    state = initial_state(aug)
    it, err, max_dev = kernels.get(backend).gis_run(
        cal, np.log(beta), beta, state.logy, state.w, float(aug.a), float(tol), int(max_iter), normalize
    )
    converged = err <= tol
    if not converged:
        log.warning("GIS stopped after %d iterations with residual %.3e", it, err)
    y = state.y
    x = deaugment(y)
    if converged and np.any((x <= 0) & ~frozen[1:]):
        raise FloatingPointError("de-augmented solution lost positivity (underflow)")
    lp = aug.lp
    d = lp.d
    w_full = np.zeros(d + 1)
    w_full[keep] = state.w
    p = eps * (w_full[:d] - w_full[d])
    return EntropicSolution(
        x=x,
        p=p,
        epsilon=eps,
        iterations=int(it),
        residuals=solution_report(lp, x, p, eps),
        converged=converged,
        method="gis",
    )
