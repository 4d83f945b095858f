"""Track the entropic optimum ``x*(mu)`` from ``mu = epsilon`` down to the LP vertex.

Along the path ``x_j(mu) = exp(-c_j/mu) * t(mu)**a_j`` where ``t`` solves the
``d`` equations ``sum_j a_ij exp(-c_j/mu) t**a_j = b_i``.  We continue
``u = log t`` with an Euler predictor and a Newton corrector, then read off
the active support and solve for the vertex exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

import numpy as np

from .dual_ascent import ascent_solve
from .model import (
    EntropicSolution,
    FaceRestriction,
    NotOnVariety,
    StandardFormLP,
    exact_b,
    minimal_face,
    solve_rational,
)

log = logging.getLogger(__name__)

DEFAULT_THETA = 0.8
DEFAULT_SUPPORT_THRESHOLD = 1e-6
DEFAULT_CORRECTOR_TOL = 1e-10


class CorrectorFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class PathSample:
    mu: float
    u: np.ndarray
    x: np.ndarray
    cost: float

    @property
    def t(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.u)


@dataclass(frozen=True)
class RoundedVertex:
    x: Optional[tuple[Fraction, ...]]
    support: tuple[int, ...]
    ambiguous: bool
    reason: str = ""

    def x_float(self) -> Optional[np.ndarray]:
        return None if self.x is None else np.array([float(v) for v in self.x])


@dataclass
class PathTrace:
    samples: list[PathSample] = field(default_factory=list)
    final_support: tuple[int, ...] = ()
    final_vertex: Optional[tuple[Fraction, ...]] = None
    status: str = "stalled"

    @property
    def final(self) -> PathSample:
        return self.samples[-1]


def path_point(lp: StandardFormLP, u: np.ndarray, mu: float) -> np.ndarray:
    """``x_j = exp(-c_j/mu + a_j . u)``."""
    with np.errstate(under="ignore"):
        return np.exp(lp.A.T @ u - lp.c / mu)


def residual(lp: StandardFormLP, u: np.ndarray, mu: float) -> np.ndarray:
    return lp.A @ path_point(lp, u, mu) - lp.b


def jacobian(lp: StandardFormLP, u: np.ndarray, mu: float) -> np.ndarray:
    """``dR_i/du_r = sum_j a_ij a_rj x_j``."""
    x = path_point(lp, u, mu)
    A = lp.A.astype(float)
    return (A * x) @ A.T


def initial_u(lp: StandardFormLP, x_eps, epsilon: float, threshold: float = 1e-6) -> tuple[np.ndarray, float]:
    """Least-squares solution of ``A^T u = log x + c/epsilon`` and its residual."""
    x_eps = np.asarray(x_eps, dtype=float)
    if not np.all(x_eps > 0):
        raise ValueError("x must be strictly positive")
    v = np.log(x_eps) + lp.c / epsilon
    u, *_ = np.linalg.lstsq(lp.A.T.astype(float), v, rcond=None)
    res = float(np.max(np.abs(lp.A.T @ u - v)))
    if res > threshold:
        raise NotOnVariety(f"x is not on the scaled toric variety (log residual {res:.3e})")
    return u, res


def initial_t(lp: StandardFormLP, x_eps, epsilon: float, threshold: float = 1e-6) -> np.ndarray:
    """Toric coordinates ``t`` with ``x_j = exp(-c_j/epsilon) t**a_j``.

    Raises :class:`NotOnVariety` if no such ``t`` reproduces ``x`` to
    within ``threshold`` in log space.
    """
    u, _ = initial_u(lp, x_eps, epsilon, threshold)
    return np.exp(u)


def _newton(lp, u, mu, tol, max_newton):
    A = lp.A.astype(float)
    u = np.array(u, dtype=float)
    R = residual(lp, u, mu)
    norm = float(np.max(np.abs(R)))
    steps = 0
    while norm > tol:
        if steps >= max_newton:
            raise CorrectorFailure(f"no convergence in {max_newton} Newton steps (|R| = {norm:.3e})")
        x = path_point(lp, u, mu)
        J = (A * x) @ A.T
        try:
            du = np.linalg.solve(J, -R)
        except np.linalg.LinAlgError as exc:
            raise CorrectorFailure("singular Jacobian") from exc
        if not np.all(np.isfinite(du)):
            raise CorrectorFailure("non-finite Newton step")
        alpha = 1.0
        while True:
            u_try = u + alpha * du
            with np.errstate(over="ignore", invalid="ignore"):
                R_try = residual(lp, u_try, mu)
            n_try = float(np.max(np.abs(R_try)))
            if np.isfinite(n_try) and n_try < norm:
                break
            alpha *= 0.5
            if alpha < 1e-6:
                raise CorrectorFailure(f"line search failed at |R| = {norm:.3e}")
        u, R, norm = u_try, R_try, n_try
        steps += 1
    return u, steps


def corrector(
    lp: StandardFormLP,
    t,
    mu: float,
    tol: float = DEFAULT_CORRECTOR_TOL,
    max_newton: int = 50,
) -> np.ndarray:
    """Newton's method on ``sum_j a_ij exp(-c_j/mu) t**a_j = b_i`` in ``log t``.

    Raises :class:`CorrectorFailure` if ``|R|_inf <= tol`` is not reached.
    """
    u, _ = _newton(lp, np.log(np.asarray(t, dtype=float)), mu, tol, max_newton)
    return np.exp(u)


def tangent(lp: StandardFormLP, u: np.ndarray, mu: float) -> np.ndarray:
    """``du/dmu`` from implicit differentiation of the path equations."""
    x = path_point(lp, u, mu)
    A = lp.A.astype(float)
    J = (A * x) @ A.T
    dR_dmu = A @ (x * lp.c) / mu**2
    return -np.linalg.solve(J, dR_dmu)


def active_support(x: np.ndarray, threshold: float) -> tuple[int, ...]:
    return tuple(int(j) for j in np.flatnonzero(x >= threshold * np.max(x)))


def round_to_vertex(
    lp: StandardFormLP, x, support_threshold: float = DEFAULT_SUPPORT_THRESHOLD
) -> RoundedVertex:
    """Exact basic solution on the detected support of ``x``.

    The support is ``{j : x_j >= threshold * max(x)}``.  The result is
    ambiguous when the support has more than ``d`` columns, the columns are
    dependent, the system is inconsistent, or the solution is negative.
    """
    x = np.asarray(x, dtype=float)
    S = active_support(x, support_threshold)
    if len(S) > lp.d:
        return RoundedVertex(None, S, True, f"support of size {len(S)} exceeds d = {lp.d}")
    cols = [[int(lp.A[i, j]) for j in S] for i in range(lp.d)]
    xs = solve_rational(cols, exact_b(lp.b))
    if xs is None:
        return RoundedVertex(None, S, True, "support columns are dependent or inconsistent with b")
    if any(v < 0 for v in xs):
        return RoundedVertex(None, S, True, "basic solution on the support is negative")
    full = [Fraction(0)] * lp.n
    for j, v in zip(S, xs):
        full[j] = v
    return RoundedVertex(tuple(full), S, False)


def _lift_trace(face: FaceRestriction, inner: PathTrace) -> PathTrace:
    out = PathTrace(status=inner.status)
    for smp in inner.samples:
        u = face.embed_p(smp.u)
        out.samples.append(PathSample(smp.mu, u, face.embed_x(smp.x), smp.cost))
    out.final_support = tuple(int(face.columns[j]) for j in inner.final_support)
    if inner.final_vertex is not None:
        full = [Fraction(0)] * face.parent.n
        for j, v in zip(face.columns, inner.final_vertex):
            full[int(j)] = v
        out.final_vertex = tuple(full)
    return out


def track(
    lp: StandardFormLP,
    epsilon0: float,
    theta: float = DEFAULT_THETA,
    mu_min: Optional[float] = None,
    solution: Optional[EntropicSolution] = None,
    tol: float = DEFAULT_CORRECTOR_TOL,
    support_threshold: float = DEFAULT_SUPPORT_THRESHOLD,
    patience: int = 3,
    offsupport_tol: float = 1e-10,
    max_newton: int = 50,
    max_steps: int = 100_000,
    restrict_face: bool = True,
) -> PathTrace:
    """Follow the entropic path from ``epsilon0`` towards ``mu = 0``.

    The parameter shrinks geometrically by ``theta``; a failed corrector
    halves the step in ``log mu`` and a success lets it grow back.  Tracking
    stops at ``mu_min`` or once the support has been the same for
    ``patience`` samples, rounds to a vertex, and the mass off the support is
    below ``offsupport_tol`` relative to the total.

    ``status`` is ``"converged"`` when a vertex was recovered,
    ``"ambiguous-tie"`` when ``mu_min`` was reached without a clean support,
    and ``"stalled"`` when the step size collapsed.

    With ``restrict_face`` the path is followed on the minimal face of the
    polytope (coordinates that vanish on all of it are exactly zero along
    the whole path) and embedded back.
    """
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if restrict_face:
        face = minimal_face(lp)
        if not face.trivial:
            if solution is not None:
                solution = replace(solution, x=solution.x[face.columns], p=solution.p[face.rows])
            inner = track(
                face.lp, epsilon0, theta, mu_min, solution, tol, support_threshold,
                patience, offsupport_tol, max_newton, max_steps, restrict_face=False,
            )
            return _lift_trace(face, inner)
    if mu_min is None:
        mu_min = 1e-4 * epsilon0
    if solution is None:
        solution = ascent_solve(lp, epsilon0, tol=min(tol, 1e-10))
    elif not math.isclose(solution.epsilon, epsilon0, rel_tol=1e-12):
        raise ValueError("start solution was computed for a different epsilon")
    u, _ = initial_u(lp, solution.x, epsilon0)
    u, _ = _newton(lp, u, epsilon0, tol, max_newton)
    trace = PathTrace()

    def record(mu, u):
        x = path_point(lp, u, mu)
        trace.samples.append(PathSample(mu, u.copy(), x, float(lp.c @ x)))

    record(epsilon0, u)
    mu = epsilon0
    log_step = math.log(theta)
    min_log_step = -1e-6
    supports: list[tuple[int, ...]] = []
    status = "stalled"
    for _ in range(max_steps):
        if mu <= mu_min:
            status = "mu_min"
            break
        mu_new = max(mu * math.exp(log_step), mu_min)
        try:
            u_pred = u + tangent(lp, u, mu) * (mu_new - mu)
            u_new, _ = _newton(lp, u_pred, mu_new, tol, max_newton)
        except (CorrectorFailure, np.linalg.LinAlgError) as exc:
            log_step *= 0.5
            if log_step > min_log_step:
                log.warning("path tracking stalled at mu=%.3e: %s", mu, exc)
                break
            continue
        u, mu = u_new, mu_new
        record(mu, u)
        log_step = max(2 * log_step, math.log(theta))
        x = trace.samples[-1].x
        S = active_support(x, support_threshold)
        supports.append(S)
        if len(supports) >= patience and len(S) <= lp.d and all(s == S for s in supports[-patience:]):
            off = np.delete(x, S).sum()
            if off <= offsupport_tol * max(1.0, x.sum()):
                rv = round_to_vertex(lp, x, support_threshold)
                if not rv.ambiguous:
                    trace.final_support, trace.final_vertex = rv.support, rv.x
                    trace.status = "converged"
                    return trace
    x = trace.samples[-1].x
    rv = round_to_vertex(lp, x, support_threshold)
    trace.final_support = rv.support
    trace.final_vertex = rv.x
    if status == "mu_min":
        trace.status = "converged" if not rv.ambiguous else "ambiguous-tie"
    else:
        trace.status = "stalled"
    return trace
