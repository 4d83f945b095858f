"""Log-domain Sinkhorn iterations for balanced transport."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from . import kernels
from .builders import TransportProblem, build_transport
from .model import EntropicSolution, solution_report

log = logging.getLogger(__name__)

_LOG_TINY = math.log(np.finfo(float).tiny)


class NonFinitePotentials(FloatingPointError):
    pass


@dataclass
class SinkhornState:
    """Row potentials ``f``, column potentials ``g``.

    The implied plan is ``x[k, l] = exp((f[k] + g[l] - cost[k, l]) / epsilon)``.
    """

    f: np.ndarray
    g: np.ndarray
    epsilon: float
    iteration: int = 0

    @classmethod
    def initial(cls, tp: TransportProblem, epsilon: float) -> "SinkhornState":
        return cls(np.zeros(tp.d1), np.zeros(tp.d2), float(epsilon))

    def plan(self, cost) -> np.ndarray:
        return np.exp((self.f[:, None] + self.g[None, :] - cost) / self.epsilon)


def _check(tp: TransportProblem, epsilon: float, tol: float):
    if not isinstance(tp, TransportProblem):
        raise TypeError("sinkhorn needs a TransportProblem")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not tol > 0:
        raise ValueError("tol must be positive")


def _run(tp, state, tol, max_iter, backend=None):
    eps = state.epsilon
    log_k = np.ascontiguousarray(-tp.cost / eps)
    mu, nu = tp.mu_array(), tp.nu_array()
    a = state.f / eps
    b = state.g / eps
    sweeps, err = kernels.get(backend).sinkhorn_run(
        log_k, np.log(mu), np.log(nu), mu, nu, a, b, float(tol), int(max_iter)
    )
    state.f = a * eps
    state.g = b * eps
    state.iteration += int(sweeps)
    if not (np.all(np.isfinite(state.f)) and np.all(np.isfinite(state.g))):
        raise NonFinitePotentials("Sinkhorn potentials became non-finite")
    return err


def sinkhorn_sweep(tp: TransportProblem, state: SinkhornState, backend=None) -> SinkhornState:
    """One full sweep: every ``f`` update, then every ``g`` update."""
    _run(tp, state, 0.0, 1, backend)
    return state


def _random_sweeps(tp, state, tol, max_iter, rng):
    # exact coordinate maximizations in a random interleaving of rows and columns
    eps = state.epsilon
    log_k = -tp.cost / eps
    log_mu, log_nu = np.log(tp.mu_array()), np.log(tp.nu_array())
    a, b = state.f / eps, state.g / eps
    coords = [(0, k) for k in range(tp.d1)] + [(1, l) for l in range(tp.d2)]
    err = math.inf
    for _ in range(max_iter):
        for idx in rng.permutation(len(coords)):
            side, k = coords[idx]
            if side == 0:
                a[k] = log_mu[k] - logsumexp(log_k[k] + b)
            else:
                b[k] = log_nu[k] - logsumexp(log_k[:, k] + a)
        state.iteration += 1
        x = np.exp(log_k + a[:, None] + b[None, :])
        err = max(
            np.max(np.abs(x.sum(axis=1) - tp.mu_array())),
            np.max(np.abs(x.sum(axis=0) - tp.nu_array())),
        )
        if err <= tol:
            break
    state.f, state.g = a * eps, b * eps
    return err


def potentials_to_lp_duals(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Map ``(f, g)`` onto the rows of :func:`build_transport`'s matrix.

    The last column-sum row is absent there, so ``g[-1]`` is folded into the
    row potentials.
    """
    return np.concatenate([f + g[-1], g[:-1] - g[-1]])


def matrix_form(tp: TransportProblem, state: SinkhornState) -> Optional[np.ndarray]:
    """``diag(F) K diag(G)``, or None when ``K = exp(-cost/epsilon)`` would underflow."""
    eps = state.epsilon
    if -np.max(tp.cost) / eps <= 0.5 * _LOG_TINY:
        return None
    F = np.exp(state.f / eps)
    G = np.exp(state.g / eps)
    K = np.exp(-tp.cost / eps)
    return F[:, None] * K * G[None, :]


def sinkhorn_solve(
    tp: TransportProblem,
    epsilon: float,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    seed: Optional[int] = None,
    backend: Optional[str] = None,
) -> EntropicSolution:
    """Solve the entropic transport problem by alternating exact dual updates.

    Parameters
    ----------
    tp : TransportProblem
        Balanced margins and cost matrix.
    epsilon : float
        Regularization strength.
    tol : float
        Stop once both marginal gaps are below ``tol`` in sup-norm.
    max_iter : int
        Maximum number of full sweeps; hitting it sets ``converged=False``.
    seed : int, optional
        If given, each sweep visits the row and column potentials in a
        random order drawn from this seed.
    backend : {"cython", "python"}, optional
        Kernel implementation; defaults to the compiled one when built.

    Returns
    -------
    EntropicSolution
        ``x`` flattened row-major, duals ``p`` for the rows of
        :func:`build_transport`.
    """
    _check(tp, epsilon, tol)
    state = SinkhornState.initial(tp, epsilon)
    if seed is None:
        err = _run(tp, state, tol, max_iter, backend)
    else:
        err = _random_sweeps(tp, state, tol, max_iter, np.random.default_rng(seed))
    converged = err <= tol
    if not converged:
        log.warning("sinkhorn stopped after %d sweeps with marginal gap %.3e", state.iteration, err)
    lp = build_transport(tp)
    x = state.plan(tp.cost).reshape(-1)
    p = potentials_to_lp_duals(state.f, state.g)
    return EntropicSolution(
        x=x,
        p=p,
        epsilon=float(epsilon),
        iterations=state.iteration,
        residuals=solution_report(lp, x, p, epsilon),
        converged=converged,
        method="sinkhorn",
    )
