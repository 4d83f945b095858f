"""Pure numpy implementations of the scaling kernels.

Signatures mirror ``_ckernels``: state arrays are updated in place and the
functions return iteration counts and the final residual.
"""

import math

import numpy as np
from scipy.special import logsumexp

BACKEND = "python"


def sinkhorn_run(log_k, log_mu, log_nu, mu, nu, a, b, tol, max_iter):
    """Log-domain Sinkhorn sweeps on scaled potentials ``a = f/eps``, ``b = g/eps``.

    Each sweep updates every ``a`` then every ``b``.  Returns
    ``(sweeps, err)`` with ``err`` the sup-norm of both marginal gaps.
    """
    sweeps = 0
    err = math.inf
    while sweeps < max_iter:
        a[:] = log_mu - logsumexp(log_k + b[None, :], axis=1)
        b[:] = log_nu - logsumexp(log_k + a[:, None], axis=0)
        sweeps += 1
        x = np.exp(log_k + a[:, None] + b[None, :])
        err = max(np.max(np.abs(x.sum(axis=1) - mu)), np.max(np.abs(x.sum(axis=0) - nu)))
        if err <= tol:
            break
    return sweeps, float(err)


def _log_matvec(log_a, logy):
    # log(A y) row by row; log_a holds log of entries, -inf where zero
    return logsumexp(log_a + logy[None, :], axis=1)


def gis_run(cal_a, log_beta, beta, logy, w, a, tol, max_iter, normalize):
    """Generalized iterative scaling in log coordinates.

    ``logy`` and the multipliers ``w`` (with ``log y = A^T w - gamma/eps``)
    are updated in place.  Returns ``(iterations, err, max_sum_dev)`` where
    ``max_sum_dev`` is the largest ``|sum(y) - 1|`` over the produced iterates.
    """
    with np.errstate(divide="ignore"):
        log_a = np.log(cal_a)
    inv_a = 1.0 / a
    it = 0
    max_dev = 0.0
    while True:
        log_ay = _log_matvec(log_a, logy)
        err = float(np.max(np.abs(np.exp(log_ay) - beta)))
        if err <= tol or it >= max_iter:
            break
        delta = log_beta - log_ay
        logy += inv_a * (cal_a.T @ delta)
        w += inv_a * delta
        if normalize:
            shift = logsumexp(logy)
            logy -= shift
            w -= shift * inv_a
        it += 1
        dev = abs(math.exp(logsumexp(logy)) - 1.0)
        if dev > max_dev:
            max_dev = dev
    return it, err, max_dev


def solve_log_poly(log_coeffs, exps, log_target):
    """Root ``z`` of ``log sum_e exp(log_coeffs[e] + e z) = log_target``.

    The left side is convex and strictly increasing in ``z``; Newton started
    from the upper monomial bound converges monotonically, with bisection as
    a guard if rounding pushes an iterate out of the bracket.
    """
    k = len(exps)
    hi = min((log_target - lc) / e for lc, e in zip(log_coeffs, exps))
    lo = min((log_target - math.log(k) - lc) / e for lc, e in zip(log_coeffs, exps))
    z = hi
    for _ in range(200):
        terms = [lc + e * z for lc, e in zip(log_coeffs, exps)]
        m = max(terms)
        ws = [math.exp(t - m) for t in terms]
        s = sum(ws)
        phi = m + math.log(s) - log_target
        if phi > 0:
            hi = z
        else:
            lo = z
        dphi = sum(e * wv for e, wv in zip(exps, ws)) / s
        step = phi / dphi
        znew = z - step
        if not (lo <= znew <= hi):
            znew = 0.5 * (lo + hi)
        if abs(znew - z) <= 1e-15 * max(1.0, abs(z)):
            z = znew
            break
        z = znew
    return z


def ascent_coordinate(A, s, z, log_b, i):
    """Exact maximization of the dual along coordinate ``i``.

    ``s`` holds ``log x = A^T z - c/eps`` and ``z = p/eps``; both are updated.
    """
    row = A[i]
    cols = np.flatnonzero(row)
    e_vals = row[cols]
    # log kappa_j = s_j - a_ij z_i, the part of the exponent not involving p_i
    log_kappa = s[cols] - e_vals * z[i]
    exps = []
    log_coeffs = []
    for e in np.unique(e_vals):
        sel = e_vals == e
        exps.append(int(e))
        log_coeffs.append(math.log(e) + float(logsumexp(log_kappa[sel])))
    znew = solve_log_poly(log_coeffs, exps, log_b[i])
    s[cols] += e_vals * (znew - z[i])
    z[i] = znew


def ascent_run(A, log_b, b, s, z, order, tol, max_iter):
    """Cyclic coordinate ascent sweeps.  Returns ``(sweeps, err)``."""
    Af = A.astype(float)
    sweeps = 0
    err = float(np.max(np.abs(Af @ np.exp(s) - b)))
    while sweeps < max_iter and err > tol:
        for i in order:
            ascent_coordinate(A, s, z, log_b, int(i))
        sweeps += 1
        err = float(np.max(np.abs(Af @ np.exp(s) - b)))
    return sweeps, err
