# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled scaling kernels; see ``_pykernels`` for the reference versions."""

import numpy as np

from libc.math cimport exp, log, fabs, INFINITY, isinf

BACKEND = "cython"


cdef inline double _row_lse(const double[:, ::1] M, Py_ssize_t r, const double[::1] v) nogil:
    cdef Py_ssize_t j, n = M.shape[1]
    cdef double m = -INFINITY, s = 0.0, t
    for j in range(n):
        t = M[r, j] + v[j]
        if t > m:
            m = t
    if isinf(m):
        return m
    for j in range(n):
        s += exp(M[r, j] + v[j] - m)
    return m + log(s)


cdef inline double _col_lse(const double[:, ::1] M, Py_ssize_t c, const double[::1] v) nogil:
    cdef Py_ssize_t i, n = M.shape[0]
    cdef double m = -INFINITY, s = 0.0, t
    for i in range(n):
        t = M[i, c] + v[i]
        if t > m:
            m = t
    if isinf(m):
        return m
    for i in range(n):
        s += exp(M[i, c] + v[i] - m)
    return m + log(s)


cdef double UNDERFLOW = -708.0


def sinkhorn_run(const double[:, ::1] log_k, const double[::1] log_mu,
                 const double[::1] log_nu, const double[::1] mu, const double[::1] nu,
                 double[::1] a, double[::1] b, double tol, long max_iter):
    # Column sums are exact after each g-update, so the stopping test reads
    # the row marginals off the row log-sum-exps the next sweep needs anyway.
    cdef Py_ssize_t d1 = log_k.shape[0], d2 = log_k.shape[1], k, l
    cdef long sweeps = 0
    cdef double err = INFINITY, m, s, t
    cdef double[::1] row_lse = np.empty(d1)
    cdef double[::1] cm = np.empty(d2)
    cdef double[::1] cs = np.empty(d2)
    with nogil:
        while True:
            for k in range(d1):
                m = -INFINITY
                for l in range(d2):
                    t = log_k[k, l] + b[l]
                    if t > m:
                        m = t
                s = 0.0
                for l in range(d2):
                    t = log_k[k, l] + b[l] - m
                    # terms below the cutoff underflow anyway; skip subnormals
                    if t > UNDERFLOW:
                        s += exp(t)
                row_lse[k] = m + log(s)
            if sweeps > 0:
                err = 0.0
                for k in range(d1):
                    t = fabs(exp(a[k] + row_lse[k]) - mu[k])
                    if t > err:
                        err = t
                if err <= tol:
                    break
            if sweeps >= max_iter:
                break
            for k in range(d1):
                a[k] = log_mu[k] - row_lse[k]
            for l in range(d2):
                cm[l] = -INFINITY
                cs[l] = 0.0
            for k in range(d1):
                for l in range(d2):
                    t = log_k[k, l] + a[k]
                    if t > cm[l]:
                        cm[l] = t
            for k in range(d1):
                for l in range(d2):
                    t = log_k[k, l] + a[k] - cm[l]
                    if t > UNDERFLOW:
                        cs[l] += exp(t)
            for l in range(d2):
                b[l] = log_nu[l] - (cm[l] + log(cs[l]))
            sweeps += 1
    return sweeps, err


def gis_run(const double[:, ::1] cal_a, const double[::1] log_beta, const double[::1] beta,
            double[::1] logy, double[::1] w, double a, double tol, long max_iter, bint normalize):
    cdef Py_ssize_t R = cal_a.shape[0], n = cal_a.shape[1], r, i
    cdef long it = 0
    cdef double err, m, s, t, shift, dev, max_dev = 0.0, inv_a = 1.0 / a
    cdef double[::1] log_ay = np.empty(R)
    cdef double[::1] delta = np.empty(R)
    with nogil:
        while True:
            err = 0.0
            for r in range(R):
                m = -INFINITY
                for i in range(n):
                    if cal_a[r, i] > 0.0:
                        t = log(cal_a[r, i]) + logy[i]
                        if t > m:
                            m = t
                s = 0.0
                if not isinf(m):
                    for i in range(n):
                        if cal_a[r, i] > 0.0:
                            s += cal_a[r, i] * exp(logy[i] - m)
                log_ay[r] = m + log(s)
                t = fabs(exp(log_ay[r]) - beta[r])
                if t > err:
                    err = t
            if err <= tol or it >= max_iter:
                break
            for r in range(R):
                delta[r] = log_beta[r] - log_ay[r]
                w[r] += inv_a * delta[r]
            for i in range(n):
                if isinf(logy[i]):
                    continue
                t = 0.0
                for r in range(R):
                    t += cal_a[r, i] * delta[r]
                logy[i] += inv_a * t
            m = -INFINITY
            for i in range(n):
                if logy[i] > m:
                    m = logy[i]
            s = 0.0
            for i in range(n):
                s += exp(logy[i] - m)
            shift = m + log(s)
            if normalize:
                for i in range(n):
                    logy[i] -= shift
                for r in range(R):
                    w[r] -= shift * inv_a
                shift = 0.0
            it += 1
            dev = fabs(exp(shift) - 1.0)
            if normalize:
                s = 0.0
                for i in range(n):
                    s += exp(logy[i])
                dev = fabs(s - 1.0)
            if dev > max_dev:
                max_dev = dev
    return it, err, max_dev


cdef double _solve_log_poly(double* lc, double* ex, int k, double log_target) nogil:
    cdef double hi = INFINITY, lo = INFINITY, z, t, m, s, phi, dphi, znew, wv
    cdef int q, it
    for q in range(k):
        t = (log_target - lc[q]) / ex[q]
        if t < hi:
            hi = t
        t = (log_target - log(<double>k) - lc[q]) / ex[q]
        if t < lo:
            lo = t
    z = hi
    for it in range(200):
        m = -INFINITY
        for q in range(k):
            t = lc[q] + ex[q] * z
            if t > m:
                m = t
        s = 0.0
        dphi = 0.0
        for q in range(k):
            wv = exp(lc[q] + ex[q] * z - m)
            s += wv
            dphi += ex[q] * wv
        phi = m + log(s) - log_target
        dphi /= s
        if phi > 0:
            hi = z
        else:
            lo = z
        znew = z - phi / dphi
        if not (lo <= znew <= hi):
            znew = 0.5 * (lo + hi)
        if fabs(znew - z) <= 1e-15 * (fabs(z) if fabs(z) > 1.0 else 1.0):
            return znew
        z = znew
    return z


def solve_log_poly(log_coeffs, exps, double log_target):
    cdef int k = len(exps), q
    cdef double[::1] lc = np.ascontiguousarray(log_coeffs, dtype=np.float64)
    cdef double[::1] ex = np.ascontiguousarray(exps, dtype=np.float64)
    return _solve_log_poly(&lc[0], &ex[0], k, log_target)


cdef void _coordinate(const long[:, ::1] A, double[::1] s, double[::1] z,
                      const double[::1] log_b, Py_ssize_t i,
                      double* mx, double* acc, double* lc, double* ex, long emax) nogil:
    cdef Py_ssize_t j, n = A.shape[1]
    cdef long e
    cdef int k = 0
    cdef double t, znew
    for e in range(emax + 1):
        mx[e] = -INFINITY
        acc[e] = 0.0
    for j in range(n):
        e = A[i, j]
        if e > 0:
            t = s[j] - e * z[i]
            if t > mx[e]:
                mx[e] = t
    for j in range(n):
        e = A[i, j]
        if e > 0:
            acc[e] += exp(s[j] - e * z[i] - mx[e])
    for e in range(1, emax + 1):
        if acc[e] > 0.0:
            lc[k] = log(<double>e) + mx[e] + log(acc[e])
            ex[k] = <double>e
            k += 1
    znew = _solve_log_poly(lc, ex, k, log_b[i])
    for j in range(n):
        e = A[i, j]
        if e > 0:
            s[j] += e * (znew - z[i])
    z[i] = znew


def ascent_coordinate(const long[:, ::1] A, double[::1] s, double[::1] z,
                      const double[::1] log_b, Py_ssize_t i):
    cdef long emax = 0
    cdef Py_ssize_t j
    for j in range(A.shape[1]):
        if A[i, j] > emax:
            emax = A[i, j]
    cdef double[::1] work = np.empty(4 * (emax + 1))
    _coordinate(A, s, z, log_b, i, &work[0], &work[emax + 1],
                &work[2 * (emax + 1)], &work[3 * (emax + 1)], emax)


def ascent_run(const long[:, ::1] A, const double[::1] log_b, const double[::1] b,
               double[::1] s, double[::1] z, const long[::1] order, double tol, long max_iter):
    cdef Py_ssize_t d = A.shape[0], n = A.shape[1], i, j, q
    cdef long emax = 0, sweeps = 0
    for i in range(d):
        for j in range(n):
            if A[i, j] > emax:
                emax = A[i, j]
    cdef double[::1] work = np.empty(4 * (emax + 1))
    cdef double err, t, xj
    with nogil:
        while True:
            err = 0.0
            for i in range(d):
                t = 0.0
                for j in range(n):
                    if A[i, j] != 0:
                        t += A[i, j] * exp(s[j])
                if fabs(t - b[i]) > err:
                    err = fabs(t - b[i])
            if err <= tol or sweeps >= max_iter:
                break
            for q in range(order.shape[0]):
                _coordinate(A, s, z, log_b, order[q], &work[0], &work[emax + 1],
                            &work[2 * (emax + 1)], &work[3 * (emax + 1)], emax)
            sweeps += 1
    return sweeps, err
