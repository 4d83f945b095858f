import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import logsumexp

from entropic_lp.builders import ConicProblem, build_conic, build_transport
from entropic_lp.dual_ascent import (
    AscentError,
    DualState,
    ascent_solve,
    coordinate_terms,
    coordinate_update,
    positive_root,
)
from entropic_lp.model import StandardFormLP, toric_residual
from entropic_lp.sinkhorn import sinkhorn_solve

from conftest import random_transport


def test_positive_root_linear():
    assert positive_root({1: 2.0}, 4.0) == pytest.approx(2.0, rel=1e-14)


def test_positive_root_quadratic():
    assert positive_root({1: 1.0, 2: 1.0}, 6.0) == pytest.approx(2.0, rel=1e-14)


def test_positive_root_substitution():
    E = positive_root({1: 0.5, 3: 0.25}, 10.0)
    assert abs(0.5 * E + 0.25 * E**3 - 10.0) < 1e-12 * 10


@settings(max_examples=100, deadline=None)
@given(
    st.dictionaries(st.integers(1, 6), st.floats(1e-6, 1e6), min_size=1, max_size=4),
    st.floats(1e-6, 1e6),
)
def test_positive_root_residual(terms, target):
    E = positive_root(terms, target)
    val = sum(c * E**e for e, c in terms.items())
    assert val == pytest.approx(target, rel=1e-12)


def test_positive_root_rejects_bad_input():
    with pytest.raises(ValueError):
        positive_root({0: 1.0}, 1.0)
    with pytest.raises(ValueError):
        positive_root({1: 0.0}, 1.0)
    with pytest.raises(ValueError):
        positive_root({1: 1.0}, -1.0)


def test_transport_updates_are_sinkhorn(backend):
    rng = np.random.default_rng(5)
    tp = random_transport(rng)
    lp = build_transport(tp)
    eps = 0.9
    state = DualState(rng.normal(size=lp.d), eps)
    for i in range(lp.d):
        state = coordinate_update(lp, state, i, backend)
        # closed form: p_i = eps log b_i - eps logsumexp over the row's columns
        others = lp.A.T @ state.p - lp.A[i] * state.p[i]
        cols = lp.A[i] == 1
        p_closed = eps * math.log(lp.b[i]) - eps * logsumexp((others[cols] - lp.c[cols]) / eps)
        assert abs(state.p[i] - p_closed) < 1e-12 * max(1.0, abs(p_closed))


def _normalized_conic(rng, shape=(2, 2, 2, 2)):
    d1, e1, d2, e2 = shape
    mu = rng.integers(1, e1 + 1, d1)
    nu = rng.integers(1, e2 + 1, d2)
    cost = rng.integers(0, 10, shape)
    return ConicProblem(d1, e1, d2, e2, mu.tolist(), nu.tolist(), cost, normalized=True)


def test_conic_kappa_coefficients(backend):
    rng = np.random.default_rng(8)
    cp = _normalized_conic(rng)
    lp = build_conic(cp)
    eps = 1.0
    state = DualState(rng.normal(size=lp.d), eps)
    d1, e1, d2, e2 = cp.shape
    for k in range(d1):
        f, g, h = state.p[:d1], state.p[d1:d1 + d2], state.p[-1]
        terms = coordinate_terms(lp, state.p, k, eps)
        for i in range(1, e1 + 1):
            gamma = sum(
                math.exp((h + j * g[l] - cp.cost[k, i - 1, l, j - 1]) / eps)
                for l in range(d2)
                for j in range(1, e2 + 1)
            )
            assert abs(terms[i] - i * gamma) < 1e-12 * max(1.0, i * gamma)
        E = positive_root(terms, lp.b[k])
        state = coordinate_update(lp, state, k, backend)
        assert abs(state.p[k] - eps * math.log(E)) < 1e-12 * max(1.0, abs(state.p[k]))


def test_normalization_update_closed_form():
    rng = np.random.default_rng(9)
    cp = _normalized_conic(rng)
    lp = build_conic(cp)
    eps = 1.0
    state = DualState(rng.normal(size=lp.d), eps)
    h_row = lp.d - 1
    state = coordinate_update(lp, state, h_row)
    d1 = cp.d1
    f, g = state.p[:d1], state.p[d1:-1]
    total = 0.0
    for k, i, l, j in np.ndindex(*cp.shape):
        total += math.exp(((i + 1) * f[k] + (j + 1) * g[l] - cp.cost[k, i, l, j]) / eps)
    assert abs(math.exp(state.p[h_row] / eps) - 1 / total) < 1e-12 / total


@pytest.mark.parametrize("seed", range(3))
def test_dual_increases_and_row_closes(seed, backend):
    rng = np.random.default_rng(20 + seed)
    lp = build_conic(_normalized_conic(rng, (2, 3, 2, 2)))
    state = DualState.initial(lp, 0.7)
    obj = state.objective(lp)
    for sweep in range(5):
        for i in range(lp.d):
            state = coordinate_update(lp, state, i, backend)
            new = state.objective(lp)
            assert new >= obj - 1e-12 * max(1.0, abs(obj))
            obj = new
            x = state.primal(lp)
            assert abs(lp.A[i] @ x - lp.b[i]) < 1e-10
            assert toric_residual(lp, x, 0.7).toric_inf < 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_random_transport_matches_sinkhorn(seed):
    tp = random_transport(np.random.default_rng(40 + seed))
    a = ascent_solve(build_transport(tp), 1.0, tol=1e-12)
    b = sinkhorn_solve(tp, 1.0, tol=1e-12)
    assert np.max(np.abs(a.x - b.x)) < 1e-8


def test_seeded_sweeps_converge(ex11_lp):
    a = ascent_solve(ex11_lp, 1.0)
    b = ascent_solve(ex11_lp, 1.0, seed=3)
    assert b.converged
    assert np.max(np.abs(a.x - b.x)) < 1e-8


def test_backends_agree(ex11_lp):
    from entropic_lp import kernels

    sols = [ascent_solve(ex11_lp, 0.5, backend=m.BACKEND) for m in kernels.available()]
    for s in sols[1:]:
        assert np.max(np.abs(s.x - sols[0].x)) < 1e-12


def test_nonpositive_rhs_rejected():
    lp = StandardFormLP([[1, 1], [1, 2]], [1, 0], [0, 0])
    with pytest.raises(AscentError):
        ascent_solve(lp, 1.0)
