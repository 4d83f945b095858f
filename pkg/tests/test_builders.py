import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entropic_lp.builders import (
    ConicProblem,
    ConstructionInfeasible,
    TransportProblem,
    birch_point_transport,
    build_conic,
    build_transport,
    conic_feasible_point,
    conic_matrix,
    transport_matrix,
)
from entropic_lp.model import ones_coefficients

from conftest import CONIC_2222, TRANSPORT_2x3


def test_transport_matrix_2x3():
    assert np.array_equal(transport_matrix(2, 3), TRANSPORT_2x3)


def test_transport_smallest_case():
    lp = build_transport(TransportProblem([1, 1], [1, 1], np.zeros((2, 2))))
    assert lp.A.tolist() == [[1, 1, 0, 0], [0, 0, 1, 1], [1, 0, 1, 0]]
    assert lp.b.tolist() == [1, 1, 1]


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(2, 6))
def test_transport_has_ones_in_row_space(d1, d2):
    lam = ones_coefficients(transport_matrix(d1, d2))
    assert lam is not None
    assert all(v == 1 for v in lam[:d1]) and all(v == 0 for v in lam[d1:])


def test_transport_rejects_unbalanced():
    with pytest.raises(ValueError):
        TransportProblem([1, 2], [1, 1], np.zeros((2, 2)))


def test_transport_rejects_bad_cost_shape():
    with pytest.raises(ValueError):
        TransportProblem([1, 1], [1, 1], np.zeros((2, 3)))


def test_conic_matrix_2222():
    assert np.array_equal(conic_matrix(2, 2, 2, 2), CONIC_2222)


def test_conic_normalized_appends_ones_row():
    A = conic_matrix(2, 2, 2, 2, normalized=True)
    assert A.shape == (5, 16)
    assert np.array_equal(A[:4], CONIC_2222)
    assert np.all(A[4] == 1)
    assert ones_coefficients(A) == (0, 0, 0, 0, 1)


def test_conic_2223_columns():
    A = conic_matrix(2, 2, 2, 3)
    assert A.shape[1] == 24
    assert set(A.sum(axis=0).tolist()) == {2, 3, 4, 5}


@pytest.mark.parametrize("shape", [(2, 2, 2, 2), (2, 3, 3, 2), (3, 2, 2, 3)])
def test_unnormalized_conic_has_no_ones(shape):
    assert ones_coefficients(conic_matrix(*shape)) is None


def test_conic_feasible_point_unit_margins():
    cp = ConicProblem(2, 2, 2, 2, (1, 1), (1, 1), np.zeros((2, 2, 2, 2)))
    x = conic_feasible_point(cp)
    expected = np.zeros((2, 2, 2, 2))
    expected[:, 1, :, 1] = 0.25
    assert np.array_equal(x, expected)
    lp = build_conic(cp)
    assert np.max(np.abs(lp.A @ x.reshape(-1) - lp.b)) < 1e-12


def test_conic_rejects_short_margins():
    with pytest.raises(ValueError):
        ConicProblem(1, 2, 2, 2, (1,), (1, 1), np.zeros((1, 2, 2, 2)))


def test_conic_witness_precondition():
    cp = ConicProblem(2, 2, 2, 2, (2, 2), (1, 1), np.zeros((2, 2, 2, 2)))
    with pytest.raises(ConstructionInfeasible):
        conic_feasible_point(cp)


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_conic_witness_satisfies_constraints(data):
    d1, d2 = data.draw(st.integers(2, 3)), data.draw(st.integers(2, 3))
    e1 = data.draw(st.integers(d1, 5))
    e2 = data.draw(st.integers(d2, 5))
    mu = data.draw(st.lists(st.integers(1, 2), min_size=d1, max_size=d1).filter(lambda m: sum(m) <= e1))
    nu = data.draw(st.lists(st.integers(1, 2), min_size=d2, max_size=d2).filter(lambda m: sum(m) <= e2))
    cp = ConicProblem(d1, e1, d2, e2, mu, nu, np.zeros((d1, e1, d2, e2)))
    lp = build_conic(cp)
    x = conic_feasible_point(cp).reshape(-1)
    assert np.all(x >= 0)
    assert np.max(np.abs(lp.A @ x - lp.b)) < 1e-12


def test_birch_point_example():
    tp = TransportProblem([7, 8], [4, 5, 6], np.zeros((2, 3)))
    expected = np.array([[28, 35, 42], [32, 40, 48]]) / 15
    assert np.allclose(birch_point_transport(tp), expected, rtol=0, atol=1e-15)


def test_birch_point_uniform():
    tp = TransportProblem([2, 2, 2], [3, 3], np.zeros((3, 2)))
    assert np.allclose(birch_point_transport(tp), 1.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 20), min_size=2, max_size=5), st.lists(st.integers(1, 20), min_size=2, max_size=5))
def test_birch_point_is_rank_one(mu, nu):
    diff = sum(mu) - sum(nu)
    if diff > 0:
        nu[-1] += diff
    else:
        mu[-1] -= diff
    tp = TransportProblem(mu, nu, np.zeros((len(mu), len(nu))))
    X = birch_point_transport(tp)
    minors = X[:, None, :, None] * X[None, :, None, :] - X[:, None, None, :] * X[None, :, :, None]
    assert np.max(np.abs(minors)) < 1e-12 * max(1.0, X.max() ** 2)
    assert np.allclose(X.sum(axis=1), mu) and np.allclose(X.sum(axis=0), nu)
