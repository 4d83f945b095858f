"""Standard-form builders for classical and conic-coupling optimal transport.

Columns are always ordered lexicographically in their multi-index:
``(kappa, lambda)`` for transport and ``(kappa, i, lambda, j)`` for conic
coupling, with ``i`` and ``j`` running over ``1..e``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import isclose

import numpy as np

from .model import StandardFormLP


class ConstructionInfeasible(ValueError):
    """The closed-form witness does not apply to these margins.

    The problem itself may still be feasible; see
    :func:`entropic_lp.combinatorics.cone_membership`.
    """


def _exact(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, str):
        return Fraction(v)
    # repr gives the shortest decimal that round-trips, usually the intended value
    return Fraction(repr(float(v)))


@dataclass(frozen=True, eq=False)
class TransportProblem:
    mu: tuple
    nu: tuple
    cost: np.ndarray

    def __post_init__(self):
        mu = tuple(_exact(v) for v in np.ravel(np.asarray(self.mu, dtype=object)))
        nu = tuple(_exact(v) for v in np.ravel(np.asarray(self.nu, dtype=object)))
        cost = np.asarray(self.cost, dtype=float)
        if len(mu) < 1 or len(nu) < 1:
            raise ValueError("margins must be nonempty")
        if cost.shape != (len(mu), len(nu)):
            raise ValueError(f"cost has shape {cost.shape}, expected {(len(mu), len(nu))}")
        if any(v <= 0 for v in mu + nu):
            raise ValueError("margins must be strictly positive")
        if not np.all(np.isfinite(cost)):
            raise ValueError("cost must be finite")
        sm, sn = sum(mu), sum(nu)
        if sm != sn and not isclose(float(sm), float(sn), rel_tol=1e-12):
            raise ValueError(f"unbalanced margins: |mu| = {sm}, |nu| = {sn}")
        cost.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "cost", cost)

    @property
    def d1(self) -> int:
        return len(self.mu)

    @property
    def d2(self) -> int:
        return len(self.nu)

    @property
    def total(self) -> Fraction:
        return sum(self.mu)

    def mu_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.mu])

    def nu_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.nu])


@dataclass(frozen=True, eq=False)
class ConicProblem:
    d1: int
    e1: int
    d2: int
    e2: int
    mu: tuple
    nu: tuple
    cost: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        for name in ("d1", "e1", "d2", "e2"):
            v = getattr(self, name)
            if int(v) != v or v < 2:
                raise ValueError(f"{name} must be an integer >= 2, got {v}")
        mu = tuple(int(v) for v in self.mu)
        nu = tuple(int(v) for v in self.nu)
        if any(int(a) != a for a in list(self.mu) + list(self.nu)):
            raise ValueError("conic margins must be integers")
        if len(mu) != self.d1 or len(nu) != self.d2:
            raise ValueError("margin lengths must equal d1 and d2")
        if not all(1 <= m <= self.e1 for m in mu):
            raise ValueError(f"mu entries must lie in [1, {self.e1}]")
        if not all(1 <= m <= self.e2 for m in nu):
            raise ValueError(f"nu entries must lie in [1, {self.e2}]")
        cost = np.asarray(self.cost, dtype=float)
        if cost.shape != self.shape:
            raise ValueError(f"cost has shape {cost.shape}, expected {self.shape}")
        cost.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "cost", cost)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.d1, self.e1, self.d2, self.e2)


def transport_matrix(d1: int, d2: int) -> np.ndarray:
    """Row-sum / column-sum incidence matrix with the last column-sum row removed."""
    A = np.zeros((d1 + d2 - 1, d1 * d2), dtype=np.int64)
    for k, l in product(range(d1), range(d2)):
        col = k * d2 + l
        A[k, col] = 1
        if l < d2 - 1:
            A[d1 + l, col] = 1
    return A


def build_transport(tp: TransportProblem) -> StandardFormLP:
    A = transport_matrix(tp.d1, tp.d2)
    b = np.concatenate([tp.mu_array(), tp.nu_array()[:-1]])
    labels = tuple(f"x[{k + 1},{l + 1}]" for k, l in product(range(tp.d1), range(tp.d2)))
    return StandardFormLP(A, b, tp.cost.reshape(-1), labels)


def conic_matrix(d1: int, e1: int, d2: int, e2: int, normalized: bool = False) -> np.ndarray:
    n = d1 * e1 * d2 * e2
    A = np.zeros((d1 + d2 + int(normalized), n), dtype=np.int64)
    for col, (k, i, l, j) in enumerate(product(range(d1), range(e1), range(d2), range(e2))):
        A[k, col] = i + 1
        A[d1 + l, col] = j + 1
    if normalized:
        A[-1, :] = 1
    return A


def build_conic(cp: ConicProblem) -> StandardFormLP:
    A = conic_matrix(*cp.shape, normalized=cp.normalized)
    b = [float(v) for v in cp.mu + cp.nu]
    if cp.normalized:
        b.append(1.0)
    labels = tuple(
        f"x[{k + 1},{i + 1},{l + 1},{j + 1}]"
        for k, i, l, j in product(*(range(s) for s in cp.shape))
    )
    return StandardFormLP(A, np.array(b), cp.cost.reshape(-1), labels)


def conic_feasible_point(cp: ConicProblem) -> np.ndarray:
    """Product witness supported on ``i = |mu|``, ``j = |nu|``.

    Only valid when ``|mu| <= e1`` and ``|nu| <= e2``; otherwise
    :class:`ConstructionInfeasible` is raised.
    """
    sm, sn = sum(cp.mu), sum(cp.nu)
    if sm > cp.e1 or sn > cp.e2:
        raise ConstructionInfeasible(
            f"witness needs |mu| <= e1 and |nu| <= e2, got |mu| = {sm}, |nu| = {sn}"
        )
    x = np.zeros(cp.shape)
    mu_bar = np.array(cp.mu, dtype=float) / sm
    nu_bar = np.array(cp.nu, dtype=float) / sn
    x[:, sm - 1, :, sn - 1] = np.outer(mu_bar, nu_bar)
    return x


def birch_point_transport(tp: TransportProblem) -> np.ndarray:
    """The rank-one coupling ``mu nu^T / s``."""
    s = tp.total
    return np.array([[float(m * v / s) for v in tp.nu] for m in tp.mu])
