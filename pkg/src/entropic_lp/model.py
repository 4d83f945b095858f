"""Core problem representation and exact integer linear algebra.

The constraint matrix of a standard-form LP is kept as a nonnegative integer
array; rank, kernels and row-space membership are computed in exact
integer/rational arithmetic so that they can serve as certificates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isfinite
from typing import Optional, Sequence

import numpy as np

# Exact elimination refuses entries beyond this many bits.
MAX_EXACT_BITS = 4096


class InstanceTooLarge(ArithmeticError):
    """Exact arithmetic grew beyond :data:`MAX_EXACT_BITS`."""


class NotOnVariety(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StandardFormLP:
    """``minimize c.x  subject to  A x = b, x >= 0``.

    ``A`` is stored as an ``int64`` array; ``b`` and ``c`` as ``float64``.
    Arrays are made read-only on construction.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    labels: Optional[tuple] = None

    def __post_init__(self):
        A = np.array(self.A)
        if A.ndim != 2:
            raise ValueError("A must be a 2-d array")
        if A.size and not np.all(np.equal(np.mod(A, 1), 0)):
            raise ValueError("A must have integer entries")
        A = A.astype(np.int64)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        if b.shape[0] != A.shape[0]:
            raise ValueError(f"b has length {b.shape[0]}, expected {A.shape[0]}")
        if c.shape[0] != A.shape[1]:
            raise ValueError(f"c has length {c.shape[0]}, expected {A.shape[1]}")
        if self.labels is not None and len(self.labels) != A.shape[1]:
            raise ValueError("labels must name every column")
        for arr in (A, b, c):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def d(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def with_cost(self, c) -> "StandardFormLP":
        return StandardFormLP(self.A, self.b, c, self.labels)


@dataclass(frozen=True)
class ResidualReport:
    primal_inf: float
    toric_inf: float
    dual_gap: Optional[float] = None

    def __post_init__(self):
        for name in ("primal_inf", "toric_inf", "dual_gap"):
            v = getattr(self, name)
            if v is None:
                continue
            if not (isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")


@dataclass(frozen=True, eq=False)
class EntropicSolution:
    """The regularized optimum ``x*(epsilon)`` together with dual potentials.

    ``x_j = exp((a_j . p - c_j) / epsilon)`` for every solver in this package.
    """

    x: np.ndarray
    p: np.ndarray
    epsilon: float
    iterations: int
    residuals: ResidualReport
    converged: bool = True
    method: str = ""

    def __post_init__(self):
        # zeros only arise from rows with b_i = 0, which force whole columns off
        if not (np.all(self.x >= 0) and np.all(np.isfinite(self.x))):
            raise ValueError("entropic solutions are nonnegative and finite")


@dataclass(frozen=True)
class IntegerKernelBasis:
    vectors: tuple[tuple[int, ...], ...]
    n: int

    def __len__(self):
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)

    def as_array(self) -> np.ndarray:
        if not self.vectors:
            return np.zeros((0, self.n), dtype=np.int64)
        return np.array(self.vectors, dtype=np.int64)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    rank: int
    d: int
    n: int
    zero_columns: tuple[int, ...] = ()
    negative_entries: tuple[tuple[int, int], ...] = ()
    problems: tuple[str, ...] = field(default_factory=tuple)


# ---------------------------------------------------------------------------
# exact integer elimination


def _as_int_rows(M) -> list[list[int]]:
    rows = []
    for row in np.atleast_2d(np.asarray(M, dtype=object)):
        out = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                if not float(v).is_integer():
                    raise ValueError(f"non-integer entry {v}")
                v = int(v)
            elif isinstance(v, Fraction):
                if v.denominator != 1:
                    raise ValueError(f"non-integer entry {v}")
                v = v.numerator
            out.append(int(v))
        rows.append(out)
    return rows


def _row_content(row: list[int]) -> int:
    g = 0
    for v in row:
        g = gcd(g, v)
    return g


def _check_size(row: list[int]) -> None:
    for v in row:
        if v.bit_length() > MAX_EXACT_BITS:
            raise InstanceTooLarge("entry exceeds exact arithmetic budget")


def integer_rref(M) -> tuple[list[list[int]], list[int]]:
    """Fraction-free reduced row echelon form.

    Returns ``(rows, pivots)`` where ``rows`` are the nonzero integer rows,
    each divided by its content, and ``pivots[r]`` is the pivot column of
    row ``r``.  Every pivot column is zero outside its own row.
    """
    rows = [r for r in _as_int_rows(M) if any(r)]
    if not rows:
        return [], []
    for row in rows:
        _check_size(row)
    ncols = len(rows[0])
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        piv = next((k for k in range(r, len(rows)) if rows[k][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        prow = rows[r]
        if prow[col] < 0:
            prow = rows[r] = [-v for v in prow]
        p = prow[col]
        for k in range(len(rows)):
            if k == r or rows[k][col] == 0:
                continue
            q = rows[k][col]
            new = [p * u - q * v for u, v in zip(rows[k], prow)]
            g = _row_content(new)
            if g > 1:
                new = [v // g for v in new]
            _check_size(new)
            rows[k] = new
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    rows = [row for row in rows[:r]]
    for k, row in enumerate(rows):
        g = _row_content(row)
        if g > 1:
            rows[k] = [v // g for v in row]
    return rows, pivots


def exact_rank(M) -> int:
    return len(integer_rref(M)[1])


def _normalize_vector(v: list[int]) -> tuple[int, ...]:
    g = _row_content(v)
    if g > 1:
        v = [x // g for x in v]
    first = next((x for x in v if x != 0), 0)
    if first < 0:
        v = [-x for x in v]
    return tuple(v)


def integer_kernel(M) -> IntegerKernelBasis:
    """Exact integer basis of ``ker(M)``.

    Each vector is primitive (content 1) with its first nonzero entry
    positive, one vector per free column of the echelon form.
    """
    M_rows = _as_int_rows(M)
    n = len(M_rows[0]) if M_rows else 0
    rows, pivots = integer_rref(M_rows)
    pivot_set = set(pivots)
    basis = []
    for free in range(n):
        if free in pivot_set:
            continue
        L = 1
        for r, pc in enumerate(pivots):
            if rows[r][free] != 0:
                p = rows[r][pc]
                L = L * p // gcd(L, p)
        u = [0] * n
        u[free] = L
        for r, pc in enumerate(pivots):
            u[pc] = -L * rows[r][free] // rows[r][pc]
        basis.append(_normalize_vector(u))
    return IntegerKernelBasis(tuple(basis), n)


def solve_rational(M, rhs) -> Optional[list[Fraction]]:
    """Exact solution of ``M y = rhs`` for a full-column-rank ``M``.

    Returns None when the system is inconsistent or ``M`` is column-rank
    deficient.
    """
    rows = [[Fraction(v) for v in row] + [Fraction(r)] for row, r in zip(M, rhs)]
    m = len(rows)
    k = len(rows[0]) - 1 if rows else 0
    r = 0
    for col in range(k):
        piv = next((i for i in range(r, m) if rows[i][col] != 0), None)
        if piv is None:
            return None
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][col]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(m):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [u - f * v for u, v in zip(rows[i], rows[r])]
        r += 1
    for i in range(r, m):
        if rows[i][k] != 0:
            return None
    return [rows[i][k] for i in range(k)]


def exact_b(b) -> list[Fraction]:
    return [v if isinstance(v, Fraction) else Fraction(float(v)) for v in b]


# ---------------------------------------------------------------------------
# operations


def validate(lp: StandardFormLP) -> ValidationReport:
    A = lp.A
    d, n = A.shape
    problems = []
    zero_cols = tuple(int(j) for j in np.flatnonzero(~np.any(A != 0, axis=0)))
    neg = tuple((int(i), int(j)) for i, j in zip(*np.nonzero(A < 0)))
    rank = exact_rank(A) if A.size else 0
    if d < 1:
        problems.append("A has no rows")
    if n < d:
        problems.append(f"n = {n} < d = {d}")
    if zero_cols:
        problems.append(f"zero columns {list(zero_cols)}")
    if neg:
        problems.append(f"{len(neg)} negative entries")
    if rank < d:
        problems.append(f"rank deficient: rank {rank} < d = {d}")
    return ValidationReport(
        ok=not problems,
        rank=rank,
        d=d,
        n=n,
        zero_columns=zero_cols,
        negative_entries=neg,
        problems=tuple(problems),
    )


def ones_coefficients(A) -> Optional[tuple[Fraction, ...]]:
    """Return ``lam`` with ``lam^T A = (1, ..., 1)`` exactly, or None."""
    A = _as_int_rows(A)
    if not A:
        return None
    n = len(A[0])
    At = [[A[i][j] for i in range(len(A))] for j in range(n)]
    rows, pivots = integer_rref([row + [1] for row in At])
    d = len(A)
    if d in pivots:
        return None
    # a consistent system may still be underdetermined if rank(A) < d
    lam = [Fraction(0)] * d
    for r, pc in enumerate(pivots):
        lam[pc] = Fraction(rows[r][d], rows[r][pc])
    # verify, since free coordinates were set to zero
    for j in range(n):
        if sum(lam[i] * A[i][j] for i in range(d)) != 1:
            return None
    return tuple(lam)


def _require_integer_cost(c: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(c)) or not np.all(c == np.round(c)):
        raise ValueError("toric residuals need an integer-valued cost vector")
    return np.round(c).astype(np.int64)


def log_binomial_residual(
    kernel: np.ndarray, logx: np.ndarray, shift: np.ndarray
) -> float:
    """``max_u |u . (log x + shift)|`` over the rows of ``kernel``."""
    if kernel.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(kernel @ (logx + shift))))


def toric_residual(lp: StandardFormLP, x, epsilon: float) -> ResidualReport:
    """Primal infeasibility and distance from ``T_{A,c,epsilon}`` in log space.

    ``x`` lies on the scaled toric variety iff ``log x + c/epsilon`` is in the
    row space of ``A``, i.e. iff every integer kernel vector ``u`` of ``A``
    annihilates it.  ``toric_inf`` is the largest such violation.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (lp.n,):
        raise ValueError(f"x has shape {x.shape}, expected ({lp.n},)")
    if not np.all(x > 0):
        raise ValueError("x must be strictly positive")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    _require_integer_cost(lp.c)
    kernel = kernel_array(lp.A)
    return ResidualReport(
        primal_inf=float(np.max(np.abs(lp.A @ x - lp.b))),
        toric_inf=log_binomial_residual(kernel, np.log(x), lp.c / epsilon),
    )


_kernel_cache: dict[bytes, np.ndarray] = {}


def kernel_array(A: np.ndarray) -> np.ndarray:
    """Integer kernel of ``A`` as a float array, cached per matrix."""
    A = np.ascontiguousarray(A)
    key = A.shape.__repr__().encode() + A.tobytes()
    K = _kernel_cache.get(key)
    if K is None:
        K = integer_kernel(A).as_array().astype(float)
        K.setflags(write=False)
        if len(_kernel_cache) < 256:
            _kernel_cache[key] = K
    return K


def solution_report(lp: StandardFormLP, x: np.ndarray, p: np.ndarray, epsilon: float) -> ResidualReport:
    """Residuals for a solver output; the toric term accepts real costs."""
    primal = float(np.max(np.abs(lp.A @ x - lp.b)))
    pos = x > 0
    A = lp.A if pos.all() else lp.A[:, pos]
    toric = log_binomial_residual(kernel_array(A), np.log(x[pos]), lp.c[pos] / epsilon)
    xp = x[pos]
    primal_obj = float(lp.c[pos] @ xp + epsilon * np.sum(xp * np.log(xp) - xp))
    dual_obj = float(lp.b @ p - epsilon * np.sum(x))
    return ResidualReport(primal, toric, abs(primal_obj - dual_obj))


def dual_objective(lp: StandardFormLP, p, epsilon: float) -> float:
    """``b.p - epsilon * sum exp((A^T p - c)/epsilon)``."""
    p = np.asarray(p, dtype=float)
    return float(lp.b @ p - epsilon * np.sum(np.exp((lp.A.T @ p - lp.c) / epsilon)))


def as_lp(A: Sequence, b: Sequence, c: Sequence, labels=None) -> StandardFormLP:
    return StandardFormLP(np.asarray(A), np.asarray(b, dtype=float), np.asarray(c, dtype=float), labels)


# ---------------------------------------------------------------------------
# minimal face


@dataclass(frozen=True, eq=False)
class FaceRestriction:
    """The LP restricted to the smallest face of ``x >= 0`` containing ``P_{A,b}``.

    ``columns`` are the coordinates that are positive somewhere on ``P``;
    ``rows`` a maximal independent subset of the rows of ``A[:, columns]``.
    """

    lp: StandardFormLP
    columns: np.ndarray
    rows: np.ndarray
    parent: StandardFormLP

    @property
    def trivial(self) -> bool:
        return len(self.columns) == self.parent.n and len(self.rows) == self.parent.d

    def embed_x(self, x_face: np.ndarray) -> np.ndarray:
        x = np.zeros(self.parent.n)
        x[self.columns] = x_face
        return x

    def embed_p(self, p_face: np.ndarray) -> np.ndarray:
        p = np.zeros(self.parent.d)
        p[self.rows] = p_face
        return p


class EmptyPolytope(ValueError):
    pass


def minimal_face(lp: StandardFormLP) -> FaceRestriction:
    """Columns that can be positive on ``{Ax = b, x >= 0}``.

    Solves ``max sum z`` over ``A y = tau b``, ``0 <= z <= min(y, 1)``,
    ``tau >= 0``.  Scaling ``(y, tau)`` lets every column that is positive at
    some feasible point reach ``z_j = 1``, so the optimum is the 0/1
    indicator of the minimal face.
    """
    from scipy.optimize import linprog

    d, n = lp.A.shape
    # variables: y (n), z (n), tau
    A_eq = np.hstack([lp.A.astype(float), np.zeros((d, n)), -lp.b[:, None]])
    A_ub = np.hstack([-np.eye(n), np.eye(n), np.zeros((n, 1))])
    cost = np.concatenate([np.zeros(n), -np.ones(n), [0.0]])
    bounds = [(0, None)] * n + [(0, 1)] * n + [(0, None)]
    res = linprog(cost, A_ub=A_ub, b_ub=np.zeros(n), A_eq=A_eq, b_eq=np.zeros(d), bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"face detection LP failed: {res.message}")
    z = res.x[n : 2 * n]
    cols = np.flatnonzero(z > 0.5)
    if cols.size == 0:
        raise EmptyPolytope("Ax = b has no nonnegative solution")
    sub = lp.A[:, cols]
    _, pivots = integer_rref(sub.T)
    rows = np.array(pivots, dtype=np.int64)
    if cols.size == n and rows.size == d:
        face_lp = lp
    else:
        face_lp = StandardFormLP(sub[rows], lp.b[rows], lp.c[cols])
    return FaceRestriction(face_lp, cols, rows, lp)


def lift_solution(face: FaceRestriction, sol: EntropicSolution) -> EntropicSolution:
    """Embed a solution of ``face.lp`` back into the parent problem."""
    x = face.embed_x(sol.x)
    p = face.embed_p(sol.p)
    return EntropicSolution(
        x=x,
        p=p,
        epsilon=sol.epsilon,
        iterations=sol.iterations,
        residuals=solution_report(face.parent, x, p, sol.epsilon),
        converged=sol.converged,
        method=sol.method,
    )
