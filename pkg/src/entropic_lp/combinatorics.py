"""Closed-form complexity invariants of conic coupling, with exact polytope oracles.

Everything here is exact: integers and :class:`fractions.Fraction` only.
The oracles (placing triangulation, facet enumeration) are deliberately
naive and meant for dimension <= 5 with a few dozen points.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb, gcd
from typing import Sequence

import numpy as np

from .builders import conic_matrix


class DegenerateDimension(ValueError):
    pass


@dataclass(frozen=True)
class ConicShape:
    d1: int
    e1: int
    d2: int
    e2: int

    def __post_init__(self):
        for name in ("d1", "e1", "d2", "e2"):
            v = getattr(self, name)
            if int(v) != v or v < 2:
                raise ValueError(f"{name} must be an integer >= 2, got {v}")

    @property
    def d(self) -> int:
        return self.d1 + self.d2

    @property
    def n(self) -> int:
        return self.d1 * self.e1 * self.d2 * self.e2

    def columns(self) -> list[tuple[int, ...]]:
        return [tuple(int(v) for v in col) for col in conic_matrix(self.d1, self.e1, self.d2, self.e2).T]


@dataclass(frozen=True)
class Halfspace:
    """``normal . y <= offset``."""

    normal: tuple[Fraction, ...]
    offset: Fraction
    name: str = ""

    def slack(self, y) -> Fraction:
        return self.offset - sum(a * Fraction(v) for a, v in zip(self.normal, y))

    def primitive(self) -> tuple[tuple[int, ...], int]:
        """Integer representative with coprime entries."""
        vals = list(self.normal) + [self.offset]
        den = 1
        for v in vals:
            den = den * Fraction(v).denominator // gcd(den, Fraction(v).denominator)
        ints = [int(Fraction(v) * den) for v in vals]
        g = 0
        for v in ints:
            g = gcd(g, v)
        ints = [v // g for v in ints]
        return tuple(ints[:-1]), ints[-1]


@dataclass(frozen=True)
class FacetSystem:
    halfspaces: tuple[Halfspace, ...]

    def __len__(self):
        return len(self.halfspaces)

    def contains(self, y) -> bool:
        return all(h.slack(y) >= 0 for h in self.halfspaces)


# ---------------------------------------------------------------------------
# closed forms


def conic_degree(shape: ConicShape) -> int:
    """Algebraic degree of the entropic conic-coupling system, ``vol(conv(A u 0))``."""
    d1, e1, d2, e2 = shape.d1, shape.e1, shape.d2, shape.e2
    p1 = e1**d1 - 1
    p2 = e2**d2 - 1
    val = comb(d1 + d2, d1) * (
        Fraction(p1 * p2) + Fraction(d1, d1 + d2) * p2 + Fraction(d2, d1 + d2) * p1
    )
    if val.denominator != 1:
        raise ArithmeticError(f"degree {val} is not an integer")
    return int(val)


def conv_A_volume(shape: ConicShape) -> int:
    """Normalized volume of ``conv(A)`` (product of two dilated simplices)."""
    return comb(shape.d1 + shape.d2, shape.d1) * (shape.e1**shape.d1 - 1) * (shape.e2**shape.d2 - 1)


def visible_facet_volumes(shape: ConicShape) -> tuple[int, int]:
    """Volumes of the two facets of ``conv(A)`` seen from the origin."""
    d1, e1, d2, e2 = shape.d1, shape.e1, shape.d2, shape.e2
    return comb(d1 + d2 - 1, d2) * (e2**d2 - 1), comb(d1 + d2 - 1, d1) * (e1**d1 - 1)


def _cone_halfspaces(shape: ConicShape) -> list[Halfspace]:
    d1, d2, d = shape.d1, shape.d2, shape.d
    hs = []
    for k in range(d):
        normal = [Fraction(0)] * d
        normal[k] = Fraction(-1)
        hs.append(Halfspace(tuple(normal), Fraction(0), f"y{k + 1} >= 0"))
    first = [Fraction(1)] * d1 + [Fraction(-shape.e1)] * d2
    second = [Fraction(-shape.e2)] * d1 + [Fraction(1)] * d2
    hs.append(Halfspace(tuple(first), Fraction(0), "sum(y_src) <= e1*sum(y_dst)"))
    hs.append(Halfspace(tuple(second), Fraction(0), "sum(y_dst) <= e2*sum(y_src)"))
    return hs


@dataclass(frozen=True)
class ConeMembership:
    member: bool
    slacks: dict

    def __bool__(self):
        return self.member


def cone_membership(shape: ConicShape, y: Sequence) -> ConeMembership:
    """Is ``y`` in the feasibility cone ``pos(A)`` of conic coupling?

    Returns the verdict and the slack of every defining inequality
    (negative slack means violated).
    """
    if len(y) != shape.d:
        raise ValueError(f"y has dimension {len(y)}, expected {shape.d}")
    yq = [v if isinstance(v, Fraction) else Fraction(v) for v in y]
    slacks = {h.name: h.slack(yq) for h in _cone_halfspaces(shape)}
    return ConeMembership(all(s >= 0 for s in slacks.values()), slacks)


def convA0_facets(shape: ConicShape) -> FacetSystem:
    """The ``d + 4`` facet inequalities of ``conv(A u {0})``."""
    d1, d = shape.d1, shape.d
    hs = _cone_halfspaces(shape)
    src = tuple(Fraction(1) if k < d1 else Fraction(0) for k in range(d))
    dst = tuple(Fraction(0) if k < d1 else Fraction(1) for k in range(d))
    hs.append(Halfspace(src, Fraction(shape.e1), "sum(y_src) <= e1"))
    hs.append(Halfspace(dst, Fraction(shape.e2), "sum(y_dst) <= e2"))
    return FacetSystem(tuple(hs))


# ---------------------------------------------------------------------------
# exact polytope oracles


def det(rows: Sequence[Sequence]) -> Fraction | int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    M = [list(r) for r in rows]
    n = len(M)
    if n == 0:
        return 1
    if any(isinstance(v, Fraction) for r in M for v in r):
        M = [[Fraction(v) for v in r] for r in M]
        exact_div = lambda a, b: a / b  # noqa: E731
    else:
        exact_div = lambda a, b: a // b  # noqa: E731
    sign = 1
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if M[i][k] != 0), None)
            if swap is None:
                return 0
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = exact_div(M[i][j] * M[k][k] - M[i][k] * M[k][j], prev)
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def _orient(face_pts, p):
    base = face_pts[0]
    return det([[a - b for a, b in zip(q, base)] for q in face_pts[1:]] + [[a - b for a, b in zip(p, base)]])


def _affine_rank(points) -> int:
    from .model import exact_rank

    base = points[0]
    diffs = [[Fraction(a) - Fraction(b) for a, b in zip(q, base)] for q in points[1:]]
    if not diffs:
        return 0
    den = 1
    for r in diffs:
        for v in r:
            den = den * v.denominator // gcd(den, v.denominator)
    return exact_rank([[int(v * den) for v in r] for r in diffs])


def _initial_simplex(points) -> list[int]:
    dim = len(points[0])
    chosen = [0]
    for k in range(1, len(points)):
        if _affine_rank([points[i] for i in chosen + [k]]) == len(chosen):
            chosen.append(k)
            if len(chosen) == dim + 1:
                return chosen
    raise DegenerateDimension(
        f"points span an affine space of dimension {len(chosen) - 1} < {dim}"
    )


def placing_triangulation(points: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """Placing (beneath-beyond) triangulation of the convex hull.

    Points are inserted in the given order; each one is coned over the
    boundary faces it sees strictly.  Returns simplices as index tuples.
    """
    pts = [tuple(p) for p in points]
    if not pts:
        raise DegenerateDimension("no points")
    dim = len(pts[0])
    init = _initial_simplex(pts)
    simplices = [tuple(init)]
    # boundary face -> vertex of its simplex opposite to it
    boundary: dict[frozenset, int] = {}
    for v in init:
        boundary[frozenset(set(init) - {v})] = v
    for k in range(len(pts)):
        if k in init:
            continue
        visible = []
        for face, opp in boundary.items():
            fp = [pts[i] for i in sorted(face)]
            s_opp = _orient(fp, pts[opp])
            s_new = _orient(fp, pts[k])
            if s_new != 0 and (s_new > 0) != (s_opp > 0):
                visible.append(face)
        if not visible:
            continue
        for face in visible:
            del boundary[face]
        for face in visible:
            simplices.append(tuple(sorted(face | {k})))
            for v in face:
                new_face = frozenset(face - {v} | {k})
                if new_face in boundary:
                    del boundary[new_face]
                else:
                    boundary[new_face] = v
    assert all(len(s) == dim + 1 for s in simplices)
    return simplices


def volume_oracle(points: Sequence[Sequence[int]]) -> int:
    """Normalized lattice volume (``dim!`` times Euclidean) of ``conv(points)``."""
    pts = [tuple(p) for p in points]
    total = 0
    for s in placing_triangulation(pts):
        base = pts[s[0]]
        total += abs(det([[a - b for a, b in zip(pts[i], base)] for i in s[1:]]))
    if isinstance(total, Fraction):
        if total.denominator != 1:
            raise ArithmeticError("non-lattice polytope has fractional normalized volume")
        total = total.numerator
    return int(total)


def _hyperplane(face_pts) -> tuple[list, object]:
    """Normal (generalized cross product) and offset of the hyperplane through ``face_pts``."""
    base = face_pts[0]
    diffs = [[a - b for a, b in zip(q, base)] for q in face_pts[1:]]
    dim = len(base)
    normal = []
    for k in range(dim):
        minor = [[r[j] for j in range(dim) if j != k] for r in diffs]
        normal.append((-1) ** k * det(minor))
    offset = sum(a * b for a, b in zip(normal, base))
    return normal, offset


def _exact_points(points) -> list[tuple]:
    # plain ints keep the determinant loops fast; Fractions only when needed
    q = [tuple(Fraction(v) for v in p) for p in points]
    if all(v.denominator == 1 for p in q for v in p):
        return [tuple(int(v) for v in p) for p in q]
    return q


def hull_facets(points: Sequence[Sequence]) -> FacetSystem:
    """All facets of a full-dimensional ``conv(points)`` by exhaustive search.

    Each facet is returned once, as a primitive integer halfspace.
    """
    pts = _exact_points(points)
    dim = len(pts[0])
    _initial_simplex(pts)
    found = {}
    for S in combinations(range(len(pts)), dim):
        normal, offset = _hyperplane([pts[i] for i in S])
        if all(v == 0 for v in normal):
            continue
        vals = [sum(a * b for a, b in zip(normal, p)) - offset for p in pts]
        if all(v <= 0 for v in vals):
            h = Halfspace(tuple(normal), offset)
        elif all(v >= 0 for v in vals):
            h = Halfspace(tuple(-a for a in normal), -offset)
        else:
            continue
        key = h.primitive()
        if key not in found:
            found[key] = Halfspace(tuple(Fraction(v) for v in key[0]), Fraction(key[1]))
    return FacetSystem(tuple(found.values()))


def hull_vertices(points: Sequence[Sequence]) -> list[int]:
    """Indices of points that are vertices of their full-dimensional hull.

    A point is a vertex iff the normals of the facets through it span the
    whole space.
    """
    from .model import exact_rank

    pts = _exact_points(points)
    facets = hull_facets(pts)
    prims = [h.primitive() for h in facets.halfspaces]
    dim = len(pts[0])
    verts = []
    for k, p in enumerate(pts):
        tight = [list(nv) for nv, off in prims if sum(a * b for a, b in zip(nv, p)) == off]
        if tight and exact_rank(tight) == dim:
            verts.append(k)
    return verts


def cone_extreme_rays(A) -> list[tuple[int, ...]]:
    """Extreme rays of ``pos(A)`` for a matrix whose columns lie in ``y >= 0``.

    Columns are scaled onto the hyperplane ``sum(y) = 1``; the hull vertices
    of that cross-section, projected to the first ``d - 1`` coordinates,
    are the rays.
    """
    A = np.asarray(A, dtype=np.int64)
    cols = [tuple(int(v) for v in c) for c in A.T]
    directions = {}
    for col in cols:
        g = 0
        for v in col:
            g = gcd(g, v)
        directions.setdefault(tuple(v // g for v in col), None)
    dirs = list(directions)
    section = [tuple(Fraction(v, sum(col)) for v in col[:-1]) for col in dirs]
    return [dirs[k] for k in hull_vertices(section)]
