"""Exact lattice geometry: hull vertices, barycentric coordinates, ST recognition
and placing triangulations.

Every predicate is decided in rational arithmetic.  Floating-point linear
programs are only used to *propose* a certificate (a separating functional or a
convex combination), which is then re-checked exactly; if the proposal fails we
fall back to exhaustive exact enumeration.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import (
    ClubsuitViolated,
    DegenerateSimplex,
    DegenerateSupport,
    NotInSimplex,
    NotSimplex,
)
from .polynomial import Exponent, Polynomial, Term, grlex_key, is_even, is_monomial_square

# ------------------------------------------------------- exact linear algebra


def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    m = [list(r) for r in rows]
    pivots: list[int] = []
    ncols = len(m[0]) if m else 0
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                factor = m[i][c]
                m[i] = [a - factor * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def rank(vectors: Sequence[Sequence]) -> int:
    if not vectors:
        return 0
    _, piv = _rref([[Fraction(v) for v in row] for row in vectors])
    return len(piv)


def affine_dimension(points: Sequence[Sequence[int]]) -> int:
    if not points:
        return -1
    p0 = points[0]
    return rank([[a - b for a, b in zip(p, p0)] for p in points[1:]])


def affinely_independent(points: Sequence[Sequence[int]]) -> bool:
    return affine_dimension(points) == len(points) - 1


def _affine_solve(beta: Sequence[int], simplex: Sequence[Sequence[int]]) -> list[Fraction] | None:
    """Unique affine coordinates of ``beta`` w.r.t. independent ``simplex``, or None."""
    k = len(simplex)
    n = len(beta)
    rows = [[Fraction(simplex[j][i]) for j in range(k)] + [Fraction(beta[i])] for i in range(n)]
    rows.append([Fraction(1)] * k + [Fraction(1)])
    m, piv = _rref(rows)
    if k in piv:  # inconsistent: pivot in the augmented column
        return None
    sol = [Fraction(0)] * k
    for r, c in enumerate(piv):
        sol[c] = m[r][k]
    return sol


def barycentric(beta: Sequence[int], simplex: Sequence[Sequence[int]]) -> tuple[Fraction, ...]:
    """Exact barycentric coordinates of ``beta`` in ``simplex``."""
    if not affinely_independent(simplex):
        raise DegenerateSimplex(f"points {list(simplex)} are affinely dependent")
    lam = _affine_solve(beta, simplex)
    if lam is None:
        raise NotInSimplex(f"{tuple(beta)} is outside the affine hull")
    if any(v < 0 for v in lam):
        raise NotInSimplex(f"{tuple(beta)} has negative barycentric coordinate")
    return tuple(lam)


def in_simplex(beta: Sequence[int], simplex: Sequence[Sequence[int]]) -> bool:
    lam = _affine_solve(beta, simplex)
    return lam is not None and all(v >= 0 for v in lam)


def _det(m: list[list[Fraction]]) -> Fraction:
    m = [list(r) for r in m]
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for i in range(c + 1, n):
            if m[i][c] != 0:
                f = m[i][c] / m[c][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[c])]
    return det


def orientation(points: Sequence[Sequence[int]]) -> int:
    """Sign of the oriented volume of ``d+1`` points in ``R^d``."""
    p0 = points[0]
    d = _det([[Fraction(a - b) for a, b in zip(p, p0)] for p in points[1:]])
    return (d > 0) - (d < 0)


def simplex_volume(points: Sequence[Sequence[int]]) -> Fraction:
    """Unnormalised volume |det| of a full-dimensional simplex."""
    p0 = points[0]
    return abs(_det([[Fraction(a - b) for a, b in zip(p, p0)] for p in points[1:]]))


# ------------------------------------------------------------ hull vertices


def _in_hull_exact(p: Exponent, others: list[Exponent]) -> bool:
    """Carathéodory enumeration: is p a convex combination of ``others``?"""
    if not others:
        return False
    dim = affine_dimension(others)
    for size in range(1, dim + 2):
        for subset in itertools.combinations(others, size):
            if affinely_independent(subset) and in_simplex(p, subset):
                return True
    return False


def _separates(c: list[Fraction], p: Exponent, others: list[Exponent]) -> bool:
    cp = sum(a * b for a, b in zip(c, p))
    return all(cp > sum(a * b for a, b in zip(c, q)) for q in others)


def _is_vertex(p: Exponent, others: list[Exponent]) -> bool:
    if not others:
        return True
    Q = np.array(others, dtype=float)
    pf = np.array(p, dtype=float)
    k = len(others)
    # propose a convex combination
    res = linprog(
        np.zeros(k),
        A_eq=np.vstack([Q.T, np.ones(k)]),
        b_eq=np.append(pf, 1.0),
        bounds=[(0, None)] * k,
        method="highs",
    )
    if res.status == 0:
        support = [others[i] for i in range(k) if res.x[i] > 1e-9]
        if affinely_independent(support) and in_simplex(p, support):
            return False
    else:
        # propose a separating functional: max t s.t. c.(p - q) >= t, |c| <= 1
        n = len(p)
        D = pf[None, :] - Q
        res = linprog(
            np.r_[np.zeros(n), -1.0],
            A_ub=np.hstack([-D, np.ones((k, 1))]),
            b_ub=np.zeros(k),
            bounds=[(-1, 1)] * n + [(None, 1)],
            method="highs",
        )
        if res.status == 0 and res.x[-1] > 1e-12:
            c = [Fraction(v).limit_denominator(10**6) for v in res.x[:n]]
            if _separates(c, p, others):
                return True
    return not _in_hull_exact(p, others)


def hull_vertices(points: Sequence[Sequence[int]]) -> list[Exponent]:
    """Exact extreme points of conv(points), in graded-lex order."""
    pts = tuple(sorted({tuple(int(v) for v in p) for p in points}, key=grlex_key))
    if not pts:
        raise ValueError("empty point set")
    return list(_hull_vertices(pts))


@functools.lru_cache(maxsize=4096)
def _hull_vertices(pts: tuple[Exponent, ...]) -> tuple[Exponent, ...]:
    if len(pts) <= 2:
        return pts
    return tuple(p for p in pts if _is_vertex(p, [q for q in pts if q != p]))


def in_hull(p: Sequence[int], points: Sequence[Sequence[int]]) -> bool:
    p = tuple(p)
    pts = [tuple(q) for q in points]
    if p in pts:
        return True
    return not _is_vertex(p, pts)


# --------------------------------------------------------- support analysis


@dataclass(frozen=True)
class SupportAnalysis:
    points: list[Exponent]
    vertices: list[Exponent]
    delta_A: list[Exponent]
    delta_f: list[Exponent]
    clubsuit_ok: bool
    dimension: int


def analyze_support(f: Polynomial) -> SupportAnalysis:
    if f.is_zero():
        raise ValueError("zero polynomial has empty support")
    pts = f.support
    verts = hull_vertices(pts)
    vset = set(verts)
    delta_A = [p for p in pts if p not in vset]
    delta_f = [b for b in delta_A if not is_monomial_square(Term(b, f.terms[b]))]
    ok = all(is_even(v) and f.terms[v] > 0 for v in verts)
    return SupportAnalysis(pts, verts, delta_A, delta_f, ok, affine_dimension(pts))


@dataclass(frozen=True)
class STForm:
    """Simplex-tail structure of a polynomial.

    ``simplex_vertices[0]`` is the target vertex.  ``lam`` and ``nz`` are keyed
    by tail exponent; ``squares`` lists non-vertex monomial squares, which play
    no role in the programs but are carried along for certificates.
    """

    simplex_vertices: tuple[Exponent, ...]
    vertex_coeffs: tuple
    tail: tuple[tuple[Exponent, object], ...]
    lam: dict[Exponent, tuple[Fraction, ...]]
    nz: dict[Exponent, tuple[int, ...]]
    squares: tuple[tuple[Exponent, object], ...] = field(default=())

    @property
    def r(self) -> int:
        return len(self.simplex_vertices) - 1


def st_form(f: Polynomial, target: Sequence[int] | None = None) -> STForm:
    """Recognise ``f`` as an ST-polynomial, ordering vertices with ``target`` first."""
    sa = analyze_support(f)
    if not sa.clubsuit_ok:
        bad = [v for v in sa.vertices if not (is_even(v) and f.terms[v] > 0)]
        raise ClubsuitViolated(f"vertices {bad} are odd or have non-positive coefficients")
    if not affinely_independent(sa.vertices):
        raise NotSimplex(f"vertex set {sa.vertices} is not a simplex")
    verts = list(sa.vertices)
    if target is None:
        origin = tuple([0] * f.n)
        target = origin if origin in verts else verts[0]
    target = tuple(target)
    if target not in verts:
        from .errors import TargetNotVertex

        raise TargetNotVertex(f"{target} is not a vertex of the Newton polytope")
    verts.remove(target)
    verts.insert(0, target)
    lam, nz, tail, squares = {}, {}, [], []
    for b in sa.delta_A:
        if b in sa.delta_f:
            coords = barycentric(b, verts)
            lam[b] = coords
            nz[b] = tuple(j for j, v in enumerate(coords) if v != 0)
            tail.append((b, f.terms[b]))
        else:
            squares.append((b, f.terms[b]))
    return STForm(
        tuple(verts),
        tuple(f.terms[v] for v in verts),
        tuple(tail),
        lam,
        nz,
        tuple(squares),
    )


# ------------------------------------------------------------ triangulation


@dataclass(frozen=True)
class Triangulation:
    points: tuple[Exponent, ...]
    simplices: tuple[tuple[int, ...], ...]

    def simplex_points(self) -> list[tuple[Exponent, ...]]:
        return [tuple(self.points[i] for i in s) for s in self.simplices]

    @classmethod
    def from_simplices(cls, simplices: Sequence[Sequence[Sequence[int]]]) -> "Triangulation":
        pts: list[Exponent] = []
        index: dict[Exponent, int] = {}
        out = []
        for s in simplices:
            idx = []
            for p in s:
                p = tuple(int(v) for v in p)
                if p not in index:
                    index[p] = len(pts)
                    pts.append(p)
                idx.append(index[p])
            out.append(tuple(idx))
        return cls(tuple(pts), tuple(out))

    def to_json(self) -> list[list[list[int]]]:
        return [[list(p) for p in s] for s in self.simplex_points()]


def _boundary_facets(simplices: list[tuple[int, ...]]) -> dict[tuple[int, ...], int]:
    """Facets (sorted index tuples) that lie in exactly one simplex -> opposite vertex."""
    count: dict[tuple[int, ...], list[int]] = {}
    for s in simplices:
        for v in s:
            facet = tuple(sorted(set(s) - {v}))
            count.setdefault(facet, []).append(v)
    return {f: opp[0] for f, opp in count.items() if len(opp) == 1}


def triangulate_squares(points: Sequence[Sequence[int]]) -> Triangulation:
    """Placing triangulation of ``points`` inserted in graded-lex order."""
    pts = sorted({tuple(int(v) for v in p) for p in points}, key=grlex_key)
    if not pts:
        raise DegenerateSupport("no points to triangulate")
    n = len(pts[0])
    if affine_dimension(pts) != n:
        raise DegenerateSupport(f"affine hull of {pts} is not {n}-dimensional")
    # initial simplex: greedy affinely independent prefix
    chosen = [0]
    for i in range(1, len(pts)):
        if affinely_independent([pts[j] for j in chosen] + [pts[i]]):
            chosen.append(i)
        if len(chosen) == n + 1:
            break
    simplices: list[tuple[int, ...]] = [tuple(chosen)]
    for i in range(len(pts)):
        if i in chosen:
            continue
        p = pts[i]
        containing = []
        for s in simplices:
            lam = _affine_solve(p, [pts[j] for j in s])
            if lam is not None and all(v >= 0 for v in lam):
                containing.append((s, lam))
        if containing:
            for s, lam in containing:
                simplices.remove(s)
                for j, v in enumerate(lam):
                    if v > 0:
                        simplices.append(tuple(sorted(s[:j] + (i,) + s[j + 1:])))
            continue
        for facet, opp in _boundary_facets(simplices).items():
            fp = [pts[j] for j in facet]
            side_p = orientation(fp + [p])
            side_o = orientation(fp + [pts[opp]])
            if side_p != 0 and side_p != side_o:
                simplices.append(tuple(sorted(facet + (i,))))
    simplices.sort(key=lambda s: [grlex_key(pts[j]) for j in s])
    return Triangulation(tuple(pts), tuple(tuple(s) for s in simplices))


def fan_triangulation(points: Sequence[Sequence[int]], apex: Sequence[int]) -> Triangulation:
    """Cone from ``apex`` (a hull vertex) over the boundary facets avoiding it.

    Every simplex contains the apex; interior points are not used as vertices.
    """
    base = triangulate_squares(points)
    apex = tuple(apex)
    a = base.points.index(apex)
    facets = _boundary_facets(list(base.simplices))
    simplices = []
    for facet in facets:
        if a in facet:
            continue
        cand = [base.points[j] for j in facet] + [apex]
        if affinely_independent(cand):
            simplices.append(tuple(sorted(facet + (a,))))
    simplices.sort(key=lambda s: [grlex_key(base.points[j]) for j in s])
    return Triangulation(base.points, tuple(simplices))
