"""Bounds for polynomials whose Newton polytope is not a simplex.

The monomial-square exponents are triangulated, every term is split among
the simplices containing its exponent, and each resulting ST piece is bounded
by its own SONC program.  The constrained variant splits the coefficient
forms of ``G(mu)`` the same way and solves one joint program with shared
multipliers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .constrained import (
    ConstrainedProblem,
    _forms,
    add_constrained_program,
    build_g_structure,
    fixed_mu_certificate,
    ZERO_MU,
)
from .errors import (
    DegenerateSupport,
    NotSTForm,
    SolverFailure,
    TailNotCovered,
    TargetNotVertex,
)
from .geometry import Triangulation, fan_triangulation, hull_vertices, in_simplex, triangulate_squares
from .gpsolver import ProgramBuilder, SolverSettings, Status, solve_gp, solve_signomial, NoStartingPoint
from .polynomial import Exponent, Polynomial, Term, grlex_key, is_even
from .unconstrained import PIPELINE_SETTINGS, SoncCertificate, sonc_bound


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(repr(float(x)))


def _share(c, frac: Fraction):
    """``c * frac`` staying exact for exact ``c``."""
    if isinstance(c, (int, Fraction)):
        return Fraction(c) * frac
    return float(c) * float(frac)


@dataclass
class CoverDecomposition:
    f: Polynomial
    triangulation: Triangulation
    pieces: list[Polynomial]
    # (exponent, piece index) -> coefficient given to that piece
    split_weights: dict[tuple[Exponent, int], object]

    @property
    def k(self) -> int:
        return len(self.pieces)

    def members(self, e: Exponent) -> tuple[int, ...]:
        return tuple(i for i in range(self.k) if (e, i) in self.split_weights)

    def reconstruct(self) -> Polynomial:
        out = Polynomial.zero(self.f.n)
        for g in self.pieces:
            out = out + g
        return out

    def weights_json(self) -> list[dict]:
        return [
            {"exponent": list(e), "split": [str(self.split_weights.get((e, i), 0)) for i in range(self.k)]}
            for e in self.f.terms
        ]


def square_exponents(f: Polynomial) -> list[Exponent]:
    return [e for e, c in f.terms.items() if is_even(e) and c > 0]


def _containing(points: Sequence[Exponent], simplices: list[tuple[Exponent, ...]]) -> dict[Exponent, tuple[int, ...]]:
    out = {}
    for e in points:
        inside = tuple(i for i, s in enumerate(simplices) if in_simplex(e, s))
        if not inside:
            raise TailNotCovered(f"exponent {e} lies outside every simplex of the triangulation")
        out[e] = inside
    return out


def _fractions(f: Polynomial, k: int, containing: dict, weights) -> dict[Exponent, list[Fraction]]:
    """Per exponent, the share of its coefficient given to each piece."""
    out = {}
    for e, members in containing.items():
        shares = [Fraction(0)] * k
        given = None if weights in (None, "equal") else weights.get(e)
        if given is None:
            for i in members:
                shares[i] = Fraction(1, len(members))
        else:
            if len(given) != k:
                raise ValueError(f"split for {e} has {len(given)} entries, expected {k}")
            fe = _exact(f.coefficient(e))
            vals = [_exact(v) for v in given]
            for i, v in enumerate(vals):
                if v != 0 and i not in members:
                    raise ValueError(f"piece {i} does not contain {e} but receives {v}")
                if v * fe < 0:
                    raise ValueError(f"split of {e} changes the coefficient sign in piece {i}")
            total = sum(vals)
            if abs(total - fe) > Fraction(1, 10**9) * max(1, abs(fe)):
                raise ValueError(f"split of {e} sums to {float(total)}, expected {float(fe)}")
            # absorb rounding in the last nonzero share so the sum is exact
            last = max(i for i, v in enumerate(vals) if v != 0)
            vals[last] += fe - total
            shares = [v / fe for v in vals]
        out[e] = shares
    return out


def _resolve_triangulation(points: list[Exponent], tri) -> Triangulation:
    if tri is None or tri == "auto":
        return triangulate_squares(points)
    if isinstance(tri, Triangulation):
        return tri
    return Triangulation.from_simplices(tri)


def decompose(f: Polynomial, tri: Triangulation | Sequence | str | None = None,
              weights: str | Mapping[Exponent, Sequence] | None = "equal") -> CoverDecomposition:
    """Split ``f`` into ST pieces, one per simplex.

    ``weights`` is ``"equal"`` or maps exponents to per-piece coefficients
    (missing exponents are split equally).
    """
    squares = square_exponents(f)
    if not squares:
        raise DegenerateSupport("f has no monomial squares to triangulate")
    tri = _resolve_triangulation(squares, tri)
    square_set = set(squares)
    for p in tri.points:
        if p not in square_set:
            raise DegenerateSupport(f"simplex vertex {p} is not a monomial square of f")
    simplices = tri.simplex_points()
    containing = _containing(list(f.terms), simplices)
    shares = _fractions(f, len(simplices), containing, weights)
    split: dict[tuple[Exponent, int], object] = {}
    parts: list[list] = [[] for _ in simplices]
    for e, fr in shares.items():
        for i, s in enumerate(fr):
            if s != 0:
                c = _share(f.coefficient(e), s)
                split[(e, i)] = c
                parts[i].append((e, c))
    pieces = [Polynomial(f.n, p) for p in parts]
    return CoverDecomposition(f, tri, pieces, split)


def default_targets(dec: CoverDecomposition) -> list[Exponent]:
    origin = tuple([0] * dec.f.n)
    out = []
    for s in dec.triangulation.simplex_points():
        out.append(origin if origin in s else min(s, key=grlex_key))
    return out


@dataclass
class PieceBound:
    target: Exponent
    m_star: float
    certificate: SoncCertificate | None


@dataclass
class CoverResult:
    bound: float | None
    pieces: list[PieceBound]
    requirements: dict[Exponent, float]
    certificate: SoncCertificate | None
    decomposition: CoverDecomposition
    heuristic: bool = False
    solves: int = 0

    @property
    def m_stars(self) -> list[float]:
        return [p.m_star for p in self.pieces]


class _PieceCache:
    def __init__(self, settings: SolverSettings):
        self.settings = settings
        self.store: dict[tuple, PieceBound] = {}
        self.solves = 0

    def get(self, i: int, g: Polynomial, target: Exponent) -> PieceBound:
        key = (g, target)
        if key not in self.store:
            self.solves += 1
            try:
                r = sonc_bound(g, target, self.settings)
            except NotSTForm as exc:
                raise NotSTForm(f"piece {i}: {exc}") from exc
            except SolverFailure as exc:
                raise SolverFailure(f"piece {i}: {exc}", exc.result) from exc
            self.store[key] = PieceBound(target, r.m_star, r.certificate)
        return self.store[key]


def _aggregate(dec: CoverDecomposition, targets: list[Exponent], cache: _PieceCache) -> CoverResult:
    n = dec.f.n
    origin = tuple([0] * n)
    results = [cache.get(i, g, t) for i, (g, t) in enumerate(zip(dec.pieces, targets))]
    requirements: dict[Exponent, float] = {}
    for r in results:
        requirements[r.target] = requirements.get(r.target, 0.0) + r.m_star
    bound: float | None = None
    cert = None
    if origin in targets:
        ok = all(
            math.isfinite(r.m_star) and (t == origin or r.m_star <= float(g.coefficient(t)))
            for g, t, r in zip(dec.pieces, targets, results)
        )
        if ok:
            bound = sum(float(g.coefficient(origin)) - r.m_star
                        for g, t, r in zip(dec.pieces, targets, results) if t == origin)
            cert = SoncCertificate(origin, bound)
            for g, t, r in zip(dec.pieces, targets, results):
                cert.circuits.extend(r.certificate.circuits)
                cert.residual_squares.extend(r.certificate.residual_squares)
                if t != origin and r.certificate.shift > 0:
                    cert.residual_squares.append(Term(t, r.certificate.shift))
        else:
            bound = -math.inf
    return CoverResult(bound, results, requirements, cert, dec, solves=cache.solves)


def bound_via_cover(f: Polynomial, dec: CoverDecomposition, targets: Sequence | None = None,
                    settings: SolverSettings | None = None) -> CoverResult:
    """Per-piece SONC programs, aggregated.

    With at least one piece targeting the constant term the bound is
    ``sum over those pieces of (constant share - m*)``, valid when every
    other piece certifies with its own target coefficient; otherwise ``-inf``.
    Without such a piece ``bound`` is None and ``requirements`` holds the
    needed coefficient per target exponent.
    """
    if dec.f != f:
        raise ValueError("decomposition belongs to a different polynomial")
    targets = _check_targets(dec, targets)
    return _aggregate(dec, targets, _PieceCache(settings or PIPELINE_SETTINGS))


def _check_targets(dec: CoverDecomposition, targets) -> list[Exponent]:
    if targets is None:
        return default_targets(dec)
    targets = [tuple(t) for t in targets]
    if len(targets) != dec.k:
        raise ValueError(f"expected {dec.k} targets, got {len(targets)}")
    for i, (t, s) in enumerate(zip(targets, dec.triangulation.simplex_points())):
        if t not in s:
            raise TargetNotVertex(f"piece {i}: target {t} is not a vertex of its simplex")
    return targets


def _score(r: CoverResult) -> float:
    if r.bound is not None:
        return r.bound
    return -sum(r.requirements.values())


def _with_shares(dec: CoverDecomposition, split: dict) -> CoverDecomposition:
    parts: list[list] = [[] for _ in range(dec.k)]
    for (e, i), c in split.items():
        if c != 0:
            parts[i].append((e, c))
    pieces = [Polynomial(dec.f.n, p) for p in parts]
    return CoverDecomposition(dec.f, dec.triangulation, pieces, {k: v for k, v in split.items() if v != 0})


def improve_weights(f: Polynomial, dec: CoverDecomposition, targets: Sequence | None = None,
                    budget: int = 200, settings: SolverSettings | None = None
                    ) -> tuple[CoverDecomposition, CoverResult]:
    """Coordinate search over sign-preserving splits of shared exponents.

    A move transfers a fraction of one piece's share of an exponent to
    another piece; the fraction starts at 1 and halves after a sweep with no
    gain.  Vertex shares keep at least a tenth of their value so the piece
    keeps its simplex.  Budget counts piece program solves.  The returned
    bound is never worse than the input's.
    """
    targets = _check_targets(dec, targets)
    cache = _PieceCache(settings or PIPELINE_SETTINGS)
    best = _aggregate(dec, targets, cache)
    best_score = _score(best)
    simplices = dec.triangulation.simplex_points()
    shared = []
    for e in f.terms:
        owners = [i for i in range(dec.k) if in_simplex(e, simplices[i])]
        if len(owners) < 2:
            continue
        if all(targets[i] == e for i in owners):
            continue
        shared.append((e, owners))
    step = 1.0
    while step >= 1 / 64 and shared:
        improved = False
        for e, owners in shared:
            for i in owners:
                for j in owners:
                    if i == j:
                        continue
                    if cache.solves >= budget:
                        best.heuristic = True
                        best.solves = cache.solves
                        return dec, best
                    c = dec.split_weights.get((e, i), 0)
                    if c == 0:
                        continue
                    frac = min(step, 0.9) if e in simplices[i] else step
                    amount = _share(c, Fraction(frac).limit_denominator(1 << 20))
                    split = dict(dec.split_weights)
                    split[(e, i)] = c - amount
                    split[(e, j)] = split.get((e, j), 0) + amount
                    cand = _with_shares(dec, split)
                    try:
                        res = _aggregate(cand, targets, cache)
                    except (NotSTForm, SolverFailure):
                        continue
                    score = _score(res)
                    if score > best_score + 1e-9 * max(1.0, abs(best_score)):
                        dec, best, best_score, improved = cand, res, score, True
        if not improved:
            step /= 2
    best.heuristic = True
    best.solves = cache.solves
    return dec, best


# ------------------------------------------------------------- constrained


@dataclass
class ConstrainedCoverResult:
    bound: float
    mu: tuple[float, ...]
    m_stars: list[float]
    program_bound: float
    probe_bound: float
    pieces: list[ConstrainedProblem]
    triangulation: Triangulation
    certificate: SoncCertificate | None = None
    certified_bound: float = -math.inf
    heuristic: bool = False
    message: str = ""
    details: dict = field(default_factory=dict)


def constrained_pieces(p: ConstrainedProblem, tri=None, weights=None
                       ) -> tuple[Triangulation, list[ConstrainedProblem]]:
    """Split every coefficient form of ``G(mu)`` among the simplices containing it.

    ``weights`` maps exponents to per-piece fractions summing to one.
    """
    forms = _forms(p)
    origin = tuple([0] * p.n)
    squares = [e for e, form in forms.items() if is_even(e) and form.plus]
    if not squares:
        raise DegenerateSupport("G(mu) has no candidate monomial squares")
    if tri is None or tri == "auto":
        if origin not in squares or origin not in hull_vertices(squares):
            raise TargetNotVertex("the constant term is not a vertex of the square support")
        tri = fan_triangulation(squares, origin)
    else:
        tri = _resolve_triangulation(squares, tri)
    simplices = tri.simplex_points()
    containing = _containing(list(forms), simplices)
    k = len(simplices)
    polys = (p.f, *p.constraints)
    parts = [[[] for _ in polys] for _ in range(k)]
    for e, members in containing.items():
        given = (weights or {}).get(e)
        if given is None:
            fr = {i: Fraction(1, len(members)) for i in members}
        else:
            vals = [_exact(v) for v in given]
            if len(vals) != k or sum(vals) != 1 or any(v < 0 for v in vals):
                raise ValueError(f"fractions for {e} must be {k} nonnegative values summing to 1")
            if any(v != 0 and i not in members for i, v in enumerate(vals)):
                raise ValueError(f"fractions for {e} give weight to a piece not containing it")
            fr = {i: v for i, v in enumerate(vals) if v != 0}
        for i, s in fr.items():
            for q, poly in enumerate(polys):
                c = poly.coefficient(e)
                if c != 0:
                    parts[i][q].append((e, _share(c, s)))
    pieces = [
        ConstrainedProblem(Polynomial(p.n, part[0]), [Polynomial(p.n, t) for t in part[1:]])
        for part in parts
    ]
    return tri, pieces


def _concrete_cover(p: ConstrainedProblem, pieces: list[ConstrainedProblem], tri: Triangulation,
                    mu: Sequence[float], settings) -> tuple[float, SoncCertificate | None]:
    """Cover bound of the concrete ``G(mu)`` using the same split."""
    origin = tuple([0] * p.n)
    G = p.G(mu)
    concrete = [q.G(mu) for q in pieces]
    dec = CoverDecomposition(G, tri, concrete, {})
    cache = _PieceCache(settings)
    try:
        res = _aggregate(dec, [origin] * len(pieces), cache)
    except (NotSTForm, SolverFailure):
        return -math.inf, None
    if res.certificate is not None:
        res.certificate.multipliers = tuple(float(m) for m in mu)
    return (res.bound if res.bound is not None else -math.inf), res.certificate


def constrained_cover_bound(p: ConstrainedProblem, tri=None, weights=None, strategy: str = "gp",
                            settings: SolverSettings | None = None) -> ConstrainedCoverResult:
    """Joint program over all pieces with shared multipliers, plus the ``mu = 0`` probe."""
    settings = settings or PIPELINE_SETTINGS
    origin = tuple([0] * p.n)
    tri, pieces = constrained_pieces(p, tri, weights)
    structures = [build_g_structure(q, origin) for q in pieces]
    builder = ProgramBuilder()
    objectives = [
        add_constrained_program(builder, gs, signed=strategy == "snp", prefix=f"p{i}:")
        for i, gs in enumerate(structures)
    ]
    f0 = float(p.f.coefficient(origin))
    zeros = tuple([0] * p.s)
    probe, probe_cert = fixed_mu_certificate(p, zeros, settings)
    if strategy == "snp":
        try:
            res = solve_signomial(builder.sp(), settings)
        except NoStartingPoint:
            res = None
    else:
        res = solve_gp(builder.gp(), settings)
    names = builder.var_names
    program_bound, mu, m_stars = -math.inf, zeros, [math.inf] * len(pieces)
    if res is not None and res.status not in (Status.OPTIMAL, Status.INFEASIBLE):
        raise SolverFailure(f"joint cover program: {res.status.value} ({res.message})", res)
    if res is not None and res.ok:
        z = res.assignment
        m_stars = [sum(t.value(z) for t in obj) for obj in objectives]
        program_bound = f0 - res.objective_value
        mu = tuple(
            0.0 if z[names.index(f"mu[{i}]")] < ZERO_MU or names.index(f"mu[{i}]") in res.numerically_zero
            else float(z[names.index(f"mu[{i}]")])
            for i in range(1, p.s + 1)
        )
    if probe >= program_bound:
        bound, cert, certified = probe, probe_cert, probe
        if probe > program_bound:
            mu = zeros
    else:
        bound = program_bound
        certified, cert = _concrete_cover(p, pieces, tri, mu, settings)
    return ConstrainedCoverResult(bound, mu, m_stars, program_bound, probe, pieces, tri, cert, certified,
                                  heuristic=strategy == "snp")
