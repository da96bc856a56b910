"""Lower bounds for ``f`` on ``K = {g_i >= 0}`` through ``G(mu) = f - sum mu_i g_i``.

Every coefficient of ``G(mu)`` is a linear form in ``(mu_0 = 1, mu_1, ..., mu_s)``
with ``g_0 = -f``.  Splitting each form into its positive and negative parts
gives a geometric program (when each non-target vertex form has a single
positive term) and, in general, a signomial program.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    ClubsuitViolated,
    DimensionMismatch,
    HypothesisViolated,
    NoStartingPoint,
    NotSimplex,
    NotSTForm,
    SolverFailure,
    TargetNotVertex,
)
from .geometry import affinely_independent, barycentric, hull_vertices
from .gpsolver import (
    GeometricProgram,
    PosyMonomial,
    ProgramBuilder,
    SignomialProgram,
    SolveResult,
    SolverSettings,
    Status,
    solve_gp,
    solve_signomial,
)
from .polynomial import Exponent, Polynomial, grlex_key, is_even
from .unconstrained import PIPELINE_SETTINGS, SoncCertificate, _tail_summand, global_bound


@dataclass(frozen=True)
class ConstrainedProblem:
    f: Polynomial
    constraints: tuple[Polynomial, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if any(g.n != self.f.n for g in self.constraints):
            raise DimensionMismatch("constraints and objective have different variable counts")

    @property
    def n(self) -> int:
        return self.f.n

    @property
    def s(self) -> int:
        return len(self.constraints)

    def G(self, mu: Sequence) -> Polynomial:
        """The concrete polynomial ``f - sum mu_i g_i``."""
        if len(mu) != self.s:
            raise DimensionMismatch(f"expected {self.s} multipliers, got {len(mu)}")
        out = self.f
        for m, g in zip(mu, self.constraints):
            if m != 0:
                out = out - g.scale(m)
        return out


@dataclass(frozen=True)
class LinearForm:
    """``G_e(mu) = sum_i coefficients[i] * mu_i`` with ``mu_0 = 1``."""

    coefficients: tuple

    def value(self, mu: Sequence) -> float:
        return self.coefficients[0] + sum(c * m for c, m in zip(self.coefficients[1:], mu))

    @property
    def plus(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.coefficients) if c > 0)

    @property
    def minus(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.coefficients) if c < 0)

    def plus_value(self, mu) -> float:
        full = (1, *mu)
        return sum(self.coefficients[i] * full[i] for i in self.plus)

    def minus_value(self, mu) -> float:
        full = (1, *mu)
        return -sum(self.coefficients[i] * full[i] for i in self.minus)


@dataclass(frozen=True)
class GStructure:
    n: int
    s: int
    points: tuple[Exponent, ...]
    vertices: tuple[Exponent, ...]  # target first
    tails: tuple[Exponent, ...]
    lam: dict
    nz: dict
    forms: dict
    pruned: tuple[Exponent, ...]

    @property
    def target(self) -> Exponent:
        return self.vertices[0]

    @property
    def g_plus_target(self) -> tuple[float, ...]:
        form = self.forms.get(self.target)
        if form is None:
            return tuple([0] * self.s)
        return tuple(max(-c, 0) for c in form.coefficients[1:])


def _forms(p: ConstrainedProblem) -> dict[Exponent, LinearForm]:
    polys = (p.f, *(-g for g in p.constraints))
    exps = sorted({e for q in polys for e in q.terms}, key=grlex_key)
    return {e: LinearForm(tuple(q.coefficient(e) for q in polys)) for e in exps}


def build_g_structure(p: ConstrainedProblem, target: Sequence[int] | None = None) -> GStructure:
    forms = _forms(p)
    if not forms:
        raise NotSTForm("G(mu) is identically zero")
    pts = list(forms)
    verts = hull_vertices(pts)
    origin = tuple([0] * p.n)
    if target is None:
        target = origin if origin in verts else verts[0]
    target = tuple(target)
    if target not in verts:
        raise TargetNotVertex(f"{target} is not a vertex of the union support")
    for v in verts:
        if not is_even(v):
            raise ClubsuitViolated(f"vertex {v} is not even")
        if v != target and not forms[v].plus:
            raise ClubsuitViolated(f"vertex {v} has no positive coefficient for any mu >= 0")
    if not affinely_independent(verts):
        raise NotSimplex(f"vertex set {verts} of the union support is not a simplex")
    verts.remove(target)
    verts.insert(0, target)
    vset = set(verts)
    tails, pruned, lam, nz = [], [], {}, {}
    for e in pts:
        if e in vset:
            continue
        form = forms[e]
        if is_even(e) and not form.minus:
            pruned.append(e)  # a monomial square for every mu >= 0
            continue
        coords = barycentric(e, verts)
        tails.append(e)
        lam[e] = coords
        nz[e] = tuple(j for j, v in enumerate(coords) if v != 0)
    return GStructure(p.n, p.s, tuple(pts), tuple(verts), tuple(tails), lam, nz, forms, tuple(pruned))


# ------------------------------------------------------------ program build


def _mu_name(i: int) -> str:
    return f"mu[{i}]"


def _mono(builder: ProgramBuilder, coeff: float, exps: dict[str, object]) -> PosyMonomial:
    return PosyMonomial(float(coeff), {builder.var(k): v for k, v in exps.items()})


def _form_terms(builder: ProgramBuilder, form: LinearForm, idx: Sequence[int], sign: int = 1,
                extra: dict | None = None) -> list[PosyMonomial]:
    """Monomials ``sign * |c_i| mu_i * extra`` for ``i`` in ``idx``."""
    out = []
    for i in idx:
        exps = dict(extra or {})
        if i > 0:
            exps[_mu_name(i)] = exps.get(_mu_name(i), 0) + 1
        out.append(_mono(builder, sign * abs(float(form.coefficients[i])), exps))
    return out


def _var(prefix: str, kind: str, beta: Exponent, j: int | None = None) -> str:
    tag = ",".join(map(str, beta))
    return f"{prefix}{kind}[{tag}]" if j is None else f"{prefix}{kind}[{tag};{j}]"


def add_constrained_program(builder: ProgramBuilder, gs: GStructure, signed: bool = False,
                            prefix: str = "") -> list[PosyMonomial]:
    """Append the GP (``signed=False``) or SNP (``signed=True``) for ``gs``.

    Multiplier variables are shared by name across calls; tail variables get
    ``prefix``.  Returns the objective monomials this call contributed.
    """
    for i in range(1, gs.s + 1):
        builder.var(_mu_name(i))
    objective: list[PosyMonomial] = []
    target_form = gs.forms.get(gs.target)
    if target_form is not None:
        for i in range(1, gs.s + 1):
            g_i = -float(target_form.coefficients[i])
            if g_i > 0 or (signed and g_i != 0):
                objective.append(_mono(builder, g_i, {_mu_name(i): 1}))
    b_kind = "c" if signed else "b"
    load: dict[int, list[PosyMonomial]] = {}
    for beta in gs.tails:
        lam, nz = gs.lam[beta], gs.nz[beta]
        b_name = _var(prefix, b_kind, beta)
        builder.var(b_name)
        a_names = {j: _var(prefix, "a", beta, j) for j in nz if j >= 1}
        for j, name in a_names.items():
            load.setdefault(j, []).append(_mono(builder, 1.0, {name: 1}))
        summand = _tail_summand(lam, nz, 1.0)
        if summand is not None:
            exps = {a_names[j]: e for j, e in summand.exponents.items()}
            exps[b_name] = 1 / lam[0]
            objective.append(_mono(builder, summand.coefficient, exps))
        else:
            log_c = sum(float(lam[j]) * math.log(float(lam[j])) for j in nz)
            exps = {a_names[j]: -lam[j] for j in nz}
            exps[b_name] = 1
            builder.ineq.append([_mono(builder, math.exp(log_c), exps)])
        form = gs.forms[beta]
        inv_b = {b_name: -1}
        if signed:
            pos = _form_terms(builder, form, form.plus, 1, inv_b)
            neg = _form_terms(builder, form, form.minus, -1, inv_b)
            if pos:
                builder.ineq.append(pos + neg)
            if neg:
                builder.ineq.append([PosyMonomial(-t.coefficient, t.exponents) for t in pos + neg])
        else:
            for idx in (form.plus, form.minus):
                if idx:
                    builder.ineq.append(_form_terms(builder, form, idx, 1, inv_b))
    for j in sorted(load):
        v = gs.vertices[j]
        form = gs.forms[v]
        plus, minus = form.plus, form.minus
        if not plus:
            raise ClubsuitViolated(f"vertex {v} has no positive coefficient")
        if not signed and len(plus) > 1:
            raise HypothesisViolated(
                f"vertex {v}: coefficient form has {len(plus)} positive terms; use the signomial route",
                vertex=v,
            )
        lead = plus[0]
        lead_coeff = float(form.coefficients[lead])
        inv = {_mu_name(lead): -1} if lead > 0 else {}
        terms = [
            PosyMonomial(t.coefficient / lead_coeff,
                         {**t.exponents, **({builder.var(_mu_name(lead)): -1} if lead > 0 else {})})
            for t in load[j]
        ]
        terms += [PosyMonomial(t.coefficient / lead_coeff, t.exponents)
                  for t in _form_terms(builder, form, minus, 1, inv)]
        terms += [PosyMonomial(t.coefficient / lead_coeff, t.exponents)
                  for t in _form_terms(builder, form, plus[1:], -1, inv)]
        builder.ineq.append(_merge(terms))
    builder.objective.extend(objective)
    return objective


def _merge(terms: list[PosyMonomial]) -> list[PosyMonomial]:
    """Combine monomials with identical exponents (e.g. mu_i / mu_i)."""
    out: dict[tuple, float] = {}
    keys: dict[tuple, dict] = {}
    for t in terms:
        exps = {i: e for i, e in t.exponents.items() if e != 0}
        key = tuple(sorted(exps.items()))
        out[key] = out.get(key, 0.0) + t.coefficient
        keys[key] = exps
    return [PosyMonomial(c, keys[k]) for k, c in out.items() if c != 0]


def build_constrained_gp(gs: GStructure) -> GeometricProgram:
    b = ProgramBuilder()
    add_constrained_program(b, gs)
    return b.gp()


def build_constrained_snp(gs: GStructure) -> SignomialProgram:
    b = ProgramBuilder()
    add_constrained_program(b, gs, signed=True)
    return b.sp()


# ------------------------------------------------------------------ bounds


def fixed_mu_certificate(p: ConstrainedProblem, mu: Sequence,
                         settings: SolverSettings | None = None) -> tuple[float, SoncCertificate | None]:
    try:
        bound, cert = global_bound(p.G(mu), settings)
    except NotSTForm:
        return -math.inf, None
    if cert is not None:
        cert.multipliers = tuple(float(m) for m in mu)
    return bound, cert


def fixed_mu_bound(p: ConstrainedProblem, mu: Sequence, settings: SolverSettings | None = None) -> float:
    """SONC bound of the concrete ``G(mu)``; ``-inf`` when it is not certifiable."""
    if any(m < 0 for m in mu):
        raise ValueError("multipliers must be nonnegative")
    return fixed_mu_certificate(p, mu, settings)[0]


@dataclass
class ConstrainedResult:
    bound: float
    gamma: float
    mu: tuple[float, ...]
    program_kind: str
    heuristic: bool
    certificate: SoncCertificate | None
    program_bound: float
    probe_bound: float
    certified_bound: float
    message: str = ""
    solve: SolveResult | None = None
    gp_bound: float | None = None
    snp_bound: float | None = None
    details: dict = field(default_factory=dict)


ZERO_MU = 1e-30


def _snap(mu: np.ndarray, zero: Sequence[int], names: Sequence[str], s: int) -> tuple[float, ...]:
    out = []
    for i in range(1, s + 1):
        k = names.index(_mu_name(i))
        out.append(0.0 if k in zero or mu[k] < ZERO_MU else float(mu[k]))
    return tuple(out)


def _solve_program(gs: GStructure, kind: str, settings: SolverSettings,
                   start: SolveResult | None = None, start_names=None) -> tuple[SolveResult, list[str]]:
    if kind == "gp":
        gp = build_constrained_gp(gs)
        return solve_gp(gp, settings), gp.var_names
    sp = build_constrained_snp(gs)
    z0 = None
    if start is not None and start.status == Status.OPTIMAL:
        lookup = {n.replace("b[", "c[", 1) if n.startswith("b[") else n: i for i, n in enumerate(start_names)}
        z0 = [float(start.assignment[lookup[n]]) for n in sp.var_names]
    try:
        return solve_signomial(sp, settings, start=z0), sp.var_names
    except NoStartingPoint as exc:
        return SolveResult(Status.INFEASIBLE, math.inf, np.ones(sp.m), message=str(exc), heuristic=True), sp.var_names


def lower_bound(p: ConstrainedProblem, strategy: str = "auto", target: Sequence[int] | None = None,
                settings: SolverSettings | None = None) -> ConstrainedResult:
    """Best of the program bound and the ``mu = 0`` probe."""
    if strategy not in ("gp", "snp", "auto"):
        raise ValueError(f"unknown strategy {strategy!r}")
    settings = settings or PIPELINE_SETTINGS
    zeros = tuple([0] * p.s)
    probe, probe_cert = fixed_mu_certificate(p, zeros, settings)
    program_bound = -math.inf
    gamma = math.inf
    mu: tuple[float, ...] = zeros
    kind = "constrained-gp" if strategy != "snp" else "constrained-snp"
    heuristic = strategy == "snp"
    message = ""
    res: SolveResult | None = None
    gp_bound = snp_bound = None
    try:
        gs = build_g_structure(p, target)
    except NotSTForm as exc:
        gs = None
        message = f"program skipped: {exc}"
    if gs is not None and target is None and any(gs.target):
        gs, message = None, "program skipped: union support has no constant term"
    if gs is not None:
        f0 = float(p.f.coefficient(gs.target))
        gp_res = names = None
        if strategy in ("gp", "auto", "snp"):
            try:
                gp_res, names = _solve_program(gs, "gp", settings)
                if gp_res.status not in (Status.OPTIMAL, Status.INFEASIBLE):
                    raise SolverFailure(f"constrained GP: {gp_res.status.value} ({gp_res.message})", gp_res)
                gp_bound = f0 - gp_res.objective_value if gp_res.ok else -math.inf
            except HypothesisViolated as exc:
                if strategy == "gp":
                    raise
                message = str(exc)
                strategy, kind, heuristic = "snp", "constrained-snp", True
        if strategy == "snp":
            snp_res, snp_names = _solve_program(gs, "snp", settings, gp_res, names)
            if snp_res.status not in (Status.OPTIMAL, Status.INFEASIBLE):
                raise SolverFailure(f"constrained SNP: {snp_res.status.value} ({snp_res.message})", snp_res)
            snp_bound = f0 - snp_res.objective_value if snp_res.ok else -math.inf
            res, names = snp_res, snp_names
        else:
            res = gp_res
        if res is not None and res.ok:
            gamma = res.objective_value
            program_bound = f0 - gamma
            mu = _snap(res.assignment, res.numerically_zero, names, p.s)
    bound = max(program_bound, probe)
    if probe >= program_bound:
        cert, certified = probe_cert, probe
        if probe > program_bound:
            mu = zeros
    else:
        certified, cert = fixed_mu_certificate(p, mu, settings)
    return ConstrainedResult(
        bound, gamma, mu, kind, heuristic, cert, program_bound, probe, certified, message, res,
        gp_bound, snp_bound,
    )
