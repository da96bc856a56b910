"""SONC lower bounds for simplex-tail polynomials via one geometric program.

For every tail exponent ``beta`` the program distributes the vertex
coefficients among circuit polynomials; variable ``a[beta, j]`` is the share of
vertex ``j`` given to the circuit of ``beta``.  The target vertex share is not a
variable: it is the smallest value that keeps the circuit nonnegative, and the
sum of those values is the objective ``m*``.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .circuit import CircuitPolynomial, is_nonnegative
from .errors import NotSTForm, ReconstructionFailure, SolverFailure
from .geometry import STForm, st_form
from .gpsolver import (
    GeometricProgram,
    PosyMonomial,
    ProgramBuilder,
    SolveResult,
    SolverSettings,
    Status,
    solve_gp,
)
from .polynomial import Exponent, Polynomial, Term, is_monomial_square

RECON_TOL = 1e-7

# settings used by the bound pipelines: a tighter gap than the solver default
PIPELINE_SETTINGS = SolverSettings(gap_tol=1e-10)


@dataclass
class SoncCertificate:
    """``f - shift * x^target == sum(circuits) + sum(residual_squares)``.

    ``multipliers`` is set for constrained certificates, where the certified
    polynomial is ``f - sum mu_i g_i``.
    """

    target: Exponent
    shift: float
    circuits: list[CircuitPolynomial] = field(default_factory=list)
    residual_squares: list[Term] = field(default_factory=list)
    multipliers: tuple[float, ...] | None = None

    def reconstruct(self, n: int) -> Polynomial:
        parts = [(self.target, self.shift)]
        for c in self.circuits:
            parts.extend(c.to_polynomial().terms.items())
        parts.extend((t.exponent, t.coefficient) for t in self.residual_squares)
        return Polynomial(n, parts)

    def to_json(self) -> dict:
        def terms(p: Polynomial):
            return [{"exponent": list(e), "coefficient": float(c)} for e, c in p.terms.items()]

        return {
            "target": list(self.target),
            "shift": float(self.shift),
            "multipliers": None if self.multipliers is None else [float(m) for m in self.multipliers],
            "circuits": [{"terms": terms(c.to_polynomial())} for c in self.circuits],
            "residual_squares": [
                {"exponent": list(t.exponent), "coefficient": float(t.coefficient)}
                for t in self.residual_squares
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SoncCertificate":
        target = tuple(data["target"])
        n = len(target)
        circuits = []
        for c in data["circuits"]:
            p = Polynomial(n, [(t["exponent"], float(t["coefficient"])) for t in c["terms"]])
            circuits.append(CircuitPolynomial.from_polynomial(p))
        squares = [
            Term(tuple(t["exponent"]), float(t["coefficient"])) for t in data["residual_squares"]
        ]
        mult = data.get("multipliers")
        return cls(target, float(data["shift"]), circuits, squares,
                   None if mult is None else tuple(float(m) for m in mult))


def _name(beta: Exponent, j: int) -> str:
    return f"a[{','.join(map(str, beta))};{j}]"


def _coefficient(log_c: float) -> float:
    # rounding an underflow up only weakens the bound, so it stays sound
    return max(math.exp(log_c), sys.float_info.min)


def _tail_summand(lam: Sequence[Fraction], nz: Sequence[int], coeff_abs: float) -> PosyMonomial | None:
    """Coefficient and exponents (by vertex index) of the target-share monomial.

    ``lam0 |c|^(1/lam0) prod_j (lam_j / a_j)^(lam_j/lam0)``; None when lam0 = 0.
    """
    lam0 = lam[0]
    if lam0 == 0:
        return None
    log_c = math.log(float(lam0)) + math.log(coeff_abs) / float(lam0)
    exps = {}
    for j in nz:
        if j == 0:
            continue
        ratio = lam[j] / lam0
        log_c += float(ratio) * math.log(float(lam[j]))
        exps[j] = -ratio
    return PosyMonomial(_coefficient(log_c), exps)


def build_sonc_gp(st: STForm) -> GeometricProgram:
    """The SONC program for ``st`` (target vertex at index 0)."""
    b = ProgramBuilder()
    for beta, _ in st.tail:
        for j in st.nz[beta]:
            if j >= 1:
                b.var(_name(beta, j))
    vertex_load: dict[int, list[PosyMonomial]] = {}
    for beta, coeff in st.tail:
        lam, nz = st.lam[beta], st.nz[beta]
        mono = _tail_summand(lam, nz, abs(float(coeff)))
        if mono is not None:
            b.objective.append(
                PosyMonomial(mono.coefficient, {b.index(_name(beta, j)): e for j, e in mono.exponents.items()})
            )
        else:
            log_c = math.log(abs(float(coeff)))
            exps = {}
            for j in nz:
                log_c += float(lam[j]) * math.log(float(lam[j]))
                exps[b.index(_name(beta, j))] = -lam[j]
            b.ineq.append([PosyMonomial(_coefficient(log_c), exps)])
        for j in nz:
            if j >= 1:
                vertex_load.setdefault(j, []).append(
                    PosyMonomial(1.0 / float(st.vertex_coeffs[j]), {b.index(_name(beta, j)): 1})
                )
    for j in sorted(vertex_load):
        b.ineq.append(vertex_load[j])
    return b.gp()


def extract_certificate(
    st: STForm, solution: SolveResult, gp: GeometricProgram | None = None, recon_tol: float = RECON_TOL
) -> SoncCertificate:
    gp = gp or build_sonc_gp(st)
    index = {name: i for i, name in enumerate(gp.var_names)}
    z = solution.assignment
    verts = st.simplex_vertices
    used = [0.0] * len(verts)
    circuits = []
    for beta, coeff in st.tail:
        lam, nz = st.lam[beta], st.nz[beta]
        a = {j: float(z[index[_name(beta, j)]]) for j in nz if j >= 1}
        mono = _tail_summand(lam, nz, abs(float(coeff)))
        if mono is not None:
            a[0] = mono.coefficient * math.prod(a[j] ** float(e) for j, e in mono.exponents.items())
        else:
            # scale shares up if the solver left the product constraint slightly violated
            log_theta = sum(float(lam[j]) * (math.log(a[j]) - math.log(float(lam[j]))) for j in nz)
            deficit = math.log(abs(float(coeff))) - log_theta
            if deficit > 0:
                a = {j: v * math.exp(deficit) for j, v in a.items()}
        for j, v in a.items():
            used[j] += v
        circuits.append(
            CircuitPolynomial(
                tuple(verts[j] for j in nz),
                tuple(a[j] for j in nz),
                beta,
                coeff,
                tuple(lam[j] for j in nz),
            )
        )
    squares = []
    for j in range(1, len(verts)):
        fj = float(st.vertex_coeffs[j])
        left = fj - used[j]
        if left < -recon_tol * max(1.0, fj):
            raise ReconstructionFailure(f"vertex {verts[j]} overdrawn by {-left:.3e}")
        if left > 0:
            squares.append(Term(verts[j], left))
    squares.extend(Term(e, c) for e, c in st.squares)
    m_star = used[0]
    shift = float(st.vertex_coeffs[0]) - m_star
    return SoncCertificate(verts[0], shift, circuits, squares)


@dataclass
class SoncResult:
    bound: float
    m_star: float
    certificate: SoncCertificate | None
    solve: SolveResult | None = None
    program: GeometricProgram | None = None


def sonc_bound(f: Polynomial, target: Sequence[int] | None = None,
               settings: SolverSettings | None = None) -> SoncResult:
    """Full result of :func:`f_sonc` including the program and solver output."""
    if f.is_zero():
        return SoncResult(0.0, 0.0, SoncCertificate(tuple([0] * f.n), 0.0))
    st = st_form(f, target)
    gp = build_sonc_gp(st)
    if not all(math.isfinite(t.coefficient) for t in gp.monomials()):
        # subnormal vertex coefficients overflow the program; -inf is the sound answer
        return SoncResult(-math.inf, math.inf, None, None, gp)
    if not gp.objective and not gp.ineq_constraints:
        cert = extract_certificate(st, SolveResult(Status.OPTIMAL, 0.0, []), gp)
        return SoncResult(float(st.vertex_coeffs[0]), 0.0, cert, None, gp)
    res = solve_gp(gp, settings or PIPELINE_SETTINGS)
    if res.status == Status.INFEASIBLE:
        return SoncResult(-math.inf, math.inf, None, res, gp)
    if res.status != Status.OPTIMAL:
        raise SolverFailure(f"SONC program: {res.status.value} ({res.message})", res)
    cert = extract_certificate(st, res, gp)
    return SoncResult(cert.shift, float(st.vertex_coeffs[0]) - cert.shift, cert, res, gp)


def f_sonc(f: Polynomial, target: Sequence[int] | None = None,
           settings: SolverSettings | None = None) -> tuple[float, SoncCertificate | None]:
    """Largest ``k`` such that ``f - k x^target`` is certified SONC by the program.

    ``-inf`` (with no certificate) when the program is infeasible.
    """
    r = sonc_bound(f, target, settings)
    return r.bound, r.certificate


def verify_certificate(f: Polynomial, cert: SoncCertificate, tol: float = RECON_TOL) -> bool:
    """Termwise reconstruction within ``tol`` (scaled by coefficient size), every
    circuit nonnegative with relative slack ``tol``, residuals monomial squares."""
    if cert is None:
        return False
    if any(not is_monomial_square(t) and t.coefficient != 0 for t in cert.residual_squares):
        return False
    if not all(is_nonnegative(c, slack=tol) for c in cert.circuits):
        return False
    rec = cert.reconstruct(f.n)
    for e in set(rec.terms) | set(f.terms):
        a, b = float(rec.coefficient(e)), float(f.coefficient(e))
        if abs(a - b) > tol * max(1.0, abs(b)):
            return False
    return True


def global_bound(f: Polynomial, settings: SolverSettings | None = None
                 ) -> tuple[float, SoncCertificate | None]:
    """Certified lower bound on ``min f`` for an ST-polynomial.

    Without a constant term ``f(0) = 0``, so the best possible bound is 0,
    obtained exactly when ``f`` itself is certified nonnegative.
    """
    origin = tuple([0] * f.n)
    if f.is_zero():
        return 0.0, SoncCertificate(origin, 0.0)
    if origin in f.terms:
        return f_sonc(f, origin, settings)
    bound, cert = f_sonc(f, None, settings)
    if cert is None or bound < -RECON_TOL * max(1.0, abs(float(f.coefficient(cert.target)))):
        return -math.inf, None
    if bound > 0:
        cert.residual_squares.append(Term(cert.target, cert.shift))
    cert.shift = 0.0
    cert.target = origin
    return 0.0, cert


__all__ = [
    "SoncCertificate",
    "SoncResult",
    "build_sonc_gp",
    "extract_certificate",
    "f_sonc",
    "sonc_bound",
    "verify_certificate",
    "global_bound",
    "NotSTForm",
]
