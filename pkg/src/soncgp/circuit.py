"""Circuit polynomials and their exact nonnegativity test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from .errors import NegativeExponent, NoTailTerm, NotSTForm
from .geometry import affinely_independent, barycentric
from .polynomial import Exponent, Polynomial, is_even

DEFAULT_SLACK = 1e-9


@dataclass(frozen=True)
class CircuitPolynomial:
    """``sum_j c_j x^{v_j} + t x^beta`` with ``beta`` inside the simplex ``v``.

    ``lam`` holds the barycentric coordinates of the tail restricted to the
    vertices; vertices carrying a zero coordinate are allowed but irrelevant.
    """

    vertices: tuple[Exponent, ...]
    vertex_coeffs: tuple
    tail: Exponent | None = None
    tail_coeff: object = 0
    lam: tuple[Fraction, ...] = ()

    @classmethod
    def build(cls, vertices, vertex_coeffs, tail=None, tail_coeff=0) -> "CircuitPolynomial":
        vertices = tuple(tuple(int(x) for x in v) for v in vertices)
        if not affinely_independent(vertices):
            raise NotSTForm(f"circuit vertices {vertices} are affinely dependent")
        lam: tuple[Fraction, ...] = ()
        if tail is not None and tail_coeff != 0:
            tail = tuple(int(x) for x in tail)
            lam = barycentric(tail, vertices)
        else:
            tail, tail_coeff = None, 0
        return cls(vertices, tuple(vertex_coeffs), tail, tail_coeff, lam)

    @classmethod
    def from_polynomial(cls, p: Polynomial) -> "CircuitPolynomial":
        from .geometry import analyze_support

        sa = analyze_support(p)
        if len(sa.delta_A) > 1:
            raise NotSTForm("a circuit polynomial has at most one non-vertex term")
        tail = sa.delta_A[0] if sa.delta_A else None
        return cls.build(
            sa.vertices,
            [p.terms[v] for v in sa.vertices],
            tail,
            p.terms[tail] if tail is not None else 0,
        )

    @property
    def n(self) -> int:
        return len(self.vertices[0])

    def to_polynomial(self) -> Polynomial:
        terms = list(zip(self.vertices, self.vertex_coeffs))
        if self.tail is not None:
            terms.append((self.tail, self.tail_coeff))
        return Polynomial(self.n, terms)

    def is_exact(self) -> bool:
        coeffs = (*self.vertex_coeffs, self.tail_coeff)
        return all(isinstance(c, (int, Fraction)) for c in coeffs)


class CircuitNumber(NamedTuple):
    value: float
    factors: tuple[tuple[object, Fraction], ...]

    def __float__(self) -> float:
        return self.value


def log_circuit_number(c: CircuitPolynomial) -> float:
    if c.tail is None:
        raise NoTailTerm("circuit has no tail term")
    total = 0.0
    for coeff, lam in zip(c.vertex_coeffs, c.lam):
        if lam != 0:
            total += float(lam) * (math.log(float(coeff)) - math.log(float(lam)))
    return total


def circuit_number(c: CircuitPolynomial) -> CircuitNumber:
    """Weighted geometric mean ``prod (c_j / lam_j)^lam_j`` over nonzero ``lam_j``."""
    log_theta = log_circuit_number(c)
    factors = tuple((coeff, lam) for coeff, lam in zip(c.vertex_coeffs, c.lam) if lam != 0)
    return CircuitNumber(math.exp(log_theta), factors)


def _exact_tail_ok(c: CircuitPolynomial) -> bool:
    """|t|^D <= prod (c_j/lam_j)^(lam_j D) with D the common denominator of lam."""
    lams = [lam for lam in c.lam if lam != 0]
    D = math.lcm(*(lam.denominator for lam in lams))
    lhs = abs(Fraction(c.tail_coeff)) ** D
    rhs = Fraction(1)
    for coeff, lam in zip(c.vertex_coeffs, c.lam):
        if lam != 0:
            rhs *= (Fraction(coeff) / lam) ** int(lam * D)
    return lhs <= rhs


def is_nonnegative(c: CircuitPolynomial, slack: float = DEFAULT_SLACK) -> bool:
    if any(not is_even(v) for v in c.vertices) or any(coef <= 0 for coef in c.vertex_coeffs):
        return False
    if c.tail is None or c.tail_coeff == 0:
        return True
    if c.tail_coeff > 0 and is_even(c.tail):
        return True
    if c.is_exact():
        # exact verdict is final without slack; with slack it only short-circuits acceptance
        if _exact_tail_ok(c):
            return True
        if slack == 0:
            return False
    return math.log(abs(float(c.tail_coeff))) <= log_circuit_number(c) + math.log1p(slack)


def scale_by_even_monomial(c: CircuitPolynomial, b, alpha: Sequence[int]) -> CircuitPolynomial:
    """Multiply ``c`` by ``b * x^alpha`` for even ``alpha`` and ``b > 0``."""
    alpha = tuple(int(a) for a in alpha)
    if b <= 0:
        raise ValueError("b must be positive")
    if not is_even(alpha):
        raise ValueError("alpha must be even")

    def shift(e):
        out = tuple(x + a for x, a in zip(e, alpha))
        if any(v < 0 for v in out):
            raise NegativeExponent(f"shifted exponent {out} is negative")
        return out

    return CircuitPolynomial(
        tuple(shift(v) for v in c.vertices),
        tuple(coef * b for coef in c.vertex_coeffs),
        shift(c.tail) if c.tail is not None else None,
        c.tail_coeff * b if c.tail is not None else 0,
        c.lam,
    )
