"""Sparse multivariate polynomials with exact rational or float coefficients.

Decimal and ``p/q`` literals parse to :class:`fractions.Fraction`; scientific
notation parses to ``float``.  Rendering emits floats in scientific notation so
that ``parse(render(f)) == f`` holds for every polynomial.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

from .errors import DimensionMismatch, PolynomialSyntaxError, VariableOutOfRange

Coefficient = Union[Fraction, float]
Exponent = tuple[int, ...]


class Term(NamedTuple):
    exponent: Exponent
    coefficient: Coefficient


def grlex_key(e: Sequence[int]):
    """Sort key for graded lexicographic order."""
    return (sum(e), tuple(e))


def is_even(e: Sequence[int]) -> bool:
    return all(v % 2 == 0 for v in e)


def is_monomial_square(t: Term) -> bool:
    return t.coefficient > 0 and is_even(t.exponent)


def _normalize(c) -> Coefficient:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, bool):
        raise TypeError("bool is not a coefficient")
    if isinstance(c, int):
        return Fraction(c)
    return float(c)


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Immutable polynomial in ``n`` variables stored as exponent -> coefficient."""

    n: int
    terms: Mapping[Exponent, Coefficient]

    def __init__(self, n: int, terms: Mapping[Sequence[int], object] | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        merged: dict[Exponent, Coefficient] = {}
        for e, c in items:
            e = tuple(int(v) for v in e)
            if len(e) != n:
                raise DimensionMismatch(f"exponent {e} has length {len(e)}, expected {n}")
            if any(v < 0 for v in e):
                raise ValueError(f"negative exponent {e}")
            merged[e] = merged.get(e, 0) + _normalize(c)
        cleaned = {e: merged[e] for e in sorted(merged, key=grlex_key) if merged[e] != 0}
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "terms", cleaned)

    @classmethod
    def zero(cls, n: int) -> "Polynomial":
        return cls(n, {})

    @classmethod
    def monomial(cls, exponent: Sequence[int], coefficient=1) -> "Polynomial":
        return cls(len(exponent), {tuple(exponent): coefficient})

    @property
    def support(self) -> list[Exponent]:
        return list(self.terms)

    def coefficient(self, e: Sequence[int]) -> Coefficient:
        return self.terms.get(tuple(e), Fraction(0))

    def term_list(self) -> list[Term]:
        return [Term(e, c) for e, c in self.terms.items()]

    def is_zero(self) -> bool:
        return not self.terms

    def is_exact(self) -> bool:
        return all(isinstance(c, Fraction) for c in self.terms.values())

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.n == other.n and dict(self.terms) == dict(other.terms)

    def __hash__(self) -> int:
        return hash((self.n, tuple(self.terms.items())))

    def _check(self, other: "Polynomial") -> None:
        if self.n != other.n:
            raise DimensionMismatch(f"{self.n} vs {other.n} variables")

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check(other)
        return Polynomial(self.n, [*self.terms.items(), *other.terms.items()])

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.n, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def scale(self, factor) -> "Polynomial":
        factor = _normalize(factor)
        return Polynomial(self.n, {e: c * factor for e, c in self.terms.items()})

    def __mul__(self, factor) -> "Polynomial":
        if isinstance(factor, Polynomial):
            return NotImplemented
        return self.scale(factor)

    __rmul__ = __mul__

    def to_float(self) -> "Polynomial":
        return Polynomial(self.n, {e: float(c) for e, c in self.terms.items()})

    def __str__(self) -> str:
        return render(self)

    def __repr__(self) -> str:
        return f"Polynomial({self.n}, {render(self)!r})"


# ---------------------------------------------------------------- rendering

def format_coefficient(c: Coefficient) -> str:
    if isinstance(c, Fraction):
        return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    text = repr(float(c))
    if "e" not in text and "inf" not in text and "nan" not in text:
        text += "e0"
    return text


def _monomial_text(e: Exponent) -> str:
    factors = []
    for i, v in enumerate(e, start=1):
        if v == 1:
            factors.append(f"x{i}")
        elif v > 1:
            factors.append(f"x{i}^{v}")
    return "*".join(factors)


def render(f: Polynomial) -> str:
    if f.is_zero():
        return "0"
    out = []
    for k, (e, c) in enumerate(f.terms.items()):
        negative = c < 0
        mag = -c if negative else c
        mono = _monomial_text(e)
        if mono and mag == 1 and isinstance(mag, Fraction):
            body = mono
        elif mono:
            body = f"{format_coefficient(mag)}*{mono}"
        else:
            body = format_coefficient(mag)
        if k == 0:
            out.append(f"-{body}" if negative else body)
        else:
            out.append(f" - {body}" if negative else f" + {body}")
    return "".join(out)


# ------------------------------------------------------------------ parsing

_TOKEN = re.compile(
    r"""(?P<ws>\s+)
      | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?(?:\s*/\s*\d+)?)
      | (?P<var>x(?P<idx>\d+))
      | (?P<op>[-+*^])
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PolynomialSyntaxError(f"unexpected character {text[pos]!r}", pos)
        if not m.group("ws"):
            kind = next(g for g in ("number", "var", "op") if m.group(g))
            tokens.append((kind, m.group(kind), m.start(), m))
        pos = m.end()
    tokens.append(("end", "", len(text), None))
    return tokens


def _number(text: str, pos: int) -> Coefficient:
    text = re.sub(r"\s+", "", text)
    if "/" in text:
        num, den = text.split("/")
        if "e" in num.lower():
            raise PolynomialSyntaxError("rational literal must not use scientific notation", pos)
        if int(den) == 0:
            raise PolynomialSyntaxError("division by zero", pos)
        return Fraction(num) / int(den)
    if "e" in text.lower():
        return float(text)
    return Fraction(text)


def parse(text: str, n: int) -> Polynomial:
    """Parse ``text`` into a polynomial in variables ``x1..xn``."""
    tokens = _tokenize(text)
    k = 0
    terms: list[tuple[Exponent, Coefficient]] = []

    def peek():
        return tokens[k]

    sign = Fraction(1)
    kind, val, pos, _ = peek()
    if kind == "op" and val in "+-":
        sign = Fraction(-1 if val == "-" else 1)
        k += 1
    while True:
        kind, val, pos, _ = peek()
        coef: Coefficient = Fraction(1)
        exps = [0] * n
        if kind == "number":
            coef = _number(val, pos)
            k += 1
            kind, val, pos, _ = peek()
            if kind == "op" and val == "*":
                k += 1
                kind, val, pos, _ = peek()
                if kind != "var":
                    raise PolynomialSyntaxError("expected variable after '*'", pos)
        elif kind != "var":
            raise PolynomialSyntaxError("expected coefficient or variable", pos)
        while True:
            kind, val, pos, m = peek()
            if kind != "var":
                break
            idx = int(m.group("idx"))
            if not 1 <= idx <= n:
                raise VariableOutOfRange(f"x{idx} not in x1..x{n} (position {pos})")
            k += 1
            power = 1
            kind2, val2, pos2, _ = peek()
            if kind2 == "op" and val2 == "^":
                k += 1
                kind3, val3, pos3, _ = peek()
                if kind3 != "number" or not val3.isdigit():
                    raise PolynomialSyntaxError("expected positive integer exponent", pos3)
                power = int(val3)
                if power == 0:
                    raise PolynomialSyntaxError("exponent must be positive", pos3)
                k += 1
            exps[idx - 1] += power
            kind2, val2, pos2, _ = peek()
            if kind2 == "op" and val2 == "*":
                k += 1
                kind3, _, pos3, _ = peek()
                if kind3 != "var":
                    raise PolynomialSyntaxError("expected variable after '*'", pos3)
            elif kind2 == "var":
                raise PolynomialSyntaxError("missing '*' between factors", pos2)
        terms.append((tuple(exps), sign * coef if isinstance(coef, Fraction) else float(sign) * coef))
        kind, val, pos, _ = peek()
        if kind == "end":
            break
        if kind == "op" and val in "+-":
            sign = Fraction(-1 if val == "-" else 1)
            k += 1
            continue
        raise PolynomialSyntaxError(f"unexpected token {val!r}", pos)
    return Polynomial(n, terms)


def infer_variable_count(text: str) -> int:
    idx = [int(m) for m in re.findall(r"x(\d+)", text)]
    return max(idx, default=1)


# --------------------------------------------------------------- evaluation

def evaluate(f: Polynomial, point: Sequence) -> Coefficient:
    """Evaluate ``f`` at ``point``; exact when coefficients and point are rational."""
    if len(point) != f.n:
        raise DimensionMismatch(f"point has length {len(point)}, expected {f.n}")
    exact = f.is_exact() and all(isinstance(v, (int, Fraction)) for v in point)
    if exact:
        total = Fraction(0)
        for e, c in f.terms.items():
            total += c * math.prod(Fraction(v) ** p for v, p in zip(point, e))
        return total
    x = [float(v) for v in point]
    return math.fsum(float(c) * math.prod(v**p for v, p in zip(x, e)) for e, c in f.terms.items())


def scale_exponents(f: Polynomial, k: int) -> Polynomial:
    if k < 1:
        raise ValueError("k must be a positive integer")
    return Polynomial(f.n, {tuple(k * v for v in e): c for e, c in f.terms.items()})


def as_float_array(f: Polynomial):
    """Exponent matrix and coefficient vector for vectorised evaluation."""
    import numpy as np

    if f.is_zero():
        return np.zeros((0, f.n)), np.zeros(0)
    E = np.array(list(f.terms), dtype=float)
    c = np.array([float(v) for v in f.terms.values()])
    return E, c
