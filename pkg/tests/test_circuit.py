import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from problems import MOTZKIN
from soncgp.circuit import CircuitPolynomial, circuit_number, is_nonnegative, scale_by_even_monomial
from soncgp.errors import NegativeExponent, NoTailTerm
from soncgp.oracle import sample_min
from soncgp.polynomial import evaluate, parse

MOTZKIN_C = CircuitPolynomial.from_polynomial(MOTZKIN)


def product_formula(coeffs, lams):
    return math.prod(float(Fraction(c) / l) ** float(l) for c, l in zip(coeffs, lams) if l)


@pytest.mark.parametrize("b", [Fraction(0), Fraction(1), Fraction(3, 2), Fraction(199, 100)])
def test_circuit_number_with_symbolic_coefficient(b):
    c = CircuitPolynomial.build([(0, 0), (2, 6), (2, 2)], [Fraction(1, 2), Fraction(3, 2), 2 - b], (1, 2), -1)
    assert c.lam == (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4))
    expected = 2 * float(Fraction(3, 2) * (2 - b)) ** 0.25
    assert circuit_number(c).value == pytest.approx(expected, rel=1e-12)


def test_circuit_number_matches_product_formula():
    c = CircuitPolynomial.build([(0, 0), (4, 0), (2, 4)], [1, 1, 1], (2, 3), -1)
    assert c.lam == (Fraction(1, 8), Fraction(1, 8), Fraction(3, 4))
    theta = circuit_number(c)
    assert theta.value == pytest.approx(8 ** 0.25 * (4 / 3) ** 0.75, rel=1e-12)
    assert theta.value == pytest.approx(product_formula(*zip(*theta.factors)), rel=1e-12)


def test_circuit_number_needs_tail():
    with pytest.raises(NoTailTerm):
        circuit_number(CircuitPolynomial.from_polynomial(parse("1 + x1^2 + x2^2", 2)))


def test_motzkin_is_boundary():
    assert circuit_number(MOTZKIN_C).value == pytest.approx(3.0, rel=1e-12)
    assert is_nonnegative(MOTZKIN_C)


def test_past_boundary_is_negative():
    f = parse("1 + x1^4*x2^2 + x1^2*x2^4 - 3.01*x1^2*x2^2", 2)
    assert not is_nonnegative(CircuitPolynomial.from_polynomial(f))
    xs = np.linspace(-2, 2, 201)
    assert min(evaluate(f, (a, b)) for a in xs for b in xs) < 0


def test_sum_of_squares_is_nonnegative():
    assert is_nonnegative(CircuitPolynomial.from_polynomial(parse("1 + x1^2 + x2^4", 2)))


def test_scale_motzkin():
    s = scale_by_even_monomial(MOTZKIN_C, 1, (2, 2))
    assert set(s.vertices) == {(2, 2), (6, 4), (4, 6)}
    assert s.tail == (4, 4)
    assert is_nonnegative(s)
    assert scale_by_even_monomial(MOTZKIN_C, 1, (0, 0)) == MOTZKIN_C


def test_scale_rejects_negative_exponent():
    with pytest.raises(NegativeExponent):
        scale_by_even_monomial(MOTZKIN_C, 1, (-2, 0))


def test_boundary_stays_boundary():
    s = scale_by_even_monomial(MOTZKIN_C, Fraction(7, 3), (4, 0))
    assert circuit_number(s).value == pytest.approx(7.0, rel=1e-12)
    assert abs(float(s.tail_coeff)) == pytest.approx(circuit_number(s).value, rel=1e-12)
    assert is_nonnegative(s)


# ------------------------------------------------------------ properties

SIMPLICES = [((0, 0), (4, 2), (2, 4)), ((0, 0), (6, 0), (0, 4)), ((0, 0), (2, 6), (6, 2))]
TAILS = {0: [(1, 1), (3, 3), (2, 3)], 1: [(1, 1), (3, 1), (1, 2)], 2: [(1, 2), (3, 3), (3, 1)]}


@st.composite
def circuits(draw, margin=None):
    k = draw(st.integers(0, 2))
    verts = SIMPLICES[k]
    tail = draw(st.sampled_from(TAILS[k]))
    coeffs = [draw(st.floats(0.5, 2.0)) for _ in verts]
    c = CircuitPolynomial.build(verts, coeffs, tail, -1.0)
    theta = circuit_number(c).value
    ratio = draw(st.floats(0.95, 1.05)) if margin is None else margin
    return CircuitPolynomial.build(verts, coeffs, tail, -ratio * theta)


@settings(max_examples=200)
@given(circuits(), st.floats(1e-3, 10), st.sampled_from([(0, 0), (2, 0), (2, 4), (6, 2)]))
def test_homogeneity(c, b, alpha):
    s = scale_by_even_monomial(c, b, alpha)
    assert circuit_number(s).value == pytest.approx(b * circuit_number(c).value, rel=1e-12)
    assert is_nonnegative(s) == is_nonnegative(c)


@settings(max_examples=200)
@given(circuits(), st.integers(0, 2), st.floats(0, 5))
def test_raising_vertex_keeps_nonnegativity(c, j, bump):
    coeffs = list(c.vertex_coeffs)
    coeffs[j] += bump
    raised = CircuitPolynomial.build(c.vertices, coeffs, c.tail, c.tail_coeff)
    if is_nonnegative(c):
        assert is_nonnegative(raised)


@settings(max_examples=15, deadline=None)
@given(circuits(), st.sampled_from([0.96, 0.98, 1.02, 1.04]))
def test_decision_agrees_with_sampling(c, ratio):
    theta = circuit_number(c).value
    c = CircuitPolynomial.build(c.vertices, c.vertex_coeffs, c.tail, -ratio * theta)
    f = c.to_polynomial()
    best = sample_min(f, box=(-3, 3), n_samples=1024, seed=1).best_value
    if is_nonnegative(c):
        assert best >= -1e-9
    else:
        assert best < 0


def test_exact_decision_without_slack():
    def piece(b):
        return CircuitPolynomial.build([(0, 0), (2, 2), (2, 6)], [Fraction(1, 2), 2 - b, Fraction(3, 2)], (1, 2), -1)

    assert is_nonnegative(piece(Fraction(47, 24)), slack=0)
    assert not is_nonnegative(piece(Fraction(47, 24) + Fraction(1, 10**12)), slack=0)
    # the default slack forgives a violation this small
    assert is_nonnegative(piece(Fraction(47, 24) + Fraction(1, 10**12)))
