"""Worked instances shared by the test modules."""

from soncgp.constrained import ConstrainedProblem
from soncgp.polynomial import parse, scale_exponents

MOTZKIN_TEXT = "1 + x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2"
MOTZKIN = parse(MOTZKIN_TEXT, 2)
HOMOGENIZED_MOTZKIN = parse("x3^6 + x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2*x3^2", 3)
SPHERE = parse("x1^2 + x2^2 + x3^2 - 1", 3)

# one constraint, simplex union support, one tail
SIMPLE_CONSTRAINED = ConstrainedProblem(parse("1 + 2*x1^2*x2^4 + 1/2*x1^3*x2^2", 2), [parse("1/3 - x1^6*x2^2", 2)])

SINGLE_CONSTRAINT = ConstrainedProblem(parse("1 + x1^4*x2^2 + x1*x2", 2), [parse("1/2 + x1^2*x2^4 - x1^2*x2^6", 2)])

TRIVARIATE_F = parse("1 + x1^2*x3^2 + x2^2*x3^2 + x1^2*x2^2 - 8*x1*x2*x3", 3)
TRIVARIATE_G = parse("x1^2*x2*x3 + x1*x2^2*x3 + x1^2*x2^2 - 2 + x1*x2*x3", 3)
TRIVARIATE = ConstrainedProblem(TRIVARIATE_F, [TRIVARIATE_G])

MOTZKIN_HALFPLANE = ConstrainedProblem(MOTZKIN, [parse("x1^3*x2^2", 2)])

TWO_PIECE = parse(
    "6 + x1^2*x2^6 + 2*x1^4*x2^6 + x1^8*x2^2 - 1.2*x1^2*x2^3 - 0.85*x1^3*x2^5"
    " - 0.9*x1^4*x2^3 - 0.73*x1^5*x2^2 - 1.14*x1^7*x2^2",
    2,
)
TWO_PIECE_TRI = [[(0, 0), (2, 6), (4, 6)], [(0, 0), (4, 6), (8, 2)]]

INTERIOR_SQUARE = parse("1 + 3*x1^2*x2^6 + 2*x1^6*x2^2 + 6*x1^2*x2^2 - x1*x2^2 - 2*x1^2*x2 - 3*x1^3*x2^3", 2)
INTERIOR_SQUARE_TRI = [[(0, 0), (2, 2), (2, 6)], [(0, 0), (2, 2), (6, 2)], [(2, 2), (2, 6), (6, 2)]]
# alternative split: per-piece coefficients for each shared exponent
INTERIOR_SQUARE_ALT = {
    (0, 0): ["0.25", "0.75", "0"],
    (2, 6): ["2", "0", "1"],
    (6, 2): ["0", "1", "1"],
    (2, 2): ["1.217", "3.652", "1.131"],
}

THREE_PIECE = parse("1 + x1^4 + x2^2 + x1^2*x2^4 + x1^4*x2^4 - x1*x2 - x1*x2^2 - x1^2*x2^3 - x1^3*x2^3", 2)
THREE_PIECE_TRI = [[(0, 0), (0, 2), (4, 0)], [(0, 2), (2, 4), (4, 0)], [(2, 4), (4, 0), (4, 4)]]

COVER_CONSTRAINED_F = parse("1 + x1^4 + x1^2*x2^4", 2)
COVER_CONSTRAINED_G = parse("1/2 + x1^2*x2 - x1^6*x2^4 - x1^3*x2^3", 2)


def scaled(p: ConstrainedProblem, k: int) -> ConstrainedProblem:
    return ConstrainedProblem(scale_exponents(p.f, k), [scale_exponents(g, k) for g in p.constraints])
