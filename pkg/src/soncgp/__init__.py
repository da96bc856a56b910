"""Certified lower bounds for polynomial optimisation via sums of nonnegative
circuit polynomials, computed with an in-repo geometric programming solver."""

from .circuit import CircuitPolynomial, circuit_number, is_nonnegative, scale_by_even_monomial
from .constrained import ConstrainedProblem, build_g_structure, fixed_mu_bound, lower_bound
from .cover import bound_via_cover, constrained_cover_bound, decompose, improve_weights
from .geometry import Triangulation, analyze_support, barycentric, fan_triangulation, st_form, triangulate_squares
from .gpsolver import GeometricProgram, SignomialProgram, SolverSettings, Status, solve_gp, solve_signomial
from .oracle import sample_min, validate_bound
from .polynomial import Polynomial, evaluate, parse, render, scale_exponents
from .unconstrained import SoncCertificate, f_sonc, global_bound, verify_certificate

__all__ = [
    "CircuitPolynomial",
    "ConstrainedProblem",
    "GeometricProgram",
    "Polynomial",
    "SignomialProgram",
    "SoncCertificate",
    "SolverSettings",
    "Status",
    "Triangulation",
    "analyze_support",
    "barycentric",
    "bound_via_cover",
    "build_g_structure",
    "circuit_number",
    "constrained_cover_bound",
    "decompose",
    "evaluate",
    "f_sonc",
    "fan_triangulation",
    "fixed_mu_bound",
    "global_bound",
    "improve_weights",
    "is_nonnegative",
    "lower_bound",
    "parse",
    "render",
    "sample_min",
    "scale_by_even_monomial",
    "scale_exponents",
    "solve_gp",
    "solve_signomial",
    "st_form",
    "triangulate_squares",
    "validate_bound",
    "verify_certificate",
]
