import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from problems import (
    HOMOGENIZED_MOTZKIN, MOTZKIN, MOTZKIN_HALFPLANE, SIMPLE_CONSTRAINED, SINGLE_CONSTRAINT, SPHERE,
    TRIVARIATE, scaled,
)
from soncgp.constrained import (
    ConstrainedProblem, build_constrained_gp, build_g_structure, fixed_mu_bound, lower_bound,
)
from soncgp.errors import ClubsuitViolated, DimensionMismatch, NotSimplex
from soncgp.gpsolver import solve_gp
from soncgp.oracle import sample_min
from soncgp.unconstrained import build_sonc_gp, verify_certificate
from soncgp.geometry import st_form


def test_g_structure_examples():
    gs = build_g_structure(SIMPLE_CONSTRAINED)
    assert set(gs.vertices) == {(0, 0), (2, 4), (6, 2)}
    assert gs.tails == ((3, 2),)
    gs = build_g_structure(SINGLE_CONSTRAINT)
    assert set(gs.tails) == {(1, 1), (2, 4)}
    gs = build_g_structure(scaled(SINGLE_CONSTRAINT, 10))
    assert gs.pruned == ((10, 10),)


def test_g_structure_rejections():
    with pytest.raises(ClubsuitViolated):
        build_g_structure(ConstrainedProblem(HOMOGENIZED_MOTZKIN, [SPHERE]))
    with pytest.raises(NotSimplex):
        build_g_structure(ConstrainedProblem(HOMOGENIZED_MOTZKIN, [-SPHERE]))
    with pytest.raises(DimensionMismatch):
        ConstrainedProblem(MOTZKIN, [SPHERE])


def test_simple_gp_shape():
    gp = build_constrained_gp(build_g_structure(SIMPLE_CONSTRAINED))
    assert gp.var_names == ["mu[1]", "b[3,2]", "a[3,2;1]", "a[3,2;2]"]
    mu, b, a1, a2 = range(4)
    (t_mu, t_tail) = gp.objective
    assert t_mu.coefficient == pytest.approx(1 / 3) and t_mu.exponents == {mu: 1}
    assert t_tail.coefficient == pytest.approx(0.3 * 0.3 * 0.4 ** (4 / 3))
    assert dict(t_tail.exponents) == {b: pytest.approx(10 / 3), a1: -1, a2: pytest.approx(-4 / 3)}
    cons = [[(t.coefficient, dict(t.exponents)) for t in c] for c in gp.ineq_constraints]
    assert [(0.5, {b: -1})] in cons  # 1/2 <= b
    assert [(0.5, {a1: 1})] in cons  # a1 <= 2
    assert [(1.0, {a2: 1, mu: -1})] in cons  # a2 <= mu


def test_unconstrained_case_reduces_to_sonc_program():
    p = ConstrainedProblem(MOTZKIN, [])
    assert solve_gp(build_constrained_gp(build_g_structure(p))).objective_value == pytest.approx(
        solve_gp(build_sonc_gp(st_form(MOTZKIN))).objective_value, rel=1e-8)
    assert lower_bound(p).bound == pytest.approx(0.0, abs=1e-6)


def test_simple_bounds():
    r = lower_bound(SIMPLE_CONSTRAINED, "gp")
    assert r.bound == pytest.approx(0.93844, abs=1e-5)
    assert lower_bound(SIMPLE_CONSTRAINED, "snp").bound == pytest.approx(r.bound, abs=1e-6)


def test_single_constraint():
    r = lower_bound(SINGLE_CONSTRAINT, "gp")
    assert r.bound == pytest.approx(0.4474, abs=1e-3)
    assert r.gamma == pytest.approx(0.5526, abs=1e-3)
    assert r.mu[0] == pytest.approx(0.0859, abs=1e-3)
    assert not r.heuristic
    assert verify_certificate(SINGLE_CONSTRAINT.G(r.mu), r.certificate)
    snp = lower_bound(SINGLE_CONSTRAINT, "snp")
    assert snp.heuristic
    assert snp.bound == pytest.approx(r.bound, abs=1e-6)


def test_single_constraint_scaled():
    r = lower_bound(scaled(SINGLE_CONSTRAINT, 10), "gp")
    assert r.bound == pytest.approx(1.0, abs=1e-6)
    assert r.mu == (0.0,)


def test_trivariate():
    gs = build_g_structure(TRIVARIATE)
    assert build_constrained_gp(gs).m == 11
    r = lower_bound(TRIVARIATE, "gp")
    assert r.gamma == pytest.approx(16.0, abs=1e-6)
    assert r.bound == pytest.approx(-15.0, abs=1e-5)


def test_motzkin_halfplane_needs_the_probe():
    r = lower_bound(MOTZKIN_HALFPLANE)
    assert r.bound == pytest.approx(0.0, abs=1e-6)
    assert r.probe_bound >= r.program_bound - 1e-9
    assert r.mu == (0.0,)


def test_fixed_mu_examples():
    assert fixed_mu_bound(MOTZKIN_HALFPLANE, [0]) == pytest.approx(0.0, abs=1e-6)
    assert fixed_mu_bound(SIMPLE_CONSTRAINED, [3]) == -math.inf
    for sign in (1, -1):
        p = ConstrainedProblem(HOMOGENIZED_MOTZKIN, [sign * SPHERE])
        for mu in (1e-6, 0.1, 1.0, 7.5):
            assert fixed_mu_bound(p, [mu]) == -math.inf
        assert fixed_mu_bound(p, [0]) == pytest.approx(0.0, abs=1e-6)
        assert lower_bound(p).bound == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(ValueError):
        fixed_mu_bound(SINGLE_CONSTRAINT, [-1])


@pytest.mark.parametrize("mu", [2e-265, 5e-324])
def test_subnormal_multiplier_underflow_is_sound(mu):
    # the tiny coefficients underflow or overflow inside the program
    assert fixed_mu_bound(SINGLE_CONSTRAINT, [mu]) == -math.inf
    assert fixed_mu_bound(TRIVARIATE, [mu]) == pytest.approx(-15.0, abs=1e-6)


def test_program_matches_dense_mu_sweep():
    best = max(fixed_mu_bound(SINGLE_CONSTRAINT, [m]) for m in np.linspace(0, 0.5, 201))
    assert lower_bound(SINGLE_CONSTRAINT, "gp").bound == pytest.approx(best, abs=1e-4)


def test_strategy_validation():
    with pytest.raises(ValueError):
        lower_bound(SINGLE_CONSTRAINT, "sdp")


# ------------------------------------------------------------ properties

PROBLEMS = [SIMPLE_CONSTRAINED, SINGLE_CONSTRAINT, TRIVARIATE, MOTZKIN_HALFPLANE]


@settings(max_examples=60)
@given(st.sampled_from(PROBLEMS), st.lists(st.floats(0, 10), min_size=1, max_size=1))
def test_sign_split_bounds_each_coefficient(p, mu):
    for form in build_g_structure(p).forms.values():
        plus, minus = form.plus_value(mu), form.minus_value(mu)
        assert max(plus, minus) >= abs(form.value(mu)) - 1e-12
        assert plus - minus == pytest.approx(float(form.value(mu)), abs=1e-12)


ORACLE_MIN = {}


def _oracle(p):
    key = id(p)
    if key not in ORACLE_MIN:
        box = (-3, 3)
        ORACLE_MIN[key] = sample_min(p.f, box=box, n_samples=2048, seed=5, constraints=p.constraints).best_value
    return ORACLE_MIN[key]


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(PROBLEMS[:3]), st.floats(0, 2))
def test_fixed_mu_never_exceeds_sampled_minimum(p, mu):
    assert fixed_mu_bound(p, [mu]) <= _oracle(p) + 1e-6


@pytest.mark.parametrize("p", PROBLEMS, ids=["simple", "single", "trivariate", "halfplane"])
def test_relaxation_chain(p):
    gp = lower_bound(p, "gp")
    snp = lower_bound(p, "snp")
    assert gp.program_bound <= snp.program_bound + 1e-6
    assert snp.bound <= _oracle(p) + 1e-6
