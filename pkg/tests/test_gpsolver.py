import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from problems import SINGLE_CONSTRAINT
from soncgp.constrained import build_constrained_gp, build_constrained_snp, build_g_structure
from soncgp.errors import DimensionMismatch
from soncgp.gpsolver import (
    GeometricProgram, PosyMonomial as M, SignomialProgram, SolverSettings, Status,
    _lse, _matrices, check_feasible, solve_gp, solve_signomial,
)

HALF_LINE = GeometricProgram(["z"], [M(1.0, {0: 1})], [[M(2.0, {0: -1})]])

# the constrained GP of the two-tail instance, solution as published
PUBLISHED = {
    "a[1,1;1]": 0.9105, "a[1,1;2]": 0.0540, "a[2,4;1]": 0.0895, "a[2,4;2]": 0.0319,
    "b[1,1]": 1.0000, "mu[1]": 0.0859, "b[2,4]": 0.0859,
}


@pytest.fixture(scope="module")
def constrained_gp():
    return build_constrained_gp(build_g_structure(SINGLE_CONSTRAINT))


def test_half_line():
    r = solve_gp(HALF_LINE)
    assert r.status == Status.OPTIMAL
    assert r.objective_value == pytest.approx(2.0, rel=1e-7)
    assert r.assignment[0] == pytest.approx(2.0, rel=1e-7)
    assert check_feasible(HALF_LINE, r.assignment, SolverSettings().feas_tol)


def test_hyperbola():
    gp = GeometricProgram(["a", "b"], [M(1.0, {0: 1, 1: 1})], [[M(1.0, {0: -1, 1: -1})]])
    r = solve_gp(gp)
    assert r.status == Status.OPTIMAL
    assert r.objective_value == pytest.approx(1.0, rel=1e-7)
    assert r.assignment.prod() == pytest.approx(1.0, rel=1e-6)


def test_infeasible():
    gp = GeometricProgram(["z"], [M(1.0, {0: 1})], [[M(2.0, {0: -1})], [M(1.0, {0: 1})]])
    assert solve_gp(gp).status == Status.INFEASIBLE


def test_objective_decaying_to_zero_is_floored():
    r = solve_gp(GeometricProgram(["z"], [M(1.0, {0: -1})], []))
    assert r.status == Status.OPTIMAL
    assert r.objective_value < 1e-100


def test_equality_constraint():
    gp = GeometricProgram(["a", "b"], [M(1.0, {0: 1}), M(1.0, {1: 1})], [], [M(1.0, {0: 1, 1: 1})])
    r = solve_gp(gp)
    assert r.objective_value == pytest.approx(2.0, rel=1e-7)
    assert r.assignment == pytest.approx([1.0, 1.0], rel=1e-4)


def test_constrained_gp_optimum(constrained_gp):
    assert constrained_gp.m == 7
    r = solve_gp(constrained_gp)
    assert r.status == Status.OPTIMAL
    assert r.objective_value == pytest.approx(0.5526, abs=1e-3)
    got = dict(zip(constrained_gp.var_names, r.assignment))
    for name, value in PUBLISHED.items():
        assert got[name] == pytest.approx(value, abs=1e-3)
    assert r.kkt_residual <= 1e-6


def test_published_assignment_is_feasible(constrained_gp):
    z = [PUBLISHED[name] for name in constrained_gp.var_names]
    assert check_feasible(constrained_gp, z, 1e-3)


def test_check_feasible():
    assert not check_feasible(HALF_LINE, [1.0])
    with pytest.raises(DimensionMismatch):
        check_feasible(HALF_LINE, [1.0, 1.0])


def test_signomial_examples(constrained_gp):
    sp = SignomialProgram(["z"], [M(1.0, {0: 1})], [[M(2.0, {}), M(-1.0, {0: 1})]])
    r = solve_signomial(sp)
    assert r.status == Status.OPTIMAL and r.heuristic
    assert r.assignment[0] == pytest.approx(1.0, rel=1e-6)

    as_sp = SignomialProgram(HALF_LINE.var_names, HALF_LINE.objective, HALF_LINE.ineq_constraints)
    assert solve_signomial(as_sp).objective_value == solve_gp(HALF_LINE).objective_value

    snp = build_constrained_snp(build_g_structure(SINGLE_CONSTRAINT))
    assert solve_signomial(snp).objective_value == pytest.approx(solve_gp(constrained_gp).objective_value, abs=1e-6)


def test_signomial_unbounded():
    sp = SignomialProgram(["z"], [M(-1.0, {0: 1})], [])
    assert solve_signomial(sp).status == Status.UNBOUNDED


def test_deterministic(constrained_gp):
    a, b = solve_gp(constrained_gp), solve_gp(constrained_gp)
    assert a.objective_value == b.objective_value
    assert np.array_equal(a.assignment, b.assignment)


def test_log_domain_hessians_are_psd(constrained_gp):
    rng = np.random.default_rng(0)
    mats = [_matrices(p, constrained_gp.m) for p in [constrained_gp.objective, *constrained_gp.ineq_constraints]]
    for _ in range(100):
        w = rng.uniform(-5, 5, constrained_gp.m)
        for A, b in mats:
            _, _, H = _lse(A, b, w)
            assert np.linalg.eigvalsh(H).min() >= -1e-9


def _to_cvxpy(gp, z):
    import cvxpy as cp

    def posy(p):
        return sum(t.coefficient * cp.prod([z[i] ** float(e) for i, e in t.exponents.items()]) if t.exponents
                   else t.coefficient for t in p)

    return cp.Problem(cp.Minimize(posy(gp.objective)), [posy(p) <= 1 for p in gp.ineq_constraints])


def test_agrees_with_cvxpy(constrained_gp):
    cp = pytest.importorskip("cvxpy")
    z = cp.Variable(constrained_gp.m, pos=True)
    prob = _to_cvxpy(constrained_gp, z)
    prob.solve(gp=True)
    assert solve_gp(constrained_gp).objective_value == pytest.approx(prob.value, rel=1e-5)


# ------------------------------------------------------------ properties

monomials = st.builds(
    lambda c, e: M(c, {i: x for i, x in enumerate(e) if x}),
    st.floats(0.05, 2.0),
    st.lists(st.sampled_from([-2, -1, 0, 1, 2]), min_size=3, max_size=3),
)


@st.composite
def bounded_gps(draw):
    objective = draw(st.lists(monomials, min_size=1, max_size=4))
    cons = []
    for _ in range(draw(st.integers(1, 3))):
        terms = draw(st.lists(monomials, min_size=1, max_size=3))
        total = sum(t.coefficient for t in terms)
        # strictly feasible at z = 1
        cons.append([M(t.coefficient * 0.9 / total, t.exponents) for t in terms])
    box = [[M(0.1, {i: 1})] for i in range(3)] + [[M(0.1, {i: -1})] for i in range(3)]
    return GeometricProgram(["z1", "z2", "z3"], objective, box + cons), len(box)


@settings(max_examples=25, deadline=None)
@given(bounded_gps())
def test_dropping_a_constraint_never_raises_the_optimum(data):
    gp, n_box = data
    full = solve_gp(gp)
    relaxed = solve_gp(GeometricProgram(gp.var_names, gp.objective, gp.ineq_constraints[:-1]))
    assert full.status == relaxed.status == Status.OPTIMAL
    assert relaxed.objective_value <= full.objective_value * (1 + 1e-7)
    assert check_feasible(gp, full.assignment, SolverSettings().feas_tol)
    assert full.kkt_residual <= 1e-6
