"""Geometric and signomial program solver.

A GP in positive variables ``z`` becomes convex under ``z = exp(y)``: every
posynomial turns into ``log-sum-exp(A y + log c)``.  We minimise the log of the
objective with a primal log-barrier method (damped Newton centering, barrier
weight multiplied by 5 per stage), after a phase-1 search for a strictly
feasible point.  Equality monomials are linear in ``y`` and are eliminated by a
null-space parametrisation.  Every variable lives in the box
``[floor, ceiling]``, so optima "at zero" are reported at the floor.

Signomial programs are handled by sequential condensation: the negative part of
each constraint is moved to a denominator and replaced by its AM-GM monomial
approximation at the current point, which gives a GP whose feasible set lies
inside the signomial one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import nnls

from .errors import DimensionMismatch, NoStartingPoint


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"
    NUMERIC_FAILURE = "NumericFailure"


@dataclass(frozen=True)
class PosyMonomial:
    """``coefficient * prod z_i^e_i`` with sparse exponents ``{i: e_i}``."""

    coefficient: float
    exponents: Mapping[int, Fraction | float] = field(default_factory=dict)

    def log_coefficient(self) -> float:
        return math.log(self.coefficient)

    def log_value(self, z: Sequence[float]) -> float:
        """``log |value|`` for positive ``z``."""
        return math.log(abs(float(self.coefficient))) + sum(
            float(e) * math.log(float(z[i])) for i, e in self.exponents.items()
        )

    def value(self, z: Sequence[float]) -> float:
        c = float(self.coefficient)
        if c == 0:
            return 0.0
        log_v = math.log(abs(c)) + sum(float(e) * math.log(float(z[i])) for i, e in self.exponents.items())
        # saturate instead of raising on overflow
        return math.copysign(math.exp(min(log_v, 709.0)) if log_v < 709.0 else math.inf, c)


Posynomial = list[PosyMonomial]


@dataclass
class GeometricProgram:
    """minimise ``objective`` s.t. each ``ineq_constraints[i] <= 1``, each
    ``eq_constraints[j] == 1``.  An empty objective means a feasibility problem."""

    var_names: list[str]
    objective: Posynomial
    ineq_constraints: list[Posynomial]
    eq_constraints: list[PosyMonomial] = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.var_names)

    def monomials(self):
        yield from self.objective
        for p in self.ineq_constraints:
            yield from p
        yield from self.eq_constraints

    def validate(self, signed: bool = False) -> None:
        for t in self.monomials():
            if any(not 0 <= i < self.m for i in t.exponents):
                raise DimensionMismatch(f"exponent index out of range in {t}")
            if not math.isfinite(t.coefficient) or t.coefficient == 0:
                raise ValueError(f"invalid coefficient {t.coefficient}")
            if not signed and t.coefficient < 0:
                raise ValueError("geometric programs need positive coefficients")
        if any(not p for p in self.ineq_constraints):
            raise ValueError("empty inequality constraint")

    def is_geometric(self) -> bool:
        return all(t.coefficient > 0 for t in self.monomials())


@dataclass
class SignomialProgram(GeometricProgram):
    """Same shape as a GP, but coefficients may be negative."""


@dataclass
class SolverSettings:
    kkt_tol: float = 1e-8
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    floor: float = 1e-150
    ceiling: float = 1e150
    zero_report: float = 1e-30
    barrier_factor: float = 0.2
    max_newton: int = 3000
    unbounded_floor: float = -1e30
    sp_tol: float = 1e-7
    sp_max_outer: int = 50
    debug_dump: str | None = None


@dataclass
class SolveResult:
    status: Status
    objective_value: float
    assignment: np.ndarray
    iterations: int = 0
    kkt_residual: float = math.inf
    heuristic: bool = False
    numerically_zero: tuple[int, ...] = ()
    message: str = ""
    outer_iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status == Status.OPTIMAL


# --------------------------------------------------------- convex transform


def _matrices(posy: Posynomial, m: int) -> tuple[np.ndarray, np.ndarray]:
    A = np.zeros((len(posy), m))
    b = np.empty(len(posy))
    for k, t in enumerate(posy):
        for i, e in t.exponents.items():
            A[k, i] += float(e)
        b[k] = t.log_coefficient()
    return A, b


def convex_form_json(gp: GeometricProgram) -> dict:
    """Debug dump of the log-domain problem for diffing against other solvers."""

    def enc(posy):
        A, b = _matrices(posy, gp.m)
        return {"exponents": A.tolist(), "log_coefficients": b.tolist()}

    return {
        "variables": list(gp.var_names),
        "objective": enc(gp.objective),
        "inequalities": [enc(p) for p in gp.ineq_constraints],
        "equalities": [enc([q]) for q in gp.eq_constraints],
    }


def _lse(A: np.ndarray, b: np.ndarray, w: np.ndarray, need_hess: bool = True):
    z = A @ w + b
    zmax = z.max()
    e = np.exp(z - zmax)
    s = e.sum()
    p = e / s
    val = zmax + math.log(s)
    g = A.T @ p
    if not need_hess:
        return val, g, None
    H = (A.T * p) @ A - np.outer(g, g)
    return val, g, H


@dataclass
class _Convex:
    """``min F0(w)`` s.t. ``F_i(w) <= 0`` (log-sum-exp) and ``G w <= h``."""

    obj: tuple[np.ndarray, np.ndarray] | None
    cons: list[tuple[np.ndarray, np.ndarray]]
    G: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        # all constraint rows stacked; starts[i] is the first row of constraint i
        if self.cons:
            self._A = np.vstack([A for A, _ in self.cons])
            self._b = np.concatenate([b for _, b in self.cons])
            sizes = [len(b) for _, b in self.cons]
            self._starts = np.r_[0, np.cumsum(sizes)[:-1]].astype(int)
            self._seg = np.repeat(np.arange(len(sizes)), sizes)

    def _stacked(self, w: np.ndarray):
        """Values, per-row softmax weights and gradients of every constraint."""
        key = w.tobytes()
        if getattr(self, "_memo", (None,))[0] == key:
            return self._memo[1]
        out = self._stacked_eval(w)
        self._memo = (key, out)
        return out

    def _stacked_eval(self, w: np.ndarray):
        z = self._A @ w + self._b
        zmax = np.maximum.reduceat(z, self._starts)
        e = np.exp(z - zmax[self._seg])
        s = np.add.reduceat(e, self._starts)
        p = e / s[self._seg]
        grads = np.add.reduceat(self._A * p[:, None], self._starts, axis=0)
        return zmax + np.log(s), p, grads

    def constraint_values(self, w: np.ndarray) -> np.ndarray:
        return self._stacked(w)[0] if self.cons else np.zeros(0)

    def feasible(self, w: np.ndarray) -> bool:
        if np.any(self.G @ w >= self.h):
            return False
        return bool(np.all(self.constraint_values(w) < 0))

    def phi(self, w: np.ndarray, t: float, need_hess: bool = True):
        """Barrier function value, gradient and Hessian; value inf when infeasible."""
        slack = self.h - self.G @ w
        if slack.min() <= 0:
            return math.inf, None, None
        val = -np.log(slack).sum()
        grad = self.G.T @ (1.0 / slack)
        hess = (self.G.T * (1.0 / slack**2)) @ self.G if need_hess else None
        if self.cons:
            f, p, g = self._stacked(w)
            if f.max() >= 0:
                return math.inf, None, None
            inv = 1.0 / -f
            val -= np.log(-f).sum()
            grad = grad + g.T @ inv
            if need_hess:
                # sum_i [A_i' diag(p_i) A_i - g_i g_i'] / -f_i + g_i g_i' / f_i^2
                hess = hess + (self._A.T * (p * inv[self._seg])) @ self._A
                hess = hess + (g.T * (inv**2 - inv)) @ g
        if self.obj is not None:
            f, g, H = _lse(*self.obj, w, need_hess)
            val += t * f
            grad = grad + t * g
            if need_hess:
                hess = hess + t * H
        return val, grad, hess

    def n_barrier(self) -> int:
        return len(self.cons) + len(self.h)


def _newton_direction(grad: np.ndarray, hess: np.ndarray) -> np.ndarray | None:
    d = np.sqrt(np.abs(np.diag(hess)))
    d[d == 0] = 1.0
    Hs = hess / np.outer(d, d)
    gs = grad / d
    try:
        step = np.linalg.solve(Hs, -gs)
    except np.linalg.LinAlgError:
        step = np.linalg.lstsq(Hs + 1e-14 * np.eye(len(gs)), -gs, rcond=None)[0]
    step = step / d
    return step if np.all(np.isfinite(step)) else None


def _center(prob: _Convex, w: np.ndarray, t: float, budget: int, stop=None, tol: float = 1e-14):
    """Damped Newton on the barrier function.  Returns (w, iterations, ok)."""
    iters = 0
    while iters < budget:
        val, grad, hess = prob.phi(w, t)
        step = _newton_direction(grad, hess)
        if step is None:
            return w, iters, False
        dec = -float(grad @ step)
        iters += 1
        if dec / 2 <= tol:
            return w, iters, True
        alpha = 1.0
        while True:
            cand = w + alpha * step
            cval = prob.phi(cand, t, need_hess=False)[0]
            if cval <= val - 0.01 * alpha * dec:
                break
            alpha *= 0.5
            if alpha < 1e-16:
                return w, iters, True  # no further progress possible in floats
        if val - cval <= 4 * np.finfo(float).eps * abs(val):
            return cand, iters, True
        w = cand
        if stop is not None and stop(w):
            return w, iters, True
    return w, iters, False


def _barrier(prob: _Convex, w: np.ndarray, gap_tol: float, factor: float, budget: int, stop=None):
    t = 1.0
    total = 0
    m = max(prob.n_barrier(), 1)
    while True:
        last = prob.obj is None or m / t < gap_tol
        # intermediate stages only need to stay near the central path
        w, it, ok = _center(prob, w, t, budget - total, stop, 1e-14 if last else 1e-1)
        total += it
        if not ok:
            return w, total, t, False
        if stop is not None and stop(w):
            return w, total, t, True
        if prob.obj is None or m / t < gap_tol:
            return w, total, t, True
        t /= factor


def _kkt_residual(prob: _Convex, w: np.ndarray, t: float) -> float:
    """Stationarity residual of the Lagrangian with multipliers refitted by NNLS
    on the near-active constraints (barrier duals pick the active set)."""
    if prob.obj is None:
        return 0.0
    g0 = _lse(*prob.obj, w, False)[1]
    grads, duals = [], []
    for A, b in prob.cons:
        f, g, _ = _lse(A, b, w, False)
        grads.append(g)
        duals.append(1.0 / (t * -f))
    slack = prob.h - prob.G @ w
    grads.extend(prob.G)
    duals.extend(1.0 / (t * slack))
    duals = np.asarray(duals)
    active = duals >= 1e-6 * max(duals.max(), 1e-300)
    J = np.asarray(grads)[active].T
    lam, _ = nnls(J, -g0)
    return float(np.max(np.abs(g0 + J @ lam)) / (1.0 + np.max(np.abs(g0))))


def solve_gp(gp: GeometricProgram, settings: SolverSettings | None = None) -> SolveResult:
    """Solve a geometric program; see module docstring for the method."""
    s = settings or SolverSettings()
    gp.validate()
    m = gp.m
    if s.debug_dump:
        with open(s.debug_dump, "w") as fh:
            json.dump(convex_form_json(gp), fh, indent=1)
    lo, hi = math.log(s.floor), math.log(s.ceiling)

    # eliminate equalities: y = y0 + N w
    if gp.eq_constraints:
        E, c = _matrices(gp.eq_constraints, m)
        y0 = np.linalg.lstsq(E, -c, rcond=None)[0]
        if np.max(np.abs(E @ y0 + c)) > 1e-9:
            return SolveResult(Status.INFEASIBLE, math.inf, np.exp(np.clip(y0, lo, hi)),
                               message="inconsistent equality constraints")
        _, sv, vt = np.linalg.svd(E)
        rank_e = int(np.sum(sv > 1e-12 * max(sv.max(), 1.0)))
        N = vt[rank_e:].T
    else:
        y0 = np.zeros(m)
        N = np.eye(m)
    if np.any(y0 <= lo) or np.any(y0 >= hi):
        return SolveResult(Status.INFEASIBLE, math.inf, np.exp(np.clip(y0, lo, hi)),
                           message="equalities force a variable outside the box")
    k = N.shape[1]

    def reduce(posy):
        A, b = _matrices(posy, m)
        return A @ N, b + A @ y0

    cons = [reduce(p) for p in gp.ineq_constraints]
    G = np.vstack([N, -N])
    h = np.r_[hi - y0, y0 - lo]

    def finish(w, status, iters, kkt, msg=""):
        y = y0 + N @ w
        z = np.exp(y)
        obj = sum(t.value(z) for t in gp.objective) if gp.objective else 0.0
        zero = tuple(int(i) for i in np.flatnonzero(z < s.zero_report))
        return SolveResult(status, float(obj), z, iters, kkt, numerically_zero=zero, message=msg)

    if k == 0:
        w = np.zeros(0)
        vals = [_lse(A, b, w, False)[0] for A, b in cons]
        ok = all(v <= math.log1p(s.feas_tol) for v in vals)
        return finish(w, Status.OPTIMAL if ok else Status.INFEASIBLE, 0, 0.0)

    # ---- phase 1: min r s.t. F_i(w) - r <= 0 inside the box
    w = np.zeros(k)
    iters = 0
    if cons:
        F = np.array([_lse(A, b, w, False)[0] for A, b in cons])
        if np.max(F) >= -1e-3:
            r0 = max(float(np.max(F)), 0.0) + 1.0
            aug = _Convex(
                (np.r_[np.zeros(k), 1.0][None, :], np.zeros(1)),
                [(np.hstack([A, -np.ones((A.shape[0], 1))]), b) for A, b in cons],
                np.hstack([G, np.zeros((G.shape[0], 1))]),
                h,
            )
            v, it, _, ok = _barrier(
                aug, np.r_[w, r0], 1e-10, s.barrier_factor, s.max_newton, stop=lambda v: v[-1] < -1e-2
            )
            iters += it
            if not ok:
                return finish(v[:-1], Status.NUMERIC_FAILURE, iters, math.inf, "phase 1 failed")
            w = v[:-1]
            r = float(np.max([_lse(A, b, w, False)[0] for A, b in cons]))
            if r > 1e-8:
                return finish(w, Status.INFEASIBLE, iters, math.inf,
                              f"phase 1 minimum constraint violation {r:.3e}")
            if r >= 0:
                # feasible set has (numerically) empty interior: relax slightly
                shift = r + 1e-10
                cons = [(A, b - shift) for A, b in cons]
    if not gp.objective:
        return finish(w, Status.OPTIMAL, iters, 0.0, "feasibility problem")

    # ---- phase 2
    prob = _Convex(reduce(gp.objective), cons, G, h)
    w, it, t, ok = _barrier(prob, w, s.gap_tol, s.barrier_factor, s.max_newton - iters)
    iters += it
    if not ok:
        status = Status.ITERATION_LIMIT if iters >= s.max_newton else Status.NUMERIC_FAILURE
        return finish(w, status, iters, math.inf, "barrier iteration did not converge")
    kkt = _kkt_residual(prob, w, t)
    status = Status.OPTIMAL
    msg = ""
    if kkt > s.kkt_tol:
        # one more polish at the final barrier weight
        w, it, _ = _center(prob, w, t, 50)
        iters += it
        kkt = _kkt_residual(prob, w, t)
        if kkt > max(s.kkt_tol, 1e-6):
            status = Status.NUMERIC_FAILURE
            msg = f"KKT residual {kkt:.3e} above tolerance"
    return finish(w, status, iters, kkt, msg)


# --------------------------------------------------------------- signomials


def _split(posy: Posynomial) -> tuple[Posynomial, Posynomial]:
    pos = [t for t in posy if t.coefficient > 0]
    neg = [PosyMonomial(-t.coefficient, t.exponents) for t in posy if t.coefficient < 0]
    return pos, neg


def _condense(terms: Posynomial, z: np.ndarray) -> PosyMonomial:
    """Best local monomial under-approximation of ``sum(terms)`` at ``z`` (AM-GM)."""
    logs = np.array([t.log_value(z) for t in terms])
    weights = np.exp(logs - logs.max())
    weights /= weights.sum()
    log_c = 0.0
    exps: dict[int, float] = {}
    for t, wgt in zip(terms, weights):
        if wgt == 0:
            continue
        log_c += wgt * (math.log(t.coefficient) - math.log(wgt))
        for i, e in t.exponents.items():
            exps[i] = exps.get(i, 0.0) + wgt * float(e)
    return PosyMonomial(math.exp(log_c), exps)


def _divide(posy: Posynomial, mono: PosyMonomial) -> Posynomial:
    out = []
    for t in posy:
        exps = dict(t.exponents)
        for i, e in mono.exponents.items():
            exps[i] = exps.get(i, 0.0) - e
        out.append(PosyMonomial(t.coefficient / mono.coefficient, exps))
    return out


ONE = PosyMonomial(1.0, {})


def signomial_value(posy: Posynomial, z: Sequence[float]) -> float:
    return math.fsum(t.value(z) for t in posy)


def _sp_phase1(sp: SignomialProgram, z: np.ndarray, s: SolverSettings) -> tuple[np.ndarray, int]:
    """Condensed minimisation of a common scaling r with s_i^+ <= r (1 + s_i^-)."""
    m = sp.m
    iters = 0
    r_prev = math.inf
    for _ in range(s.sp_max_outer):
        viol = []
        for p in sp.ineq_constraints:
            pos, neg = _split(p)
            if pos:
                viol.append(signomial_value(pos, z) / (1.0 + signomial_value(neg, z)))
        # condensation is exact at z, so a feasible (not necessarily strict) start suffices
        if not viol or max(viol) <= 1.0 + s.feas_tol:
            return z, iters
        cons = []
        for p in sp.ineq_constraints:
            pos, neg = _split(p)
            if not pos:
                continue
            denom = _condense([ONE, *neg], z)
            denom = PosyMonomial(denom.coefficient, {**denom.exponents, m: denom.exponents.get(m, 0.0) + 1.0})
            cons.append(_divide(pos, denom))
        gp = GeometricProgram(
            [*sp.var_names, "_r"], [PosyMonomial(1.0, {m: 1.0})], cons, list(sp.eq_constraints)
        )
        res = solve_gp(gp, s)
        iters += res.iterations
        if res.status != Status.OPTIMAL:
            break
        z = res.assignment[:m]
        r = res.objective_value
        if r < 1.0 - 1e-9:
            return z, iters
        if r_prev - r <= s.sp_tol * max(1.0, abs(r)):
            break
        r_prev = r
    raise NoStartingPoint("no strictly feasible point found for the signomial program")


def solve_signomial(
    sp: SignomialProgram, settings: SolverSettings | None = None, start: Sequence[float] | None = None
) -> SolveResult:
    """Local solution of a signomial program by sequential condensation."""
    s = settings or SolverSettings()
    sp.validate(signed=True)
    if sp.is_geometric():
        gp = GeometricProgram(sp.var_names, sp.objective, sp.ineq_constraints, sp.eq_constraints)
        return solve_gp(gp, s)
    m = sp.m
    z = np.ones(m) if start is None else np.clip(np.asarray(start, dtype=float), s.floor, s.ceiling)
    z, iters = _sp_phase1(sp, z, s)

    obj_pos, obj_neg = _split(sp.objective)

    def objective(z):
        return signomial_value(sp.objective, z)

    current = objective(z)
    if not math.isfinite(current):
        return SolveResult(Status.NUMERIC_FAILURE, current, z, iters, math.inf, True,
                           message="objective is not finite at the starting point")
    last: SolveResult | None = None
    outer = 0
    for outer in range(1, s.sp_max_outer + 1):
        cons: list[Posynomial] = []
        for p in sp.ineq_constraints:
            pos, neg = _split(p)
            if not pos:
                continue
            if neg:
                cons.append(_divide(pos, _condense([ONE, *neg], z)))
            else:
                cons.append(pos)
        names = list(sp.var_names)
        if obj_neg:
            # epigraph with shift K: p0 + K <= t + q0, minimise t
            K = max(1.0, 2.0 * abs(current))
            t_idx = m
            names.append("_t")
            t_val = current + K
            denom = _condense([PosyMonomial(1.0, {t_idx: 1.0}), *obj_neg], np.r_[z, t_val])
            cons.append(_divide([*obj_pos, PosyMonomial(K, {})], denom))
            gp_obj = [PosyMonomial(1.0, {t_idx: 1.0})]
        else:
            gp_obj = obj_pos
        gp = GeometricProgram(names, gp_obj, cons, list(sp.eq_constraints))
        res = solve_gp(gp, s)
        iters += res.iterations
        if res.status != Status.OPTIMAL:
            if last is None:
                res.heuristic = True
                res.outer_iterations = outer
                return res
            break
        z_new = res.assignment[:m]
        new = objective(z_new)
        if new > current + 1e-12 * max(1.0, abs(current)):
            break  # condensation may stall on numerical noise; keep the better point
        last = SolveResult(Status.OPTIMAL, new, z_new, iters, res.kkt_residual, True,
                           tuple(i for i in res.numerically_zero if i < m))
        done = current - new <= s.sp_tol * max(1.0, abs(current))
        z, current = z_new, new
        if current < s.unbounded_floor:
            return SolveResult(Status.UNBOUNDED, current, z, iters, math.inf, True,
                               outer_iterations=outer)
        if done:
            break
    if last is None:
        last = SolveResult(Status.OPTIMAL, current, z, iters, math.inf, True)
    last.outer_iterations = outer
    last.iterations = iters
    return last


def check_feasible(prog: GeometricProgram, assignment: Sequence[float], tol: float = 1e-8) -> bool:
    z = np.asarray(assignment, dtype=float)
    if z.shape != (prog.m,):
        raise DimensionMismatch(f"assignment has shape {z.shape}, expected ({prog.m},)")
    if np.any(z <= 0):
        return False
    for p in prog.ineq_constraints:
        if signomial_value(p, z) > 1.0 + tol:
            return False
    for q in prog.eq_constraints:
        if abs(q.value(z) - 1.0) > tol:
            return False
    return True


class ProgramBuilder:
    """Allocates named variables and collects objective terms and constraints."""

    def __init__(self):
        self.var_names: list[str] = []
        self._index: dict[str, int] = {}
        self.objective: Posynomial = []
        self.ineq: list[Posynomial] = []
        self.eq: list[PosyMonomial] = []

    def var(self, name: str) -> int:
        if name not in self._index:
            self._index[name] = len(self.var_names)
            self.var_names.append(name)
        return self._index[name]

    def index(self, name: str) -> int:
        return self._index[name]

    def has(self, name: str) -> bool:
        return name in self._index

    def gp(self) -> GeometricProgram:
        return GeometricProgram(list(self.var_names), list(self.objective), list(self.ineq), list(self.eq))

    def sp(self) -> SignomialProgram:
        return SignomialProgram(list(self.var_names), list(self.objective), list(self.ineq), list(self.eq))
