"""Sampling upper bounds on infima, used to sanity-check certified lower bounds.

Points come from a scrambled Sobol sequence, so a run with more samples sees
a superset of the points of a smaller run with the same seed.  The best
points are then polished with Nelder-Mead.  Sampling only ever bounds the
infimum from above and only inside the box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .polynomial import Polynomial, as_float_array

DEFAULT_BOX = (-5.0, 5.0)
POLISH_SEEDS = 10
FEAS_TOL = 1e-9
VALIDATION_SLACK = 1e-6


@dataclass
class SampleReport:
    best_value: float
    best_point: np.ndarray
    samples: int
    box: tuple[tuple[float, float], ...]
    constrained: bool


def _evaluator(f: Polynomial):
    E, c = as_float_array(f)

    def ev(X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        if len(c) == 0:
            return np.zeros(len(X))
        # integer powers: prod over variables of x_k^e_k, per term
        mon = np.ones((len(X), len(c)))
        for k in range(E.shape[1]):
            mon *= X[:, [k]] ** E[:, k]
        return mon @ c

    return ev


def _box(box, n: int) -> tuple[tuple[float, float], ...]:
    if box is None:
        box = DEFAULT_BOX
    if len(box) == 2 and not isinstance(box[0], (tuple, list)):
        box = [tuple(box)] * n
    out = tuple((float(lo), float(hi)) for lo, hi in box)
    if len(out) != n or any(not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi) for lo, hi in out):
        raise ValueError(f"box must be {n} finite intervals")
    return out


def sample_min(f: Polynomial, box=None, n_samples: int = 4096, seed: int = 0,
               constraints: Sequence[Polynomial] = (), feas_tol: float = FEAS_TOL) -> SampleReport:
    """Smallest value of ``f`` found on the box, optionally over ``g_i >= -feas_tol``."""
    n = f.n
    bx = _box(box, n)
    lo = np.array([b[0] for b in bx])
    hi = np.array([b[1] for b in bx])
    m = max(6, math.ceil(math.log2(max(n_samples, 1))))
    pts = qmc.Sobol(d=n, scramble=True, seed=seed).random_base2(m)
    X = lo + pts * (hi - lo)
    fv = _evaluator(f)
    gvs = [_evaluator(g) for g in constraints]

    def feasible(X):
        ok = np.ones(len(X), dtype=bool)
        for gv in gvs:
            ok &= gv(X) >= -feas_tol
        return ok

    vals = fv(X)
    vals = np.where(feasible(X), vals, np.inf)
    # seeds: best few of every power-of-two prefix, so larger runs keep smaller runs' seeds
    seeds: list[int] = []
    size = 64
    while size <= len(X):
        order = np.argsort(vals[:size], kind="stable")[:POLISH_SEEDS]
        seeds.extend(int(i) for i in order if np.isfinite(vals[i]) and int(i) not in seeds)
        size *= 2
    best_i = int(np.argmin(vals))
    best_val, best_pt = float(vals[best_i]), X[best_i].copy()

    def penalised(x):
        if np.any(x < lo) or np.any(x > hi):
            return math.inf
        x2 = x[None, :]
        v = float(fv(x2)[0])
        for gv in gvs:
            v += 1e6 * max(0.0, -float(gv(x2)[0])) ** 2
        return v

    for i in sorted(seeds):
        res = minimize(penalised, X[i], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000 * n})
        x = np.clip(res.x, lo, hi)
        if not feasible(x[None, :])[0]:
            continue
        v = float(fv(x[None, :])[0])
        if v < best_val:
            best_val, best_pt = v, x
    return SampleReport(best_val, best_pt, len(X), bx, bool(constraints))


def validate_bound(f: Polynomial, constraints: Sequence[Polynomial], bound: float, box=None,
                   n_samples: int = 4096, seed: int = 0) -> bool:
    """False when some feasible sample undercuts ``bound`` by more than 1e-6."""
    if bound == -math.inf:
        return True
    rep = sample_min(f, box, n_samples, seed, constraints)
    return rep.best_value >= bound - VALIDATION_SLACK
