"""Elastic-net / LASSO coordinate descent and the L1-bound-form solver.

Objective scaling throughout is the unscaled residual sum of squares:

    ||u - X v||_2^2 + lam * (mix * ||v||_1 + (1 - mix)/2 * ||v||_2^2)

with mix = 1 giving the pure LASSO. The bound form min ||u - Xv||^2 subject
to ||v||_1 <= c is solved by bisection on lam over the Lagrangian solver.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .exceptions import BisectionFailure, NoConvergence, NonFinite

MAX_SWEEPS = 10_000
SWEEP_TOL = 1e-9
BISECTION_STEPS = 100
BOUND_TOL = 1e-6


@dataclass(frozen=True)
class SparseCoefficients:
    values: np.ndarray
    support: np.ndarray
    l1_norm: float

    @classmethod
    def from_values(cls, values):
        values = np.asarray(values, dtype=np.float64)
        return cls(
            values=values,
            support=np.flatnonzero(values),
            l1_norm=float(np.abs(values).sum()),
        )


@njit(cache=True)
def _cd_sweeps(G, b, lam_l1, lam_l2, v, max_sweeps, tol):
    """Cyclic coordinate descent on the Gram form; returns sweeps used or -1."""
    p = b.shape[0]
    Gv = G @ v
    for sweep in range(max_sweeps):
        delta = 0.0
        for j in range(p):
            gjj = G[j, j]
            if gjj <= 0.0:
                if v[j] != 0.0:
                    d0 = -v[j]
                    for i in range(p):
                        Gv[i] += G[i, j] * d0
                    v[j] = 0.0
                continue
            rj = b[j] - Gv[j] + gjj * v[j]
            if rj > lam_l1:
                vnew = (rj - lam_l1) / (gjj + lam_l2)
            elif rj < -lam_l1:
                vnew = (rj + lam_l1) / (gjj + lam_l2)
            else:
                vnew = 0.0
            d = vnew - v[j]
            if d != 0.0:
                for i in range(p):
                    Gv[i] += G[i, j] * d
                v[j] = vnew
                ad = abs(d)
                if ad > delta:
                    delta = ad
        if delta < tol:
            return sweep + 1
    return -1


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFinite("input contains NaN or Inf")


def gram(design, target):
    """Precompute (X^T X, X^T u) for repeated solves against one design."""
    design = np.asarray(design, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64).ravel()
    _check_finite(design, target)
    return design.T @ design, design.T @ target


def _solve_gram(G, b, lam, mix=1.0, warm=None, max_sweeps=MAX_SWEEPS, tol=SWEEP_TOL):
    """Internal solve returning (solution, converged)."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    v = np.zeros_like(b) if warm is None else np.array(warm, dtype=np.float64)
    sweeps = _cd_sweeps(G, b, lam * mix / 2.0, lam * (1.0 - mix) / 2.0,
                        v, max_sweeps, tol)
    return SparseCoefficients.from_values(v), sweeps >= 0


def solve_lagrangian_gram(G, b, lam, mix=1.0, warm=None,
                          max_sweeps=MAX_SWEEPS, tol=SWEEP_TOL):
    """Lagrangian solve given precomputed Gram quantities."""
    sol, ok = _solve_gram(G, b, lam, mix=mix, warm=warm,
                          max_sweeps=max_sweeps, tol=tol)
    if not ok:
        raise NoConvergence(max_sweeps)
    return sol


def solve_lagrangian(problem_design, target, lam, mix=1.0, warm=None,
                     max_sweeps=MAX_SWEEPS, tol=SWEEP_TOL):
    """Minimize ||u - Xv||^2 + lam*(mix*||v||_1 + (1-mix)/2*||v||_2^2)."""
    G, b = gram(problem_design, target)
    return solve_lagrangian_gram(G, b, lam, mix=mix, warm=warm,
                                 max_sweeps=max_sweeps, tol=tol)


def kkt_residual(design, target, v, lam, mix=1.0):
    """Max coordinate-wise violation of the elastic-net stationarity conditions."""
    design = np.asarray(design, dtype=np.float64)
    grad = 2.0 * design.T @ (design @ v - np.asarray(target).ravel())
    grad = grad + lam * (1.0 - mix) * v
    thr = lam * mix
    on = v != 0
    res = 0.0
    if on.any():
        res = np.max(np.abs(grad[on] + thr * np.sign(v[on])))
    if (~on).any():
        res = max(res, float(np.max(np.maximum(np.abs(grad[~on]) - thr, 0.0))))
    return float(res)


def _least_squares(design, target):
    v, *_ = np.linalg.lstsq(np.asarray(design, dtype=np.float64),
                            np.asarray(target, dtype=np.float64).ravel(), rcond=None)
    return v


def solve_bound_with_lam(design, target, c, G=None, b=None, warm=None,
                         max_sweeps=MAX_SWEEPS, tol=SWEEP_TOL,
                         probe_sweeps=2000, lam_hint=None, ls_op=None):
    """solve_bound variant also returning the accepted penalty value.

    lam_hint seeds the search near a previously accepted penalty (one probe
    often suffices once an outer loop has stabilized); ls_op is an optional
    precomputed pseudoinverse for the feasibility short-circuit.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    design = np.asarray(design, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64).ravel()
    _check_finite(design, target)
    if G is None or b is None:
        G = design.T @ design
        b = design.T @ target

    ls = ls_op @ target if ls_op is not None else _least_squares(design, target)
    if np.abs(ls).sum() <= c + 1e-8:
        return SparseCoefficients.from_values(ls), 0.0

    lam_max = 2.0 * float(np.max(np.abs(b)))
    if lam_max <= 0.0:
        return SparseCoefficients.from_values(np.zeros_like(b)), 0.0
    norm_tol = BOUND_TOL * max(1.0, c)
    if c <= norm_tol:
        # degenerate ball: the zero vector already sits within tolerance
        return SparseCoefficients.from_values(np.zeros_like(b)), lam_max

    # lam_max thresholds every coordinate to zero, so it is always feasible
    lam_lo, lam_hi = 0.0, lam_max
    best, best_lam = np.zeros_like(b), lam_max
    found_feasible = True  # the zero vector
    seeds = []
    if lam_hint is not None and 0.0 < lam_hint < lam_max:
        seeds = [lam_hint, 0.5 * lam_hint, 2.0 * lam_hint]
    v = np.array(warm, dtype=np.float64) if warm is not None else np.zeros_like(b)
    for _ in range(BISECTION_STEPS):
        lam = None
        while seeds:
            cand = seeds.pop(0)
            if lam_lo < cand < lam_hi:
                lam = cand
                break
        if lam is None:
            lam = 0.5 * (lam_lo + lam_hi)
        # probes get a reduced sweep budget; an unconverged probe marks the
        # degenerate small-lam regime and is treated as infeasible below
        sol, ok = _solve_gram(G, b, lam, warm=v,
                              max_sweeps=min(probe_sweeps, max_sweeps), tol=tol)
        v = sol.values.copy()
        norm = sol.l1_norm
        if ok and norm <= c:
            lam_hi, best, best_lam = lam, sol.values, lam
            found_feasible = True
            if c - norm <= norm_tol:
                return sol, lam
        else:
            lam_lo = lam
        if lam_hi - lam_lo <= 1e-9 * lam_max:
            break
    if not found_feasible:
        raise BisectionFailure("no feasible solution found along the penalty path")
    return SparseCoefficients.from_values(best), best_lam


def solve_bound(design, target, c, G=None, b=None, warm=None,
                max_sweeps=MAX_SWEEPS, tol=SWEEP_TOL, probe_sweeps=2000,
                lam_hint=None, ls_op=None):
    """Minimize ||u - Xv||^2 subject to ||v||_1 <= c.

    Short-circuits to the least-squares solution when already feasible,
    otherwise bisects on the L1 penalty until the constraint is active to
    within BOUND_TOL * max(1, c). Of the lam values whose solutions are
    feasible, the largest consistent with the tolerance is kept.
    """
    sol, _ = solve_bound_with_lam(design, target, c, G=G, b=b, warm=warm,
                                  max_sweeps=max_sweeps, tol=tol,
                                  probe_sweeps=probe_sweeps,
                                  lam_hint=lam_hint, ls_op=ls_op)
    return sol


def elastic_net_path(design, target, mix, lam_grid, max_sweeps=MAX_SWEEPS,
                     tol=SWEEP_TOL, stop_on_stall=False):
    """Warm-started solutions along a strictly descending lam grid.

    With stop_on_stall the path is truncated at the first lam whose solve
    fails to converge (the small-lam end can be degenerate when p >= n);
    otherwise such a solve raises NoConvergence.
    """
    lam_grid = list(lam_grid)
    if not lam_grid or any(l <= 0 for l in lam_grid):
        raise ValueError("lam grid must be nonempty and positive")
    if any(b >= a for a, b in zip(lam_grid, lam_grid[1:])):
        raise ValueError("lam grid must be strictly descending")
    G, b = gram(design, target)
    out = []
    warm = None
    for lam in lam_grid:
        sol, ok = _solve_gram(G, b, lam, mix=mix, warm=warm,
                              max_sweeps=max_sweeps, tol=tol)
        if not ok:
            if stop_on_stall:
                break
            raise NoConvergence(max_sweeps)
        warm = sol.values
        out.append(sol)
    return out
