"""Single-assay sparse factor fitting.

Minimizes ||y - X v b||^2 + w ||X - X v a^T||_F^2 over (v, a, b) with
||v||_1 <= c and ||a||_2 = 1, by exact coordinate updates: closed-form b,
a from a rank-1 Procrustes rotation, and v from a bound-form LASSO against
the synthetic response u = (w X a + b y) / (w + b^2). The rank-r variant
replaces (v, a, b) with (V, A, beta) and updates V column by column.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateFactor, NonFinite
from .lasso import SparseCoefficients, solve_bound, solve_bound_with_lam
from .linalg import top_pc_loadings

_ZERO_SCORE = 1e-12


def _values(x):
    return np.asarray(getattr(x, "values", x), dtype=np.float64)


def _shrink_to_ball(v, c):
    """Rescale v into the L1 ball so the starting point is feasible."""
    nrm = float(np.abs(v).sum())
    if nrm > c:
        return v * (c / nrm)
    return v


@dataclass(frozen=True)
class SfmConfig:
    w: float = 0.2
    c: float = 2.0
    rank: int = 1
    max_outer_iters: int = 200
    rel_tol: float = 1e-7
    seed: int = 0
    # inner-solver tolerances; the relaxed pair is used for CV scoring fits
    cd_tol: float = 1e-9
    probe_sweeps: int = 2000

    def __post_init__(self):
        if self.w <= 0 or self.c <= 0 or self.rank < 1:
            raise ValueError("require w > 0, c > 0, rank >= 1")


@dataclass
class SingleFactorFit:
    v: SparseCoefficients
    alpha: np.ndarray
    beta: float
    latent_scores: np.ndarray
    objective_trace: list
    converged: bool
    iterations: int


@dataclass
class RankRFit:
    V: np.ndarray
    A: np.ndarray
    beta: np.ndarray
    objective_trace: list
    converged: bool
    iterations: int


def objective(X, y, v, alpha, beta, w):
    X, y, v, alpha = map(_values, (X, y, v, alpha))
    Xv = X @ v
    val = float(np.sum((y - Xv * beta) ** 2) + w * np.sum((X - np.outer(Xv, alpha)) ** 2))
    if not np.isfinite(val):
        raise NonFinite("objective is not finite")
    return val


def beta_step(X, y, v):
    X, y, v = map(_values, (X, y, v))
    Xv = X @ v
    nrm2 = float(Xv @ Xv)
    if nrm2 < _ZERO_SCORE:
        raise DegenerateFactor()
    return float((Xv @ y) / nrm2)


def alpha_step(X, v, gram_=None):
    X, v = _values(X), _values(v)
    g = gram_ @ v if gram_ is not None else X.T @ (X @ v)
    nrm = float(np.linalg.norm(g))
    if nrm < _ZERO_SCORE:
        raise DegenerateFactor()
    return g / nrm


def v_step(X, y, alpha, beta, w, c, gram_=None, warm=None):
    X, y, alpha = map(_values, (X, y, alpha))
    u = (w * (X @ alpha) + beta * y) / (w + beta * beta)
    return solve_bound(X, u, c, G=gram_, b=(X.T @ u), warm=warm)


def _canonical_sign(v, alpha, beta):
    if beta < 0:
        return -v, -alpha, -beta
    return v, alpha, beta


def fit(X, y, config):
    """Alternating minimization from the first-PC initialization."""
    X, y = _values(X), _values(y)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NonFinite("fit inputs contain NaN/Inf")
    G = X.T @ X
    pinv = np.linalg.pinv(X)
    v = _shrink_to_ball(top_pc_loadings(X, 1)[:, 0], config.c)
    alpha = alpha_step(X, v, gram_=G)
    beta = beta_step(X, y, v)
    trace = [objective(X, y, v, alpha, beta, config.w)]
    converged = False
    iterations = 0
    lam_hint = None
    for it in range(1, config.max_outer_iters + 1):
        iterations = it
        try:
            beta = beta_step(X, y, v)
            alpha = alpha_step(X, v, gram_=G)
            u = (config.w * (X @ alpha) + beta * y) / (config.w + beta * beta)
            sol, lam = solve_bound_with_lam(
                X, u, config.c, G=G, b=(X.T @ u), warm=v, tol=config.cd_tol,
                probe_sweeps=config.probe_sweeps, lam_hint=lam_hint, ls_op=pinv)
            lam_hint = lam if lam > 0 else None
        except DegenerateFactor:
            raise DegenerateFactor(iteration=it)
        # the bisection is tolerance-limited; keep the old v if the new
        # solution does not improve its subproblem
        if np.sum((u - X @ sol.values) ** 2) <= np.sum((u - X @ v) ** 2):
            v = sol.values
        if np.linalg.norm(X @ v) < _ZERO_SCORE:
            raise DegenerateFactor(iteration=it)
        f = objective(X, y, v, alpha, beta, config.w)
        trace.append(f)
        if abs(trace[-2] - f) <= config.rel_tol * max(1.0, abs(trace[-2])):
            converged = True
            break
    v, alpha, beta = _canonical_sign(v, alpha, beta)
    return SingleFactorFit(
        v=SparseCoefficients.from_values(v),
        alpha=alpha,
        beta=beta,
        latent_scores=X @ v,
        objective_trace=trace,
        converged=converged,
        iterations=iterations,
    )


def objective_rank_r(X, y, V, A, beta, w):
    X, y = _values(X), _values(y)
    U = X @ V
    val = float(np.sum((y - U @ beta) ** 2) + w * np.sum((X - U @ A.T) ** 2))
    if not np.isfinite(val):
        raise NonFinite("objective is not finite")
    return val


def fit_rank_r(X, y, config):
    """Rank-r fit: beta by least squares on XV, A by Procrustes, V columnwise."""
    from .procrustes import procrustes

    X, y = _values(X), _values(y)
    r = config.rank
    if r > min(X.shape):
        raise ValueError("rank exceeds min(n, p)")
    G = X.T @ X
    pinv = np.linalg.pinv(X)
    V = top_pc_loadings(X, r)
    for k in range(r):
        V[:, k] = _shrink_to_ball(V[:, k], config.c)
    U = X @ V
    A = procrustes(X, U).rotation
    beta, *_ = np.linalg.lstsq(U, y, rcond=None)
    trace = [objective_rank_r(X, y, V, A, beta, config.w)]
    converged = False
    iterations = 0
    lam_hints = [None] * r
    for it in range(1, config.max_outer_iters + 1):
        iterations = it
        U = X @ V
        if np.any(np.linalg.norm(U, axis=0) < _ZERO_SCORE):
            raise DegenerateFactor(iteration=it)
        beta, *_ = np.linalg.lstsq(U, y, rcond=None)
        A = procrustes(X, U).rotation
        for k in range(r):
            U = X @ V
            ytilde = y - U @ beta + beta[k] * U[:, k]
            R = X - U @ A.T + np.outer(U[:, k], A[:, k])
            u = (beta[k] * ytilde + config.w * (R @ A[:, k])) / (beta[k] ** 2 + config.w)
            sol, lam = solve_bound_with_lam(
                X, u, config.c, G=G, b=(X.T @ u), warm=V[:, k],
                tol=config.cd_tol, probe_sweeps=config.probe_sweeps,
                lam_hint=lam_hints[k], ls_op=pinv)
            lam_hints[k] = lam if lam > 0 else None
            # the bisection is tolerance-limited; keep the old column if the
            # new solution does not improve its subproblem
            if np.sum((u - X @ sol.values) ** 2) <= np.sum((u - X @ V[:, k]) ** 2):
                V[:, k] = sol.values
        f = objective_rank_r(X, y, V, A, beta, config.w)
        trace.append(f)
        if abs(trace[-2] - f) <= config.rel_tol * max(1.0, abs(trace[-2])):
            converged = True
            break
    flip = np.where(beta < 0, -1.0, 1.0)
    V = V * flip
    A = A * flip
    beta = beta * flip
    return RankRFit(V=V, A=A, beta=beta, objective_trace=trace,
                    converged=converged, iterations=iterations)


def predict(fit_result, X_new, col_means, col_scales, y_mean, y_scale):
    """Standardize new rows with training params, apply the factor, de-standardize."""
    from .exceptions import DimensionMismatch

    X_new = np.atleast_2d(np.asarray(X_new, dtype=np.float64))
    if X_new.shape[1] != len(col_means):
        raise DimensionMismatch(
            f"expected {len(col_means)} columns, got {X_new.shape[1]}"
        )
    Xs = (X_new - col_means) / col_scales
    if isinstance(fit_result, RankRFit):
        yhat = Xs @ fit_result.V @ fit_result.beta
    else:
        yhat = (Xs @ fit_result.v.values) * fit_result.beta
    return yhat * y_scale + y_mean


def fold_assignments(n, folds, seed):
    """Deterministic fold labels: a pure function of (n, folds, seed)."""
    perm = np.random.default_rng(seed).permutation(n)
    labels = np.empty(n, dtype=np.int64)
    labels[perm] = np.arange(n) % folds
    return labels


def c_grid_from_init(X, y, w, grid_size=20):
    """Geometric grid 0.1*c_max .. c_max, where c_max is the L1 norm of the
    unconstrained v-step solution at the first-PC initialization."""
    X, y = _values(X), _values(y)
    v0 = top_pc_loadings(X, 1)[:, 0]
    alpha0 = alpha_step(X, v0)
    beta0 = beta_step(X, y, v0)
    u0 = (w * (X @ alpha0) + beta0 * y) / (w + beta0 * beta0)
    ls, *_ = np.linalg.lstsq(X, u0, rcond=None)
    c_max = float(np.abs(ls).sum())
    if c_max <= 0:
        raise DegenerateFactor("unconstrained v-step solution is zero")
    return np.geomspace(0.1 * c_max, c_max, grid_size)


def select_c(X_raw, y_raw, w, seed, folds=5, grid_size=20, rank=1,
             cv_max_iters=50, cv_rel_tol=1e-5):
    """Pick c by k-fold cross-validation on raw data (standardized per fold)."""
    from .dataset import apply_standardization, standardize, standardize_response

    X_raw = np.asarray(X_raw, dtype=np.float64)
    y_raw = np.asarray(y_raw, dtype=np.float64).ravel()
    n = X_raw.shape[0]
    full = standardize(X_raw)
    full_y = standardize_response(y_raw)
    grid = c_grid_from_init(full.values, full_y.values, w, grid_size)
    labels = fold_assignments(n, folds, seed)
    errs = np.zeros((folds, len(grid)))
    for f in range(folds):
        tr, va = labels != f, labels == f
        Xtr = standardize(X_raw[tr])
        ytr = standardize_response(y_raw[tr])
        Xva = apply_standardization(X_raw[va], Xtr.col_means, Xtr.col_scales)
        for i, c in enumerate(grid):
            cfg = SfmConfig(w=w, c=float(c), rank=rank,
                            max_outer_iters=cv_max_iters, rel_tol=cv_rel_tol,
                            cd_tol=1e-7, probe_sweeps=500)
            try:
                if rank == 1:
                    fr = fit(Xtr.values, ytr.values, cfg)
                    pred = (Xva @ fr.v.values) * fr.beta
                else:
                    fr = fit_rank_r(Xtr.values, ytr.values, cfg)
                    pred = Xva @ fr.V @ fr.beta
            except DegenerateFactor:
                errs[f, i] = np.inf
                continue
            pred = pred * ytr.scale + ytr.mean
            errs[f, i] = float(np.mean((y_raw[va] - pred) ** 2))
    mean_err = errs.mean(axis=0)
    best = int(np.argmin(mean_err))
    return float(grid[best]), grid, mean_err
