"""Multi-assay sparse factor fitting.

Objective (rank 1 per factor):

    ||y - sum_k b_k X_k v_k||^2
      + sum_k w_k ||X_k - X_k v_k a_k^T - X_c v_c g_k^T||_F^2

over K assay-specific factors plus one common factor estimated from the
column-wise concatenation X_c. Updates cycle beta (least squares on latent
scores), a_k / g_k (rank-1 Procrustes closed forms), each v_k, then v_c,
every one an exact coordinate minimizer. The general fit allows s_k factors
per assay and optionally couples each (A_k, Gamma_k) pair through a single
joint Procrustes solve, which enforces A_k^T Gamma_k = 0.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateFactor, NonFinite, SingularDesign
from .lasso import SparseCoefficients, solve_bound, solve_bound_with_lam
from .linalg import top_pc_loadings
from .procrustes import procrustes

_ZERO_SCORE = 1e-12


def _values(x):
    return np.asarray(getattr(x, "values", x), dtype=np.float64)


def _assay_list(assays):
    if hasattr(assays, "assays"):
        assays = assays.assays
    return [_values(a) for a in assays]


@dataclass(frozen=True)
class MultiSfmConfig:
    w: tuple = (1.0, 1.0)
    c: tuple = (2.0, 2.0, 2.0)  # length K+1; last entry bounds the common factor
    ranks: tuple = None  # length K+1; defaults to all ones
    joint_orthogonal: bool = False
    max_outer_iters: int = 200
    rel_tol: float = 1e-7
    seed: int = 0
    # inner-solver tolerances; the relaxed pair is used for CV scoring fits
    cd_tol: float = 1e-9
    probe_sweeps: int = 2000

    def __post_init__(self):
        K = len(self.w)
        if len(self.c) != K + 1:
            raise ValueError("need one c per assay plus one for the common factor")
        if any(x <= 0 for x in self.w) or any(x <= 0 for x in self.c):
            raise ValueError("weights and bounds must be positive")
        if self.ranks is not None:
            if len(self.ranks) != K + 1 or any(s < 1 for s in self.ranks):
                raise ValueError("ranks must have length K+1 with positive entries")

    @property
    def K(self):
        return len(self.w)


@dataclass
class MultiAssayFit:
    v: list  # K SparseCoefficients plus the common one at index K
    alpha: list
    gamma: list
    beta: np.ndarray  # length K+1
    latent_scores: np.ndarray  # n x (K+1)
    objective_trace: list
    converged: bool
    iterations: int


@dataclass
class GeneralMultiFit:
    V: list  # K matrices p_k x s_k plus the common p_c x s_c
    A: list  # K matrices with orthonormal columns
    Gamma: list  # K matrices with orthonormal columns
    beta: list  # K+1 coefficient blocks
    objective_trace: list
    converged: bool
    iterations: int


def multi_objective(assays, y, v, alpha, gamma, beta, w):
    Xs = _assay_list(assays)
    y = _values(y)
    K = len(Xs)
    Xc = np.hstack(Xs)
    U = [Xs[k] @ _values(v[k]) for k in range(K)] + [Xc @ _values(v[K])]
    resid = y - sum(beta[k] * U[k] for k in range(K + 1))
    val = float(resid @ resid)
    for k in range(K):
        R = Xs[k] - np.outer(U[k], alpha[k]) - np.outer(U[K], gamma[k])
        val += w[k] * float(np.sum(R * R))
    if not np.isfinite(val):
        raise NonFinite("objective is not finite")
    return val


def beta_step_multi(y, U):
    """Least-squares coefficients of y on the latent score columns."""
    y, U = _values(y), _values(U)
    if np.linalg.cond(U.T @ U) > 1e12:
        raise SingularDesign("latent scores are (numerically) collinear")
    beta, *_ = np.linalg.lstsq(U, y, rcond=None)
    return beta


def _unit(g):
    nrm = float(np.linalg.norm(g))
    if nrm < _ZERO_SCORE:
        raise DegenerateFactor()
    return g / nrm


def alpha_step_multi(X_k, U_k, U_common, gamma_k):
    """Closed form: normalize (X_k - U_common g_k^T)^T U_k."""
    X_k, U_k, U_common, gamma_k = map(_values, (X_k, U_k, U_common, gamma_k))
    return _unit(X_k.T @ U_k - gamma_k * float(U_common @ U_k))


def gamma_step_multi(X_k, U_k, alpha_k, U_common):
    """Closed form: normalize (X_k - U_k a_k^T)^T U_common."""
    X_k, U_k, alpha_k, U_common = map(_values, (X_k, U_k, alpha_k, U_common))
    return _unit(X_k.T @ U_common - alpha_k * float(U_k @ U_common))


def v_k_response(k, y, U, beta, X_k, alpha_k, gamma_k, w_k):
    """Synthetic response for the assay-k sparse step."""
    K = U.shape[1] - 1
    others = U @ beta - beta[k] * U[:, k]
    u = (beta[k] * (y - others)
         + w_k * (X_k @ alpha_k)
         - w_k * U[:, K] * float(alpha_k @ gamma_k))
    return u / (w_k + beta[k] ** 2)


def v_common_response(y, U, beta, Xs, alpha, gamma, w):
    """Synthetic response for the common-factor sparse step."""
    K = len(Xs)
    others = U @ beta - beta[K] * U[:, K]
    u = beta[K] * (y - others)
    for k in range(K):
        u = u + w[k] * (Xs[k] @ gamma[k]) - w[k] * U[:, k] * float(alpha[k] @ gamma[k])
    return u / (beta[K] ** 2 + sum(w))


def v_k_step(k, y, U, beta, X_k, alpha_k, gamma_k, w_k, c_k, gram_=None, warm=None):
    u = v_k_response(k, y, U, beta, X_k, alpha_k, gamma_k, w_k)
    return solve_bound(X_k, u, c_k, G=gram_, b=(X_k.T @ u), warm=warm)


def v_common_step(y, U, beta, Xs, Xc, alpha, gamma, w, c_common, gram_=None, warm=None):
    u = v_common_response(y, U, beta, Xs, alpha, gamma, w)
    return solve_bound(Xc, u, c_common, G=gram_, b=(Xc.T @ u), warm=warm)


def _shrink_to_ball(v, c):
    """Rescale v into the L1 ball so the starting point is feasible."""
    nrm = float(np.abs(v).sum())
    if nrm > c:
        return v * (c / nrm)
    return v


def _initial_state(Xs, Xc, y, c=None):
    """PC-loading initialization, assay by assay, then closed-form a, g, beta.

    When the bounds c are given, each starting v is rescaled into its ball.
    """
    K = len(Xs)
    v = [top_pc_loadings(Xs[k], 1)[:, 0] for k in range(K)]
    v.append(top_pc_loadings(Xc, 1)[:, 0])
    if c is not None:
        v = [_shrink_to_ball(v[k], c[k]) for k in range(K + 1)]
    U = np.column_stack([Xs[k] @ v[k] for k in range(K)] + [Xc @ v[K]])
    # alpha first with the common term dropped, then gamma given alpha
    alpha = [_unit(Xs[k].T @ U[:, k]) for k in range(K)]
    gamma = [gamma_step_multi(Xs[k], U[:, k], alpha[k], U[:, K]) for k in range(K)]
    beta = beta_step_multi(y, U)
    return v, alpha, gamma, beta, U


def fit_multi(assay_set, y, config):
    Xs = _assay_list(assay_set)
    y = _values(y)
    K = len(Xs)
    if config.K != K:
        raise ValueError(f"config is for K={config.K} assays, data has {K}")
    Xc = np.hstack(Xs)
    grams = [X.T @ X for X in Xs] + [Xc.T @ Xc]
    pinvs = [np.linalg.pinv(X) for X in Xs] + [np.linalg.pinv(Xc)]

    v, alpha, gamma, beta, U = _initial_state(Xs, Xc, y, c=list(config.c))
    w = list(config.w)
    trace = [multi_objective(Xs, y, v, alpha, gamma, beta, w)]
    converged = False
    iterations = 0
    lam_hints = [None] * (K + 1)
    for it in range(1, config.max_outer_iters + 1):
        iterations = it
        try:
            beta = beta_step_multi(y, U)
            for k in range(K):
                alpha[k] = alpha_step_multi(Xs[k], U[:, k], U[:, K], gamma[k])
            for k in range(K):
                gamma[k] = gamma_step_multi(Xs[k], U[:, k], alpha[k], U[:, K])
            for k in range(K):
                u = v_k_response(k, y, U, beta, Xs[k], alpha[k], gamma[k], w[k])
                sol, lam = solve_bound_with_lam(
                    Xs[k], u, config.c[k], G=grams[k], b=(Xs[k].T @ u),
                    warm=v[k], tol=config.cd_tol,
                    probe_sweeps=config.probe_sweeps,
                    lam_hint=lam_hints[k], ls_op=pinvs[k])
                lam_hints[k] = lam if lam > 0 else None
                # keep the old v_k if the tolerance-limited bisection did
                # not improve its subproblem
                if np.sum((u - Xs[k] @ sol.values) ** 2) <= np.sum((u - U[:, k]) ** 2):
                    v[k] = sol.values
                    U[:, k] = Xs[k] @ v[k]
                if np.linalg.norm(U[:, k]) < _ZERO_SCORE:
                    raise DegenerateFactor(iteration=it)
            u = v_common_response(y, U, beta, Xs, alpha, gamma, w)
            sol, lam = solve_bound_with_lam(
                Xc, u, config.c[K], G=grams[K], b=(Xc.T @ u),
                warm=v[K], tol=config.cd_tol, probe_sweeps=config.probe_sweeps,
                lam_hint=lam_hints[K], ls_op=pinvs[K])
            lam_hints[K] = lam if lam > 0 else None
            if np.sum((u - Xc @ sol.values) ** 2) <= np.sum((u - U[:, K]) ** 2):
                v[K] = sol.values
                U[:, K] = Xc @ v[K]
            if np.linalg.norm(U[:, K]) < _ZERO_SCORE:
                raise DegenerateFactor(iteration=it)
        except DegenerateFactor as exc:
            if exc.iteration is None:
                raise DegenerateFactor(iteration=it) from None
            raise
        f = multi_objective(Xs, y, v, alpha, gamma, beta, w)
        trace.append(f)
        if abs(trace[-2] - f) <= config.rel_tol * max(1.0, abs(trace[-2])):
            converged = True
            break

    # canonicalize so every beta_k >= 0 (objective-invariant sign flips)
    for k in range(K):
        if beta[k] < 0:
            beta[k] = -beta[k]
            v[k] = -v[k]
            alpha[k] = -alpha[k]
            U[:, k] = -U[:, k]
    if beta[K] < 0:
        beta[K] = -beta[K]
        v[K] = -v[K]
        U[:, K] = -U[:, K]
        gamma = [-g for g in gamma]
    return MultiAssayFit(
        v=[SparseCoefficients.from_values(x) for x in v],
        alpha=alpha,
        gamma=gamma,
        beta=np.asarray(beta, dtype=np.float64),
        latent_scores=U,
        objective_trace=trace,
        converged=converged,
        iterations=iterations,
    )


def general_objective(Xs, y, V, A, Gamma, beta, w):
    K = len(Xs)
    Xc = np.hstack(Xs)
    U = [Xs[k] @ V[k] for k in range(K)] + [Xc @ V[K]]
    resid = y - sum(U[k] @ beta[k] for k in range(K + 1))
    val = float(resid @ resid)
    for k in range(K):
        R = Xs[k] - U[k] @ A[k].T - U[K] @ Gamma[k].T
        val += w[k] * float(np.sum(R * R))
    if not np.isfinite(val):
        raise NonFinite("objective is not finite")
    return val


def fit_multi_general(assay_set, y, config):
    """Rank-(s_1..s_{K+1}) multi-assay fit; joint_orthogonal couples A_k, Gamma_k."""
    Xs = _assay_list(assay_set)
    y = _values(y)
    K = len(Xs)
    ranks = list(config.ranks) if config.ranks is not None else [1] * (K + 1)
    if len(ranks) != K + 1:
        raise ValueError("ranks must have length K+1")
    for k in range(K):
        if ranks[k] > Xs[k].shape[1]:
            raise ValueError(f"rank {ranks[k]} exceeds assay {k} width")
    Xc = np.hstack(Xs)
    grams = [X.T @ X for X in Xs] + [Xc.T @ Xc]
    pinvs = [np.linalg.pinv(X) for X in Xs] + [np.linalg.pinv(Xc)]
    w = list(config.w)
    sc = ranks[K]

    V = [top_pc_loadings(Xs[k], ranks[k]) for k in range(K)]
    V.append(top_pc_loadings(Xc, sc))
    for k in range(K + 1):
        for j in range(ranks[k]):
            V[k][:, j] = _shrink_to_ball(V[k][:, j], config.c[k])
    U = [Xs[k] @ V[k] for k in range(K)] + [Xc @ V[K]]
    A, Gamma = [], []
    for k in range(K):
        A.append(procrustes(Xs[k], U[k]).rotation)
        Gamma.append(procrustes(Xs[k] - U[k] @ A[k].T, U[K]).rotation)
    Uall = np.hstack(U)
    betaflat, *_ = np.linalg.lstsq(Uall, y, rcond=None)
    beta = _split_beta(betaflat, ranks)

    trace = [general_objective(Xs, y, V, A, Gamma, beta, w)]
    converged = False
    iterations = 0
    lam_hints = [[None] * ranks[k] for k in range(K + 1)]
    for it in range(1, config.max_outer_iters + 1):
        iterations = it
        U = [Xs[k] @ V[k] for k in range(K)] + [Xc @ V[K]]
        Uall = np.hstack(U)
        betaflat, *_ = np.linalg.lstsq(Uall, y, rcond=None)
        beta = _split_beta(betaflat, ranks)
        for k in range(K):
            if config.joint_orthogonal:
                B = procrustes(Xs[k], np.hstack([U[k], U[K]])).rotation
                A[k] = B[:, : ranks[k]]
                Gamma[k] = B[:, ranks[k] :]
            else:
                A[k] = procrustes(Xs[k] - U[K] @ Gamma[k].T, U[k]).rotation
                Gamma[k] = procrustes(Xs[k] - U[k] @ A[k].T, U[K]).rotation
        # assay-specific sparse columns
        for k in range(K):
            for j in range(ranks[k]):
                U = [Xs[m] @ V[m] for m in range(K)] + [Xc @ V[K]]
                fitted = sum(U[m] @ beta[m] for m in range(K + 1))
                ytilde = y - fitted + beta[k][j] * U[k][:, j]
                R = (Xs[k] - U[k] @ A[k].T - U[K] @ Gamma[k].T
                     + np.outer(U[k][:, j], A[k][:, j]))
                u = (beta[k][j] * ytilde + w[k] * (R @ A[k][:, j]))
                u = u / (beta[k][j] ** 2 + w[k])
                sol, lam = solve_bound_with_lam(
                    Xs[k], u, config.c[k], G=grams[k], b=(Xs[k].T @ u),
                    warm=V[k][:, j], tol=config.cd_tol,
                    probe_sweeps=config.probe_sweeps,
                    lam_hint=lam_hints[k][j], ls_op=pinvs[k])
                lam_hints[k][j] = lam if lam > 0 else None
                if np.sum((u - Xs[k] @ sol.values) ** 2) <= \
                        np.sum((u - Xs[k] @ V[k][:, j]) ** 2):
                    V[k][:, j] = sol.values
        # common sparse columns
        for j in range(sc):
            U = [Xs[m] @ V[m] for m in range(K)] + [Xc @ V[K]]
            fitted = sum(U[m] @ beta[m] for m in range(K + 1))
            ytilde = y - fitted + beta[K][j] * U[K][:, j]
            u = beta[K][j] * ytilde
            for k in range(K):
                R = (Xs[k] - U[k] @ A[k].T - U[K] @ Gamma[k].T
                     + np.outer(U[K][:, j], Gamma[k][:, j]))
                u = u + w[k] * (R @ Gamma[k][:, j])
            u = u / (beta[K][j] ** 2 + sum(w))
            sol, lam = solve_bound_with_lam(
                Xc, u, config.c[K], G=grams[K], b=(Xc.T @ u),
                warm=V[K][:, j], tol=config.cd_tol,
                probe_sweeps=config.probe_sweeps,
                lam_hint=lam_hints[K][j], ls_op=pinvs[K])
            lam_hints[K][j] = lam if lam > 0 else None
            if np.sum((u - Xc @ sol.values) ** 2) <= \
                    np.sum((u - Xc @ V[K][:, j]) ** 2):
                V[K][:, j] = sol.values
        f = general_objective(Xs, y, V, A, Gamma, beta, w)
        trace.append(f)
        if abs(trace[-2] - f) <= config.rel_tol * max(1.0, abs(trace[-2])):
            converged = True
            break
    return GeneralMultiFit(V=V, A=A, Gamma=Gamma, beta=beta,
                           objective_trace=trace, converged=converged,
                           iterations=iterations)


def _split_beta(flat, ranks):
    out, i = [], 0
    for s in ranks:
        out.append(flat[i : i + s])
        i += s
    return out


def c_bounds_from_init(Xs, Xc, y, w):
    """Per-factor c_max: L1 norms of the unconstrained sparse-step solutions
    at the PC-loading initialization."""
    K = len(Xs)
    v, alpha, gamma, beta, U = _initial_state(Xs, Xc, y)
    cmaxes = []
    for k in range(K):
        u = v_k_response(k, y, U, beta, Xs[k], alpha[k], gamma[k], w[k])
        ls, *_ = np.linalg.lstsq(Xs[k], u, rcond=None)
        cmaxes.append(float(np.abs(ls).sum()))
    u = v_common_response(y, U, beta, Xs, alpha, gamma, w)
    ls, *_ = np.linalg.lstsq(Xc, u, rcond=None)
    cmaxes.append(float(np.abs(ls).sum()))
    return np.asarray(cmaxes)


def select_c_multi(raw_assays, y_raw, w, seed, folds=5, grid_size=20,
                   cv_max_iters=60, cv_rel_tol=1e-5):
    """Choose the K+1 bounds by cross-validating a single shared scale.

    Each candidate sets c_k = t * c_max_k with t on a geometric grid in
    [0.1, 1], so one 1-D search covers all assays.
    """
    from .dataset import apply_standardization, standardize, standardize_response

    raw_assays = [np.asarray(a, dtype=np.float64) for a in raw_assays]
    y_raw = np.asarray(y_raw, dtype=np.float64).ravel()
    K = len(raw_assays)
    n = raw_assays[0].shape[0]
    full = [standardize(a) for a in raw_assays]
    full_y = standardize_response(y_raw)
    Xs_full = [a.values for a in full]
    cmaxes = c_bounds_from_init(Xs_full, np.hstack(Xs_full), full_y.values, list(w))
    scales = np.geomspace(0.1, 1.0, grid_size)

    from .single import fold_assignments

    labels = fold_assignments(n, folds, seed)
    errs = np.zeros((folds, len(scales)))
    for f in range(folds):
        tr, va = labels != f, labels == f
        Xtr = [standardize(a[tr]) for a in raw_assays]
        ytr = standardize_response(y_raw[tr])
        Xva = [apply_standardization(a[va], s.col_means, s.col_scales)
               for a, s in zip(raw_assays, Xtr)]
        Xva_c = np.hstack(Xva)
        for i, t in enumerate(scales):
            cfg = MultiSfmConfig(w=tuple(w), c=tuple(t * cmaxes),
                                 max_outer_iters=cv_max_iters, rel_tol=cv_rel_tol,
                                 cd_tol=1e-7, probe_sweeps=500)
            try:
                fr = fit_multi([s.values for s in Xtr], ytr.values, cfg)
            except (DegenerateFactor, SingularDesign):
                errs[f, i] = np.inf
                continue
            pred = sum(fr.beta[k] * (Xva[k] @ fr.v[k].values) for k in range(K))
            pred = pred + fr.beta[K] * (Xva_c @ fr.v[K].values)
            pred = pred * ytr.scale + ytr.mean
            errs[f, i] = float(np.mean((y_raw[va] - pred) ** 2))
    mean_err = errs.mean(axis=0)
    best = int(np.argmin(mean_err))
    return tuple(float(scales[best]) * cmaxes), scales, mean_err


def predict_multi(fit_result, new_assays, assay_params, y_mean, y_scale):
    """assay_params is a list of (col_means, col_scales) per assay."""
    from .exceptions import DimensionMismatch

    blocks = []
    for raw, (means, scales) in zip(new_assays, assay_params):
        raw = np.atleast_2d(np.asarray(raw, dtype=np.float64))
        if raw.shape[1] != len(means):
            raise DimensionMismatch(
                f"expected {len(means)} columns, got {raw.shape[1]}"
            )
        blocks.append((raw - means) / scales)
    Xc = np.hstack(blocks)
    K = len(blocks)
    if isinstance(fit_result, GeneralMultiFit):
        yhat = sum(blocks[k] @ fit_result.V[k] @ fit_result.beta[k] for k in range(K))
        yhat = yhat + Xc @ fit_result.V[K] @ fit_result.beta[K]
    else:
        yhat = sum(
            fit_result.beta[k] * (blocks[k] @ fit_result.v[k].values) for k in range(K)
        )
        yhat = yhat + fit_result.beta[K] * (Xc @ fit_result.v[K].values)
    return yhat * y_scale + y_mean
