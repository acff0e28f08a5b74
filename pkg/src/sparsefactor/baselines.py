"""Comparator methods: LASSO, elastic net (mix 0.5), supervised PCA, oracle."""

from dataclasses import dataclass, field

import numpy as np

from .dataset import apply_standardization, standardize, standardize_response
from .exceptions import DesignMismatch, EmptyScreen, InsufficientRank
from .lasso import elastic_net_path
from .single import fold_assignments


@dataclass
class BaselineFit:
    method: str
    coefficients: np.ndarray  # standardized space; for spca, on the PC scores
    selected_features: np.ndarray
    cv_choice: dict
    col_means: np.ndarray = field(repr=False, default=None)
    col_scales: np.ndarray = field(repr=False, default=None)
    y_mean: float = 0.0
    y_scale: float = 1.0
    screen_idx: np.ndarray = field(repr=False, default=None)
    pc_loadings: np.ndarray = field(repr=False, default=None)

    def predict(self, X_raw):
        Xs = apply_standardization(np.atleast_2d(X_raw), self.col_means, self.col_scales)
        if self.method == "spca":
            scores = Xs[:, self.screen_idx] @ self.pc_loadings
            yhat = scores @ self.coefficients
        else:
            yhat = Xs @ self.coefficients
        return yhat * self.y_scale + self.y_mean


def default_lambda_grid(X_std, y_std, size=20, ratio=None):
    lam_max = 2.0 * float(np.max(np.abs(X_std.T @ y_std)))
    if lam_max <= 0:
        lam_max = 1.0
    if ratio is None:
        # wider designs keep a higher floor: the lam -> 0 end is degenerate
        n, p = X_std.shape
        ratio = 1e-2 if p >= n else 1e-3
    return np.geomspace(lam_max, ratio * lam_max, size)


def _penalized_cv(X_raw, y_raw, mix, folds, lam_grid, seed, method):
    X_raw = np.asarray(X_raw, dtype=np.float64)
    y_raw = np.asarray(y_raw, dtype=np.float64).ravel()
    n = X_raw.shape[0]
    full = standardize(X_raw)
    full_y = standardize_response(y_raw)
    if lam_grid is None:
        lam_grid = default_lambda_grid(full.values, full_y.values)
    lam_grid = np.asarray(list(lam_grid), dtype=np.float64)
    labels = fold_assignments(n, folds, seed)
    # paths may truncate at the degenerate small-lam end; untried entries stay inf
    errs = np.full((folds, len(lam_grid)), np.inf)
    for f in range(folds):
        tr, va = labels != f, labels == f
        Xtr = standardize(X_raw[tr])
        ytr = standardize_response(y_raw[tr])
        Xva = apply_standardization(X_raw[va], Xtr.col_means, Xtr.col_scales)
        path = elastic_net_path(Xtr.values, ytr.values, mix, lam_grid,
                                stop_on_stall=True)
        for i, sol in enumerate(path):
            pred = (Xva @ sol.values) * ytr.scale + ytr.mean
            errs[f, i] = float(np.mean((y_raw[va] - pred) ** 2))
    mean_err = errs.mean(axis=0)
    best = int(np.argmin(mean_err))
    refit_path = elastic_net_path(full.values, full_y.values, mix,
                                  lam_grid[: best + 1], stop_on_stall=True)
    refit = refit_path[-1]
    best = len(refit_path) - 1
    return BaselineFit(
        method=method,
        coefficients=refit.values,
        selected_features=refit.support,
        cv_choice={"lam": float(lam_grid[best]), "mix": mix,
                   "cv_mse": float(mean_err[best])},
        col_means=full.col_means,
        col_scales=full.col_scales,
        y_mean=full_y.mean,
        y_scale=full_y.scale,
    )


def lasso_cv(X_raw, y_raw, folds=5, lam_grid=None, seed=0):
    return _penalized_cv(X_raw, y_raw, 1.0, folds, lam_grid, seed, "lasso")


def enet_cv(X_raw, y_raw, mix=0.5, folds=5, lam_grid=None, seed=0):
    return _penalized_cv(X_raw, y_raw, mix, folds, lam_grid, seed, "enet")


def univariate_coefficients(X_std, y_std):
    """Per-feature regression slope on standardized data (equals the correlation)."""
    n = X_std.shape[0]
    return X_std.T @ y_std / (n - 1)


def _spca_core(X_std, y_std, threshold, n_components):
    coef = univariate_coefficients(X_std, y_std)
    keep = np.flatnonzero(np.abs(coef) >= threshold)
    if keep.size == 0:
        raise EmptyScreen(f"no feature passes threshold {threshold}")
    if keep.size < n_components:
        raise InsufficientRank(
            f"{keep.size} surviving features < {n_components} components"
        )
    reduced = X_std[:, keep]
    _, _, Vt = np.linalg.svd(reduced, full_matrices=False)
    loadings = Vt[:n_components].T
    scores = reduced @ loadings
    reg, *_ = np.linalg.lstsq(scores, y_std, rcond=None)
    return keep, loadings, reg


def supervised_pca(X_raw, y_raw, threshold, n_components=1):
    """Screen on |univariate coefficient| >= threshold, then regress on the
    first principal components of the surviving columns."""
    full = standardize(np.asarray(X_raw, dtype=np.float64))
    full_y = standardize_response(np.asarray(y_raw, dtype=np.float64).ravel())
    keep, loadings, reg = _spca_core(full.values, full_y.values, threshold, n_components)
    return BaselineFit(
        method="spca",
        coefficients=reg,
        selected_features=keep,
        cv_choice={"threshold": float(threshold), "n_components": n_components},
        col_means=full.col_means,
        col_scales=full.col_scales,
        y_mean=full_y.mean,
        y_scale=full_y.scale,
        screen_idx=keep,
        pc_loadings=loadings,
    )


def supervised_pca_cv(X_raw, y_raw, n_components=1, folds=5, seed=0):
    """Threshold chosen by CV over the deciles of |univariate coefficient|."""
    X_raw = np.asarray(X_raw, dtype=np.float64)
    y_raw = np.asarray(y_raw, dtype=np.float64).ravel()
    n = X_raw.shape[0]
    full = standardize(X_raw)
    full_y = standardize_response(y_raw)
    coef = np.abs(univariate_coefficients(full.values, full_y.values))
    grid = np.quantile(coef, np.arange(10) / 10.0)
    labels = fold_assignments(n, folds, seed)
    errs = np.full((folds, len(grid)), np.inf)
    for f in range(folds):
        tr, va = labels != f, labels == f
        Xtr = standardize(X_raw[tr])
        ytr = standardize_response(y_raw[tr])
        Xva = apply_standardization(X_raw[va], Xtr.col_means, Xtr.col_scales)
        for i, th in enumerate(grid):
            try:
                keep, loadings, reg = _spca_core(Xtr.values, ytr.values, th, n_components)
            except (EmptyScreen, InsufficientRank):
                continue
            pred = (Xva[:, keep] @ loadings @ reg) * ytr.scale + ytr.mean
            errs[f, i] = float(np.mean((y_raw[va] - pred) ** 2))
    mean_err = errs.mean(axis=0)
    best = int(np.argmin(mean_err))
    fit = supervised_pca(X_raw, y_raw, float(grid[best]), n_components)
    fit.cv_choice["cv_mse"] = float(mean_err[best])
    return fit


def oracle_predict(truth, test):
    """Conditional-mean predictions from the true generating parameters."""
    if truth.design in ("single_latent", "multi_latent"):
        if test.factors is None:
            raise DesignMismatch("latent-design oracle needs the test factor matrix")
        return np.asarray(test.factors) @ np.asarray(truth.beta_true)
    if truth.design in ("single_indep", "multi_indep"):
        betas = truth.beta_true
        return sum(np.asarray(X) @ np.asarray(b) for X, b in zip(test.assays, betas))
    raise DesignMismatch(f"unknown design {truth.design!r}")
