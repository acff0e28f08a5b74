"""Scikit-learn style estimators wrapping the factor fitters.

Both regressors take raw (unstandardized) feature matrices, standardize
internally with training-set parameters, and return predictions on the
original response scale, so they drop into sklearn pipelines and
cross-validation utilities unchanged.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from . import multi, single
from .dataset import split_by_boundaries, standardize, standardize_response


class SFMRegressor(RegressorMixin, BaseEstimator):
    """Single-assay sparse factor regression.

    Parameters
    ----------
    w : reconstruction weight trading off factor recovery against the
        response fit.
    c : L1 bound on the sparse weight vector; None selects it by
        cross-validation on a geometric grid.
    rank : number of latent factors.
    """

    def __init__(self, w=0.2, c=None, rank=1, max_outer_iters=200, rel_tol=1e-7,
                 cv_folds=5, cv_grid_size=20, random_state=0):
        self.w = w
        self.c = c
        self.rank = rank
        self.max_outer_iters = max_outer_iters
        self.rel_tol = rel_tol
        self.cv_folds = cv_folds
        self.cv_grid_size = cv_grid_size
        self.random_state = random_state

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).ravel()
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError("X must be 2-D with one row per response entry")
        c = self.c
        if c is None:
            c, _, _ = single.select_c(X, y, self.w, self.random_state,
                                      folds=self.cv_folds,
                                      grid_size=self.cv_grid_size,
                                      rank=self.rank)
        std = standardize(X)
        y_std = standardize_response(y)
        cfg = single.SfmConfig(w=self.w, c=float(c), rank=self.rank,
                               max_outer_iters=self.max_outer_iters,
                               rel_tol=self.rel_tol, seed=self.random_state)
        if self.rank == 1:
            self.fit_ = single.fit(std.values, y_std.values, cfg)
            self.support_ = self.fit_.v.support
        else:
            self.fit_ = single.fit_rank_r(std.values, y_std.values, cfg)
            self.support_ = np.flatnonzero(np.any(self.fit_.V != 0, axis=1))
        self.c_ = float(c)
        self.x_means_ = std.col_means
        self.x_scales_ = std.col_scales
        self.y_mean_ = y_std.mean
        self.y_scale_ = y_std.scale
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        return single.predict(self.fit_, X, self.x_means_, self.x_scales_,
                              self.y_mean_, self.y_scale_)


class MultiAssaySFMRegressor(RegressorMixin, BaseEstimator):
    """Multi-assay sparse factor regression on a concatenated feature matrix.

    boundaries gives the per-assay column counts of X; each assay gets its
    own sparse factor plus one common factor over the concatenation.
    """

    def __init__(self, boundaries=None, w=1.0, c=None, ranks=None,
                 joint_orthogonal=False, max_outer_iters=200, rel_tol=1e-7,
                 cv_folds=5, cv_grid_size=20, random_state=0):
        self.boundaries = boundaries
        self.w = w
        self.c = c
        self.ranks = ranks
        self.joint_orthogonal = joint_orthogonal
        self.max_outer_iters = max_outer_iters
        self.rel_tol = rel_tol
        self.cv_folds = cv_folds
        self.cv_grid_size = cv_grid_size
        self.random_state = random_state

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).ravel()
        if self.boundaries is None:
            raise ValueError("boundaries (per-assay column counts) are required")
        blocks = split_by_boundaries(X, list(self.boundaries))
        K = len(blocks)
        w_vec = tuple(self.w) if np.iterable(self.w) else (float(self.w),) * K
        c = self.c
        if c is None:
            c, _, _ = multi.select_c_multi(blocks, y, w_vec, self.random_state,
                                           folds=self.cv_folds,
                                           grid_size=self.cv_grid_size)
        std = [standardize(b) for b in blocks]
        y_std = standardize_response(y)
        cfg = multi.MultiSfmConfig(
            w=w_vec, c=tuple(c),
            ranks=tuple(self.ranks) if self.ranks is not None else None,
            joint_orthogonal=self.joint_orthogonal,
            max_outer_iters=self.max_outer_iters, rel_tol=self.rel_tol,
            seed=self.random_state)
        if cfg.ranks is None or all(s == 1 for s in cfg.ranks):
            self.fit_ = multi.fit_multi([s.values for s in std], y_std.values, cfg)
        else:
            self.fit_ = multi.fit_multi_general([s.values for s in std],
                                                y_std.values, cfg)
        self.c_ = tuple(float(x) for x in c)
        self.assay_params_ = [(s.col_means, s.col_scales) for s in std]
        self.y_mean_ = y_std.mean
        self.y_scale_ = y_std.scale
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        blocks = split_by_boundaries(np.atleast_2d(np.asarray(X, dtype=np.float64)),
                                     list(self.boundaries))
        return multi.predict_multi(self.fit_, blocks, self.assay_params_,
                                   self.y_mean_, self.y_scale_)
