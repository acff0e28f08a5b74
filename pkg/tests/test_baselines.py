import numpy as np
import pytest

from sparsefactor import baselines
from sparsefactor.baselines import (
    default_lambda_grid,
    enet_cv,
    lasso_cv,
    oracle_predict,
    supervised_pca,
    supervised_pca_cv,
    univariate_coefficients,
)
from sparsefactor.dataset import standardize, standardize_response
from sparsefactor.exceptions import EmptyScreen, ZeroOracleMse
from sparsefactor.simgen import SimSpec, generate


class TestPenalizedCv:
    def test_pure_noise_keeps_small_model(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(60, 30))
        y = rng.normal(size=60)
        fit = lasso_cv(X, y, seed=0)
        assert fit.selected_features.size <= 10
        assert fit.cv_choice["cv_mse"] == pytest.approx(np.var(y, ddof=1), rel=0.2)

    def test_strong_signal_always_selected(self):
        rng = np.random.default_rng(1)
        hits = 0
        for rep in range(20):
            r = np.random.default_rng(rep)
            X = r.normal(size=(50, 15))
            y = 5.0 * X[:, 3] + 0.3 * r.normal(size=50)
            fit = lasso_cv(X, y, seed=rep)
            hits += 3 in fit.selected_features
        assert hits >= 19

    def test_single_lambda_grid(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(30, 8))
        y = rng.normal(size=30)
        std, ys = standardize(X), standardize_response(y)
        lam = float(np.max(np.abs(std.values.T @ ys.values)))
        fit = lasso_cv(X, y, lam_grid=[lam], seed=0)
        from sparsefactor.lasso import solve_lagrangian
        direct = solve_lagrangian(std.values, ys.values, lam)
        np.testing.assert_allclose(fit.coefficients, direct.values, atol=1e-8)

    def test_enet_mirrors_lasso_api(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(40, 12))
        y = X[:, 0] + rng.normal(size=40)
        fit = enet_cv(X, y, seed=0)
        assert fit.method == "enet"
        assert fit.cv_choice["mix"] == 0.5
        preds = fit.predict(X)
        assert preds.shape == (40,)

    def test_prediction_destandardizes(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(50, 6)) * 4 + 10
        y = 3.0 * X[:, 1] + rng.normal(size=50) + 100
        fit = lasso_cv(X, y, seed=0)
        preds = fit.predict(X)
        assert np.corrcoef(preds, y)[0, 1] > 0.9
        assert abs(preds.mean() - y.mean()) < 2.0

    def test_wide_grid_floor(self):
        rng = np.random.default_rng(5)
        tall = default_lambda_grid(rng.normal(size=(50, 10)), rng.normal(size=50))
        wide = default_lambda_grid(rng.normal(size=(10, 50)), rng.normal(size=10))
        assert tall[-1] / tall[0] == pytest.approx(1e-3)
        assert wide[-1] / wide[0] == pytest.approx(1e-2)


class TestSupervisedPca:
    def test_zero_threshold_equals_full_pc_regression(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(40, 10))
        y = rng.normal(size=40)
        fit = supervised_pca(X, y, 0.0, n_components=1)
        assert fit.selected_features.size == 10
        std, ys = standardize(X), standardize_response(y)
        _, _, Vt = np.linalg.svd(std.values, full_matrices=False)
        scores = std.values @ Vt[0]
        reg = float(scores @ ys.values / (scores @ scores))
        manual = scores * reg * ys.scale + ys.mean
        np.testing.assert_allclose(fit.predict(X), manual, atol=1e-8)

    def test_over_screening(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(30, 5))
        y = rng.normal(size=30)
        with pytest.raises(EmptyScreen):
            supervised_pca(X, y, 10.0)

    def test_cv_screen_hits_true_features(self):
        tprs = []
        for rep in range(20):
            spec = SimSpec(design="single_latent", n=100, p=200, n_nonnull=20,
                           snr_x=2.0, snr_y=2.0, seed=700 + rep, test_n=10)
            train, _, truth = generate(spec)
            fit = supervised_pca_cv(train.assays[0], train.y, seed=rep)
            sel = set(fit.selected_features.tolist())
            tprs.append(len(sel & set(range(20))) / 20)
        assert np.median(tprs) > 0.8

    def test_univariate_coefficients_are_correlations(self):
        rng = np.random.default_rng(8)
        X = standardize(rng.normal(size=(50, 4))).values
        y = standardize_response(rng.normal(size=50)).values
        coef = univariate_coefficients(X, y)
        manual = [np.corrcoef(X[:, j], y)[0, 1] for j in range(4)]
        np.testing.assert_allclose(coef, manual, atol=1e-10)


class TestOracle:
    def test_latent_design_uses_test_factors(self):
        spec = SimSpec(design="multi_latent", n=30, p=10, K=2, n_nonnull=3,
                       seed=9, test_n=500)
        _, test, truth = generate(spec)
        pred = oracle_predict(truth, test)
        np.testing.assert_allclose(pred, test.factors @ truth.beta_true)

    def test_indep_design_mse_near_noise_variance(self):
        spec = SimSpec(design="single_indep", n=100, p=100, n_nonnull=10,
                       snr_x=5.0, snr_y=5.0, seed=10, test_n=20000)
        _, test, truth = generate(spec)
        pred = oracle_predict(truth, test)
        mse = float(np.mean((test.y - pred) ** 2))
        assert mse == pytest.approx(truth.e_y2, rel=0.1)

    def test_normalized_mse_guard(self):
        from sparsefactor.bench import normalized_test_mse
        y = np.arange(5.0)
        with pytest.raises(ZeroOracleMse):
            normalized_test_mse(y, y, y)
