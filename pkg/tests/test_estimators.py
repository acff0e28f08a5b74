import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import cross_val_score

from sparsefactor.estimators import MultiAssaySFMRegressor, SFMRegressor
from sparsefactor.simgen import SimSpec, generate


def _single_data(seed=0, n=80, p=20):
    spec = SimSpec(design="single_latent", n=n, p=p, n_nonnull=5,
                   snr_x=3.0, snr_y=3.0, seed=seed, test_n=200)
    train, test, _ = generate(spec)
    return train.assays[0], train.y, test.assays[0], test.y


def _multi_data(seed=0):
    spec = SimSpec(design="multi_latent", n=60, p=15, K=2, n_nonnull=4,
                   snr_x=3.0, snr_y=3.0, seed=seed, test_n=100)
    train, test, _ = generate(spec)
    return (np.hstack(train.assays), train.y,
            np.hstack(test.assays), test.y)


class TestSFMRegressor:
    def test_get_set_clone(self):
        est = SFMRegressor(w=0.5, c=1.5, rank=2)
        params = est.get_params()
        assert params["w"] == 0.5 and params["c"] == 1.5 and params["rank"] == 2
        est.set_params(c=2.0)
        assert est.c == 2.0
        dup = clone(est)
        assert dup.get_params() == est.get_params()
        assert not hasattr(dup, "fit_")

    def test_fit_predict_shapes(self):
        X, y, Xt, _ = _single_data()
        est = SFMRegressor(c=1.0).fit(X, y)
        assert est.n_features_in_ == X.shape[1]
        preds = est.predict(Xt)
        assert preds.shape == (Xt.shape[0],)
        assert np.all(np.isfinite(preds))

    def test_predict_before_fit(self):
        with pytest.raises(NotFittedError):
            SFMRegressor(c=1.0).predict(np.zeros((3, 4)))

    def test_support_respects_budget(self):
        X, y, _, _ = _single_data()
        est = SFMRegressor(c=0.8).fit(X, y)
        v = est.fit_.v.values
        assert np.abs(v).sum() <= 0.8 + 1e-6
        assert set(est.support_) == set(np.flatnonzero(v))

    def test_cv_when_c_omitted(self):
        X, y, Xt, yt = _single_data()
        est = SFMRegressor().fit(X, y)
        assert est.c is None  # fit must not mutate hyperparameters
        assert est.c_ > 0
        mse = np.mean((est.predict(Xt) - yt) ** 2)
        assert mse < np.var(yt)

    def test_beats_mean_predictor(self):
        X, y, Xt, yt = _single_data()
        est = SFMRegressor(c=2.0).fit(X, y)
        assert np.mean((est.predict(Xt) - yt) ** 2) < 0.8 * np.var(yt)

    def test_rank_two(self):
        X, y, Xt, _ = _single_data()
        est = SFMRegressor(c=1.0, rank=2).fit(X, y)
        assert est.fit_.V.shape == (X.shape[1], 2)
        assert est.predict(Xt).shape == (Xt.shape[0],)

    def test_sklearn_cross_val(self):
        X, y, _, _ = _single_data()
        scores = cross_val_score(SFMRegressor(c=1.0), X, y, cv=3)
        assert scores.shape == (3,)
        assert np.all(np.isfinite(scores))

    def test_determinism(self):
        X, y, Xt, _ = _single_data()
        a = SFMRegressor(c=1.0).fit(X, y).predict(Xt)
        b = SFMRegressor(c=1.0).fit(X, y).predict(Xt)
        np.testing.assert_array_equal(a, b)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            SFMRegressor(c=1.0).fit(np.zeros((5, 3)), np.zeros(4))


class TestMultiAssaySFMRegressor:
    def test_requires_boundaries(self):
        X, y, _, _ = _multi_data()
        with pytest.raises(ValueError, match="boundaries"):
            MultiAssaySFMRegressor().fit(X, y)

    def test_fit_predict(self):
        X, y, Xt, yt = _multi_data()
        est = MultiAssaySFMRegressor(boundaries=(15, 15),
                                     c=(1.0, 1.0, 1.0)).fit(X, y)
        preds = est.predict(Xt)
        assert preds.shape == (Xt.shape[0],)
        assert np.mean((preds - yt) ** 2) < np.var(yt)

    def test_cv_when_c_omitted(self):
        X, y, _, _ = _multi_data()
        est = MultiAssaySFMRegressor(boundaries=(15, 15), cv_grid_size=5,
                                     max_outer_iters=60).fit(X, y)
        assert len(est.c_) == 3
        assert all(c > 0 for c in est.c_)

    def test_clone_and_params(self):
        est = MultiAssaySFMRegressor(boundaries=(15, 15), w=2.0,
                                     c=(1.0, 1.0, 1.0))
        dup = clone(est)
        assert dup.get_params()["w"] == 2.0
        assert dup.get_params()["boundaries"] == (15, 15)

    def test_general_ranks_path(self):
        X, y, Xt, _ = _multi_data()
        est = MultiAssaySFMRegressor(boundaries=(15, 15), c=(1.5, 1.5, 1.5),
                                     ranks=(2, 1, 1)).fit(X, y)
        assert est.fit_.V[0].shape == (15, 2)
        assert est.predict(Xt).shape == (Xt.shape[0],)

    def test_boundary_mismatch(self):
        X, y, _, _ = _multi_data()
        from sparsefactor.exceptions import BoundaryMismatch
        with pytest.raises(BoundaryMismatch):
            MultiAssaySFMRegressor(boundaries=(10, 10),
                                   c=(1.0, 1.0, 1.0)).fit(X, y)
