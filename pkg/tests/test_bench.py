import numpy as np
import pytest

from sparsefactor import bench
from sparsefactor.bench import (
    emit_report,
    normalized_test_mse,
    parse_results,
    roc_sweep,
    run_experiment,
    run_replicate,
    selection_rates,
)
from sparsefactor.simgen import SimSpec, generate

SMALL_SPEC = SimSpec(design="single_indep", n=40, p=20, n_nonnull=5,
                     snr_x=5.0, snr_y=5.0, seed=100, test_n=200)


class TestNormalizedMse:
    def test_oracle_is_one(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=50)
        oracle = y + 0.5 * rng.normal(size=50)
        assert normalized_test_mse(oracle, y, oracle) == pytest.approx(1.0)

    def test_mean_predictor_ratio(self):
        spec = SimSpec(design="single_indep", n=50, p=20, n_nonnull=5,
                       snr_x=2.0, snr_y=2.0, seed=1, test_n=50000)
        _, test, truth = generate(spec)
        from sparsefactor.baselines import oracle_predict
        oracle = oracle_predict(truth, test)
        const = np.full_like(test.y, test.y.mean())
        got = normalized_test_mse(const, test.y, oracle)
        expect = np.var(test.y) / truth.e_y2
        assert got == pytest.approx(expect, rel=0.02)


class TestSelectionRates:
    def test_perfect(self):
        tpr, fpr = selection_rates(np.arange(5), [np.arange(5)], [20])
        assert (tpr, fpr) == (1.0, 0.0)

    def test_empty(self):
        tpr, fpr = selection_rates(np.zeros(0, dtype=int), [np.arange(5)], [20])
        assert (tpr, fpr) == (0.0, 0.0)

    def test_saturating(self):
        tpr, fpr = selection_rates(np.arange(200), [np.arange(20)], [200])
        assert (tpr, fpr) == (1.0, 1.0)

    def test_multi_assay_offsets(self):
        # second assay's locals must be shifted by the first assay's width
        tpr, fpr = selection_rates([0, 10, 11], [np.arange(2), np.arange(2)],
                                   [10, 10])
        assert tpr == pytest.approx(3 / 4)
        assert fpr == 0.0


class TestRunReplicate:
    def test_oracle_row_is_unity(self):
        rows, fails = run_replicate(SMALL_SPEC, ("oracle",), 0, 100)
        assert not fails
        assert rows[0].normalized_test_mse == pytest.approx(1.0)
        assert rows[0].tpr == 1.0

    def test_composition_matches_experiment(self):
        rows, _ = run_replicate(SMALL_SPEC, ("lasso",), 0, 100)
        report = run_experiment(SMALL_SPEC, ("lasso",), 1, 100)
        assert report.rows[0].normalized_test_mse == rows[0].normalized_test_mse
        assert report.rows[0].hyperparams == rows[0].hyperparams

    def test_replicates_vary_by_seed(self):
        r0, _ = run_replicate(SMALL_SPEC, ("lasso",), 0, 100)
        r1, _ = run_replicate(SMALL_SPEC, ("lasso",), 1, 100)
        assert r0[0].normalized_test_mse != r1[0].normalized_test_mse


class TestRunExperiment:
    def test_replicate_major_ordering_and_summary(self):
        report = run_experiment(SMALL_SPEC, ("lasso", "oracle"), 2, 100)
        keys = [(r.replicate, r.method) for r in report.rows]
        assert keys == [(0, "lasso"), (0, "oracle"), (1, "lasso"), (1, "oracle")]
        s = {e["method"]: e for e in report.summary}
        assert s["oracle"]["median"] == pytest.approx(1.0)
        assert s["lasso"]["n_rows"] == 2

    def test_threads_do_not_change_rows(self):
        a = run_experiment(SMALL_SPEC, ("lasso", "enet"), 3, 100, threads=1)
        b = run_experiment(SMALL_SPEC, ("lasso", "enet"), 3, 100, threads=2)
        for ra, rb in zip(a.rows, b.rows):
            assert ra.normalized_test_mse == rb.normalized_test_mse
            assert ra.hyperparams == rb.hyperparams

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            run_experiment(SMALL_SPEC, ("magic",), 1, 100)


class TestRocSweep:
    def test_single_point_matches_selection_rates(self):
        train, _, truth = generate(SMALL_SPEC)
        from sparsefactor.baselines import supervised_pca
        th = 0.2
        pts = roc_sweep("spca", train, truth, [th], SMALL_SPEC)
        fit = supervised_pca(np.hstack(train.assays), train.y, th, 1)
        tpr, fpr = selection_rates(fit.selected_features, truth.nonnull_sets,
                                   [a.shape[1] for a in train.assays])
        assert pts == [(fpr, tpr)]

    def test_sfm_extremes(self):
        spec = SimSpec(design="single_latent", n=50, p=30, n_nonnull=5,
                       snr_x=2.0, snr_y=2.0, seed=42, test_n=10)
        train, _, truth = generate(spec)
        pts = roc_sweep("sfm", train, truth, [0.1, 1.0, 4.0], spec)
        assert len(pts) == 3
        for fpr, tpr in pts:
            assert 0.0 <= fpr <= 1.0 and 0.0 <= tpr <= 1.0
        # at a moderate budget the planted signal dominates the support
        assert pts[1][1] >= 0.8

    def test_lasso_above_critical_penalty_is_origin(self):
        train, _, truth = generate(SMALL_SPEC)
        from sparsefactor.dataset import standardize, standardize_response
        X = standardize(np.hstack(train.assays)).values
        y = standardize_response(train.y).values
        lam_max = 2.0 * np.max(np.abs(X.T @ y))
        pts = roc_sweep("lasso", train, truth, [1.1 * lam_max], SMALL_SPEC)
        assert pts == [(0.0, 0.0)]


class TestReports:
    def _report(self, reps=2):
        return run_experiment(SMALL_SPEC, ("lasso", "oracle"), reps, 100)

    def test_round_trip(self, tmp_path):
        report = self._report()
        emit_report(report, str(tmp_path))
        rows = parse_results(str(tmp_path / "results.csv"))
        assert len(rows) == len(report.rows)
        for got, want in zip(rows, report.rows):
            assert got.method == want.method
            assert got.replicate == want.replicate
            assert got.normalized_test_mse == pytest.approx(
                want.normalized_test_mse, rel=1e-9)
            assert got.seconds == 0.0  # timings off by default

    def test_empty_report_headers_only(self, tmp_path):
        empty = bench.BenchmarkReport(rows=[], summary=[], failures=[])
        emit_report(empty, str(tmp_path))
        assert (tmp_path / "results.csv").read_text().strip() == \
            ",".join(bench.RESULT_COLUMNS)

    def test_emit_is_deterministic(self, tmp_path):
        report = self._report()
        emit_report(report, str(tmp_path / "a"))
        emit_report(report, str(tmp_path / "b"))
        assert (tmp_path / "a" / "results.csv").read_bytes() == \
            (tmp_path / "b" / "results.csv").read_bytes()
        assert (tmp_path / "a" / "summary.csv").read_bytes() == \
            (tmp_path / "b" / "summary.csv").read_bytes()

    def test_figures_are_valid_svg(self, tmp_path):
        report = self._report()
        written = emit_report(report, str(tmp_path), figures=True)
        assert any(p.endswith("mse.svg") for p in written)
        for p in written:
            if p.endswith(".svg"):
                text = open(p).read()
                assert text.startswith("<?xml") or text.startswith("<svg")
                assert "</svg>" in text

    def test_timings_opt_in(self, tmp_path):
        report = self._report()
        emit_report(report, str(tmp_path), include_timings=True)
        rows = parse_results(str(tmp_path / "results.csv"))
        assert any(r.seconds > 0 for r in rows)
