"""Benchmark harness: replicate loop, oracle-normalized MSE, selection rates,
CSV reports, optional SVG figures."""

import csv
import os
import time
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from . import baselines, multi, simgen, single
from .dataset import apply_standardization, standardize, standardize_response
from .exceptions import SparseFactorError, ZeroOracleMse

VALID_METHODS = ("sfm", "lasso", "enet", "spca", "oracle")


@dataclass
class BenchRow:
    replicate: int
    method: str
    normalized_test_mse: float
    tpr: float
    fpr: float
    hyperparams: str
    seconds: float


@dataclass
class BenchmarkReport:
    rows: list
    summary: list  # dicts: method, n_rows, median/q1/q3 of normalized MSE
    failures: list  # (replicate, method, reason)
    spec: simgen.SimSpec = None
    methods: tuple = ()
    replicates: int = 0
    base_seed: int = 0


def normalized_test_mse(predictions, y_test, oracle_predictions):
    predictions = np.asarray(predictions, dtype=np.float64).ravel()
    y_test = np.asarray(y_test, dtype=np.float64).ravel()
    oracle = np.asarray(oracle_predictions, dtype=np.float64).ravel()
    oracle_mse = float(np.mean((y_test - oracle) ** 2))
    if oracle_mse <= 0.0:
        raise ZeroOracleMse("oracle test MSE is zero (noiseless response)")
    return float(np.mean((y_test - predictions) ** 2)) / oracle_mse


def selection_rates(selected, nonnull_sets, widths):
    """Pooled TPR/FPR over all features; `selected` holds indices into the
    concatenated feature space, `nonnull_sets` per-assay local indices."""
    offsets = np.cumsum([0] + list(widths[:-1]))
    truth = np.concatenate(
        [np.asarray(s) + off for s, off in zip(nonnull_sets, offsets)]
    ) if nonnull_sets else np.zeros(0, dtype=int)
    p_total = int(sum(widths))
    sel = set(int(i) for i in np.asarray(selected).ravel())
    pos = set(int(i) for i in truth)
    tp = len(sel & pos)
    fp = len(sel - pos)
    tpr = tp / len(pos) if pos else 0.0
    neg = p_total - len(pos)
    fpr = fp / neg if neg else 0.0
    return tpr, fpr


def _sfm_selected(fit, widths):
    """A feature is selected if its assay-specific v entry is nonzero or the
    matching entry of the common-factor v is nonzero."""
    if isinstance(fit, single.SingleFactorFit):
        return fit.v.support
    offsets = np.cumsum([0] + list(widths[:-1]))
    sel = set(int(i) for i in fit.v[-1].support)
    for k, off in enumerate(offsets):
        sel.update(int(off + i) for i in fit.v[k].support)
    return np.array(sorted(sel), dtype=int)


def _fmt_params(d):
    return ";".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                    for k, v in d.items())


def _fit_sfm(train, spec, seed, w=None, cv_folds=5, cv_grid_size=20):
    """CV-select the bound(s), fit at full tolerance, return a predictor."""
    widths = [a.shape[1] for a in train.assays]
    if spec.is_multi:
        w_vec = tuple([1.0 if w is None else float(w)] * spec.K)
        c_vec, _, _ = multi.select_c_multi(train.assays, train.y, w_vec, seed,
                                           folds=cv_folds, grid_size=cv_grid_size)
        std = [standardize(a) for a in train.assays]
        y_std = standardize_response(train.y)
        cfg = multi.MultiSfmConfig(w=w_vec, c=c_vec)
        fit = multi.fit_multi([s.values for s in std], y_std.values, cfg)
        params = [(s.col_means, s.col_scales) for s in std]

        def predict(test_assays):
            return multi.predict_multi(fit, test_assays, params,
                                       y_std.mean, y_std.scale)

        hyper = {"w": w_vec[0], "c_common": float(c_vec[-1]),
                 "c_scale": float(c_vec[0])}
    else:
        w_val = 0.2 if w is None else float(w)
        X_raw = train.assays[0]
        c, _, _ = single.select_c(X_raw, train.y, w_val, seed,
                                  folds=cv_folds, grid_size=cv_grid_size)
        std = standardize(X_raw)
        y_std = standardize_response(train.y)
        cfg = single.SfmConfig(w=w_val, c=c)
        fit = single.fit(std.values, y_std.values, cfg)

        def predict(test_assays):
            return single.predict(fit, test_assays[0], std.col_means,
                                  std.col_scales, y_std.mean, y_std.scale)

        hyper = {"w": w_val, "c": float(c)}
    selected = _sfm_selected(fit, widths)
    return predict, selected, hyper


def _fit_baseline(method, train, spec, seed):
    Xc = np.hstack(train.assays)
    if method == "lasso":
        fit = baselines.lasso_cv(Xc, train.y, seed=seed)
        hyper = {"lam": fit.cv_choice["lam"]}
    elif method == "enet":
        fit = baselines.enet_cv(Xc, train.y, seed=seed)
        hyper = {"lam": fit.cv_choice["lam"], "mix": 0.5}
    elif method == "spca":
        m = 4 if spec.is_multi else 1
        fit = baselines.supervised_pca_cv(Xc, train.y, n_components=m, seed=seed)
        hyper = {"threshold": fit.cv_choice["threshold"], "n_components": m}
    else:
        raise ValueError(f"unknown method {method!r}")

    def predict(test_assays):
        return fit.predict(np.hstack(test_assays))

    return predict, fit.selected_features, hyper


def run_replicate(spec, methods, replicate, base_seed, sfm_w=None):
    rep_spec = simgen.SimSpec(**{**spec.__dict__, "seed": base_seed + replicate})
    train, test, truth = simgen.generate(rep_spec)
    widths = [a.shape[1] for a in train.assays]
    oracle_pred = baselines.oracle_predict(truth, test)
    rows, failures = [], []
    for method in methods:
        t0 = time.perf_counter()
        try:
            if method == "oracle":
                pred = oracle_pred
                selected = np.concatenate(
                    [np.asarray(s) + off for s, off in
                     zip(truth.nonnull_sets, np.cumsum([0] + widths[:-1]))]
                )
                hyper = {}
            elif method == "sfm":
                predict, selected, hyper = _fit_sfm(
                    train, rep_spec, base_seed + replicate, w=sfm_w)
                pred = predict(test.assays)
            else:
                predict, selected, hyper = _fit_baseline(
                    method, train, rep_spec, base_seed + replicate)
                pred = predict(test.assays)
            nmse = normalized_test_mse(pred, test.y, oracle_pred)
            tpr, fpr = selection_rates(selected, truth.nonnull_sets, widths)
        except SparseFactorError as exc:
            failures.append((replicate, method, f"{type(exc).__name__}: {exc}"))
            continue
        rows.append(BenchRow(
            replicate=replicate,
            method=method,
            normalized_test_mse=nmse,
            tpr=tpr,
            fpr=fpr,
            hyperparams=_fmt_params(hyper),
            seconds=time.perf_counter() - t0,
        ))
    return rows, failures


def run_experiment(spec, methods, replicates, base_seed, threads=1, sfm_w=None):
    """Deterministic given (spec, methods, replicates, base_seed); threads only
    distribute replicates, never change results."""
    methods = tuple(methods)
    for m in methods:
        if m not in VALID_METHODS:
            raise ValueError(f"unknown method {m!r}; valid: {VALID_METHODS}")
    results = Parallel(n_jobs=threads)(
        delayed(run_replicate)(spec, methods, r, base_seed, sfm_w)
        for r in range(replicates)
    )
    rows, failures = [], []
    for rep_rows, rep_fail in results:  # replicate-major ordering
        rows.extend(rep_rows)
        failures.extend(rep_fail)
    summary = []
    for m in methods:
        vals = np.array([r.normalized_test_mse for r in rows if r.method == m])
        entry = {"method": m, "n_rows": int(vals.size)}
        if vals.size:
            q1, med, q3 = np.quantile(vals, [0.25, 0.5, 0.75])  # type-7
            entry.update(median=float(med), q1=float(q1), q3=float(q3))
        else:
            entry.update(median=float("nan"), q1=float("nan"), q3=float("nan"))
        entry["failures"] = sum(1 for f in failures if f[1] == m)
        summary.append(entry)
    return BenchmarkReport(rows=rows, summary=summary, failures=failures,
                           spec=spec, methods=methods, replicates=replicates,
                           base_seed=base_seed)


def roc_sweep(method, train, truth, grid, spec, w=None):
    """One (FPR, TPR) point per hyperparameter value, fitted on the training data.

    The swept parameter is c for SFM, lam for lasso/enet, the screening
    threshold for supervised PCA. Failed fits are skipped.
    """
    widths = [a.shape[1] for a in train.assays]
    Xc = np.hstack(train.assays)
    points = []
    for g in grid:
        try:
            if method == "sfm":
                if spec.is_multi:
                    w_vec = tuple([1.0 if w is None else float(w)] * spec.K)
                    std = [standardize(a) for a in train.assays]
                    y_std = standardize_response(train.y)
                    cmaxes = multi.c_bounds_from_init(
                        [s.values for s in std],
                        np.hstack([s.values for s in std]), y_std.values, list(w_vec))
                    cfg = multi.MultiSfmConfig(w=w_vec, c=tuple(float(g) * cmaxes))
                    fit = multi.fit_multi([s.values for s in std], y_std.values, cfg)
                else:
                    std = standardize(train.assays[0])
                    y_std = standardize_response(train.y)
                    cfg = single.SfmConfig(w=0.2 if w is None else float(w), c=float(g))
                    fit = single.fit(std.values, y_std.values, cfg)
                selected = _sfm_selected(fit, widths)
            elif method in ("lasso", "enet"):
                mix = 1.0 if method == "lasso" else 0.5
                std_y = standardize_response(train.y)
                std_x = standardize(Xc)
                from .lasso import solve_lagrangian
                sol = solve_lagrangian(std_x.values, std_y.values, float(g), mix=mix)
                selected = sol.support
            elif method == "spca":
                m = 4 if spec.is_multi else 1
                fit = baselines.supervised_pca(Xc, train.y, float(g), m)
                selected = fit.selected_features
            else:
                raise ValueError(f"unknown method {method!r}")
        except SparseFactorError:
            continue
        points.append(selection_rates(selected, truth.nonnull_sets, widths))
    return [(fpr, tpr) for tpr, fpr in points]


RESULT_COLUMNS = ["replicate", "method", "normalized_test_mse", "tpr", "fpr",
                  "hyperparams", "seconds"]


def emit_report(report, out_dir, figures=False, include_timings=False):
    """Write results.csv / summary.csv (and SVG figures when requested).

    Timings are omitted by default so output is byte-identical across runs
    and thread counts; pass include_timings=True for wall-clock seconds.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    results_path = os.path.join(out_dir, "results.csv")
    with open(results_path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(RESULT_COLUMNS)
        for r in report.rows:
            wr.writerow([
                r.replicate, r.method,
                f"{r.normalized_test_mse:.10g}", f"{r.tpr:.10g}", f"{r.fpr:.10g}",
                r.hyperparams,
                f"{r.seconds:.3f}" if include_timings else "",
            ])
    written.append(results_path)
    summary_path = os.path.join(out_dir, "summary.csv")
    with open(summary_path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(["method", "n_rows", "median", "q1", "q3", "failures"])
        for s in report.summary:
            wr.writerow([s["method"], s["n_rows"], f"{s['median']:.10g}",
                         f"{s['q1']:.10g}", f"{s['q3']:.10g}", s["failures"]])
    written.append(summary_path)
    if figures:
        from . import svgplot

        mse_path = os.path.join(out_dir, "mse.svg")
        with open(mse_path, "w", encoding="utf-8") as fh:
            fh.write(svgplot.mse_strip_svg(report))
        written.append(mse_path)
        roc_path = os.path.join(out_dir, "roc.svg")
        with open(roc_path, "w", encoding="utf-8") as fh:
            fh.write(svgplot.roc_scatter_svg(report))
        written.append(roc_path)
    return written


def parse_results(path):
    """Read results.csv back into BenchRow objects (round-trip helper)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.DictReader(fh)
        for rec in rd:
            rows.append(BenchRow(
                replicate=int(rec["replicate"]),
                method=rec["method"],
                normalized_test_mse=float(rec["normalized_test_mse"]),
                tpr=float(rec["tpr"]),
                fpr=float(rec["fpr"]),
                hyperparams=rec["hyperparams"],
                seconds=float(rec["seconds"]) if rec["seconds"] else 0.0,
            ))
    return rows
