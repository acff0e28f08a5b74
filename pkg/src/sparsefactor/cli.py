"""Command-line frontend: simulate, fit, and benchmark subcommands.

Options come from flags or an INI config file (one section per subcommand,
keys named after the long options); flags override file values. Exit codes:
0 success, 2 configuration error, 3 I/O error, 4 fit failure. Data goes to
files, diagnostics to stderr, and stdout carries a one-line summary.
"""

import argparse
import configparser
import json
import os
import sys

import numpy as np

from . import __version__, bench, multi, simgen, single
from .dataset import load_csv, standardize, standardize_response
from .exceptions import (
    BoundaryMismatch,
    DegenerateFactor,
    EmptyInput,
    NoConvergence,
    NonFinite,
    ParseError,
    RankDeficient,
    SingularDesign,
    SparseFactorError,
)

EXIT_CONFIG, EXIT_IO, EXIT_FIT = 2, 3, 4

DEFAULT_METHODS = "sfm,lasso,enet,spca"

PRESETS = {
    "fig1-low": dict(design="single_latent", n=100, p=200, k=1, nonnull=20,
                     snr_x=0.7, snr_y=0.7, w=0.2, replicates=100),
    "fig1-high": dict(design="single_latent", n=100, p=200, k=1, nonnull=20,
                      snr_x=2.0, snr_y=2.0, w=0.2, replicates=100),
    "fig2": dict(design="single_indep", n=100, p=100, k=1, nonnull=10,
                 snr_x=5.0, snr_y=5.0, w=0.2, replicates=100),
    "fig3-low": dict(design="multi_latent", n=100, p=100, k=3, nonnull=10,
                     snr_x=0.7, snr_y=0.7, w=1.0, replicates=50),
    "fig3-high": dict(design="multi_latent", n=100, p=100, k=3, nonnull=10,
                      snr_x=2.0, snr_y=2.0, w=1.0, replicates=50),
    # appendix-literal variants: 200 features with 20 non-null per assay
    "fig3-low-literal": dict(design="multi_latent", n=100, p=200, k=3, nonnull=20,
                             snr_x=0.7, snr_y=0.7, w=1.0, replicates=50),
    "fig3-high-literal": dict(design="multi_latent", n=100, p=200, k=3, nonnull=20,
                              snr_x=2.0, snr_y=2.0, w=1.0, replicates=50),
    "fig4": dict(design="multi_indep", n=100, p=100, k=3, nonnull=10,
                 snr_x=5.0, snr_y=5.0, w=1.0, replicates=50),
}


class ConfigError(Exception):
    pass


def _build_parser():
    parser = argparse.ArgumentParser(prog="sfm", description=__doc__)
    parser.add_argument("--version", action="version", version=f"sfm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file; flags override it")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0)

    sim = sub.add_parser("simulate", parents=[common],
                         help="generate a simulated dataset with truth sidecar")
    sim.add_argument("--design", choices=simgen.DESIGNS, default="single_latent")
    sim.add_argument("--n", type=int, default=100)
    sim.add_argument("--p", type=int, default=200, help="features per assay")
    sim.add_argument("--k", type=int, default=1, help="number of assays")
    sim.add_argument("--nonnull", type=int, default=20, help="non-null per assay")
    sim.add_argument("--snr-x", type=float, default=2.0)
    sim.add_argument("--snr-y", type=float, default=2.0)
    sim.add_argument("--test-n", type=int, default=1000)
    sim.add_argument("--include-factors", action="store_true",
                     help="include the true factor matrix in truth.json")

    fit = sub.add_parser("fit", parents=[common],
                         help="fit the factor model to a CSV dataset")
    fit.add_argument("--data", required=True, help="training CSV")
    fit.add_argument("--response", default="y",
                     help="response column name (or index with --no-header)")
    fit.add_argument("--boundaries", default=None,
                     help="comma-separated per-assay feature counts; "
                          "default: all features form one assay")
    fit.add_argument("--no-header", action="store_true")
    fit.add_argument("--w", type=float, default=None,
                     help="reconstruction weight; default 0.2 single / 1.0 multi")
    fit.add_argument("--c", type=float, default=None,
                     help="L1 bound; omitted -> 5-fold CV")
    fit.add_argument("--rank", type=int, default=1)

    ben = sub.add_parser("benchmark", parents=[common],
                         help="run the method comparison on simulated data")
    ben.add_argument("--preset", choices=sorted(PRESETS),
                     help="named benchmark presets; explicit flags override preset fields")
    ben.add_argument("--design", choices=simgen.DESIGNS)
    ben.add_argument("--n", type=int)
    ben.add_argument("--p", type=int)
    ben.add_argument("--k", type=int)
    ben.add_argument("--nonnull", type=int)
    ben.add_argument("--snr-x", type=float)
    ben.add_argument("--snr-y", type=float)
    ben.add_argument("--test-n", type=int, default=1000)
    ben.add_argument("--w", type=float, help="SFM reconstruction weight")
    ben.add_argument("--methods", default=DEFAULT_METHODS)
    ben.add_argument("--replicates", type=int)
    ben.add_argument("--figures", action="store_true", help="emit SVG figures")
    ben.add_argument("--threads", type=int, default=1)
    ben.add_argument("--timings", action="store_true",
                     help="record wall-clock seconds (breaks byte-determinism)")
    return parser


def _apply_config(parser, argv):
    """Two-pass parse: config file fills defaults, flags override."""
    pre, _ = parser.parse_known_args(argv)
    config = getattr(pre, "config", None)
    if config:
        if not os.path.exists(config):
            raise ConfigError(f"config file not found: {config}")
        cp = configparser.ConfigParser()
        cp.read(config)
        section = pre.command
        if cp.has_section(section):
            sub_actions = None
            for action in parser._subparsers._group_actions:
                sub_actions = action.choices[section]
            known = {a.dest for a in sub_actions._actions}
            overrides = {}
            for key, value in cp.items(section):
                dest = key.replace("-", "_")
                if dest not in known:
                    raise ConfigError(f"unknown config key {key!r} in [{section}]")
                overrides[dest] = value
            sub_actions.set_defaults(**_coerce(sub_actions, overrides))
    return parser.parse_args(argv)


def _coerce(subparser, overrides):
    out = {}
    for action in subparser._actions:
        if action.dest in overrides:
            raw = overrides[action.dest]
            if isinstance(action.const, bool) or isinstance(action.default, bool):
                out[action.dest] = raw.strip().lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                out[action.dest] = action.type(raw)
            else:
                out[action.dest] = raw
    return out


def _write_dataset_csv(path, dataset):
    K = len(dataset.assays)
    header = ["y"] + [f"a{k + 1}_f{j + 1}"
                      for k in range(K)
                      for j in range(dataset.assays[k].shape[1])]
    X = np.hstack(dataset.assays)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(X.shape[0]):
            row = [f"{dataset.y[i]:.17g}"] + [f"{v:.17g}" for v in X[i]]
            fh.write(",".join(row) + "\n")


def cmd_simulate(args):
    spec = simgen.SimSpec(design=args.design, n=args.n, p=args.p, K=args.k,
                          n_nonnull=args.nonnull, snr_x=args.snr_x,
                          snr_y=args.snr_y, seed=args.seed, test_n=args.test_n)
    train, test, truth = simgen.generate(spec)
    if not os.path.isdir(args.out):
        raise OSError(f"output directory does not exist: {args.out}")
    _write_dataset_csv(os.path.join(args.out, "train.csv"), train)
    _write_dataset_csv(os.path.join(args.out, "test.csv"), test)
    simgen.write_truth(truth, os.path.join(args.out, "truth.json"),
                       include_factors=args.include_factors)
    print(f"simulate: wrote train.csv ({spec.n} rows), test.csv "
          f"({spec.test_n} rows), truth.json to {args.out}")
    return 0


def cmd_fit(args):
    boundaries = None
    if args.boundaries:
        boundaries = [int(b) for b in args.boundaries.split(",")]
        if any(b < 1 for b in boundaries):
            raise ConfigError("boundaries must be positive integers")
    response = args.response
    if args.no_header:
        try:
            response = int(response)
        except ValueError:
            raise ConfigError("--no-header requires a numeric response index") from None
    probe_set, probe_y = load_csv(args.data, not args.no_header, response,
                                  boundaries or [_count_features(args.data,
                                                                 not args.no_header,
                                                                 response)])
    blocks = [a.values for a in probe_set.assays]
    y_raw = probe_y.values
    K = len(blocks)
    if args.c is not None and args.c <= 0:
        raise ConfigError("c must be positive")
    os.makedirs(args.out, exist_ok=True)

    if K == 1:
        w = 0.2 if args.w is None else args.w
        c = args.c
        if c is None:
            c, _, _ = single.select_c(blocks[0], y_raw, w, args.seed,
                                      rank=args.rank)
        std = standardize(blocks[0])
        y_std = standardize_response(y_raw)
        cfg = single.SfmConfig(w=w, c=float(c), rank=args.rank, seed=args.seed)
        if args.rank == 1:
            fr = single.fit(std.values, y_std.values, cfg)
            model = {
                "mode": "single",
                "loadings": fr.alpha.tolist(),
                "sparse_weights": fr.v.values.tolist(),
                "beta": fr.beta,
            }
            preds = single.predict(fr, blocks[0], std.col_means, std.col_scales,
                                   y_std.mean, y_std.scale)
        else:
            fr = single.fit_rank_r(std.values, y_std.values, cfg)
            model = {
                "mode": "single_rank_r",
                "loadings": fr.A.tolist(),
                "sparse_weights": fr.V.tolist(),
                "beta": fr.beta.tolist(),
            }
            preds = single.predict(fr, blocks[0], std.col_means, std.col_scales,
                                   y_std.mean, y_std.scale)
        model["config"] = {"w": w, "c": float(c), "rank": args.rank,
                           "seed": args.seed}
    else:
        w = 1.0 if args.w is None else args.w
        w_vec = (float(w),) * K
        if args.c is None:
            c_vec, _, _ = multi.select_c_multi(blocks, y_raw, w_vec, args.seed)
        else:
            c_vec = (float(args.c),) * (K + 1)
        std = [standardize(b) for b in blocks]
        y_std = standardize_response(y_raw)
        cfg = multi.MultiSfmConfig(w=w_vec, c=tuple(c_vec), seed=args.seed)
        fr = multi.fit_multi([s.values for s in std], y_std.values, cfg)
        model = {
            "mode": "multi",
            "loadings": [a.tolist() for a in fr.alpha],
            "common_loadings": [g.tolist() for g in fr.gamma],
            "sparse_weights": [v.values.tolist() for v in fr.v],
            "beta": fr.beta.tolist(),
            "config": {"w": list(w_vec), "c": [float(x) for x in c_vec],
                       "seed": args.seed},
        }
        preds = multi.predict_multi(fr, blocks,
                                    [(s.col_means, s.col_scales) for s in std],
                                    y_std.mean, y_std.scale)
    model["objective_trace"] = [float(x) for x in fr.objective_trace]
    model["converged"] = bool(fr.converged)
    with open(os.path.join(args.out, "model.json"), "w", encoding="utf-8") as fh:
        json.dump(model, fh, indent=1)
        fh.write("\n")
    with open(os.path.join(args.out, "predictions.csv"), "w", encoding="utf-8") as fh:
        fh.write("prediction\n")
        for v in np.atleast_1d(preds):
            fh.write(f"{v:.17g}\n")
    print(f"fit: converged={fr.converged} final_objective="
          f"{fr.objective_trace[-1]:.6g}; wrote model.json, predictions.csv "
          f"to {args.out}")
    return 0


def _count_features(path, has_header, response):
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
    return len(first.split(",")) - 1


def cmd_benchmark(args):
    settings = dict(PRESETS[args.preset]) if args.preset else {}
    for key in ("design", "n", "p", "k", "nonnull", "snr_x", "snr_y",
                "w", "replicates"):
        val = getattr(args, key)
        if val is not None:
            settings[key] = val
    missing = [k for k in ("design", "n", "p") if k not in settings]
    if missing:
        raise ConfigError(f"missing benchmark settings: {missing} "
                          "(use --preset or explicit flags)")
    settings.setdefault("k", 1)
    settings.setdefault("nonnull", 10)
    settings.setdefault("snr_x", 2.0)
    settings.setdefault("snr_y", 2.0)
    settings.setdefault("replicates", 20)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    for m in methods:
        if m not in bench.VALID_METHODS:
            raise ConfigError(f"unknown method {m!r}; valid: "
                              f"{', '.join(bench.VALID_METHODS)}")
    spec = simgen.SimSpec(design=settings["design"], n=settings["n"],
                          p=settings["p"], K=settings["k"],
                          n_nonnull=settings["nonnull"],
                          snr_x=settings["snr_x"], snr_y=settings["snr_y"],
                          seed=args.seed, test_n=args.test_n)
    report = bench.run_experiment(spec, methods, settings["replicates"],
                                  args.seed, threads=args.threads,
                                  sfm_w=settings.get("w"))
    os.makedirs(args.out, exist_ok=True)
    bench.emit_report(report, args.out, figures=args.figures,
                      include_timings=args.timings)
    medians = ", ".join(f"{s['method']}={s['median']:.3f}" for s in report.summary)
    print(f"benchmark: {settings['replicates']} replicates of {spec.design}; "
          f"median normalized MSE: {medians}; "
          f"{len(report.failures)} failures; wrote {args.out}/results.csv")
    return 0


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = _build_parser()
    try:
        args = _apply_config(parser, argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "fit":
            return cmd_fit(args)
        if args.command == "benchmark":
            return cmd_benchmark(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ParseError, BoundaryMismatch, EmptyInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DegenerateFactor, SingularDesign, NoConvergence, RankDeficient,
            NonFinite) as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except SparseFactorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())
