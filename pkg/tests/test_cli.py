import json
import os

import numpy as np
import pytest

from sparsefactor.cli import EXIT_CONFIG, EXIT_FIT, EXIT_IO, main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def simulate(out_dir, capsys, **kw):
    argv = ["simulate", "--out", str(out_dir), "--n", "60", "--p", "20",
            "--nonnull", "5", "--test-n", "30", "--seed", "3"]
    for k, v in kw.items():
        argv += [f"--{k.replace('_', '-')}", str(v)]
    code, out, err = run(argv, capsys)
    assert code == 0, err
    return out


class TestSimulate:
    def test_writes_three_files(self, tmp_path, capsys):
        out = simulate(tmp_path, capsys)
        assert "train.csv" in out
        for name in ("train.csv", "test.csv", "truth.json"):
            assert (tmp_path / name).exists()
        lines = (tmp_path / "train.csv").read_text().splitlines()
        assert len(lines) == 61  # header + n rows
        assert lines[0].split(",")[0] == "y"
        assert len(lines[0].split(",")) == 21
        truth = json.loads((tmp_path / "truth.json").read_text())
        assert len(truth["nonnull_sets"][0]) == 5

    def test_multi_assay_columns(self, tmp_path, capsys):
        simulate(tmp_path, capsys, design="multi_latent", k="3")
        header = (tmp_path / "train.csv").read_text().splitlines()[0]
        cols = header.split(",")
        assert len(cols) == 1 + 3 * 20
        assert cols[1] == "a1_f1" and cols[21] == "a2_f1"

    def test_missing_out_dir(self, tmp_path, capsys):
        code, _, err = run(["simulate", "--out", str(tmp_path / "nope")], capsys)
        assert code == EXIT_IO
        assert "error" in err

    def test_negative_snr(self, tmp_path, capsys):
        code, _, err = run(["simulate", "--out", str(tmp_path),
                            "--snr-x", "-1"], capsys)
        assert code == EXIT_CONFIG

    def test_deterministic_for_seed(self, tmp_path, capsys):
        simulate(tmp_path / "a", capsys) if (tmp_path / "a").mkdir() is None else None
        (tmp_path / "b").mkdir()
        simulate(tmp_path / "b", capsys)
        assert (tmp_path / "a" / "train.csv").read_bytes() == \
            (tmp_path / "b" / "train.csv").read_bytes()


class TestFit:
    def test_single_fit_and_predict(self, tmp_path, capsys):
        simulate(tmp_path, capsys)
        code, out, err = run(["fit", "--data", str(tmp_path / "train.csv"),
                              "--out", str(tmp_path), "--c", "1.0"], capsys)
        assert code == 0, err
        assert "converged=True" in out
        model = json.loads((tmp_path / "model.json").read_text())
        assert model["mode"] == "single"
        assert len(model["sparse_weights"]) == 20
        assert np.abs(model["sparse_weights"]).sum() <= 1.0 + 1e-6
        trace = model["objective_trace"]
        assert all(a >= b - 1e-8 * abs(a) for a, b in zip(trace, trace[1:]))
        preds = (tmp_path / "predictions.csv").read_text().splitlines()
        assert preds[0] == "prediction"
        assert len(preds) == 61
        # in-sample predictions should beat the mean predictor easily
        y = np.loadtxt(tmp_path / "train.csv", delimiter=",", skiprows=1,
                       usecols=0)
        yhat = np.array([float(v) for v in preds[1:]])
        assert np.mean((y - yhat) ** 2) < np.var(y)

    def test_multi_fit(self, tmp_path, capsys):
        simulate(tmp_path, capsys, design="multi_latent", k="2")
        code, out, err = run(["fit", "--data", str(tmp_path / "train.csv"),
                              "--boundaries", "20,20",
                              "--out", str(tmp_path), "--c", "1.0"], capsys)
        assert code == 0, err
        model = json.loads((tmp_path / "model.json").read_text())
        assert model["mode"] == "multi"
        assert len(model["sparse_weights"]) == 3  # per-assay + common

    def test_malformed_csv(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("y,x1,x2\n1.0,2.0,3.0\n1.0,oops,3.0\n")
        code, _, err = run(["fit", "--data", str(bad),
                            "--out", str(tmp_path)], capsys)
        assert code == EXIT_IO

    def test_missing_data_file(self, tmp_path, capsys):
        code, _, _ = run(["fit", "--data", str(tmp_path / "none.csv"),
                          "--out", str(tmp_path)], capsys)
        assert code == EXIT_IO

    def test_nonpositive_c(self, tmp_path, capsys):
        simulate(tmp_path, capsys)
        code, _, err = run(["fit", "--data", str(tmp_path / "train.csv"),
                            "--out", str(tmp_path), "--c", "-2"], capsys)
        assert code == EXIT_CONFIG

    def test_no_header_requires_index(self, tmp_path, capsys):
        simulate(tmp_path, capsys)
        code, _, _ = run(["fit", "--data", str(tmp_path / "train.csv"),
                          "--no-header", "--response", "y",
                          "--out", str(tmp_path)], capsys)
        assert code == EXIT_CONFIG

    def test_bad_boundaries(self, tmp_path, capsys):
        simulate(tmp_path, capsys)
        code, _, _ = run(["fit", "--data", str(tmp_path / "train.csv"),
                          "--boundaries", "5,5", "--c", "1.0",
                          "--out", str(tmp_path)], capsys)
        assert code == EXIT_IO


class TestBenchmark:
    ARGS = ["benchmark", "--design", "single_indep", "--n", "40", "--p", "15",
            "--nonnull", "4", "--snr-x", "5", "--snr-y", "5",
            "--replicates", "2", "--test-n", "50", "--seed", "11"]

    def test_explicit_flags(self, tmp_path, capsys):
        code, out, err = run(self.ARGS + ["--methods", "lasso,oracle",
                                          "--out", str(tmp_path)], capsys)
        assert code == 0, err
        assert "2 replicates" in out
        assert (tmp_path / "results.csv").exists()
        assert (tmp_path / "summary.csv").exists()

    def test_preset_with_override(self, tmp_path, capsys):
        code, out, err = run(["benchmark", "--preset", "fig2", "--n", "40",
                              "--p", "15", "--nonnull", "4",
                              "--replicates", "1", "--test-n", "50",
                              "--methods", "lasso",
                              "--out", str(tmp_path)], capsys)
        assert code == 0, err
        assert (tmp_path / "results.csv").exists()

    def test_unknown_method_lists_valid(self, tmp_path, capsys):
        code, _, err = run(self.ARGS + ["--methods", "magic",
                                        "--out", str(tmp_path)], capsys)
        assert code == EXIT_CONFIG
        assert "lasso" in err and "sfm" in err

    def test_missing_settings(self, tmp_path, capsys):
        code, _, err = run(["benchmark", "--out", str(tmp_path)], capsys)
        assert code == EXIT_CONFIG
        assert "design" in err

    def test_thread_count_does_not_change_bytes(self, tmp_path, capsys):
        for name, threads in (("t1", "1"), ("t8", "8")):
            code, _, err = run(self.ARGS + ["--methods", "lasso,enet",
                                            "--threads", threads,
                                            "--out", str(tmp_path / name)],
                               capsys)
            assert code == 0, err
        assert (tmp_path / "t1" / "results.csv").read_bytes() == \
            (tmp_path / "t8" / "results.csv").read_bytes()

    def test_figures_flag(self, tmp_path, capsys):
        code, _, err = run(self.ARGS + ["--methods", "lasso", "--figures",
                                        "--out", str(tmp_path)], capsys)
        assert code == 0, err
        svgs = [p for p in os.listdir(tmp_path) if p.endswith(".svg")]
        assert svgs


class TestConfigFile:
    def test_config_fills_defaults_flags_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[simulate]\nn = 50\np = 10\nnonnull = 3\n"
                       "test-n = 20\nseed = 9\n")
        code, _, err = run(["simulate", "--config", str(cfg), "--n", "30",
                            "--out", str(tmp_path)], capsys)
        assert code == 0, err
        lines = (tmp_path / "train.csv").read_text().splitlines()
        assert len(lines) == 31  # flag --n 30 wins over config n=50
        assert len(lines[0].split(",")) == 11  # config p=10 applies

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[simulate]\nbogus = 1\n")
        code, _, err = run(["simulate", "--config", str(cfg),
                            "--out", str(tmp_path)], capsys)
        assert code == EXIT_CONFIG
        assert "bogus" in err

    def test_missing_config_file(self, tmp_path, capsys):
        code, _, err = run(["simulate", "--config", str(tmp_path / "x.ini"),
                            "--out", str(tmp_path)], capsys)
        assert code == EXIT_CONFIG


class TestVersion:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert capsys.readouterr().out.startswith("sfm ")
