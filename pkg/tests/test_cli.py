"""CLI subcommands: artifacts, determinism, exit codes, file formats."""

import csv
import json
import os

import numpy as np
import pytest

from softsense.cli import main

TINY = {
    "seed": 3,
    "data": {"kind": "synthetic", "synthetic": {
        "n_samples": 300, "n_features": 12, "n_heads": 2, "latent_rank": 3,
        "imbalance_ratios": [2.0, 5.0], "observation_rate": 0.8,
        "label_noise": 0.0, "feature_noise": 0.01, "seed": 11}},
    "model": {"kind": "sqae+lr", "hidden_dims": [8, 4],
              "nn_hidden_dims": [8, 4]},
    "train": {"max_epochs": 10, "batch_size": 64, "patience": 10},
}


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(TINY))
    return str(path)


def run(*argv):
    return main(list(argv))


class TestTrain:
    def test_artifacts_written(self, tiny_config, tmp_path):
        out = str(tmp_path / "run")
        assert run("train", "--config", tiny_config, "--out", out, "--quiet") == 0
        for name in ("checkpoint.json", "history.csv", "metrics.csv",
                     "metrics.txt", "config.json"):
            assert os.path.exists(os.path.join(out, name)), name
        with open(os.path.join(out, "history.csv")) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["stage", "epoch", "J", "J_x", "J_y",
                           "sigma1_sq", "sigma2_sq"]
        stages = {r[0] for r in rows[1:]}
        assert stages == {"layer1", "layer2", "classifier"}

    def test_rerun_byte_identical_checkpoint(self, tiny_config, tmp_path):
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        assert run("train", "--config", tiny_config, "--out", out1, "--quiet") == 0
        assert run("train", "--config", tiny_config, "--out", out2, "--quiet") == 0
        a = open(os.path.join(out1, "checkpoint.json"), "rb").read()
        b = open(os.path.join(out2, "checkpoint.json"), "rb").read()
        assert a == b

    def test_seed_override_changes_checkpoint(self, tiny_config, tmp_path):
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        run("train", "--config", tiny_config, "--out", out1, "--quiet")
        run("train", "--config", tiny_config, "--out", out2, "--seed", "77",
            "--quiet")
        a = open(os.path.join(out1, "checkpoint.json"), "rb").read()
        b = open(os.path.join(out2, "checkpoint.json"), "rb").read()
        assert a != b

    def test_zero_epochs_empty_history(self, tmp_path):
        cfg = dict(TINY)
        cfg["train"] = {"max_epochs": 0}
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg))
        out = str(tmp_path / "run")
        assert run("train", "--config", str(path), "--out", out, "--quiet") == 0
        with open(os.path.join(out, "history.csv")) as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 1  # header only
        assert os.path.exists(os.path.join(out, "checkpoint.json"))

    def test_config_echo_reproduces_run(self, tiny_config, tmp_path):
        out1 = str(tmp_path / "a")
        run("train", "--config", tiny_config, "--out", out1, "--quiet")
        out2 = str(tmp_path / "b")
        echoed = os.path.join(out1, "config.json")
        run("train", "--config", echoed, "--out", out2, "--quiet")
        a = open(os.path.join(out1, "checkpoint.json"), "rb").read()
        b = open(os.path.join(out2, "checkpoint.json"), "rb").read()
        assert a == b


class TestEvaluate:
    def test_reproduces_training_metrics(self, tiny_config, tmp_path):
        out = str(tmp_path / "run")
        run("train", "--config", tiny_config, "--out", out, "--quiet")
        out2 = str(tmp_path / "eval")
        assert run("evaluate", "--config", tiny_config,
                   "--checkpoint", os.path.join(out, "checkpoint.json"),
                   "--out", out2, "--quiet") == 0
        a = open(os.path.join(out, "metrics.csv")).read()
        b = open(os.path.join(out2, "metrics.csv")).read()
        assert a == b

    def test_width_mismatch_exit_code_2(self, tiny_config, tmp_path, capsys):
        out = str(tmp_path / "run")
        run("train", "--config", tiny_config, "--out", out, "--quiet")
        bad = dict(TINY)
        bad["data"] = json.loads(json.dumps(TINY["data"]))
        bad["data"]["synthetic"]["n_features"] = 9
        bad_path = tmp_path / "bad.json"
        bad_path.write_text(json.dumps(bad))
        code = run("evaluate", "--config", str(bad_path),
                   "--checkpoint", os.path.join(out, "checkpoint.json"),
                   "--out", str(tmp_path / "e"), "--quiet")
        assert code == 2
        err = capsys.readouterr().err
        assert "12" in err  # names the checkpoint's expected width


class TestPredict:
    def test_writes_probabilities_and_labels(self, tiny_config, tmp_path):
        out = str(tmp_path / "run")
        run("train", "--config", tiny_config, "--out", out, "--quiet")
        pout = str(tmp_path / "pred")
        assert run("predict", "--config", tiny_config,
                   "--checkpoint", os.path.join(out, "checkpoint.json"),
                   "--out", pout, "--quiet") == 0
        with open(os.path.join(pout, "predictions.csv")) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["prob_Y1", "prob_Y2", "pred_Y1", "pred_Y2"]
        probs = np.array([[float(v) for v in r[:2]] for r in rows[1:]])
        assert ((probs > 0) & (probs < 1)).all()


class TestParams:
    def test_reference_configuration(self, capsys):
        assert run("params", "--input-dim", "632",
                   "--hidden-dims", "400,200,100,50", "--head-units", "16") == 0
        out = capsys.readouterr().out
        assert "730562" in out
        assert "717682" in out
        assert "1.79%" in out

    def test_minimal_configuration(self, capsys):
        assert run("params", "--input-dim", "2", "--hidden-dims", "2",
                   "--head-units", "2") == 0
        assert "24" in capsys.readouterr().out


class TestGenerate:
    def test_csv_round_trip(self, tiny_config, tmp_path):
        out = str(tmp_path / "gen")
        assert run("generate", "--config", tiny_config, "--out", out,
                   "--quiet") == 0
        from softsense.data import CsvSchema, load_csv
        schema = CsvSchema([f"x{k:03d}" for k in range(12)], ["Y1", "Y2"])
        ds = load_csv(os.path.join(out, "data.csv"), schema)
        assert ds.n_samples == 300

    def test_flattened_form(self, tiny_config, tmp_path):
        out = str(tmp_path / "gen")
        assert run("generate", "--config", tiny_config, "--out", out,
                   "--flatten", "--quiet") == 0
        with open(os.path.join(out, "data.csv")) as fh:
            header = fh.readline().strip().split(",")
        assert header[-1] == "flat"
        assert "is_Y1" in header


class TestExperiment:
    def test_degenerate_grid(self, tmp_path):
        cfg = dict(TINY)
        cfg["experiment"] = {"models": ["lr"],
                             "imbalance_methods": ["weighted_class"],
                             "combiners": ["variance_weighted"], "seeds": [0]}
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg))
        out = str(tmp_path / "exp")
        assert run("experiment", "--config", str(path), "--out", out,
                   "--quiet") == 0
        with open(os.path.join(out, "results_long.csv")) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2  # 1 cell x 1 seed x 2 heads
        assert {r["model"] for r in rows} == {"LR"}
        with open(os.path.join(out, "cells.csv")) as fh:
            cells = list(csv.DictReader(fh))
        assert cells[0]["status"] == "ok"

    def test_parallel_mode_matches_sequential(self, tmp_path):
        from softsense.config import RunConfig
        from softsense.experiments import run_experiment
        cfg = dict(TINY)
        cfg["experiment"] = {"models": ["lr", "qae+lr"],
                             "imbalance_methods": ["weighted_class"],
                             "combiners": ["variance_weighted"],
                             "seeds": [0, 1]}
        config = RunConfig(cfg)
        sequential = run_experiment(config, workers=1)
        parallel = run_experiment(config, workers=2)
        assert sequential.rows == parallel.rows
        assert sequential.run_status == parallel.run_status

    def test_ranking_includes_legend(self, tmp_path):
        cfg = dict(TINY)
        cfg["experiment"] = {"models": ["lr", "qae+lr"],
                             "imbalance_methods": ["weighted_class", "smote"],
                             "combiners": ["variance_weighted"], "seeds": [0]}
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg))
        out = str(tmp_path / "exp")
        assert run("experiment", "--config", str(path), "--out", out,
                   "--quiet") == 0
        text = open(os.path.join(out, "model_ranking.txt")).read()
        for fragment in ("WC: weighted class", "WL: weighted loss",
                         "VWL: variance weighted loss"):
            assert fragment in text
        long_rows = list(csv.DictReader(open(os.path.join(out,
                                                          "results_long.csv"))))
        assert len(long_rows) == 4 * 1 * 2  # cells x seeds x heads


class TestHeadmode:
    def test_emits_both_series_and_summary(self, tmp_path):
        cfg = dict(TINY)
        cfg["headmode"] = {"hidden_dim": 8, "max_epochs": 12,
                           "reference_epoch": 8}
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg))
        out = str(tmp_path / "hm")
        assert run("headmode-compare", "--config", str(path), "--out", out,
                   "--quiet") == 0
        multi = list(csv.DictReader(open(os.path.join(out, "headmode_multi.csv"))))
        cat = list(csv.DictReader(open(os.path.join(out,
                                                    "headmode_categorical.csv"))))
        assert len(multi) == 12
        assert len(cat) >= 1
        assert [int(r["epoch"]) for r in multi] == list(range(1, 13))
        summary = json.load(open(os.path.join(out, "headmode_summary.json")))
        assert "updates_multi_head" in summary
        assert "updates_categorical" in summary


class TestExitCodes:
    def test_unknown_config_key(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"optimizer": "sgd"}))
        assert run("train", "--config", str(path), "--out",
                   str(tmp_path / "o"), "--quiet") == 1
        assert "optimizer" in capsys.readouterr().err

    def test_missing_data_file(self, tmp_path, capsys):
        cfg = {"data": {"kind": "csv", "csv": {
            "path": str(tmp_path / "absent.csv"),
            "feature_columns": ["a"], "label_columns": ["Y1"]}}}
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg))
        assert run("train", "--config", str(path), "--out",
                   str(tmp_path / "o"), "--quiet") == 2
        assert "kind=data" in capsys.readouterr().err

    def test_usage_error(self, capsys):
        assert run("evaluate") == 1  # --checkpoint is required
        assert "usage" in capsys.readouterr().err
