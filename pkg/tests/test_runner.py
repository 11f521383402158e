import json

import numpy as np
import pytest

from bwcast.evaluate import mae, rmse
from bwcast.exceptions import ConfigError, StageError
from bwcast.modelio import load_model
from bwcast.runner import RunConfig, emit_report, parse_config, run_pipeline
from conftest import write_series_csv

SMALL = {"hyper": "manual", "units1": 6, "units2": 4, "nepochs": 3, "repeats": 2}


def test_defaults_follow_parameter_table():
    cfg = parse_config()
    assert (cfg.nfeatures, cfg.nlags, cfg.msteps, cfg.norm, cfg.network, cfg.act, cfg.optimizer) == (
        1, 5, 1, "min-max", "vanilla", "tanh", "adam")
    assert (cfg.split, cfg.valsplit, cfg.hyper, cfg.niter, cfg.repeats) == (0.8, 0.2, "random", 50, 25)
    assert cfg.manual_point().to_dict() == {"units1": 256, "units2": 128, "lr": 0.001, "nepochs": 50, "bs": 8,
                                            "nlayers": 2}


def test_config_values_and_errors(tmp_path):
    assert parse_config(None, {"nlags": "auto"}).nlags == "auto"
    assert parse_config(None, {"nlags": "12", "network": "BD", "hyper": "BOA"}).network == "bidirectional"
    with pytest.raises(ConfigError, match=r"split must be in \(0,1\)"):
        parse_config(None, {"split": 1.5})
    with pytest.raises(ConfigError, match="unknown config key"):
        parse_config(None, {"epochs": 3})
    with pytest.raises(ConfigError, match="nlayers"):
        parse_config(None, {"nlayers": 4})
    with pytest.raises(ConfigError, match="units3"):
        parse_config(None, {"nlayers": 3})
    with pytest.raises(ConfigError, match="integer"):
        parse_config(None, {"msteps": "two"})
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"split": 0.7, "seed": 3}))
    cfg = parse_config(path, {"seed": "9"})
    assert cfg.split == 0.7 and cfg.seed == 9
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="JSON"):
        parse_config(path)


def test_pipeline_outputs(sine_csv, tmp_path):
    cfg = parse_config(None, {**SMALL, "inputs": [str(sine_csv)]})
    res = run_pipeline(cfg, tmp_path / "out")
    assert set(res.files) == {"metrics", "predictions", "model"}
    metrics = json.loads(res.files["metrics"].read_text())
    assert set(metrics["timings_seconds"]) >= {"preprocess", "train", "evaluate", "total"}
    assert metrics["repeats"] == 2 and metrics["aggregation"] == "median-of-2"
    rows = res.files["predictions"].read_text().splitlines()
    n_val = metrics["splits"]["validation"]["forecasts"]
    n_test = metrics["splits"]["test"]["forecasts"]
    assert len(rows) - 1 == n_val + n_test
    assert n_test == 80
    model, norm, config = load_model(res.files["model"])
    assert config["nlags_used"] == 5 and norm is not None
    for split in ("validation", "test"):
        s = metrics["splits"][split]
        assert s["rmse"] >= s["mae"] >= 0


def test_rescoring_predictions(sine_csv, tmp_path):
    cfg = parse_config(None, {**SMALL, "repeats": 3, "inputs": [str(sine_csv)]})
    res = run_pipeline(cfg, tmp_path)
    metrics = json.loads(res.files["metrics"].read_text())
    import csv
    rows = list(csv.DictReader(res.files["predictions"].read_text().splitlines()))
    for split in ("validation", "test"):
        t = np.array([float(r["truth"]) for r in rows if r["split"] == split])
        p = np.array([float(r["prediction"]) for r in rows if r["split"] == split])
        s = metrics["splits"][split]
        assert abs(mae(t, p) - s["selected_repeat_mae"]) < 1e-9
        assert abs(rmse(t, p) - s["selected_repeat_rmse"]) < 1e-9
    t = np.array([float(r["truth"]) for r in rows if r["split"] == "test"])
    p = np.array([float(r["prediction"]) for r in rows if r["split"] == "test"])
    assert abs(mae(t, p) - metrics["splits"]["test"]["mae"]) < 1e-9


def test_determinism(sine_csv, tmp_path):
    cfg = parse_config(None, {**SMALL, "inputs": [str(sine_csv)]})
    a = run_pipeline(cfg, tmp_path / "a")
    b = run_pipeline(cfg, tmp_path / "b")
    for name in ("predictions", "model"):
        assert a.files[name].read_bytes() == b.files[name].read_bytes()
    ma, mb = (json.loads(r.files["metrics"].read_text()) for r in (a, b))
    ma.pop("timings_seconds"), mb.pop("timings_seconds")
    assert ma == mb


def test_random_search_path_writes_trials(sine_csv, tmp_path):
    cfg = parse_config(None, {"inputs": [str(sine_csv)], "hyper": "RS", "niter": 3, "repeats": 1,
                              "units_range": [4, 8], "nepochs_range": [1, 2], "bs_range": [16, 32],
                              "nlayers_range": [1, 2]})
    res = run_pipeline(cfg, tmp_path)
    assert len(res.trials) == 3
    lines = res.files["trials"].read_text().splitlines()
    assert len(lines) == 4
    assert res.point.values == res.trials.best.point.values


def test_bayesian_path(sine_csv, tmp_path):
    cfg = parse_config(None, {"inputs": [str(sine_csv)], "hyper": "bayesian", "niter": 4, "init_points": 2,
                              "repeats": 1, "units_range": [4, 8], "nepochs_range": [1, 2],
                              "bs_range": [16, 32], "nlayers_range": [1, 2]})
    assert len(run_pipeline(cfg, tmp_path).trials) == 4


def test_parallel_inputs_and_options(tmp_path):
    t = np.arange(300)
    paths = [write_series_csv(tmp_path / f"m{j}.csv", [5 + np.sin(2 * np.pi * t / 15 + j), 3 + np.cos(t / 7 + j)])
             for j in range(2)]
    cfg = parse_config(None, {**SMALL, "repeats": 1, "inputs": [str(p) for p in paths], "nfeatures": 2,
                              "msteps": 2, "nlags": "auto", "network": "bidirectional", "norm": "tanh",
                              "walk_forward": "teacher_forced", "normalize_on": "train"})
    res = run_pipeline(cfg, tmp_path / "out")
    assert res.report.config["z"] == 2 and res.report.config["m"] == 2
    assert res.report.config["nlags_used"] == 15
    assert "recommendation" in res.report.config["automal"]
    header = res.files["predictions"].read_text().splitlines()[0]
    assert header.endswith("truth_step2,prediction_step2")


def test_too_short_data_is_stage_error(tmp_path):
    path = write_series_csv(tmp_path / "s.csv", [np.arange(6.0)])
    cfg = parse_config(None, {**SMALL, "inputs": [str(path)]})
    with pytest.raises(StageError, match=r"\[preprocess\]"):
        run_pipeline(cfg, tmp_path / "o")


def test_emit_report_without_trials(sine_csv, tmp_path):
    cfg = parse_config(None, {**SMALL, "repeats": 1, "inputs": [str(sine_csv)]})
    res = run_pipeline(cfg, tmp_path / "x")
    files = emit_report(res.report, None, tmp_path / "y")
    assert sorted(p.name for p in (tmp_path / "y").iterdir()) == ["metrics.json", "predictions.csv"]
    assert set(files) == {"metrics", "predictions"}


def test_output_env(monkeypatch, tmp_path):
    monkeypatch.setenv("BWCAST_OUTPUT_DIR", str(tmp_path / "env"))
    assert RunConfig().output == str(tmp_path / "env")


@pytest.mark.slow
def test_bundled_sine_beats_persistence(tmp_path):
    import bwcast
    cfg = parse_config(None, {"inputs": [str(bwcast.example_csv_path())], "hyper": "manual", "repeats": 3})
    report = run_pipeline(cfg, tmp_path).report
    test = report.splits["test"]
    assert report.metric("test", "mae") < test.baseline_mae
