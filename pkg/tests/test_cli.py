import json
from pathlib import Path

import pytest

from neuroval.cli import main

SMALL_MODEL = {"d_x": 8, "d_l": 5, "d_r": 8, "m": 0.05, "snr_task": 1.0, "seed": 3}


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg, indent=1))
    return str(path)


def validate_cfg(out_dir, trials=25, replicates=3):
    return {
        "experiment": "validate_empirical",
        "model": SMALL_MODEL,
        "axes": {"n_T": [30, 60], "n_B": 80},
        "mc": {"trials": trials, "replicates": replicates, "seed": 11},
        "output": str(out_dir),
    }


class TestDescribe:
    def test_plan_without_computation(self, tmp_path, capsys):
        cfg = validate_cfg(tmp_path / "out")
        assert main(["describe", write_config(tmp_path, cfg)]) == 0
        out = capsys.readouterr().out
        assert "validate_empirical" in out
        assert "2 n_T values" in out

    def test_regime_warnings(self, tmp_path, capsys):
        cfg = validate_cfg(tmp_path / "out")
        cfg["axes"]["n_T"] = [6, 60]
        main(["describe", write_config(tmp_path, cfg)])
        assert "out of regime" in capsys.readouterr().out

    def test_zero_points_warning(self, tmp_path, capsys):
        cfg = {
            "experiment": "savings_sweep",
            "model": SMALL_MODEL,
            "axes": {"n_T": [50]},
            "output": str(tmp_path / "out"),
        }
        main(["describe", write_config(tmp_path, cfg)])
        out = capsys.readouterr().out
        assert "warning" in out

    def test_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["describe", str(bad)]) == 2
        assert "config error" in capsys.readouterr().err


class TestRun:
    def test_validate_empirical_artifacts(self, tmp_path):
        out = tmp_path / "out"
        cfg = validate_cfg(out)
        assert main(["run", write_config(tmp_path, cfg), "--threads", "1"]) == 0
        csv_text = (out / "validate.csv").read_text()
        assert csv_text.startswith("n_T,policy,lambda,mean,ci_low,ci_high,theory")
        assert len(csv_text.strip().splitlines()) == 1 + 2 * 2
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config_hash"]
        assert manifest["seed"] == 11
        assert "numpy" in manifest["versions"]
        assert (out / "validate.png").exists()
        assert not (out / "errors.csv").exists()

    def test_rerun_is_byte_identical(self, tmp_path):
        out = tmp_path / "out"
        path = write_config(tmp_path, validate_cfg(out))
        assert main(["run", path, "--threads", "1"]) == 0
        first = (out / "validate.csv").read_bytes()
        assert main(["run", path, "--threads", "2"]) == 0
        assert (out / "validate.csv").read_bytes() == first

    def test_out_of_regime_points_reported_not_fatal(self, tmp_path):
        out = tmp_path / "out"
        cfg = validate_cfg(out)
        cfg["axes"]["n_T"] = [6, 60]
        assert main(["run", write_config(tmp_path, cfg), "--threads", "1"]) == 0
        errors = (out / "errors.csv").read_text().strip().splitlines()
        assert len(errors) == 1 + 2  # header + two policies at n_T=6
        assert "OutOfRegimeError" in errors[1]

    def test_malformed_config_writes_nothing(self, tmp_path):
        out = tmp_path / "out"
        bad = tmp_path / "bad.json"
        bad.write_text('{"experiment": "savings_sweep"')  # truncated
        assert main(["run", str(bad), "--output-dir", str(out)]) == 2
        assert not out.exists()

    def test_unknown_experiment_writes_nothing(self, tmp_path):
        out = tmp_path / "out"
        cfg = {"experiment": "mystery", "model": SMALL_MODEL, "output": str(out)}
        assert main(["run", write_config(tmp_path, cfg)]) == 2
        assert not out.exists()

    def test_seed_override(self, tmp_path):
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        path = write_config(tmp_path, validate_cfg(out1))
        main(["run", path, "--threads", "1"])
        main(["run", path, "--threads", "1", "--output-dir", str(out2), "--seed-override", "99"])
        a = (out1 / "validate.csv").read_text()
        b = (out2 / "validate.csv").read_text()
        assert a != b
        assert json.loads((out2 / "manifest.json").read_text())["seed"] == 99

    def test_no_plots_flag(self, tmp_path):
        out = tmp_path / "out"
        cfg = validate_cfg(out)
        assert main(["run", write_config(tmp_path, cfg), "--threads", "1", "--no-plots"]) == 0
        assert not (out / "validate.png").exists()


class TestOtherExperiments:
    def test_savings_sweep_explicit_model(self, tmp_path):
        out = tmp_path / "out"
        cfg = {
            "experiment": "savings_sweep",
            "model": SMALL_MODEL,
            "axes": {"n_T": [50, 100, 200], "n_B": [100, 1000, 10000], "m": [0.05, 0.3], "n_B_baseline": 10000},
            "output": str(out),
        }
        assert main(["run", write_config(tmp_path, cfg), "--threads", "1"]) == 0
        lines = (out / "savings.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 3 * 3 + 2 * 3
        assert (out / "savings.png").exists()

    def test_savings_sweep_m_panel_needs_baseline(self, tmp_path):
        cfg = {
            "experiment": "savings_sweep",
            "model": SMALL_MODEL,
            "axes": {"n_T": [50], "m": [0.05]},
            "output": str(tmp_path / "out"),
        }
        assert main(["run", write_config(tmp_path, cfg)]) == 2

    def test_robustness_sweep(self, tmp_path):
        out = tmp_path / "out"
        cfg = {
            "experiment": "robustness_sweep",
            "model": SMALL_MODEL,
            "axes": {"tau": [0.1, 0.5, 0.9], "n_T": [100], "n_B": 5000},
            "output": str(out),
        }
        assert main(["run", write_config(tmp_path, cfg), "--threads", "1"]) == 0
        lines = (out / "robustness.csv").read_text().strip().splitlines()
        assert len(lines) == 4
        vals = [float(line.split(",")[3]) for line in lines[1:]]
        assert vals[0] < vals[1] < vals[2]

    def test_budget_sweep(self, tmp_path):
        out = tmp_path / "out"
        cfg = {
            "experiment": "budget_sweep",
            "model": {**SMALL_MODEL, "m": 0.4, "snr_task": 0.2},
            "axes": {"budget": [500.0, 5000.0], "cost_ratio": [1.0, 30.0]},
            "cost_task": 1.0,
            "output": str(out),
        }
        assert main(["run", write_config(tmp_path, cfg), "--threads", "1"]) == 0
        lines = (out / "budget.csv").read_text().strip().splitlines()
        assert len(lines) == 5
        assert (out / "budget.png").exists()

    def test_lambda_curve(self, tmp_path):
        out = tmp_path / "out"
        cfg = {
            "experiment": "lambda_curve",
            "model": SMALL_MODEL,
            "axes": {"n_T": [60], "lambda": {"min": 0.1, "max": 4.0, "points": 5}, "n_B": 100},
            "mc": {"trials": 20, "replicates": 2, "seed": 4},
            "output": str(out),
        }
        assert main(["run", write_config(tmp_path, cfg), "--threads", "1"]) == 0
        lines = (out / "lambda_curve.csv").read_text().strip().splitlines()
        assert len(lines) == 6
        best = (out / "lambda_best.csv").read_text().strip().splitlines()
        assert len(best) == 2
