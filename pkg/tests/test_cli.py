import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from specsim.cli import SCHEMAS, ConfigError, ExperimentConfig, main, run_experiment


def run_cli(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "specsim.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


class TestConfig:
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_sources("spectrum", {"bogus": 1}, {})

    def test_cli_overrides_file(self):
        cfg = ExperimentConfig.from_sources("spectrum", {"d": 4}, {"d": 16})
        assert cfg.d == 16

    def test_validation(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(experiment="spectrum", trials=0)
        with pytest.raises(ConfigError):
            ExperimentConfig(experiment="nope")
        with pytest.raises(ConfigError):
            ExperimentConfig(experiment="scan", threshold=0.4)


class TestRunExperiment:
    def test_moments_schema_and_determinism(self, tmp_path):
        out = tmp_path / "m.csv"
        cfg = ExperimentConfig(
            experiment="moments", d=3, k=2, n=100, trials=4, seed=9,
            output_path=str(out),
        )
        summary = run_experiment(cfg)
        assert summary["rows"] == 4
        header, rows = read_csv(out)
        assert header == SCHEMAS["moments"]
        first = out.read_bytes()
        run_experiment(cfg)
        assert out.read_bytes() == first

    def test_thread_count_invariance(self, tmp_path):
        base = dict(experiment="spectrum", d=4, eps=0.4, trials=4, seed=3)
        out1 = tmp_path / "t1.csv"
        out4 = tmp_path / "t4.csv"
        run_experiment(ExperimentConfig(**base, threads=1, output_path=str(out1)))
        run_experiment(ExperimentConfig(**base, threads=4, output_path=str(out4)))
        assert out1.read_bytes() == out4.read_bytes()

    def test_game_row(self, tmp_path):
        out = tmp_path / "g.csv"
        cfg = ExperimentConfig(
            experiment="game", d=6, k=2, n=9, m=2000, seed=1, output_path=str(out)
        )
        run_experiment(cfg)
        header, rows = read_csv(out)
        assert header == SCHEMAS["game"]
        assert len(rows) == 1
        assert 0.5 <= float(rows[0][4]) <= 1.0

    def test_scan_then_fit(self, tmp_path):
        scan_out = tmp_path / "scan.csv"
        cfg = ExperimentConfig(
            experiment="scan", k=2, d_list=(6, 8, 10), m=1500, seed=2,
            output_path=str(scan_out),
        )
        run_experiment(cfg)
        header, rows = read_csv(scan_out)
        assert header == SCHEMAS["scan"]
        assert [int(r[1]) for r in rows] == [6, 8, 10]
        fit_out = tmp_path / "fit.csv"
        run_experiment(
            ExperimentConfig(
                experiment="fit", input_path=str(scan_out), output_path=str(fit_out)
            )
        )
        header, rows = read_csv(fit_out)
        assert header == SCHEMAS["fit"]
        assert len(rows) == 2  # best fit + fixed-exponent reference
        assert float(rows[1][2]) == pytest.approx(1.0)  # forced exponent for k=2

    def test_seventeen_digit_serialization(self, tmp_path):
        out = tmp_path / "m.csv"
        run_experiment(
            ExperimentConfig(
                experiment="moments", d=2, k=2, n=50, trials=1, seed=4,
                output_path=str(out),
            )
        )
        _, rows = read_csv(out)
        val = rows[0][4]
        assert float(val) == float(format(float(val), ".17g"))


class TestCliProcess:
    def test_invalid_config_exit_2(self, tmp_path):
        res = run_cli(["spectrum", "--trials", "0", "--out", str(tmp_path / "x.csv")], tmp_path)
        assert res.returncode == 2
        assert not (tmp_path / "x.csv").exists()

    def test_config_file_and_summary(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        out = tmp_path / "out.csv"
        cfg_path.write_text(json.dumps({"d": 3, "k": 2, "n": 60, "trials": 2, "seed": 5}))
        res = run_cli(
            ["moments", "--config", str(cfg_path), "--out", str(out)], tmp_path
        )
        assert res.returncode == 0, res.stderr
        summary = json.loads(res.stdout.strip().splitlines()[-1])
        assert summary["experiment"] == "moments"
        assert summary["rows"] == 2
        assert os.path.exists(out)

    def test_unknown_config_key_exit_2(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"nonsense": True}))
        res = run_cli(["moments", "--config", str(cfg_path)], tmp_path)
        assert res.returncode == 2

    def test_missing_fit_input_exit_2(self, tmp_path):
        res = run_cli(["fit", "--out", str(tmp_path / "f.csv")], tmp_path)
        assert res.returncode == 2

    def test_threads_env_fallback(self, tmp_path):
        out = tmp_path / "env.csv"
        env = dict(os.environ, THREADS="2")
        res = subprocess.run(
            [
                sys.executable, "-m", "specsim.cli", "spectrum",
                "--d", "4", "--eps", "0.4", "--trials", "2", "--seed", "1",
                "--out", str(out),
            ],
            capture_output=True, text=True, env=env, cwd=tmp_path,
        )
        assert res.returncode == 0, res.stderr
        assert out.exists()
