"""Tests for the command-line front-end and its exit codes."""

import os

import pytest

from src.hvac_maac.cli import build_parser, error_category, load_config, main
from src.hvac_maac.config import Config, ConfigError
from src.hvac_maac.networks import CheckpointError
from src.hvac_maac.traces import TraceError


class TestParser:
    """Argument handling."""

    def test_config_is_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["train"])

    def test_checkpoint_only_for_eval_and_compare(self):
        args = build_parser().parse_args(["eval", "--config", "a.cfg", "--checkpoint", "c.bin"])
        assert args.checkpoint == "c.bin"
        with pytest.raises(SystemExit):
            build_parser().parse_args(["train", "--config", "a.cfg", "--checkpoint", "c.bin"])

    def test_seed_overrides(self, experiment_config_file):
        path = experiment_config_file()
        args = build_parser().parse_args(["train", "--config", path, "--seed", "1,2", "--seed", "5"])
        assert load_config(args).seeds == [1, 2, 5]

    def test_out_override(self, experiment_config_file, tmp_path):
        path = experiment_config_file()
        args = build_parser().parse_args(["synth", "--config", path, "--out", str(tmp_path / "elsewhere")])
        assert load_config(args).out_dir == str(tmp_path / "elsewhere")

    def test_error_categories(self):
        assert error_category(ConfigError("x")) == "config"
        assert error_category(TraceError("x")) == "trace"
        assert error_category(CheckpointError("x")) == "checkpoint"
        assert error_category(RuntimeError("x")) == "other"


class TestMain:
    """Exit codes and stderr messages."""

    def test_synth_succeeds(self, experiment_config_file, tmp_path):
        assert main(["synth", "--config", experiment_config_file(), "--quiet"]) == 0
        assert os.path.exists(tmp_path / "out" / "traces" / "price.csv")

    def test_missing_config(self, tmp_path, capsys):
        code = main(["train", "--config", str(tmp_path / "nope.cfg")])
        assert code == Config.EXIT_CODES["config"] == 2
        assert "error [config]" in capsys.readouterr().err

    def test_no_traces(self, tmp_path, capsys):
        path = tmp_path / "empty.cfg"
        path.write_text("experiment.seeds = 0\n")
        assert main(["train", "--config", str(path), "--quiet"]) == 2
        assert "No trace files" in capsys.readouterr().err

    def test_eval_without_checkpoint(self, experiment_config_file, capsys):
        assert main(["eval", "--config", experiment_config_file(), "--quiet"]) == 6
        assert "error [checkpoint]" in capsys.readouterr().err

    def test_bad_trace_file(self, tmp_path, capsys):
        for name in ("p.csv", "w.csv", "o.csv"):
            (tmp_path / name).write_text("slot,value\n0,abc\n")
        path = tmp_path / "files.cfg"
        path.write_text("building.zones = 2\ntraces.price = p.csv\ntraces.weather = w.csv\n"
                        "traces.occupancy = o.csv\n")
        assert main(["synth", "--config", str(path), "--quiet"]) == 3
        assert "error [trace]" in capsys.readouterr().err

    def test_train_then_eval(self, experiment_config_file, tmp_path):
        path = experiment_config_file()
        assert main(["train", "--config", path, "--seed", "0", "--quiet"]) == 0
        assert main(["eval", "--config", path, "--seed", "0", "--quiet"]) == 0
        assert os.path.exists(tmp_path / "out" / "eval" / "seed_0" / "metrics.csv")
