import json

import numpy as np
import pytest

from conftest import write_wine_like_csv
from surveyknn.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestBasics:
    def test_help_exits_zero_and_lists_subcommands(self, capsys):
        code, out, _ = run_cli(capsys, "--help")
        assert code == 0
        for name in ("estimate", "diagnose-c4", "diagnose-c9", "study", "bounds"):
            assert name in out

    def test_unknown_subcommand_is_usage_error(self, capsys):
        code, _, _ = run_cli(capsys, "frobnicate")
        assert code == 2

    def test_missing_required_flag_is_usage_error(self, capsys):
        code, _, _ = run_cli(capsys, "bounds")
        assert code == 2


class TestBounds:
    def test_table_contains_volume_and_bias_constant(self, capsys):
        code, out, _ = run_cli(capsys, "bounds", "--d", "2")
        assert code == 0
        assert "3.141593" in out
        assert "29.68" in out

    def test_writes_csv_and_figure(self, capsys, tmp_path):
        out_dir = tmp_path / "bounds-run"
        code, _, _ = run_cli(capsys, "bounds", "--d", "3", "--out", str(out_dir))
        assert code == 0
        assert (out_dir / "bounds.csv").exists()
        assert (out_dir / "rate_curves.png").exists()
        manifest = json.loads((out_dir / "run_manifest.json").read_text())
        assert manifest["command"] == "bounds"
        assert manifest["version"]


class TestEstimate:
    def make_inputs(self, tmp_path):
        sample = tmp_path / "sample.csv"
        sample.write_text("x1,y,pi\n0.0,2.0,0.5\n1.0,4.0,0.25\n5.0,3.0,1.0\n")
        points = tmp_path / "points.csv"
        points.write_text("x1\n0.0\n0.9\n")
        return sample, points

    def test_writes_estimates_and_figure(self, capsys, tmp_path):
        sample, points = self.make_inputs(tmp_path)
        out_dir = tmp_path / "run"
        code, _, _ = run_cli(
            capsys, "estimate", "--sample", str(sample), "--points", str(points),
            "--k", "2", "--out", str(out_dir),
        )
        assert code == 0
        lines = (out_dir / "estimates.csv").read_text().splitlines()
        assert lines[0] == "x1,estimate"
        first = float(lines[1].split(",")[1])
        assert first == pytest.approx(20 / 6)
        assert (out_dir / "estimate.png").exists()
        assert (out_dir / "run_manifest.json").exists()

    def test_bad_k_is_runtime_error(self, capsys, tmp_path):
        sample, points = self.make_inputs(tmp_path)
        code, _, err = run_cli(
            capsys, "estimate", "--sample", str(sample), "--points", str(points),
            "--k", "9", "--out", str(tmp_path / "r"),
        )
        assert code == 1
        assert "k must be" in err


class TestStudyCommands:
    def write_config(self, tmp_path, **fields):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(fields))
        return path

    def test_consistency_reruns_are_byte_identical(self, capsys, tmp_path):
        config = self.write_config(tmp_path, sizes=[50, 100], replicates=3)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            code, _, _ = run_cli(
                capsys, "study", "consistency", "--config", str(config),
                "--seed", "1", "--out", str(out),
            )
            assert code == 0
        bytes_a = (out_a / "consistency_results.csv").read_bytes()
        bytes_b = (out_b / "consistency_results.csv").read_bytes()
        assert bytes_a == bytes_b
        assert (out_a / "consistency_mse.png").exists()
        manifest = json.loads((out_a / "run_manifest.json").read_text())
        assert manifest["config"]["seed"] == 1
        assert manifest["config"]["sizes"] == [50, 100]

    def test_thread_flag_preserves_bytes(self, capsys, tmp_path):
        config = self.write_config(tmp_path, sizes=[50], replicates=4)
        out_a, out_b = tmp_path / "t1", tmp_path / "t4"
        for out, threads in ((out_a, "1"), (out_b, "4")):
            code, _, _ = run_cli(
                capsys, "study", "consistency", "--config", str(config),
                "--seed", "2", "--threads", threads, "--out", str(out),
            )
            assert code == 0
        assert (out_a / "consistency_results.csv").read_bytes() == (
            out_b / "consistency_results.csv"
        ).read_bytes()

    def test_wine_without_dataset_names_expected_file(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "study", "wine", "--data", str(tmp_path / "nowhere.csv"),
            "--out", str(tmp_path / "w"),
        )
        assert code == 1
        assert "nowhere.csv" in err

    def test_wine_runs_on_schema_compatible_data(self, capsys, tmp_path):
        data = tmp_path / "wine.csv"
        write_wine_like_csv(data, rows=60, seed=1)
        config = self.write_config(
            tmp_path, sizes=[20, 40], replicates=2, eval_points=4
        )
        out = tmp_path / "wine-run"
        code, _, _ = run_cli(
            capsys, "study", "wine", "--data", str(data), "--config", str(config),
            "--out", str(out),
        )
        assert code == 0
        assert (out / "wine_results.csv").exists()
        grid_lines = (out / "wine_grid.csv").read_text().splitlines()
        assert len(grid_lines) == 1 + 4
        assert (out / "wine_mse.png").exists()

    def test_diagnose_commands(self, capsys, tmp_path):
        config = self.write_config(tmp_path, sizes=[50, 100], replicates=1)
        out = tmp_path / "c4"
        code, _, _ = run_cli(
            capsys, "diagnose-c4", "--config", str(config), "--out", str(out)
        )
        assert code == 0
        assert (out / "c4_results.csv").exists()
        assert (out / "c4_max_ratio.png").exists()

        config9 = self.write_config(tmp_path, sizes=[10])
        out9 = tmp_path / "c9"
        code, _, _ = run_cli(
            capsys, "diagnose-c9", "--config", str(config9), "--out", str(out9)
        )
        assert code == 0
        assert (out9 / "c9_results.csv").exists()
        assert (out9 / "c9_mean_abs_rij.png").exists()

    def test_flags_override_config_file_values(self, capsys, tmp_path):
        config = self.write_config(
            tmp_path, sizes=[50], replicates=2, seed=99, preset="desk"
        )
        out = tmp_path / "precedence"
        code, _, _ = run_cli(
            capsys, "study", "consistency", "--config", str(config),
            "--seed", "5", "--out", str(out),
        )
        assert code == 0
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["config"]["seed"] == 5

    def test_c9_paper_preset_reports_capacity(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "diagnose-c9", "--preset", "paper", "--out", str(tmp_path / "c9p")
        )
        assert code == 1
        assert "exhaustive enumeration" in err

    def test_bad_config_key_is_runtime_error(self, capsys, tmp_path):
        config = self.write_config(tmp_path, sizzles=[50])
        code, _, err = run_cli(
            capsys, "study", "consistency", "--config", str(config),
            "--out", str(tmp_path / "x"),
        )
        assert code == 1
        assert "unknown config keys" in err

    def test_env_var_sets_default_output_dir(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("SURVEYKNN_OUT", str(tmp_path / "from-env"))
        config = self.write_config(tmp_path, sizes=[50], replicates=1)
        code, _, _ = run_cli(capsys, "diagnose-c4", "--config", str(config))
        assert code == 0
        assert (tmp_path / "from-env" / "c4_results.csv").exists()
