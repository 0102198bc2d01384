import json

import pytest

from atfe.cli import main


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSchedule:
    def test_s1_row_rounds_to_five(self, capsys):
        code, out, _ = run_cli(["schedule", "--confidence", "0.99"], capsys)
        assert code == 0
        assert "S1_analytic_rounded = 5" in out

    def test_table_contains_nu_min(self, capsys):
        code, out, _ = run_cli(["schedule", "--confidence", "0.999", "--max-strategy", "3"], capsys)
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "i,nu_min,t_product,t_ghz"
        assert lines[1].startswith("1,14,")


class TestBounds:
    def test_reference_value_printed(self, capsys):
        code, out, _ = run_cli(
            ["bounds", "--kind", "qcrb_max_ramsey", "--nu", "1", "--n", "1", "--delta-omega", "1"],
            capsys,
        )
        assert code == 0
        assert out.splitlines()[0] == "0.405285"

    def test_missing_parameter_is_usage_error(self, capsys):
        code, _, err = run_cli(["bounds", "--kind", "qcrb_max_ramsey", "--nu", "1"], capsys)
        assert code == 2
        assert "n" in err

    def test_domain_error_exit_code(self, capsys):
        code, _, err = run_cli(
            ["bounds", "--kind", "atfe_ideal_bound", "--nu", "1", "--confidence", "0.99", "--s", "30"],
            capsys,
        )
        assert code == 3
        assert "error:" in err

    def test_sweep_writes_csv(self, tmp_path, capsys):
        code, out, _ = run_cli(
            [
                "bounds", "--kind", "qcrb_max_ramsey", "--n", "1", "--delta-omega", "1",
                "--sweep", "nu", "1", "10", "10", "--output-dir", str(tmp_path),
            ],
            capsys,
        )
        assert code == 0
        path = tmp_path / "bounds_qcrb_max_ramsey.csv"
        assert path.exists()
        lines = path.read_text().splitlines()
        assert lines[0] == "nu,value"
        assert len(lines) == 11


class TestSimulate:
    def test_missing_nu_total_is_usage_error(self, capsys):
        code, _, err = run_cli(["simulate"], capsys)
        assert code == 2
        assert "nu_total required" in err

    def test_end_to_end_with_config_file(self, tmp_path, capsys):
        config = {
            "nu_total": 15,
            "nu_initial": 8,
            "confidence_level": 0.99,
            "checkpoints": [8, 15],
            "trials_per_batch": 12,
            "batches": 2,
            "grid_points": 512,
            "seed": 3,
            "tag": "demo",
        }
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(config))
        code, out, _ = run_cli(
            ["simulate", "--config", str(config_path), "--output-dir", str(tmp_path)],
            capsys,
        )
        assert code == 0
        csv_path = tmp_path / "simulate_demo.csv"
        sidecar_path = tmp_path / "simulate_demo.json"
        assert csv_path.exists() and sidecar_path.exists()
        # round trip: the sidecar echo rebuilds the identical effective plan
        from atfe import plan_from_dict

        echo = json.loads(sidecar_path.read_text())["plans"]["demo"]
        rebuilt = plan_from_dict(echo)
        direct = plan_from_dict({k: v for k, v in config.items() if k != "tag"})
        assert rebuilt == direct

    def test_set_overrides_win(self, tmp_path, capsys):
        config_path = tmp_path / "c.json"
        config_path.write_text(json.dumps({"nu_total": 15, "trials_per_batch": 5}))
        code, _, _ = run_cli(
            [
                "simulate", "--config", str(config_path),
                "--set", "nu_total=12", "--set", "checkpoints=[12]",
                "--set", "trials_per_batch=6", "--set", "batches=1",
                "--set", "nu_initial=6", "--set", "grid_points=512",
                "--output-dir", str(tmp_path),
            ],
            capsys,
        )
        assert code == 0
        sidecar = json.loads((tmp_path / "simulate_run.json").read_text())
        assert sidecar["plans"]["run"]["nu_total"] == 12
        assert sidecar["plans"]["run"]["trials_per_batch"] == 6

    def test_invalid_checkpoints_is_usage_error(self, tmp_path, capsys):
        code, _, err = run_cli(
            [
                "simulate", "--set", "nu_total=10", "--set", "nu_initial=5",
                "--set", "checkpoints=[99]", "--output-dir", str(tmp_path),
            ],
            capsys,
        )
        assert code == 2
        assert "checkpoints" in err

    def test_env_var_output_dir(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("ATFE_OUTPUT_DIR", str(tmp_path))
        code, _, _ = run_cli(
            [
                "simulate", "--set", "nu_total=8", "--set", "nu_initial=4",
                "--set", "trials_per_batch=5", "--set", "batches=1",
                "--set", "grid_points=512",
            ],
            capsys,
        )
        assert code == 0
        assert (tmp_path / "simulate_run.csv").exists()


class TestArgumentErrors:
    def test_unknown_flag_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--bogus"])
        assert exc.value.code == 2

    def test_unknown_subcommand_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_unknown_figure_choice_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["reproduce", "fig7"])
        assert exc.value.code == 2


class TestReproduceCli:
    def test_fig2_cli(self, tmp_path, capsys):
        code, out, _ = run_cli(
            ["reproduce", "fig2_likelihood", "--output-dir", str(tmp_path), "--seed", "4"],
            capsys,
        )
        assert code == 0
        assert (tmp_path / "reproduce_fig2_likelihood.csv").exists()
