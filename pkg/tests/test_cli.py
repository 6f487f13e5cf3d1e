"""End-to-end CLI tests: exit codes, output contracts, config precedence."""

import csv
import json

import numpy as np
import pytest

from mfboundary.cli import main

WINDOW_MINUTES = [(9, m) for m in range(10)]  # 10 prices -> 9 returns


def _tiny_panel(tmp_path, days=3):
    rows = ["timestamp,price"]
    for i in range(days):
        rng = np.random.default_rng(60 + i)
        prices = 100.0 * np.exp(np.cumsum(0.001 * rng.standard_normal(10)))
        rows.extend(
            f"2008-06-{2 + i:02d} {h:02d}:{m:02d}:00,{p:.10f}"
            for (h, m), p in zip(WINDOW_MINUTES, prices)
        )
    path = tmp_path / "panel.csv"
    path.write_text("\n".join(rows) + "\n")
    return path


class TestConstants:
    def test_prints_critical_constants(self, capsys):
        assert main(["constants", "--sigma", "3"]) == 0
        out = capsys.readouterr().out
        assert "K = 0.939985602987" in out
        assert "Gamma_ss = 5.0625" in out
        assert "correlation = 0.866025403784" in out
        assert "I_eff = 3.796875" in out
        assert "Gamma_aa" not in out

    def test_alpha_block(self, capsys):
        assert main(["constants", "--sigma", "1", "--alpha", "2"]) == 0
        out = capsys.readouterr().out
        assert "Gamma_aa = 0.25" in out

    def test_invalid_sigma_is_runtime_error(self, capsys):
        assert main(["constants", "--sigma", "-1"]) == 2
        assert "error:" in capsys.readouterr().err


class TestSimulateScoreTest:
    def test_simulate_writes_long_format(self, tmp_path, capsys):
        out_csv = tmp_path / "paths.csv"
        code = main(
            [
                "simulate", "--model", "mfbm", "--n", "16", "--delta", "0.05",
                "--sigma", "1", "--reps", "2", "--seed", "7",
                "--output", str(out_csv),
            ]
        )
        assert code == 0
        with open(out_csv, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["rep", "index", "value"]
        assert len(rows) == 1 + 32
        assert {r[0] for r in rows[1:]} == {"0", "1"}
        float(rows[1][2])  # values parse

    def test_simulate_stdout_and_determinism(self, capsys):
        assert main(["simulate", "--n", "4", "--delta", "0.1", "--seed", "9"]) == 0
        first = capsys.readouterr().out
        assert first.startswith("rep,index,value\n")
        assert main(["simulate", "--n", "4", "--delta", "0.1", "--seed", "9"]) == 0
        assert capsys.readouterr().out == first

    def test_score_and_test_round_trip(self, tmp_path, capsys):
        out_csv = tmp_path / "paths.csv"
        main(
            [
                "simulate", "--n", "32", "--delta", "0.05", "--sigma", "2",
                "--reps", "2", "--seed", "21", "--output", str(out_csv),
            ]
        )
        capsys.readouterr()
        assert main(
            ["score", "--input", str(out_csv), "--delta", "0.05", "--sigma", "2"]
        ) == 0
        out = capsys.readouterr().out
        assert "S_sigma = " in out and "R_H = " in out and "xi_H = " in out

        assert main(["test", "--input", str(out_csv), "--delta", "0.05"]) == 0
        t0 = capsys.readouterr().out
        assert "T = " in t0 and "p_value = " in t0
        assert main(
            ["test", "--input", str(out_csv), "--delta", "0.05", "--rep", "1"]
        ) == 0
        t1 = capsys.readouterr().out
        assert t0 != t1  # different replication, different statistic

    def test_headerless_single_column_input(self, tmp_path, capsys):
        rng = np.random.default_rng(3)
        data = tmp_path / "plain.csv"
        data.write_text("\n".join(repr(float(v)) for v in rng.standard_normal(16)) + "\n")
        assert main(["test", "--input", str(data), "--delta", "0.1"]) == 0
        assert "T = " in capsys.readouterr().out

    def test_missing_rep_is_runtime_error(self, tmp_path, capsys):
        out_csv = tmp_path / "paths.csv"
        main(
            ["simulate", "--n", "8", "--delta", "0.1", "--output", str(out_csv)]
        )
        capsys.readouterr()
        assert main(
            ["test", "--input", str(out_csv), "--delta", "0.1", "--rep", "5"]
        ) == 2
        assert "no rows for rep 5" in capsys.readouterr().err

    def test_mfou_score_and_test(self, tmp_path, capsys):
        out_csv = tmp_path / "ou.csv"
        code = main(
            [
                "simulate", "--model", "mfou", "--n", "48", "--delta", "0.1",
                "--sigma", "1", "--alpha", "1", "--seed", "5",
                "--output", str(out_csv),
            ]
        )
        assert code == 0
        capsys.readouterr()
        assert main(
            [
                "score", "--input", str(out_csv), "--delta", "0.1",
                "--model", "mfou", "--alpha", "1",
            ]
        ) == 0
        out = capsys.readouterr().out
        assert "S_alpha = " in out and "xi_alpha = " in out
        assert main(
            ["test", "--input", str(out_csv), "--delta", "0.1", "--model", "mfou"]
        ) == 0
        out = capsys.readouterr().out
        assert "alpha_hat = " in out


class TestExitCodes:
    def test_missing_required_flag(self, capsys):
        assert main(["simulate", "--delta", "0.1"]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_unknown_command(self, capsys):
        assert main(["bogus"]) == 1

    def test_unknown_flag(self, capsys):
        assert main(["constants", "--bogus"]) == 1

    def test_no_command_prints_help(self, capsys):
        assert main([]) == 1
        assert "COMMAND" in capsys.readouterr().err

    def test_mfou_simulate_requires_alpha(self, capsys):
        assert main(["simulate", "--model", "mfou", "--n", "8", "--delta", "0.1"]) == 1

    def test_nonpositive_threads(self, capsys):
        assert main(["constants", "--threads", "0"]) == 1

    def test_missing_input_file(self, tmp_path, capsys):
        missing = tmp_path / "absent.csv"
        assert main(["test", "--input", str(missing), "--delta", "0.1"]) == 2
        assert "input file not found" in capsys.readouterr().err

    def test_trace_cap_is_runtime_error(self, capsys):
        assert main(["traces", "--n-grid", "16384"]) == 2
        assert "exceeds the configured cap" in capsys.readouterr().err

    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        assert "COMMAND" in capsys.readouterr().out
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--help"])
        assert exc.value.code == 0


class TestConfigPrecedence:
    def test_defaults_config_flags(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# comment line\n"
            "sigma = 2.5\n"
            "reps = 2\n"
            "hurst-grid = 0.75\n"
            "mystery_knob = 1\n"
        )
        out_dir = tmp_path / "out"
        code = main(
            [
                "mc-power", "--n", "32", "--delta", "0.05", "--reps", "3",
                "--config", str(cfg), "--out-dir", str(out_dir),
            ]
        )
        captured = capsys.readouterr()
        assert code == 0
        assert "ignoring unknown config key 'mystery_knob'" in captured.err
        payload = json.loads((out_dir / "power_grid_records.json").read_text())
        assert payload["config"]["sigma"] == 2.5  # config beats default
        assert payload["config"]["reps"] == 3  # flag beats config
        assert payload["config"]["hurst_grid"] == [0.75]

    def test_malformed_config_line(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("sigma 2.5\n")
        assert main(["constants", "--config", str(cfg)]) == 1

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["constants", "--config", str(tmp_path / "none.cfg")]) == 2


class TestStudyCommands:
    def test_mc_null_zero_reps_schema_valid(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code = main(
            ["mc-null", "--n-grid", "64,128", "--reps", "0", "--out-dir", str(out_dir)]
        )
        assert code == 0
        with open(out_dir / "null_sequence_summary.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][0] == "n"
        assert rows[1] == ["64.0", "", "", "", "", "", ""]
        assert rows[2] == ["128.0", "", "", "", "", "", ""]

    def test_output_dir_env_var(self, tmp_path, capsys, monkeypatch):
        env_dir = tmp_path / "from_env"
        monkeypatch.setenv("MFBOUNDARY_OUTPUT_DIR", str(env_dir))
        assert main(["mc-null", "--n-grid", "64", "--reps", "0"]) == 0
        assert (env_dir / "null_sequence_summary.csv").exists()

    def test_traces_output(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code = main(
            [
                "traces", "--sigma", "0.5", "--n-grid", "64,128",
                "--out-dir", str(out_dir),
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "trace / predicted ratios:" in out
        assert "Whittle cross-check at n=128:" in out
        with open(out_dir / "trace_ladder_mfbm.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["n", "delta", "L", "ratio_cc", "ratio_cd", "ratio_dd"]
        assert [r[0] for r in rows[1:]] == ["64", "128"]

    def test_lan_check_output(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code = main(
            [
                "lan-check", "--n-grid", "64", "--reps", "5", "--seed", "3",
                "--out-dir", str(out_dir),
            ]
        )
        assert code == 0
        with open(out_dir / "lan_check.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][0] == "n"
        assert rows[1][0] == "64"

    def test_lan_check_bad_h(self, capsys):
        assert main(["lan-check", "--n-grid", "64", "--h", "1,2,3"]) == 1


class TestIntradayCommand:
    def test_pipeline_runs(self, tmp_path, capsys):
        panel = _tiny_panel(tmp_path)
        out_dir = tmp_path / "out"
        code = main(
            [
                "intraday", "--input", str(panel), "--out-dir", str(out_dir),
                "--session-start", "09:00", "--session-end", "09:09",
                "--rolling-window", "2",
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "days retained = 3" in out
        assert "mean_T = " in out
        for name in ("daily_records.csv", "rolling.csv", "subperiods.csv", "run_metadata.json"):
            assert (out_dir / name).exists()

    def test_bad_session_time(self, capsys):
        assert main(["intraday", "--input", "x.csv", "--session-start", "late"]) == 1
