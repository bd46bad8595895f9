import json

import numpy as np
import pytest

from utilsched.cli import (
    ConfigError,
    RunManifest,
    expand_sweep,
    load_config_file,
    main,
    resolve_config,
)


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    return header, rows


class TestConfigFile:
    def test_parse_and_types(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# comment\n"
            "users = 8,16\n"
            "mean_snr_db = 10\n"
            "concavity = 0.1\n"
            "seed = 3\n"
        )
        parsed = load_config_file(str(cfg))
        assert parsed["users"] == [8, 16]
        assert parsed["mean_snr_db"] == 10.0
        assert parsed["seed"] == 3

    def test_unknown_key_diagnosed_with_line(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("users = 2\nbogus = 1\n")
        with pytest.raises(ConfigError, match=r"run\.cfg:2.*bogus"):
            load_config_file(str(cfg))

    def test_bad_value_diagnosed(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("users = many\n")
        with pytest.raises(ConfigError, match="many"):
            load_config_file(str(cfg))

    def test_missing_file_names_path(self, capsys):
        status = main(["ts-sweep", "--config", "/nonexistent/path.cfg"])
        assert status == 2
        assert "/nonexistent/path.cfg" in capsys.readouterr().err

    def test_expand_sweep_cartesian(self):
        points = expand_sweep({"users": [2, 4], "concavity": [0.1, 1.0], "seed": 0})
        assert len(points) == 4
        assert points[0]["users"] == 2 and points[0]["concavity"] == 0.1
        assert points[-1]["users"] == 4 and points[-1]["concavity"] == 1.0

    def test_non_sweepable_list_rejected(self):
        with pytest.raises(ConfigError):
            expand_sweep({"snr_gap_db": [3.0, 8.2]})


class TestSweepCommands:
    def test_ts_sweep_users_axis(self, tmp_path):
        status = main([
            "ts-sweep", "--users", "8,16,24,32", "--concavity", "0.1",
            "--snr-gap-db", "8.2", "--frames", "60", "--output", str(tmp_path),
        ])
        assert status == 0
        header, rows = read_csv(tmp_path / "ts_sweep.csv")
        assert len(rows) == 4
        assert [r["users"] for r in rows] == ["8", "16", "24", "32"]
        assert "taur" in header and "mean_rate_user_32" in header
        assert all(float(r["taur"]) > 0 for r in rows)

    def test_repeat_invocation_byte_identical(self, tmp_path):
        argv = ["gs-sweep", "--users", "4", "--frames", "80",
                "--mean-snr-db", "0,10", "--output", str(tmp_path)]
        assert main(argv) == 0
        first = (tmp_path / "gs_sweep.csv").read_bytes()
        assert main(argv) == 0
        assert (tmp_path / "gs_sweep.csv").read_bytes() == first

    def test_manifest_written_and_replays(self, tmp_path):
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        assert main(["ts-sweep", "--users", "4", "--frames", "50",
                     "--output", str(out1)]) == 0
        manifest = RunManifest.load(str(out1 / "ts_sweep.manifest.json"))
        assert manifest.command == "ts-sweep"
        status = main(["replay", str(out1 / "ts_sweep.manifest.json"),
                       "--output", str(out2)])
        assert status == 0
        assert (out2 / "ts_sweep.csv").read_bytes() == (out1 / "ts_sweep.csv").read_bytes()

    def test_numeric_failure_exit_3(self, tmp_path, capsys):
        # a power-control run that cannot converge in one iteration
        status = main([
            "jtpc", "--users", "2", "--frames", "10", "--training-samples", "20",
            "--delta", "0", "--max-iterations", "1", "--output", str(tmp_path),
        ])
        assert status == 3
        err = capsys.readouterr().err
        assert "failed" in err or "numeric" in err

    def test_snr_axis_sweep(self, tmp_path):
        status = main([
            "ts-sweep", "--users", "2", "--mean-snr-db", "0,5,10,15,20,25,30",
            "--frames", "40", "--output", str(tmp_path),
        ])
        assert status == 0
        _, rows = read_csv(tmp_path / "ts_sweep.csv")
        snrs = [float(r["mean_snr_db"]) for r in rows]
        assert len(rows) == 7
        assert snrs == sorted(snrs) and len(set(snrs)) == 7

    def test_output_dir_from_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("UTILSCHED_OUTDIR", str(tmp_path))
        assert main(["ts-sweep", "--users", "2", "--frames", "20"]) == 0
        assert (tmp_path / "ts_sweep.csv").exists()

    def test_qtsl_sweep_over_feedback_bits(self, tmp_path):
        status = main([
            "qtsl", "--users", "3", "--feedback-bits", "1,2", "--frames", "40",
            "--output", str(tmp_path), "--tag", "bits",
        ])
        assert status == 0
        _, rows = read_csv(tmp_path / "bits.csv")
        assert [r["feedback_bits"] for r in rows] == ["1", "2"]

    def test_golden_schema(self, tmp_path):
        # pinned config: schema (header) is frozen; changing it is a breaking change
        assert main(["ts-sweep", "--users", "2", "--frames", "30",
                     "--output", str(tmp_path)]) == 0
        header, _ = read_csv(tmp_path / "ts_sweep.csv")
        assert header == [
            "users", "mean_snr_db", "snr_gap_db", "concavity", "policy", "alpha",
            "delta", "power_budget", "slots", "feedback_bits", "frames", "seed",
            "training_samples", "taur",
            "mean_rate_user_1", "mean_rate_user_2",
            "rate_std_user_1", "rate_std_user_2", "error",
        ]


class TestFairnessCommand:
    def test_asymmetric_run(self, tmp_path):
        status = main([
            "fairness", "--users", "2", "--mean-snr-db", "0,10",
            "--frames", "400", "--tolerance", "0.01", "--output", str(tmp_path),
        ])
        assert status == 0
        _, rows = read_csv(tmp_path / "fairness.csv")
        row = rows[0]
        assert float(row["spread"]) <= 0.01
        assert float(row["weight_user_1"]) > float(row["weight_user_2"])

    def test_wrong_snr_count_rejected(self, capsys):
        status = main(["fairness", "--users", "3", "--mean-snr-db", "0,10"])
        assert status == 2


class TestSelfcheck:
    def test_all_suites_pass(self, capsys):
        assert main(["selfcheck"]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 3

    def test_suite_filter(self, capsys):
        assert main(["selfcheck", "--suite", "derivatives"]) == 0
        out = capsys.readouterr().out
        assert "derivatives" in out and out.count("PASS") == 1

    def test_unknown_suite_config_error(self):
        assert main(["selfcheck", "--suite", "nope"]) == 2

    def test_seed_replays(self, capsys):
        assert main(["selfcheck", "--suite", "ts-grid", "--seed", "7"]) == 0
        first = capsys.readouterr().out
        assert main(["selfcheck", "--suite", "ts-grid", "--seed", "7"]) == 0
        assert capsys.readouterr().out == first


class TestReplayValidation:
    def test_missing_manifest(self, capsys):
        assert main(["replay", "/nonexistent/m.json"]) == 2

    def test_corrupt_manifest(self, tmp_path):
        bad = tmp_path / "m.json"
        bad.write_text("{not json")
        assert main(["replay", str(bad)]) == 2

    def test_tampered_hash_detected(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(["ts-sweep", "--users", "2", "--frames", "20",
                     "--output", str(out)]) == 0
        path = out / "ts_sweep.manifest.json"
        data = json.loads(path.read_text())
        data["sha256"] = "0" * 64
        path.write_text(json.dumps(data))
        assert main(["replay", str(path), "--output", str(tmp_path / "again")]) == 1
        assert "mismatch" in capsys.readouterr().err
