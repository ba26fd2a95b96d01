import json
import subprocess
import sys

import pytest

from fchaos.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_cli_expecting_exit(capsys, *argv):
    with pytest.raises(SystemExit) as exc:
        main(list(argv))
    captured = capsys.readouterr()
    return exc.value.code, captured.out, captured.err


class TestHappyPath:
    def test_json_report_on_stdout_with_exit_zero(self, capsys):
        code, out, err = run_cli(capsys, "--experiment", "transfer-5.2")
        assert code == 0
        doc = json.loads(out)
        assert doc["experiment"] == "transfer-5.2"
        assert doc["values"]["wigner_free"] is True
        assert doc["values"]["poisson_free"] is False

    def test_runs_reproduce_except_runtime(self, capsys):
        _, first, _ = run_cli(capsys, "--experiment", "fourth-moment-6.1", "--order", "1")
        _, second, _ = run_cli(capsys, "--experiment", "fourth-moment-6.1", "--order", "1")
        a, b = json.loads(first), json.loads(second)
        del a["runtime_ms"], b["runtime_ms"]
        assert a == b

    def test_seed_flag_reaches_the_experiment(self, capsys):
        _, first, _ = run_cli(capsys, "--experiment", "fourth-moment-6.1", "--seed", "1")
        _, second, _ = run_cli(capsys, "--experiment", "fourth-moment-6.1", "--seed", "2")
        a, b = json.loads(first), json.loads(second)
        assert a["inputs"]["seed"] == 1
        assert a["values"] != b["values"]

    def test_out_file_matches_stdout(self, capsys, tmp_path):
        target = tmp_path / "report.json"
        code, out, _ = run_cli(
            capsys, "--experiment", "transfer-5.2", "--out", str(target)
        )
        assert code == 0
        assert target.read_text() == out

    def test_csv_renders_the_sequence_trace(self, capsys):
        code, out, _ = run_cli(capsys, "--experiment", "sequence-4", "--format", "csv")
        assert code == 0
        lines = out.splitlines()
        assert lines[0].startswith("index,")
        assert len(lines) == 6

    def test_threads_flag_caps_the_blas_pool(self, capsys, monkeypatch):
        monkeypatch.delenv("OMP_NUM_THREADS", raising=False)
        code, _, _ = run_cli(capsys, "--experiment", "transfer-5.2", "--threads", "2")
        assert code == 0
        import os

        assert os.environ["OMP_NUM_THREADS"] == "2"


class TestFailureExit:
    def test_failing_check_exits_two_but_still_reports(self, capsys, monkeypatch):
        from fchaos import experiments

        monkeypatch.setitem(
            experiments._REGISTRY,
            "always-fails",
            (lambda opts: {"values": {"got": 3, "pass_expected": False}}, {}),
        )
        code, out, err = run_cli(capsys, "--experiment", "always-fails")
        assert code == 2
        assert json.loads(out)["values"]["got"] == 3
        assert "pass_expected" in err


class TestUsageErrors:
    def test_unknown_experiment_lists_the_registry(self, capsys):
        code, _, err = run_cli_expecting_exit(capsys, "--experiment", "nope")
        assert code == 1
        assert "transfer-5.2" in err and "gue-crosscheck" in err

    def test_invalid_config_names_the_field(self, capsys):
        code, _, err = run_cli_expecting_exit(
            capsys, "--experiment", "sequence-4", "--N", "48"
        )
        assert code == 1
        assert "N:" in err

    def test_option_not_accepted_by_the_experiment(self, capsys):
        code, _, err = run_cli_expecting_exit(
            capsys, "--experiment", "transfer-5.2", "--order", "2"
        )
        assert code == 1
        assert "not an option" in err

    def test_csv_without_a_trace_is_a_usage_error(self, capsys):
        code, _, err = run_cli_expecting_exit(
            capsys, "--experiment", "transfer-5.2", "--format", "csv"
        )
        assert code == 1
        assert "no trace" in err

    def test_unrecognized_flag(self, capsys):
        code, _, err = run_cli_expecting_exit(
            capsys, "--experiment", "transfer-5.2", "--bogus"
        )
        assert code == 1

    def test_nonpositive_threads(self, capsys):
        code, _, err = run_cli_expecting_exit(
            capsys, "--experiment", "transfer-5.2", "--threads", "0"
        )
        assert code == 1
        assert "threads" in err


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "fchaos", "--experiment", "transfer-5.2"],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["experiment"] == "transfer-5.2"
