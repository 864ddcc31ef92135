"""Unit tests for cli/commands.py."""

import contextvars
import csv
import io
import json
from unittest.mock import patch

import pytest

from cli import commands
from cli.commands import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, analyze_policy, compare_rows, run
from cli.models import Command, RunConfig
from core.exceptions import ConfigurationError
from core.telemetry import get_solver_stats
from policies.models import Discipline, PolicySpec

LL2_HALF_WAIT = 0.150728


def _config(**data):
    return RunConfig.model_validate(data)


def _stderr_error(err: str) -> dict:
    lines = [line for line in err.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


class TestAnalyzePolicy:
    def test_ll2(self, ll2):
        report = analyze_policy(ll2, 0.5)
        assert report.mean_waiting == pytest.approx(LL2_HALF_WAIT, abs=1e-6)
        assert report.mean_queue == pytest.approx(0.5 * (1 + LL2_HALF_WAIT), rel=1e-6)
        assert report.mean_response == pytest.approx(1 + LL2_HALF_WAIT, rel=1e-6)
        assert report.mean_jobs == pytest.approx(0.5 * report.mean_response)
        assert report.p_idle == pytest.approx(0.75)
        assert report.u_lambda == pytest.approx(2.0)
        assert report.class_waiting is None

    def test_red_has_no_waiting_time(self):
        report = analyze_policy(PolicySpec.red(2), 0.5)
        assert report.mean_waiting is None
        assert report.mean_response == pytest.approx(2 * 0.6931471805599453, rel=1e-6)
        assert report.p_idle is None

    def test_queue_length(self):
        report = analyze_policy(PolicySpec.ll(2, Discipline.QUEUE_LENGTH), 0.5)
        # u_k = 0.5, 0.125, 0.0078125, 3.05e-5, ... sums to 0.632843; 0.632843 / 0.5 - 1
        assert report.mean_waiting == pytest.approx(0.265686, rel=1e-6)

    def test_mix_has_classes(self, mix12):
        report = analyze_policy(mix12, 0.5)
        assert set(report.class_waiting) == {"1", "2"}

    def test_missing_fixed_point_is_none(self, ll1):
        assert analyze_policy(ll1, 0.5).u_lambda is None


class TestCompareRows:
    def test_floor_ceil_columns(self):
        config = _config(
            command="compare", policies=["mix:d=1,4;p=0.5,0.5", "ll:d=2"], lambda_grid=[0.5]
        )
        rows = compare_rows(config)
        assert [row.policy for row in rows] == ["mix:d=1,4;p=0.5,0.5", "ll:d=2"]
        mixed, plain = rows
        assert mixed.floor_ceil_policy == "mix:d=2,3;p=0.5,0.5"
        assert mixed.majorized is True
        assert mixed.floor_ceil_mean_wait <= mixed.mean_wait
        assert plain.floor_ceil_policy == "ll:d=2"
        assert plain.floor_ceil_mean_wait == pytest.approx(plain.mean_wait)

    def test_lldk_has_no_floor_ceil(self):
        config = _config(command="compare", policies=["lldk:d=4,k=2"], lambda_grid=[0.9])
        rows = compare_rows(config)
        assert rows[0].floor_ceil_policy is None
        assert rows[0].majorized is None


class TestRun:
    def test_analyze_single_policy_is_object(self, capsys):
        code = run(_config(command="analyze", policies=["ll:d=2"], **{"lambda": 0.5}))
        assert code == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["policy"] == "ll:d=2"
        assert payload["E[W]"] == pytest.approx(LL2_HALF_WAIT, abs=1e-6)

    def test_analyze_several_policies_is_list(self, capsys):
        config = _config(command="analyze", policies=["ll:d=2", "ll:d=3"], **{"lambda": 0.5})
        assert run(config) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert [p["policy"] for p in payload] == ["ll:d=2", "ll:d=3"]

    def test_curve_csv(self, capsys):
        config = _config(command="curve", policies=["ll:d=2"], lambda_grid="0.5,0.7", threads=1)
        assert run(config) == EXIT_OK
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert [r["lambda"] for r in rows] == ["0.5", "0.7"]
        assert float(rows[0]["scaled"]) == pytest.approx(0.21746, abs=1e-5)
        assert rows[0]["scaling"] == "log1mlambda"

    def test_curve_to_file(self, tmp_path):
        out = tmp_path / "curve.csv"
        config = _config(command="curve", policies=["ll:d=2"], lambda_grid=[0.5], out=out)
        assert run(config) == EXIT_OK
        assert out.read_text().startswith("lambda,mean_wait,scaled,scaling,policy\n")

    def test_simulate_writes_ccdf(self, capsys, tmp_path):
        ccdf = tmp_path / "ccdf.csv"
        config = _config(
            command="simulate",
            policies=["ll:d=2"],
            ccdf_out=ccdf,
            simulation={"n_servers": 50, "horizon": 30.0, "warmup": 5.0, "seed": 3},
            **{"lambda": 0.5},
        )
        assert run(config) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["seed_echo"] == 3
        assert ccdf.read_text().splitlines()[0] == "w,fraction"

    def test_ccdf_out_takes_one_policy(self, capsys, tmp_path):
        ccdf = tmp_path / "ccdf.csv"
        config = _config(
            command="simulate",
            policies=["ll:d=2", "ll:d=3"],
            ccdf_out=ccdf,
            simulation={"n_servers": 50, "horizon": 30.0, "warmup": 5.0},
            **{"lambda": 0.5},
        )
        assert run(config) == EXIT_CONFIG
        assert _stderr_error(capsys.readouterr().err)["error"] == "CONFIG_ERROR"
        assert not ccdf.exists()

    def test_simulate_invalid_options(self, capsys):
        config = _config(
            command="simulate",
            policies=["ll:d=2"],
            simulation={"horizon": 10.0, "warmup": 20.0},
            **{"lambda": 0.5},
        )
        assert run(config) == EXIT_CONFIG
        assert _stderr_error(capsys.readouterr().err)["error"] == "CONFIG_ERROR"

    @patch("cli.commands.capture_exception")
    def test_numeric_failure(self, mock_capture, capsys):
        assert run(_config(command="limits", policies=["ll:d=1"])) == EXIT_NUMERIC
        error = _stderr_error(capsys.readouterr().err)
        assert error["error"] == "UNSUPPORTED_POLICY"
        mock_capture.assert_called_once()
        assert mock_capture.call_args[1]["context"]["command"] == "limits"

    @patch("cli.commands.capture_exception")
    def test_configuration_error_is_not_reported(self, mock_capture, monkeypatch):
        def broken(config):
            raise ConfigurationError("bad")

        monkeypatch.setitem(commands._HANDLERS, Command.LIMITS, broken)
        assert run(_config(command="limits", policies=["ll:d=2"])) == EXIT_CONFIG
        mock_capture.assert_not_called()

    def test_solver_stats_do_not_outlive_the_run(self):
        config = _config(command="analyze", policies=["ll:d=2"], **{"lambda": 0.5})

        def call():
            return run(config), get_solver_stats()

        assert contextvars.Context().run(call) == (EXIT_OK, None)
