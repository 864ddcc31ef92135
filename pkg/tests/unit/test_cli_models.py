"""Unit tests for cli/models.py."""

import pytest
from pydantic import ValidationError

from cavity.models import WaitingMethod
from cli.models import AnalysisReport, Command, RunConfig, SimulationOptions, parse_grid
from core.exceptions import PolicySpecError
from limits.models import Scaling
from policies.models import PolicySpec


class TestParseGrid:
    def test_range_is_inclusive(self):
        assert parse_grid("0.5:0.9:0.1") == [0.5, 0.6, 0.7, 0.8, 0.9]

    def test_list(self):
        assert parse_grid("0.9,0.5, 0.99") == [0.9, 0.5, 0.99]

    def test_single_point_range(self):
        assert parse_grid("0.5:0.5:0.1") == [0.5]

    @pytest.mark.parametrize("text", ["0.1:0.5", "0.5:0.1:0.1", "0.1:0.5:0", "a,b"])
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            parse_grid(text)


class TestRunConfig:
    def test_minimal_analyze(self):
        config = RunConfig.model_validate(
            {"command": "analyze", "policies": "ll:d=2", "lambda": 0.5}
        )
        assert config.command == Command.ANALYZE
        assert config.policies == [PolicySpec.ll(2)]
        assert config.method == WaitingMethod.ODE
        assert config.scaling == Scaling.LOG_ONE_MINUS_LAMBDA
        assert config.simulation == SimulationOptions()

    def test_grid_string_is_expanded_and_sorted(self):
        config = RunConfig.model_validate(
            {"command": "curve", "policies": ["ll:d=2"], "lambda_grid": "0.9,0.5"}
        )
        assert config.lambda_grid == [0.5, 0.9]

    @pytest.mark.parametrize(
        "data",
        [
            {"command": "analyze", "policies": ["ll:d=2"]},
            {"command": "simulate", "policies": ["ll:d=2"]},
            {"command": "curve", "policies": ["ll:d=2"]},
            {"command": "compare", "policies": ["ll:d=2"]},
            {"command": "curve", "policies": ["ll:d=2"], "lambda_grid": [0.5, 1.0]},
            {"command": "analyze", "policies": ["ll:d=2"], "lambda": 1.2},
            {"command": "limits", "policies": []},
            {"command": "limits", "policies": ["ll:d=2"], "bogus": 1},
            {"command": "jsq", "policies": ["ll:d=2"]},
            {"command": "limits", "policies": ["ll:d=2"], "solver": {"local_tol": -1}},
        ],
    )
    def test_rejects(self, data):
        with pytest.raises(ValidationError):
            RunConfig.model_validate(data)

    def test_bad_policy_raises_policy_error(self):
        with pytest.raises(PolicySpecError):
            RunConfig.model_validate({"command": "limits", "policies": ["ll:d=x"]})

    def test_nested_options(self):
        config = RunConfig.model_validate(
            {
                "command": "simulate",
                "policies": ["ll:d=2"],
                "lambda": 0.5,
                "solver": {"tail_epsilon": 1e-9},
                "simulation": {"n_servers": 50, "n_list": [10, 20]},
            }
        )
        assert config.solver.tail_epsilon == 1e-9
        assert config.simulation.n_servers == 50
        assert config.simulation.n_list == [10, 20]


class TestAnalysisReport:
    def test_dumps_with_aliases(self):
        report = AnalysisReport(
            policy="ll:d=2",
            lam=0.5,
            mean_waiting=0.15,
            mean_queue=0.575,
            mean_response=1.15,
            mean_jobs=0.575,
        )
        data = report.model_dump(by_alias=True)
        assert {"lambda", "E[W]", "E[Q]", "E[R]", "E[L]"} <= set(data)
