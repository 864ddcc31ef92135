"""Run configuration and JSON payload models for the command line."""

from enum import StrEnum
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from cavity.models import SolverOptions, WaitingMethod
from limits.models import Scaling
from policies.models import PolicySpec
from policies.parser import parse_policy


class Command(StrEnum):
    """Subcommands."""

    ANALYZE = "analyze"
    CURVE = "curve"
    LIMITS = "limits"
    VERIFY = "verify"
    SIMULATE = "simulate"
    COMPARE = "compare"


def parse_grid(text: str) -> list[float]:
    """Expand ``start:stop:step`` (stop inclusive) or a comma-separated list of loads."""
    if ":" not in text:
        return [float(x) for x in text.split(",") if x.strip()]
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must be start:stop:step, got {text!r}")
    start, stop, step = (float(x) for x in parts)
    if step <= 0 or stop < start:
        raise ValueError(f"empty grid {text!r}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


class SimulationOptions(BaseModel):
    """Simulator knobs; policy and lambda come from the run configuration."""

    model_config = ConfigDict(extra="forbid")

    n_servers: int = Field(default=1000, ge=2)
    horizon: float = Field(default=1000.0, gt=0.0)
    warmup: float = Field(default=100.0, ge=0.0)
    seed: int = Field(default=0, ge=0)
    replications: int = Field(default=1, ge=1)
    ccdf_points: list[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0, 2.0])
    snapshot_every: int = Field(default=10_000, ge=1)
    debug: bool = False
    n_list: list[int] = Field(
        default_factory=list, description="Fleet sizes for a convergence study instead of one run"
    )


class RunConfig(BaseModel):
    """Everything one CLI invocation needs, from flags or a JSON file."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    command: Command
    policies: list[PolicySpec] = Field(min_length=1)
    lam: float | None = Field(default=None, alias="lambda", gt=0.0, lt=1.0)
    lambda_grid: list[float] | None = None
    scaling: Scaling = Scaling.LOG_ONE_MINUS_LAMBDA
    method: WaitingMethod = WaitingMethod.ODE
    tolerance: float = Field(default=0.01, gt=0.0)
    solver: SolverOptions = Field(default_factory=SolverOptions)
    simulation: SimulationOptions = Field(default_factory=SimulationOptions)
    out: Path | None = None
    ccdf_out: Path | None = None
    threads: int | None = Field(default=None, ge=1)

    @field_validator("policies", mode="before")
    @classmethod
    def parse_policies(cls, v: Any) -> Any:
        if isinstance(v, str):
            v = [v]
        return [parse_policy(p) if isinstance(p, str) else p for p in v]

    @field_validator("lambda_grid", mode="before")
    @classmethod
    def expand_grid(cls, v: Any) -> Any:
        return parse_grid(v) if isinstance(v, str) else v

    @field_validator("lambda_grid")
    @classmethod
    def check_grid(cls, v: list[float] | None) -> list[float] | None:
        if v is None:
            return v
        if not v or any(not 0.0 < lam < 1.0 for lam in v):
            raise ValueError("lambda grid must be nonempty and inside (0, 1)")
        return sorted(v)

    @model_validator(mode="after")
    def check_command_inputs(self) -> "RunConfig":
        if self.command in (Command.ANALYZE, Command.SIMULATE) and self.lam is None:
            raise ValueError(f"{self.command.value} needs lambda")
        if self.command in (Command.CURVE, Command.COMPARE) and self.lambda_grid is None:
            raise ValueError(f"{self.command.value} needs a lambda grid")
        return self


class AnalysisReport(BaseModel):
    """Mean-field quantities for one (policy, lambda)."""

    model_config = ConfigDict(populate_by_name=True)

    policy: str
    lam: float = Field(alias="lambda")
    mean_waiting: float | None = Field(alias="E[W]")
    mean_queue: float = Field(
        alias="E[Q]", description="Mean workload, equal to the mean number of jobs"
    )
    mean_response: float = Field(alias="E[R]")
    mean_jobs: float = Field(alias="E[L]", description="lambda E[R]")
    p_idle: float | None = None
    u_lambda: float | None = None
    class_waiting: dict[str, float] | None = None


class CompareRow(BaseModel):
    """One (lambda, policy) row of the compare table."""

    lam: float
    policy: str
    mean_wait: float
    floor_ceil_policy: str | None = None
    floor_ceil_mean_wait: float | None = None
    majorized: bool | None = None
