"""Simulation configuration and report models."""

from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from policies.models import PolicySpec
from policies.parser import parse_policy

SEED_LIMIT = 2**64


class SimConfig(BaseModel):
    """One simulation setup; replication r draws from stream seed XOR r."""

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    policy: PolicySpec
    lam: float = Field(alias="lambda", gt=0.0, lt=1.0, description="Arrival rate per server")
    n_servers: int = Field(ge=2)
    horizon: float = Field(gt=0.0, description="Simulated time units")
    warmup: float = Field(default=0.0, ge=0.0)
    seed: int = Field(default=0, ge=0, lt=SEED_LIMIT)
    replications: int = Field(default=1, ge=1)
    ccdf_points: list[float] = Field(
        default_factory=lambda: [0.0, 0.5, 1.0, 2.0],
        description="Workload levels w for the empirical ccdf",
    )
    snapshot_every: int = Field(
        default=10_000, ge=1, description="Arrival events between ccdf snapshots"
    )
    debug: bool = Field(default=False, description="Assert distinct probes at every arrival")

    @field_validator("policy", mode="before")
    @classmethod
    def parse_policy_text(cls, v: Any) -> Any:
        return parse_policy(v) if isinstance(v, str) else v

    @field_validator("ccdf_points")
    @classmethod
    def sort_points(cls, v: list[float]) -> list[float]:
        if any(w < 0 for w in v):
            raise ValueError("ccdf points must be nonnegative")
        return sorted(v)

    @model_validator(mode="after")
    def check_sizes(self) -> "SimConfig":
        if self.warmup >= self.horizon:
            raise ValueError(f"warmup ({self.warmup}) must be below horizon ({self.horizon})")
        if self.policy.d_max > self.n_servers:
            raise ValueError(
                f"{self.policy.label} probes {self.policy.d_max} servers but only "
                f"{self.n_servers} exist"
            )
        return self


class CcdfSample(BaseModel):
    """Fraction of servers holding more than ``w`` work, averaged over snapshots."""

    w: float
    fraction: float = Field(ge=0.0, le=1.0)


class WorkBalance(BaseModel):
    """Arrived work against work served plus work left, summed over replications."""

    arrived_work: float
    busy_time: float
    remaining_work: float
    relative_error: float


class ReplicationResult(BaseModel):
    """Raw output of one replication."""

    replication: int
    mean_wait: float
    n_jobs: int
    batch_sums: list[float]
    batch_counts: list[int]
    ccdf: list[float]
    n_snapshots: int
    arrived_work: float
    busy_time: float
    remaining_work: float


class SimReport(BaseModel):
    """Aggregated simulation output."""

    model_config = ConfigDict(populate_by_name=True)

    policy: str
    lam: float = Field(alias="lambda")
    n_servers: int
    mean_wait: float
    stderr: float = Field(ge=0.0)
    ci_low: float
    ci_high: float
    n_jobs: int
    replication_means: list[float]
    empirical_ccdf: list[CcdfSample]
    work_balance: WorkBalance
    seed_echo: int
    replications: int
    horizon: float
    warmup: float


class ConvergenceRow(BaseModel):
    """Simulated mean waiting time at one fleet size against the mean-field value."""

    n_servers: int
    mean_wait: float
    stderr: float
    mean_field: float
    gap: float
