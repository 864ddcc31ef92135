"""Report models for the assumption and lemma checks."""

from enum import StrEnum

from pydantic import BaseModel, Field, model_validator

from policies.models import PolicySpec

DEFAULT_LAMBDA_GRID = [0.9, 0.95, 0.99, 0.995, 0.999]


class Status(StrEnum):
    """Outcome of one check."""

    PASS = "PASS"
    FAIL = "FAIL"
    SKIPPED = "SKIPPED"


class Witness(BaseModel):
    """A sampled point where a condition was violated."""

    lam: float
    point: float = Field(description="x, u or w at which the condition was evaluated")
    observed: float


class AssumptionReport(BaseModel):
    """Result of checking one assumption or lemma on a lambda grid."""

    assumption_id: str
    policy: PolicySpec
    lambda_grid: list[float]
    status: Status
    witnesses: list[Witness] = Field(default_factory=list)
    b: int | None = None
    detail: str = ""

    @model_validator(mode="after")
    def failures_have_witnesses(self) -> "AssumptionReport":
        if self.status == Status.FAIL and not self.witnesses:
            raise ValueError("a FAIL report needs at least one witness")
        return self

    @classmethod
    def from_witnesses(
        cls,
        assumption_id: int | str,
        policy: PolicySpec,
        lambda_grid: list[float],
        witnesses: list[Witness],
        b: int | None = None,
        detail: str = "",
    ) -> "AssumptionReport":
        """PASS when no witness was found, FAIL otherwise."""
        return cls(
            assumption_id=str(assumption_id),
            policy=policy,
            lambda_grid=lambda_grid,
            status=Status.FAIL if witnesses else Status.PASS,
            witnesses=witnesses,
            b=b,
            detail=detail,
        )

    @classmethod
    def skipped(
        cls, assumption_id: int | str, policy: PolicySpec, lambda_grid: list[float], reason: str
    ) -> "AssumptionReport":
        return cls(
            assumption_id=str(assumption_id),
            policy=policy,
            lambda_grid=lambda_grid,
            status=Status.SKIPPED,
            detail=reason,
        )


class OrderingCheck(BaseModel):
    """Mean waiting of the floor/ceil mix against the original mix at one load."""

    lam: float
    majorizing_wait: float
    original_wait: float
    holds: bool


class MajorizationCertificate(BaseModel):
    """Row-stochastic matrix witnessing (q, b) majorized by (p, a), with its checks."""

    holds: bool
    q: list[float]
    b: list[int]
    matrix: list[list[float]]
    violations: list[str] = Field(default_factory=list)
    ordering: list[OrderingCheck] = Field(default_factory=list)
