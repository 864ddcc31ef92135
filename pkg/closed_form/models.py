"""Models for the LL(d,p) closed forms."""

from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field


class LLdpParams(BaseModel):
    """LL(d,p): a fraction p of arrivals use LL(d), the rest join a random server."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    d: int = Field(..., ge=2)
    p: float = Field(..., gt=0.0, le=1.0)
    lam: float = Field(..., gt=0.0, lt=1.0, alias="lambda")

    @property
    def b(self) -> float:
        """1 - (1-p) lambda."""
        return 1.0 - (1.0 - self.p) * self.lam

    @property
    def z(self) -> float:
        """p lambda^d / b, the ratio of the mean-queue series."""
        return self.p * self.lam**self.d / self.b


class SeriesMethod(StrEnum):
    SERIES = "series"
    LOG_FORM = "log_form"
    INTEGRAL = "integral"


class SeriesEvaluation(BaseModel):
    """Mean queue length from the LL(d,p) series with evaluation diagnostics."""

    value: float
    terms: int
    method: SeriesMethod
    slow_convergence: bool = False


class QueueBounds(BaseModel):
    """lower <= E[Q] <= upper for LL(d,p)."""

    lower: float
    upper: float
