"""Models for heavy-traffic and low-load results."""

from enum import StrEnum

from pydantic import BaseModel, Field


class Scaling(StrEnum):
    """Denominator used to scale mean waiting times."""

    LOG_ONE_MINUS_LAMBDA = "log1mlambda"
    LOG_P_LAMBDA = "logplambda"


class Extrapolation(BaseModel):
    """A limit read off a fit to a sampled sequence."""

    value: float
    residual: float = Field(ge=0.0, description="Largest |fit - sample| over the fitted points")
    samples: list[tuple[float, float]] = Field(
        default_factory=list, description="(abscissa, sampled value) pairs that were fitted"
    )


class ScaledRow(BaseModel):
    """One row of a scaled mean-waiting curve. Failed rows carry NaNs and an error code."""

    lam: float
    mean_wait: float
    scaled: float
    scaling: Scaling
    policy: str
    error: str | None = None


class LimitReport(BaseModel):
    """Heavy-traffic constants, the limits they imply, and how well they agree."""

    A: float = Field(gt=1.0)
    B: float = Field(ge=0.0)
    heavy_limit: float = Field(description="B/(A-1), or B/log(A) for queue-length ranking")
    closed_form_reference: float
    heavy_extrapolated: float | None = Field(
        default=None, description="Fitted limit of -E[W]/log(1-lambda); None for Red(d)"
    )
    extrapolation_residual: float | None = None
    low_load_limit: float | None = None
    b: int = 0
    tolerance: float
    within_tolerance: bool
