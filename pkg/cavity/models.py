"""Solver options and the sampled workload ccdf."""

from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field
from scipy.interpolate import CubicHermiteSpline


class SolverOptions(BaseModel):
    """Tolerances for the cavity ODE; the CLI JSON config uses the same keys."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    local_tol: float = Field(default=1e-10, gt=0.0, description="Relative local error per step")
    tail_epsilon: float = Field(
        default=1e-12, gt=0.0, description="Stop integrating once F(w) drops below this"
    )
    consistency_tol: float = Field(
        default=1e-6, gt=0.0, description="Allowed integral-identity residual at probe points"
    )
    w_max_factor: float = Field(
        default=50.0,
        gt=0.0,
        description="First integration window, in units of -log(1-lambda)/(A-1)",
    )


class WaitingMethod(StrEnum):
    """How mean waiting times are computed."""

    ODE = "ode"
    SEPARATION = "separation"


@dataclass(frozen=True, eq=False)
class WorkloadCurve:
    """F(w) sampled on an increasing grid, with a certified bound on the truncated tail.

    ``slopes`` holds F'(w) = T(F(w)) - F(w) at each grid point and drives a
    cubic Hermite interpolant between samples.
    ``consistent`` is False when the integral-identity residual exceeded
    ``SolverOptions.consistency_tol``.
    """

    grid: NDArray[np.float64]
    values: NDArray[np.float64]
    slopes: NDArray[np.float64]
    boundary: float
    lam: float
    tail_cut: float
    tail_remainder_bound: float
    n_steps: int = 0
    consistency_residual: float = 0.0
    consistent: bool = True

    @cached_property
    def _interpolant(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.grid, self.values, self.slopes, extrapolate=False)

    @property
    def tail_value(self) -> float:
        """F at the tail cut."""
        return float(self.values[-1])

    def tail_bound_at(self, w: NDArray[np.float64] | float) -> NDArray[np.float64]:
        """Upper bound F(tail_cut) e^{-(1-lambda)(w - tail_cut)} for w beyond the cut."""
        return self.tail_value * np.exp(-(1.0 - self.lam) * (np.asarray(w) - self.tail_cut))

    def evaluate(self, w: NDArray[np.float64] | float) -> NDArray[np.float64]:
        """F(w); beyond the tail cut, the certified upper bound."""
        w = np.asarray(w, dtype=float)
        inside = np.clip(self._interpolant(np.minimum(w, self.tail_cut)), 0.0, 1.0)
        return np.where(w <= self.tail_cut, inside, self.tail_bound_at(w))
