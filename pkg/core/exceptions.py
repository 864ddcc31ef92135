"""Custom exception classes for the cavity load-balancing toolkit."""

from typing import Any


class CavityLBError(Exception):
    """Base exception for all toolkit errors.

    ``code`` is the machine-readable error name emitted by the CLI.
    """

    code = "ERROR"

    def __init__(self, message: str, details: dict | None = None):
        self.message = message
        self.details = details or {}
        super().__init__(self.message)

    def to_dict(self) -> dict[str, Any]:
        """Render the error for the CLI error stream."""
        return {"error": self.code, "message": self.message, "details": self.details}


class ConfigurationError(CavityLBError):
    """Raised when a run configuration is invalid."""

    code = "CONFIG_ERROR"


class PolicySpecError(ConfigurationError):
    """Raised when a policy description is malformed."""

    code = "INVALID_POLICY"


class InvalidArgumentError(CavityLBError):
    """Raised when a numeric argument is outside its domain (e.g. lambda not in (0,1))."""

    code = "INVALID_ARGUMENT"


class UnsupportedPolicyError(CavityLBError):
    """Raised when an operation has no formula or model for the given policy."""

    code = "UNSUPPORTED_POLICY"


class NoRootError(CavityLBError):
    """Raised when T(u) = u has no root in (1, u_max]."""

    code = "NO_ROOT"


class NonConvergenceError(CavityLBError):
    """Raised when an iterative method exceeds its iteration cap."""

    code = "NON_CONVERGENCE"


class BNotFoundError(CavityLBError):
    """Raised when no exponent b <= b_max makes h decreasing on the whole grid."""

    code = "B_NOT_FOUND"


class StepUnderflowError(CavityLBError):
    """Raised when the adaptive integrator's step size collapses."""

    code = "STEP_UNDERFLOW"


class InvalidBoundaryError(CavityLBError):
    """Raised when an ODE boundary value lies outside [lambda, 1]."""

    code = "INVALID_BOUNDARY"


class ExtrapolationUnstableError(CavityLBError):
    """Raised when an extrapolation fit residual exceeds its threshold."""

    code = "EXTRAPOLATION_UNSTABLE"


class DivergenceError(CavityLBError):
    """Raised when a recursion that must decrease fails to."""

    code = "DIVERGENCE"


class ConstructionFailedError(CavityLBError):
    """Raised when a majorization matrix cannot be constructed."""

    code = "CONSTRUCTION_FAILED"
