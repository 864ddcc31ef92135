"""Run telemetry: step timings and per-run solver counters."""

import logging
import time
from contextlib import contextmanager
from contextvars import ContextVar, Token
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)


@dataclass
class StepResult:
    """Result of a tracked step."""

    duration_ms: float
    success: bool = True
    error_type: str | None = None


@dataclass
class RunTelemetry:
    """Tracks timing for the steps of a single CLI run."""

    steps: dict[str, StepResult] = field(default_factory=dict)
    start_time: float = field(default_factory=time.perf_counter)

    @contextmanager
    def track_step(self, step_name: str):
        """Context manager to time a step.

        Args:
            step_name: Name of the step being tracked

        Yields:
            None
        """
        step_start = time.perf_counter()
        error_type = None

        try:
            yield
        except Exception as e:
            error_type = type(e).__name__
            raise
        finally:
            self.steps[step_name] = StepResult(
                duration_ms=(time.perf_counter() - step_start) * 1000,
                success=error_type is None,
                error_type=error_type,
            )

    def get_total_duration_ms(self) -> float:
        """Get total elapsed time since telemetry was created."""
        return (time.perf_counter() - self.start_time) * 1000

    def get_step_timings(self) -> dict[str, float]:
        """Get timing for each step in milliseconds."""
        return {f"{name}_ms": step.duration_ms for name, step in self.steps.items()}

    def log_summary(self) -> None:
        """Log step timings together with the current solver counters."""
        timings = ", ".join(f"{k}={v:.1f}" for k, v in self.get_step_timings().items())
        stats = get_solver_stats() or {}
        logger.info(
            f"Run finished in {self.get_total_duration_ms():.1f}ms ({timings}); "
            f"solver stats: {stats}"
        )


# ---------------------------------------------------------------------------
# Per-run solver counters via ContextVar
# ---------------------------------------------------------------------------

_solver_stats_var: ContextVar[dict] = ContextVar("solver_stats")


def init_solver_stats() -> Token:
    """Initialize solver counters for the current context.

    Returns:
        Token that ``reset_solver_stats`` uses to restore the previous counters
    """
    return _solver_stats_var.set(
        {
            "ode_solves": 0,
            "ode_steps": 0,
            "root_solves": 0,
            "root_iterations": 0,
            "quadratures": 0,
        }
    )


def reset_solver_stats(token: Token) -> None:
    """Restore the counters that were active before ``init_solver_stats``."""
    _solver_stats_var.reset(token)

def record_ode_solve(steps: int) -> None:
    """Record one ODE integration and its accepted step count."""
    stats = _solver_stats_var.get(None)
    if stats is not None:
        stats["ode_solves"] += 1
        stats["ode_steps"] += steps


def record_root_solve(iterations: int) -> None:
    """Record one fixed-point solve and its bracketing iterations."""
    stats = _solver_stats_var.get(None)
    if stats is not None:
        stats["root_solves"] += 1
        stats["root_iterations"] += iterations


def record_quadrature() -> None:
    """Record one separation-of-variables quadrature."""
    stats = _solver_stats_var.get(None)
    if stats is not None:
        stats["quadratures"] += 1


def get_solver_stats() -> dict | None:
    """Get solver counters for the current context, or None if not initialized."""
    return _solver_stats_var.get(None)
