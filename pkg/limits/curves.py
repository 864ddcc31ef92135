"""Scaled mean-waiting curves over a lambda grid, and their CSV form."""

import logging
import math
from functools import partial

from cavity.models import WaitingMethod
from cavity.ode import mean_waiting
from core.exceptions import CavityLBError, InvalidArgumentError
from core.parallel import parallel_map
from limits.models import ScaledRow, Scaling
from policies.kernels import log_idle_probability
from policies.models import PolicySpec
from policies.parser import format_policy

logger = logging.getLogger(__name__)

CSV_FIELDS = ["lambda", "mean_wait", "scaled", "scaling", "policy"]


def _curve_row(
    policy: PolicySpec, scaling: Scaling, method: WaitingMethod, lam: float
) -> ScaledRow:
    name = format_policy(policy)
    try:
        wait = mean_waiting(policy, lam, method=method)
        if scaling == Scaling.LOG_ONE_MINUS_LAMBDA:
            denominator = math.log1p(-lam)
        else:
            denominator = log_idle_probability(policy, lam)
        scaled = -wait / denominator
    except CavityLBError as e:
        logger.warning(f"Row lambda={lam} of {policy.label} failed: {e.message}")
        return ScaledRow(
            lam=lam,
            mean_wait=math.nan,
            scaled=math.nan,
            scaling=scaling,
            policy=name,
            error=e.code,
        )
    return ScaledRow(lam=lam, mean_wait=wait, scaled=scaled, scaling=scaling, policy=name)


def scaled_curve(
    policy: PolicySpec,
    lambda_grid: list[float],
    scaling: Scaling = Scaling.LOG_ONE_MINUS_LAMBDA,
    method: WaitingMethod = WaitingMethod.ODE,
    max_workers: int | None = None,
) -> list[ScaledRow]:
    """Rows (lambda, E[W], -E[W]/log(denominator)) sorted by lambda.

    A row whose solve fails is returned with NaNs and its error code instead
    of aborting the table.

    Raises:
        InvalidArgumentError: If a grid point is outside (0, 1)
    """
    grid = sorted(lambda_grid)
    bad = [lam for lam in grid if not 0.0 < lam < 1.0]
    if bad:
        raise InvalidArgumentError("lambda grid must lie in (0, 1)", details={"lambda": bad})
    return parallel_map(partial(_curve_row, policy, scaling, method), grid, max_workers)


def curve_csv_row(row: ScaledRow) -> dict[str, object]:
    """Row keyed by the CSV header ``lambda,mean_wait,scaled,scaling,policy``."""
    return {
        "lambda": row.lam,
        "mean_wait": row.mean_wait,
        "scaled": row.scaled,
        "scaling": row.scaling.value,
        "policy": row.policy,
    }
