"""Low-load limits of -E[W]/log(p_lambda)."""

import logging
import math

from cavity.models import WaitingMethod
from cavity.ode import mean_waiting
from core.exceptions import ExtrapolationUnstableError, UnsupportedPolicyError
from limits.extrapolation import linear_intercept
from limits.models import Extrapolation
from policies.kernels import log_idle_probability
from policies.models import Discipline, PolicyKind, PolicySpec

logger = logging.getLogger(__name__)

DEFAULT_LOW_LAMBDAS = [1e-2, 1e-3, 1e-4]


def low_load_limit(policy: PolicySpec) -> float:
    """lim_{lambda -> 0} -E[W]/log(p_lambda).

    1/d for LL(d), 1/(d-K+1) for LL(d,K) and 1/d_j for a mix, where d_j is
    the smallest probe count drawn with positive probability.

    Raises:
        UnsupportedPolicyError: For Red(d), memory LL(d) and queue-length ranking
    """
    if policy.discipline == Discipline.QUEUE_LENGTH:
        raise UnsupportedPolicyError(
            f"No low-load limit for queue-length ranking ({policy.label})",
            details={"policy": policy.label},
        )
    match policy.kind:
        case PolicyKind.LL_D:
            assert policy.d is not None
            return 1.0 / policy.d
        case PolicyKind.LL_DK:
            assert policy.d is not None and policy.k is not None
            return 1.0 / (policy.d - policy.k + 1)
        case PolicyKind.LL_MIX:
            assert policy.choices is not None
            return 1.0 / min(d for d, p in policy.choices if p > 0.0)
    raise UnsupportedPolicyError(
        f"No low-load limit for {policy.label}", details={"policy": policy.label}
    )


def scaled_low_value(policy: PolicySpec, lam: float) -> float:
    """-E[W]/log(p_lambda), with E[W] from quadrature to avoid cancellation in E[Q]/lambda - 1."""
    return -mean_waiting(policy, lam, method=WaitingMethod.SEPARATION) / log_idle_probability(
        policy, lam
    )


def extrapolate_low_load(
    policy: PolicySpec, lambda_seq: list[float] | None = None
) -> Extrapolation:
    """Fit -E[W]/log(p_lambda) linearly in lambda and return the value at lambda = 0."""
    lambda_seq = sorted(lambda_seq or DEFAULT_LOW_LAMBDAS)
    values = [scaled_low_value(policy, lam) for lam in lambda_seq]
    value, residual = linear_intercept(lambda_seq, values, last=len(lambda_seq))
    if not math.isfinite(value):
        raise ExtrapolationUnstableError(
            f"Low-load extrapolation failed for {policy.label}",
            details={"policy": policy.label, "samples": values},
        )
    logger.debug(f"Low-load limit for {policy.label}: {value!r} (residual {residual:.3g})")
    return Extrapolation(
        value=value, residual=residual, samples=list(zip(lambda_seq, values, strict=True))
    )
