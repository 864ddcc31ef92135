"""Heavy-traffic constants A and B, the limits they imply, and numeric extrapolations."""

import logging
import math

from cavity.models import WaitingMethod
from cavity.ode import mean_waiting
from core.exceptions import ExtrapolationUnstableError, UnsupportedPolicyError
from limits.extrapolation import inverse_log_intercept, linear_intercept
from limits.low_load import low_load_limit
from limits.models import Extrapolation, LimitReport
from policies.kernels import check_lambda, choose_b, fixed_point_u, h, log_idle_probability
from policies.models import Discipline, PolicyKind, PolicySpec

logger = logging.getLogger(__name__)

UNSTABLE_RESIDUAL = 1e-2
DEFAULT_B_GRID = [0.9, 0.95, 0.99, 0.995, 0.999, 0.9999]


def heavy_lambdas(k_min: int, k_max: int) -> list[float]:
    """lambda = 1 - 10^-k for k = k_min..k_max."""
    return [1.0 - 10.0**-k for k in range(k_min, k_max + 1)]


DEFAULT_CONSTANT_LAMBDAS = heavy_lambdas(2, 10)
DEFAULT_HEAVY_LAMBDAS = heavy_lambdas(2, 8)


def heavy_traffic_constants(policy: PolicySpec) -> tuple[float, float]:
    """Closed-form (A, B) for each policy family.

    Raises:
        UnsupportedPolicyError: If A <= 1 (e.g. LL(1))
    """
    match policy.kind:
        case PolicyKind.LL_D | PolicyKind.RED_D | PolicyKind.LL_DK | PolicyKind.LL_MIX:
            a, b = policy.mean_probes, 1.0
        case PolicyKind.MEM_LL_D:
            assert policy.d is not None and policy.memory_size is not None
            a, b = float(policy.d), 1.0 / (policy.memory_size + 1)
        case _:
            raise UnsupportedPolicyError(f"Unknown policy kind {policy.kind}")
    if a <= 1.0:
        raise UnsupportedPolicyError(
            f"{policy.label} has no heavy-traffic limit (A = {a:g})",
            details={"policy": policy.label, "A": a},
        )
    return a, b


def heavy_traffic_limit(policy: PolicySpec) -> float:
    """lim -E[W]/log(1-lambda): B/(A-1) for workload ranking, B/log(A) for queue length.

    Raises:
        UnsupportedPolicyError: For policies without a known formula
    """
    a, b = heavy_traffic_constants(policy)
    if policy.discipline == Discipline.WORKLOAD:
        return b / (a - 1.0)
    if policy.kind in (PolicyKind.RED_D, PolicyKind.MEM_LL_D):
        raise UnsupportedPolicyError(
            f"No queue-length heavy-traffic limit for {policy.label}",
            details={"policy": policy.label},
        )
    return b / math.log(a)


def _checked(
    policy: PolicySpec, name: str, value: float, residual: float, samples: list
) -> Extrapolation:
    if not math.isfinite(value) or residual > UNSTABLE_RESIDUAL:
        raise ExtrapolationUnstableError(
            f"{name} extrapolation for {policy.label} is unstable (residual {residual:.3g})",
            details={"policy": policy.label, "value": value, "residual": residual},
        )
    logger.debug(f"{name} for {policy.label}: {value!r} (residual {residual:.3g})")
    return Extrapolation(value=value, residual=residual, samples=samples)


def _assumption_points(policy: PolicySpec, b: int, lambda_seq: list[float]) -> list[float]:
    points = []
    for lam in lambda_seq:
        u = fixed_point_u(policy, lam).u_lambda
        points.append(u - lam**b)
    return points


def numeric_A(
    policy: PolicySpec, b: int, lambda_seq: list[float] | None = None
) -> Extrapolation:
    """Extrapolate h_lambda(u_lambda - lambda^b) to lambda = 1, linearly in 1 - lambda.

    Raises:
        NoRootError: If some fixed point is missing
        ExtrapolationUnstableError: If the fit residual exceeds 1e-2
    """
    lambda_seq = sorted(lambda_seq or DEFAULT_CONSTANT_LAMBDAS)
    xs = _assumption_points(policy, b, lambda_seq)
    values = [float(h(policy, lam, x)) for lam, x in zip(lambda_seq, xs, strict=True)]
    gaps = [1.0 - lam for lam in lambda_seq]
    value, residual = linear_intercept(gaps, values)
    return _checked(policy, "A", value, residual, list(zip(gaps, values, strict=True)))


def numeric_B(
    policy: PolicySpec, b: int, lambda_seq: list[float] | None = None
) -> Extrapolation:
    """Extrapolate log(u_lambda - lambda^b)/log(1 - lambda) to lambda = 1.

    The ratio converges like 1/log(1 - lambda), so the fit is in that variable.
    """
    lambda_seq = sorted(lambda_seq or DEFAULT_CONSTANT_LAMBDAS)
    xs = _assumption_points(policy, b, lambda_seq)
    values = [math.log(x) / math.log1p(-lam) for lam, x in zip(lambda_seq, xs, strict=True)]
    value, residual = inverse_log_intercept(lambda_seq, values)
    return _checked(policy, "B", value, residual, list(zip(lambda_seq, values, strict=True)))


def scaled_heavy_value(policy: PolicySpec, lam: float, method: WaitingMethod) -> float:
    """-E[W]/log(1 - lambda)."""
    check_lambda(lam)
    return -mean_waiting(policy, lam, method=method) / math.log1p(-lam)


def extrapolate_heavy(
    policy: PolicySpec,
    lambda_seq: list[float] | None = None,
    method: WaitingMethod = WaitingMethod.SEPARATION,
) -> Extrapolation:
    """Fit -E[W]/log(1-lambda) = c_0 + c_1/(-log(1-lambda)) on the four heaviest loads."""
    lambda_seq = sorted(lambda_seq or DEFAULT_HEAVY_LAMBDAS)
    values = [scaled_heavy_value(policy, lam, method) for lam in lambda_seq]
    value, residual = inverse_log_intercept(lambda_seq, values)
    return _checked(
        policy, "Heavy-traffic limit", value, residual, list(zip(lambda_seq, values, strict=True))
    )


def log_p_ratio(policy: PolicySpec, lam: float) -> float:
    """log(p_lambda)/log(1 - lambda); tends to one as lambda -> 1 for LL(d) and LL(d,K)."""
    return log_idle_probability(policy, lam) / math.log1p(-lam)


def limit_report(policy: PolicySpec, tolerance: float = 0.02) -> LimitReport:
    """Numeric A and B, the limit they imply, and its comparison with the closed form."""
    reference = heavy_traffic_limit(policy)
    b = choose_b(policy, DEFAULT_B_GRID)
    a = numeric_A(policy, b).value
    big_b = numeric_B(policy, b).value
    if policy.discipline == Discipline.WORKLOAD:
        heavy = big_b / (a - 1.0)
    else:
        heavy = big_b / math.log(a)
    extrapolated: Extrapolation | None
    try:
        extrapolated = extrapolate_heavy(policy)
    except UnsupportedPolicyError:
        extrapolated = None

    low_load: float | None
    try:
        low_load = low_load_limit(policy)
    except UnsupportedPolicyError:
        low_load = None

    gaps = [abs(heavy - reference)]
    if extrapolated is not None:
        gaps.append(abs(extrapolated.value - reference))
    within = max(gaps) <= tolerance * abs(reference)
    if not within:
        logger.warning(
            f"{policy.label}: heavy-traffic estimates {heavy:.6g} (from A, B) deviate from "
            f"{reference:.6g} by more than {tolerance:.0%}"
        )
    return LimitReport(
        A=a,
        B=big_b,
        heavy_limit=heavy,
        closed_form_reference=reference,
        heavy_extrapolated=extrapolated.value if extrapolated else None,
        extrapolation_residual=extrapolated.residual if extrapolated else None,
        low_load_limit=low_load,
        b=b,
        tolerance=tolerance,
        within_tolerance=within,
    )
