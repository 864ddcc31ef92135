"""Pure maps behind the cavity ODE.

T_lambda maps the ccdf value F(w) to the probability that an arrival finds all
probed servers with workload at least w. Everything else here (T', h, zeta,
the fixed point u_lambda, p_lambda) is derived from it.
"""

import logging
import math

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq
from scipy.special import comb

from core.cache import get_fixed_point_cache, memoized
from core.exceptions import (
    BNotFoundError,
    InvalidArgumentError,
    NoRootError,
    NonConvergenceError,
    UnsupportedPolicyError,
)
from core.telemetry import record_root_solve
from policies.models import FixedPointResult, PolicyKind, PolicySpec

logger = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-12
SCAN_START = 1e-13
SCAN_RATIO = 1.001
U_MAX_CAP = 1e6
MAX_BRENT_ITERATIONS = 500
B_MAX = 64


def check_lambda(lam: float, allow_one: bool = False) -> None:
    """Reject arrival rates outside (0, 1) (or (0, 1] when ``allow_one``)."""
    in_range = 0.0 < lam <= 1.0 if allow_one else 0.0 < lam < 1.0
    if not (math.isfinite(lam) and in_range):
        interval = "(0, 1]" if allow_one else "(0, 1)"
        raise InvalidArgumentError(
            f"lambda must lie in {interval}, got {lam!r}", details={"lambda": lam}
        )


def _as_output(values: NDArray[np.float64]) -> float | NDArray[np.float64]:
    return float(values) if values.ndim == 0 else values


def memory_idle_probability(lam: float, d: int, memory_size: int) -> float:
    """pi_0: probability the dispatcher holds no idle-server token.

    pi_0 = (1 - (1 - lambda^d)^(1/(M+1))) / lambda^d.
    """
    a = lam**d
    if a >= 1.0:
        return 1.0
    return -math.expm1(math.log1p(-a) / (memory_size + 1)) / a


def _ll_dk_sums(d: int, k: int, y: NDArray[np.float64]) -> tuple[NDArray, NDArray]:
    """Sums over j < K of C(d,j) y^(d-j) (1-y)^j weighted by (K-j) and by (d-j)/y."""
    j = np.arange(k)
    c = comb(d, j)
    y_ = y[..., None]
    base = c * np.power(y_, d - j - 1) * np.power(1.0 - y_, j)
    value = np.sum((k - j) * base * y_, axis=-1)
    slope = np.sum((d - j) * base, axis=-1)
    return value, slope


def _evaluate_t(policy: PolicySpec, lam: float, u: ArrayLike) -> NDArray[np.float64]:
    u = np.asarray(u, dtype=float)
    match policy.kind:
        case PolicyKind.LL_D | PolicyKind.RED_D:
            return lam * np.power(u, policy.d)
        case PolicyKind.LL_DK:
            assert policy.d is not None and policy.k is not None
            value, _ = _ll_dk_sums(policy.d, policy.k, u)
            return lam / policy.k * value
        case PolicyKind.LL_MIX:
            assert policy.choices is not None
            return lam * sum(p * np.power(u, d) for d, p in policy.choices)
        case PolicyKind.MEM_LL_D:
            assert policy.d is not None and policy.memory_size is not None
            pi0 = memory_idle_probability(lam, policy.d, policy.memory_size)
            return lam * pi0 * np.power(u, policy.d)
    raise UnsupportedPolicyError(f"Unknown policy kind {policy.kind}")


def _evaluate_t_prime(policy: PolicySpec, lam: float, u: ArrayLike) -> NDArray[np.float64]:
    u = np.asarray(u, dtype=float)
    match policy.kind:
        case PolicyKind.LL_D | PolicyKind.RED_D:
            assert policy.d is not None
            return lam * policy.d * np.power(u, policy.d - 1)
        case PolicyKind.LL_DK:
            assert policy.d is not None and policy.k is not None
            _, slope = _ll_dk_sums(policy.d, policy.k, u)
            return lam / policy.k * slope
        case PolicyKind.LL_MIX:
            assert policy.choices is not None
            return lam * sum(p * d * np.power(u, d - 1) for d, p in policy.choices)
        case PolicyKind.MEM_LL_D:
            assert policy.d is not None and policy.memory_size is not None
            pi0 = memory_idle_probability(lam, policy.d, policy.memory_size)
            return lam * pi0 * policy.d * np.power(u, policy.d - 1)
    raise UnsupportedPolicyError(f"Unknown policy kind {policy.kind}")


def _check_u(u: ArrayLike) -> None:
    if np.any(np.asarray(u, dtype=float) < 0):
        raise InvalidArgumentError("u must be nonnegative")


def t_map(policy: PolicySpec, lam: float, u: ArrayLike) -> float | NDArray[np.float64]:
    """Evaluate T_lambda(u).

    Args:
        policy: Policy instance
        lam: Arrival rate per server, in (0, 1)
        u: Scalar or array of ccdf values (values above 1 are allowed)

    Returns:
        T_lambda(u), with the shape of ``u``

    Raises:
        InvalidArgumentError: If lambda is outside (0, 1) or u < 0
    """
    check_lambda(lam)
    _check_u(u)
    return _as_output(_evaluate_t(policy, lam, u))


def t_map_derivative(policy: PolicySpec, lam: float, u: ArrayLike) -> float | NDArray[np.float64]:
    """Analytic dT_lambda/du. Accepts lambda = 1 for heavy-traffic limits."""
    check_lambda(lam, allow_one=True)
    _check_u(u)
    return _as_output(_evaluate_t_prime(policy, lam, u))


def busy_probability(policy: PolicySpec, lam: float) -> float:
    """Probability that an arrival finds all its probes busy, T_lambda(lambda)/lambda."""
    check_lambda(lam)
    if policy.kind in (PolicyKind.RED_D, PolicyKind.MEM_LL_D):
        raise UnsupportedPolicyError(
            f"No idle-assignment probability for {policy.label}", details={"policy": policy.label}
        )
    return float(_evaluate_t(policy, lam, lam)) / lam


def p_idle(policy: PolicySpec, lam: float) -> float:
    """Probability p_lambda that an arriving job is assigned to an idle server.

    Raises:
        UnsupportedPolicyError: For Red(d) and memory LL(d)
    """
    return 1.0 - busy_probability(policy, lam)


def log_idle_probability(policy: PolicySpec, lam: float) -> float:
    """log(p_lambda), accurate when p_lambda is close to one."""
    return math.log1p(-busy_probability(policy, lam))


def fixed_point_closed_form(policy: PolicySpec, lam: float) -> float:
    """u_lambda for policies with T(u) = c u^d.

    That is lambda^(1/(1-d)) for LL(d) and Red(d), and (lambda pi_0)^(1/(1-d)) with memory.
    """
    check_lambda(lam)
    if policy.kind in (PolicyKind.LL_D, PolicyKind.RED_D):
        c = lam
    elif policy.kind == PolicyKind.MEM_LL_D:
        assert policy.d is not None and policy.memory_size is not None
        c = lam * memory_idle_probability(lam, policy.d, policy.memory_size)
    else:
        raise UnsupportedPolicyError(f"No closed-form fixed point for {policy.label}")
    assert policy.d is not None
    if policy.d == 1:
        raise NoRootError(f"{policy.label} has no fixed point above 1", details={"lambda": lam})
    return float(c ** (1.0 / (1 - policy.d)))


def _scan_upper_bound(policy: PolicySpec, lam: float) -> float:
    # T(1) is the leading coefficient c of the dominant c u^d_max behaviour.
    if policy.d_max == 1:
        return U_MAX_CAP
    t_one = float(_evaluate_t(policy, lam, 1.0))
    return min(10.0 * t_one ** (1.0 / (1 - policy.d_max)), U_MAX_CAP)


@memoized(get_fixed_point_cache)
def fixed_point_u(policy: PolicySpec, lam: float) -> FixedPointResult:
    """Find the minimal root u_lambda of T_lambda(u) = u on (1, u_max].

    A geometric sign scan on u - 1 (starting at 1e-13) brackets the first sign
    change, which is then refined with Brent's method.

    Args:
        policy: Policy instance
        lam: Arrival rate in (0, 1)

    Returns:
        FixedPointResult

    Raises:
        NoRootError: If the scan finds no sign change in (1, u_max]
        NonConvergenceError: If Brent's method fails to converge
    """
    check_lambda(lam)
    u_max = _scan_upper_bound(policy, lam)
    n_points = int(math.ceil(math.log((u_max - 1.0) / SCAN_START) / math.log(SCAN_RATIO))) + 1
    us = 1.0 + np.geomspace(SCAN_START, u_max - 1.0, n_points)
    gaps = _evaluate_t(policy, lam, us) - us

    crossings = np.flatnonzero(gaps >= 0.0)
    if crossings.size == 0:
        logger.debug(f"No root of T(u)=u for {policy.label} at lambda={lam} below u_max={u_max:g}")
        raise NoRootError(
            f"T(u) = u has no root in (1, {u_max:g}] for {policy.label} at lambda={lam}",
            details={"policy": policy.label, "lambda": lam, "u_max": u_max},
        )

    i = int(crossings[0])
    lo = 1.0 if i == 0 else float(us[i - 1])
    hi = float(us[i])

    def g(x: float) -> float:
        return float(_evaluate_t(policy, lam, x)) - x

    if gaps[i] == 0.0:
        u_lambda, iterations = hi, 0
    else:
        u_lambda, info = brentq(
            g,
            lo,
            hi,
            xtol=1e-15,
            rtol=4 * np.finfo(float).eps,
            maxiter=MAX_BRENT_ITERATIONS,
            full_output=True,
            disp=False,
        )
        iterations = info.iterations
        if not info.converged:
            raise NonConvergenceError(
                f"Brent iteration did not converge for {policy.label} at lambda={lam}",
                details={"bracket": [lo, hi], "iterations": iterations},
            )

    residual = abs(g(u_lambda))
    if residual > RESIDUAL_TOLERANCE * max(1.0, u_lambda):
        raise NonConvergenceError(
            f"Fixed-point residual {residual:.3g} above tolerance",
            details={"policy": policy.label, "lambda": lam, "u": u_lambda},
        )

    record_root_solve(iterations)
    logger.debug(
        f"u_lambda={u_lambda!r} for {policy.label} at lambda={lam} "
        f"(bracket [{lo!r}, {hi!r}], {iterations} iterations)"
    )
    return FixedPointResult(
        u_lambda=u_lambda,
        residual=residual,
        bracket_lo=lo,
        bracket_hi=hi,
        iterations=iterations,
    )


def h(policy: PolicySpec, lam: float, x: ArrayLike) -> float | NDArray[np.float64]:
    """h_lambda(x) = (u_lambda - T_lambda(u_lambda - x)) / x for x in (0, u_lambda].

    Raises:
        NoRootError: If u_lambda does not exist
        InvalidArgumentError: If x is outside (0, u_lambda]
    """
    u = fixed_point_u(policy, lam).u_lambda
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or np.any(x > u):
        raise InvalidArgumentError(f"x must lie in (0, u_lambda={u!r}]")
    return _as_output((u - _evaluate_t(policy, lam, u - x)) / x)


def h_limit_at_one(policy: PolicySpec, eps: ArrayLike) -> float | NDArray[np.float64]:
    """lim_{lambda -> 1} h_lambda(eps), i.e. (1 - T_1(1 - eps)) / eps."""
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0) or np.any(eps > 1):
        raise InvalidArgumentError("eps must lie in (0, 1]")
    return _as_output((1.0 - _evaluate_t(policy, 1.0, 1.0 - eps)) / eps)


def zeta(policy: PolicySpec, lam: float, x: ArrayLike) -> float | NDArray[np.float64]:
    """zeta_lambda(x) = K x^2 h_lambda'(x) for LL(d,K), in closed form.

    h_lambda is decreasing wherever zeta_lambda <= 0.

    Raises:
        UnsupportedPolicyError: For policies other than LL(d,K)
    """
    if policy.kind != PolicyKind.LL_DK:
        raise UnsupportedPolicyError(
            f"zeta is defined for LL(d,K) only, got {policy.label}",
            details={"policy": policy.label},
        )
    assert policy.d is not None and policy.k is not None
    d, k = policy.d, policy.k
    u = fixed_point_u(policy, lam).u_lambda
    y = u - np.asarray(x, dtype=float)
    j = np.arange(k)
    c = comb(d, j)
    y_ = y[..., None]
    level = np.sum(c * np.power(y_, d - j) * np.power(1.0 - y_, j), axis=-1)
    slope = np.sum((d - j) * c * np.power(y_, d - j - 1) * np.power(1.0 - y_, j), axis=-1)
    return _as_output(-k * u - lam * (d - k) * level + lam * u * slope)


def choose_b(policy: PolicySpec, lambda_grid: list[float], b_max: int = B_MAX) -> int:
    """Smallest b with zeta_lambda(u_lambda - lambda^b) <= 0 for every grid lambda.

    Policies other than LL(d,K) with K >= 2 use b = 0.

    Raises:
        NoRootError: If some grid lambda has no fixed point
        BNotFoundError: If no b <= b_max works
    """
    if policy.kind != PolicyKind.LL_DK or policy.k == 1:
        return 0

    u = {lam: fixed_point_u(policy, lam).u_lambda for lam in lambda_grid}
    failing: list[float] = []
    for b in range(b_max + 1):
        failing = [lam for lam in lambda_grid if zeta(policy, lam, u[lam] - lam**b) > 0.0]
        if not failing:
            logger.debug(f"choose_b: b={b} for {policy.label} on {len(lambda_grid)} grid points")
            return b
    raise BNotFoundError(
        f"No b <= {b_max} makes h decreasing for {policy.label}",
        details={"policy": policy.label, "failing_lambda": failing},
    )
