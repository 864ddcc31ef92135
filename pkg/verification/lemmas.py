"""Numeric checks of the auxiliary properties of T_lambda, u_lambda and h_lambda."""

import logging
import math

import numpy as np

from core.exceptions import NoRootError, UnsupportedPolicyError
from limits.extrapolation import linear_intercept
from policies.kernels import _evaluate_t, _evaluate_t_prime, fixed_point_u, zeta
from policies.models import PolicyKind, PolicySpec
from verification.assumptions import MONOTONE_TOLERANCE, X_GRID_POINTS, h_decreasing_witness
from verification.models import DEFAULT_LAMBDA_GRID, AssumptionReport, Witness

logger = logging.getLogger(__name__)

GRID_SIDE = 100
DOMINATION_TOLERANCE = 1e-15
RATIO_GRID_POINTS = 10_000
FIRST_DERIVATIVE_KS = [3, 4, 5, 6]
SECOND_DERIVATIVE_KS = [3, 4, 5]
FIRST_DERIVATIVE_TOLERANCE = 0.01
SECOND_DERIVATIVE_TOLERANCE = 0.05
ZETA_TOLERANCE = 1e-9


def check_T_dominated(policy: PolicySpec, grid_side: int = GRID_SIDE) -> AssumptionReport:
    """T_lambda(u) <= lambda u on a grid_side x grid_side grid of (lambda, u).

    Equality is allowed at u = 0 and u = 1.
    """
    lams = np.linspace(0.0, 1.0, grid_side + 2)[1:-1]
    us = np.linspace(0.0, 1.0, grid_side)
    witnesses = []
    for lam in lams:
        excess = _evaluate_t(policy, lam, us) - lam * us
        bad = np.flatnonzero(excess > DOMINATION_TOLERANCE)
        if bad.size:
            i = int(bad[0])
            witnesses.append(Witness(lam=float(lam), point=float(us[i]), observed=float(excess[i])))
    return AssumptionReport.from_witnesses("T_dominated", policy, lams.tolist(), witnesses)


def check_t_over_u_increasing(
    policy: PolicySpec,
    lambda_grid: list[float] | None = None,
    n_points: int = RATIO_GRID_POINTS,
) -> AssumptionReport:
    """(T_lambda(u)/u)' > 0 on (0, 1], via the sign of u T'(u) - T(u).

    SKIPPED for LL(1), where T_lambda(u)/u is constant.
    """
    grid = sorted(lambda_grid or DEFAULT_LAMBDA_GRID)
    if policy.d_max == 1:
        return AssumptionReport.skipped("t_over_u_increasing", policy, grid, "T(u)/u is constant")
    us = np.linspace(1.0 / n_points, 1.0, n_points)
    witnesses = []
    for lam in grid:
        numerator = us * _evaluate_t_prime(policy, lam, us) - _evaluate_t(policy, lam, us)
        bad = np.flatnonzero(numerator <= 0.0)
        if bad.size:
            i = int(bad[0])
            witnesses.append(Witness(lam=lam, point=float(us[i]), observed=float(numerator[i])))
    return AssumptionReport.from_witnesses("t_over_u_increasing", policy, grid, witnesses)


def u_prime_limit_reference(policy: PolicySpec, order: int = 1) -> float | None:
    """Closed-form lim_{lambda -> 1} of the ``order``-th derivative of u_lambda.

    For LL(d,K) and n <= K this is (-1)^n n! d^(n-1) K / (d-K)^n; for K = 1 and
    n = 2 it is 2d/(d-1)^2 - d/(d-1). Mixes have a first-order formula only.
    Returns None when no formula is checked.
    """
    if policy.kind == PolicyKind.LL_MIX:
        return -1.0 / (policy.mean_probes - 1.0) if order == 1 else None
    if policy.kind != PolicyKind.LL_DK:
        return None
    assert policy.d is not None and policy.k is not None
    d, k = policy.d, policy.k
    if order <= k:
        return (-1) ** order * math.factorial(order) * d ** (order - 1) * k / (d - k) ** order
    if order == 2 and k == 1:
        return 2.0 * d / (d - 1) ** 2 - d / (d - 1)
    return None


def _u(policy: PolicySpec, lam: float) -> float:
    return fixed_point_u(policy, lam).u_lambda


def _first_derivative(policy: PolicySpec, lam: float) -> float:
    step = (1.0 - lam) / 10.0
    return (_u(policy, lam + step) - _u(policy, lam - step)) / (2.0 * step)


def _second_derivative(policy: PolicySpec, lam: float) -> float:
    step = (1.0 - lam) / 4.0
    return (_u(policy, lam + step) - 2.0 * _u(policy, lam) + _u(policy, lam - step)) / step**2


def check_u_prime_limit(
    policy: PolicySpec, tolerance: float = FIRST_DERIVATIVE_TOLERANCE
) -> AssumptionReport:
    """Compare extrapolated derivatives of u_lambda at lambda -> 1 with their closed forms.

    Central differences at lambda = 1 - 10^-k are extrapolated linearly in
    1 - lambda. The second derivative is checked (within 5%) when a formula
    exists for it.

    Raises:
        UnsupportedPolicyError: For policies other than LL(d,K) and mixes
        ExtrapolationUnstableError: If the difference quotients do not settle
    """
    if policy.kind not in (PolicyKind.LL_DK, PolicyKind.LL_MIX):
        raise UnsupportedPolicyError(
            f"Derivative limits are checked for LL(d,K) and mixes, got {policy.label}",
            details={"policy": policy.label},
        )
    lams = [1.0 - 10.0**-k for k in FIRST_DERIVATIVE_KS]
    try:
        first = [_first_derivative(policy, lam) for lam in lams]
    except NoRootError as e:
        return AssumptionReport.skipped("u_prime_limit", policy, lams, e.message)

    witnesses = []
    limit, residual = linear_intercept([1.0 - lam for lam in lams], first)
    reference = u_prime_limit_reference(policy, 1)
    assert reference is not None
    if abs(limit - reference) > tolerance * abs(reference):
        witnesses.append(Witness(lam=1.0, point=1.0, observed=limit))
    detail = f"u' -> {limit:.8g} (expected {reference:.8g}, residual {residual:.2g})"

    second_ref = u_prime_limit_reference(policy, 2)
    if second_ref is not None:
        second_lams = [1.0 - 10.0**-k for k in SECOND_DERIVATIVE_KS]
        second = [_second_derivative(policy, lam) for lam in second_lams]
        second_limit, _ = linear_intercept([1.0 - lam for lam in second_lams], second)
        if abs(second_limit - second_ref) > SECOND_DERIVATIVE_TOLERANCE * abs(second_ref):
            witnesses.append(Witness(lam=1.0, point=2.0, observed=second_limit))
        detail += f"; u'' -> {second_limit:.6g} (expected {second_ref:.6g})"
    return AssumptionReport.from_witnesses("u_prime_limit", policy, lams, witnesses, detail=detail)


def check_zeta_agreement(
    policy: PolicySpec, lambda_grid: list[float] | None = None, b: int = 0
) -> AssumptionReport:
    """The sign of zeta and a direct scan of h must agree on whether h is decreasing.

    Both are evaluated on the same x-grid of [u_lambda - lambda^b, u_lambda).
    SKIPPED for policies other than LL(d,K).
    """
    grid = sorted(lambda_grid or DEFAULT_LAMBDA_GRID)
    if policy.kind != PolicyKind.LL_DK:
        return AssumptionReport.skipped(
            "zeta_agreement", policy, grid, "zeta is defined for LL(d,K) only"
        )
    witnesses = []
    for lam in grid:
        u = _u(policy, lam)
        xs = np.linspace(u - lam**b, u, X_GRID_POINTS + 1)[:-1]
        zetas = np.asarray(zeta(policy, lam, xs))
        zeta_decreasing = bool(np.all(zetas <= ZETA_TOLERANCE))
        direct_decreasing = h_decreasing_witness(policy, lam, b) is None
        if zeta_decreasing != direct_decreasing:
            i = int(np.argmax(zetas))
            witnesses.append(Witness(lam=lam, point=float(xs[i]), observed=float(zetas[i])))
    return AssumptionReport.from_witnesses(
        "zeta_agreement",
        policy,
        grid,
        witnesses,
        b=b,
        detail=f"h scan tolerance {MONOTONE_TOLERANCE:g}, zeta tolerance {ZETA_TOLERANCE:g}",
    )
