"""Sampled checks of the seven standing assumptions behind the heavy-traffic limit.

Every check evaluates the relevant condition on a finite grid and reports the
points where it fails. Nothing here is a proof; a PASS means no grid point
violated the condition within the declared tolerance.
"""

import logging
import math

import numpy as np

from cavity.models import SolverOptions
from cavity.ode import solve_ccdf
from core.exceptions import (
    BNotFoundError,
    CavityLBError,
    ExtrapolationUnstableError,
    InvalidArgumentError,
    NoRootError,
    UnsupportedPolicyError,
)
from limits.extrapolation import linear_intercept, polynomial_intercept
from limits.heavy_traffic import (
    DEFAULT_CONSTANT_LAMBDAS,
    heavy_traffic_constants,
    numeric_A,
    numeric_B,
)
from policies.kernels import _evaluate_t, choose_b, fixed_point_u, h, h_limit_at_one
from policies.models import PolicySpec
from verification.models import DEFAULT_LAMBDA_GRID, AssumptionReport, Witness

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 0.01
U_GRID_POINTS = 1000
X_GRID_POINTS = 100
MONOTONE_TOLERANCE = 1e-10
# lambda at which u_lambda must already be close to 1
LIMIT_PROBE = 1.0 - 1e-12
LIMIT_PROBE_GAP = 1e-2
DOMINATION_SLACK = 1e-9
EPSILON_SEQUENCE = [0.1, 0.05, 0.01]
INNER_LAMBDAS = [1.0 - 10.0**-k for k in range(3, 7)]


def _fixed_point_continuity(policy: PolicySpec, grid: list[float]) -> AssumptionReport:
    witnesses: list[Witness] = []
    u: dict[float, float] = {}
    probes = sorted({*grid, LIMIT_PROBE})
    for lam in probes:
        try:
            u[lam] = fixed_point_u(policy, lam).u_lambda
        except NoRootError as e:
            u_max = float(e.details.get("u_max", 0.0))
            witnesses.append(Witness(lam=lam, point=1.0, observed=u_max))
    if witnesses:
        return AssumptionReport.from_witnesses(
            1, policy, grid, witnesses, detail="u_lambda does not exist"
        )

    for lo, hi in zip(probes[:-1], probes[1:], strict=True):
        mid = 0.5 * (lo + hi)
        u_mid = fixed_point_u(policy, mid).u_lambda
        slack = 1e-9 * u[lo]
        if not u[hi] - slack <= u_mid <= u[lo] + slack:
            witnesses.append(Witness(lam=mid, point=u_mid, observed=u[lo] - u[hi]))
    gap = u[LIMIT_PROBE] - 1.0
    if gap > LIMIT_PROBE_GAP:
        witnesses.append(Witness(lam=LIMIT_PROBE, point=u[LIMIT_PROBE], observed=gap))
    detail = f"u_lambda - 1 = {gap:.3g} at lambda = 1 - 1e-12"
    return AssumptionReport.from_witnesses(1, policy, grid, witnesses, detail=detail)


def _t_below_identity(policy: PolicySpec, grid: list[float]) -> AssumptionReport:
    us = np.linspace(1.0 / U_GRID_POINTS, 1.0, U_GRID_POINTS)
    witnesses = []
    for lam in grid:
        gaps = _evaluate_t(policy, lam, us) - us
        bad = np.flatnonzero(gaps >= 0.0)
        if bad.size:
            i = int(bad[0])
            witnesses.append(Witness(lam=lam, point=float(us[i]), observed=float(gaps[i])))
    return AssumptionReport.from_witnesses(2, policy, grid, witnesses)


def h_decreasing_witness(policy: PolicySpec, lam: float, b: int) -> Witness | None:
    """First x in [u_lambda - lambda^b, u_lambda) where h_lambda increases, if any."""
    u = fixed_point_u(policy, lam).u_lambda
    xs = np.linspace(u - lam**b, u, X_GRID_POINTS + 1)[:-1]
    hs = np.asarray(h(policy, lam, xs))
    steps = np.diff(hs)
    bad = np.flatnonzero(steps > MONOTONE_TOLERANCE * np.max(np.abs(hs)))
    if bad.size == 0:
        return None
    i = int(bad[0])
    return Witness(lam=lam, point=float(xs[i + 1]), observed=float(steps[i]))


def _h_decreasing(policy: PolicySpec, grid: list[float], b: int) -> AssumptionReport:
    witnesses = [w for lam in grid if (w := h_decreasing_witness(policy, lam, b)) is not None]
    return AssumptionReport.from_witnesses(3, policy, grid, witnesses, b=b)


def _crossing_point(grid: np.ndarray, values: np.ndarray, level: float) -> tuple[float, float]:
    """First w with F(w) <= level (linear interpolation) and the local grid spacing."""
    i = int(np.argmax(values <= level))
    if values[i] > level:
        return float(grid[-1]), 0.0
    if i == 0:
        return 0.0, 0.0
    w0, w1, f0, f1 = grid[i - 1], grid[i], values[i - 1], values[i]
    return float(w0 + (f0 - level) * (w1 - w0) / (f0 - f1)), float(w1 - w0)


def _plateau_exit(
    policy: PolicySpec, grid: list[float], b: int, opts: SolverOptions | None
) -> AssumptionReport:
    witnesses = []
    exits = []
    inconsistent = []
    for lam in grid:
        curve = solve_ccdf(policy, lam, opts=opts)
        if not curve.consistent:
            inconsistent.append(f"{lam:g} ({curve.consistency_residual:.2g})")
        dominating = curve.boundary * np.exp(-(1.0 - lam) * curve.grid)
        excess = curve.values - dominating
        if np.max(excess) > DOMINATION_SLACK:
            i = int(np.argmax(excess))
            witnesses.append(
                Witness(lam=lam, point=float(curve.grid[i]), observed=float(excess[i]))
            )
            continue
        w_bar, spacing = _crossing_point(curve.grid, curve.values, lam**b)
        bound = max(0.0, math.log(curve.boundary) - b * math.log(lam)) / (1.0 - lam)
        exits.append(w_bar)
        if w_bar > bound + spacing:
            witnesses.append(Witness(lam=lam, point=w_bar, observed=bound))
    detail = "w_bar = " + ", ".join(f"{w:.4g}" for w in exits)
    if inconsistent:
        detail += "; integral identity residual too large at lambda = " + ", ".join(inconsistent)
    return AssumptionReport.from_witnesses(4, policy, grid, witnesses, b=b, detail=detail)


def _constant_check(
    assumption_id: int, policy: PolicySpec, b: int, tolerance: float
) -> AssumptionReport:
    a_ref, b_ref = heavy_traffic_constants(policy)
    estimate, reference = (numeric_A, a_ref) if assumption_id == 5 else (numeric_B, b_ref)
    lambdas = DEFAULT_CONSTANT_LAMBDAS
    try:
        fit = estimate(policy, b, lambdas)
    except ExtrapolationUnstableError as e:
        residual = float(e.details.get("residual", 0.0))
        witness = Witness(lam=1.0, point=float(b), observed=residual)
        return AssumptionReport.from_witnesses(
            assumption_id, policy, lambdas, [witness], b=b, detail=e.message
        )

    witnesses = []
    if abs(fit.value - reference) > tolerance * abs(reference):
        witnesses.append(Witness(lam=1.0, point=float(b), observed=fit.value))
    detail = f"estimate {fit.value:.8g}, expected {reference:.8g} (fit residual {fit.residual:.2g})"
    return AssumptionReport.from_witnesses(
        assumption_id, policy, lambdas, witnesses, b=b, detail=detail
    )


def _iterated_limit(policy: PolicySpec, tolerance: float) -> AssumptionReport:
    """lim_{eps -> 0} lim_{lambda -> 1} h_lambda(eps) = A.

    The inner limit is a linear fit in 1 - lambda, the outer one a quadratic
    fit in eps. h at lambda = 1 itself serves as a cross-check.
    """
    a_ref, _ = heavy_traffic_constants(policy)
    inner = []
    witnesses = []
    for eps in EPSILON_SEQUENCE:
        values = [float(h(policy, lam, eps)) for lam in INNER_LAMBDAS]
        limit, _ = linear_intercept([1.0 - lam for lam in INNER_LAMBDAS], values)
        at_one = float(h_limit_at_one(policy, eps))
        if abs(limit - at_one) > tolerance * abs(at_one):
            witnesses.append(Witness(lam=1.0, point=eps, observed=limit))
        inner.append(limit)
    outer, _ = polynomial_intercept(EPSILON_SEQUENCE, inner, degree=2)
    if abs(outer - a_ref) > tolerance * a_ref:
        witnesses.append(Witness(lam=1.0, point=0.0, observed=outer))
    return AssumptionReport.from_witnesses(
        7, policy, INNER_LAMBDAS, witnesses, detail=f"iterated limit {outer:.8g}, A = {a_ref:.8g}"
    )


def check_assumption(
    policy: PolicySpec,
    assumption_id: int,
    lambda_grid: list[float] | None = None,
    b: int | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    opts: SolverOptions | None = None,
) -> AssumptionReport:
    """Check one of Assumptions 1-7 for ``policy`` on a lambda grid.

    Args:
        policy: Policy instance
        assumption_id: 1 to 7
        lambda_grid: Loads in (0.9, 1); defaults to 0.9 .. 0.999
        b: Exponent in u_lambda - lambda^b; chosen with choose_b when omitted
        tolerance: Relative tolerance for the limit checks
        opts: Solver options for the ODE-based check (Assumption 4)

    Returns:
        AssumptionReport; SKIPPED when a precondition such as the existence of
        u_lambda fails (FAIL for Assumption 1, which is about that existence)

    Raises:
        InvalidArgumentError: For an unknown assumption id
    """
    grid = sorted(lambda_grid or DEFAULT_LAMBDA_GRID)
    if assumption_id not in range(1, 8):
        raise InvalidArgumentError(f"Unknown assumption {assumption_id!r}; expected 1 to 7")
    if assumption_id == 1:
        return _fixed_point_continuity(policy, grid)

    try:
        if assumption_id == 2:
            return _t_below_identity(policy, grid)
        if assumption_id == 7:
            return _iterated_limit(policy, tolerance)
        if b is None:
            try:
                b = choose_b(policy, grid)
            except BNotFoundError as e:
                failing = e.details.get("failing_lambda", [grid[-1]])
                witnesses = [Witness(lam=lam, point=0.0, observed=1.0) for lam in failing]
                return AssumptionReport.from_witnesses(
                    assumption_id, policy, grid, witnesses, detail=e.message
                )
        if assumption_id == 3:
            return _h_decreasing(policy, grid, b)
        if assumption_id == 4:
            return _plateau_exit(policy, grid, b, opts)
        return _constant_check(assumption_id, policy, b, tolerance)
    except (NoRootError, UnsupportedPolicyError) as e:
        logger.info(f"Assumption {assumption_id} skipped for {policy.label}: {e.message}")
        return AssumptionReport.skipped(assumption_id, policy, grid, e.message)
    except CavityLBError as e:
        logger.warning(f"Assumption {assumption_id} check failed for {policy.label}: {e.message}")
        return AssumptionReport.from_witnesses(
            assumption_id,
            policy,
            grid,
            [Witness(lam=grid[-1], point=0.0, observed=0.0)],
            b=b,
            detail=f"{e.code}: {e.message}",
        )
