"""Cavity ODE F'(w) = T(F(w)) - F(w) and the quantities derived from it."""

import logging
import math
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel
from scipy.integrate import quad, simpson, solve_ivp

from cavity.models import SolverOptions, WaitingMethod, WorkloadCurve
from cavity.queue_length import sq_mean_waiting
from core.exceptions import (
    InvalidArgumentError,
    InvalidBoundaryError,
    StepUnderflowError,
    UnsupportedPolicyError,
)
from core.telemetry import record_ode_solve, record_quadrature
from policies.kernels import _evaluate_t, _evaluate_t_prime, check_lambda
from policies.models import Discipline, PolicyKind, PolicySpec

logger = logging.getLogger(__name__)

MIN_STEP = 1e-14
SAMPLES_PER_STEP = 4
CONSISTENCY_PROBES = 10
SEPARATION_DEPTH = 64


class CcdfPoint(BaseModel):
    """A waiting-time ccdf value; ``extrapolated`` marks a certified tail bound."""

    w: float
    value: float
    extrapolated: bool = False


def default_boundary(policy: PolicySpec, lam: float) -> float:
    """F(0): lambda for workload curves, 1 for the Red(d) response-time curve."""
    return 1.0 if policy.kind == PolicyKind.RED_D else lam


def _windows(policy: PolicySpec, lam: float, boundary: float, opts: SolverOptions) -> list[float]:
    log_ratio = math.log(boundary / opts.tail_epsilon)
    # F(w) <= boundary e^{-(1-lambda) w} since T(u) <= lambda u
    certified = log_ratio / (1.0 - lam)
    a = policy.mean_probes
    if a <= 1.0:
        return [certified]
    decay = 1.0 - float(_evaluate_t_prime(policy, lam, 0.0))
    heuristic = opts.w_max_factor * -math.log1p(-lam) / (a - 1.0) + log_ratio / decay
    return sorted({min(heuristic, certified), certified})


def _sample_steps(t: np.ndarray) -> np.ndarray:
    fractions = np.arange(SAMPLES_PER_STEP) / SAMPLES_PER_STEP
    inner = t[:-1, None] + np.diff(t)[:, None] * fractions
    return np.append(inner.ravel(), t[-1])


def integral_identity_residual(
    policy: PolicySpec, curve: WorkloadCurve, probes: int = CONSISTENCY_PROBES
) -> float:
    """Largest deviation from F(w) = F(0) e^{-w} + int_0^w T(F(s)) e^{s-w} ds at probe points."""
    grid, values = curve.grid, curve.values
    t_values = _evaluate_t(policy, curve.lam, values)
    worst = 0.0
    for i in np.unique(np.linspace(0, grid.size - 1, probes).astype(int)):
        if i == 0:
            continue
        s = grid[: i + 1]
        integrand = t_values[: i + 1] * np.exp(s - grid[i])
        if i >= 2:
            integral = simpson(integrand, x=s)
        else:
            integral = 0.5 * (integrand[0] + integrand[1]) * (s[1] - s[0])
        expected = curve.boundary * math.exp(-grid[i]) + integral
        worst = max(worst, abs(float(values[i]) - float(expected)))
    return worst


def solve_ccdf(
    policy: PolicySpec,
    lam: float,
    boundary: float | None = None,
    opts: SolverOptions | None = None,
) -> WorkloadCurve:
    """Integrate the cavity ODE from F(0) = boundary until F drops below tail_epsilon.

    Uses the Dormand-Prince 4(5) pair (scipy RK45) with a terminal event at
    F = tail_epsilon. Each accepted step is sampled at quarter points of its
    dense output. A first window sized from the heavy-traffic plateau length
    is extended to the certified M/M/1 bound when the event has not fired.

    Args:
        policy: Policy instance
        lam: Arrival rate in (0, 1)
        boundary: F(0) in [lambda, 1]; defaults to lambda (1 for Red(d))
        opts: Solver tolerances

    Returns:
        WorkloadCurve

    Raises:
        InvalidBoundaryError: If boundary is outside [lambda, 1]
        StepUnderflowError: If the step size collapses below 1e-14
    """
    check_lambda(lam)
    opts = opts or SolverOptions()
    if boundary is None:
        boundary = default_boundary(policy, lam)
    if not lam <= boundary <= 1.0:
        raise InvalidBoundaryError(
            f"Boundary {boundary!r} outside [lambda, 1] = [{lam!r}, 1]",
            details={"boundary": boundary, "lambda": lam},
        )

    def rhs(_w: float, y: np.ndarray) -> np.ndarray:
        return _evaluate_t(policy, lam, y) - y

    def below_tail(_w: float, y: np.ndarray) -> float:
        return float(y[0]) - opts.tail_epsilon

    below_tail.terminal = True  # type: ignore[attr-defined]
    below_tail.direction = -1  # type: ignore[attr-defined]

    grids: list[np.ndarray] = []
    samples: list[np.ndarray] = []
    n_steps = 0
    w_start, f_start = 0.0, boundary
    for w_end in _windows(policy, lam, boundary, opts):
        if w_end <= w_start:
            continue
        sol = solve_ivp(
            rhs,
            (w_start, w_end),
            [f_start],
            method="RK45",
            rtol=opts.local_tol,
            atol=opts.tail_epsilon * 1e-3,
            dense_output=True,
            events=below_tail,
        )
        if sol.status == -1 or (sol.t.size > 2 and np.min(np.diff(sol.t)[:-1]) < MIN_STEP):
            raise StepUnderflowError(
                f"Integration failed for {policy.label} at lambda={lam}: {sol.message}",
                details={"policy": policy.label, "lambda": lam, "w": float(sol.t[-1])},
            )
        n_steps += sol.t.size - 1
        w = _sample_steps(sol.t)
        if grids:
            w = w[1:]
        grids.append(w)
        samples.append(sol.sol(w)[0])
        w_start, f_start = float(sol.t[-1]), float(sol.y[0, -1])
        if sol.status == 1:
            break

    grid = np.concatenate(grids)
    values = np.minimum.accumulate(np.clip(np.concatenate(samples), 0.0, 1.0))
    values[0] = boundary
    slopes = _evaluate_t(policy, lam, values) - values
    tail_value = float(values[-1])

    curve = WorkloadCurve(
        grid=grid,
        values=values,
        slopes=slopes,
        boundary=boundary,
        lam=lam,
        tail_cut=float(grid[-1]),
        tail_remainder_bound=tail_value / (1.0 - lam),
        n_steps=n_steps,
    )
    residual = integral_identity_residual(policy, curve)
    if residual > opts.consistency_tol:
        logger.warning(
            f"Integral identity residual {residual:.3g} exceeds {opts.consistency_tol:g} "
            f"for {policy.label} at lambda={lam}"
        )
    object.__setattr__(curve, "consistency_residual", residual)
    object.__setattr__(curve, "consistent", residual <= opts.consistency_tol)

    record_ode_solve(n_steps)
    logger.debug(
        f"Solved {policy.label} at lambda={lam}: {n_steps} steps, tail cut w={curve.tail_cut:.4g}, "
        f"tail bound {curve.tail_remainder_bound:.3g}"
    )
    return curve


def mean_workload(curve: WorkloadCurve) -> float:
    """int_0^inf F(w) dw: Simpson over the grid plus half the certified tail bound."""
    return float(simpson(curve.values, x=curve.grid)) + curve.tail_remainder_bound / 2.0


def mean_workload_error(curve: WorkloadCurve) -> float:
    """Bound on the tail part of the mean-workload error."""
    return curve.tail_remainder_bound / 2.0


def _workload_policy(policy: PolicySpec, lam: float) -> None:
    check_lambda(lam)
    if policy.kind == PolicyKind.RED_D:
        raise UnsupportedPolicyError(
            "Red(d) curves describe response times; use mean_response",
            details={"policy": policy.label},
        )


def _separation_integral(func: Callable[[float], float], upper: float) -> float:
    """int_0^upper of an integrand that peaks at ``upper``, on a geometric partition."""
    gaps = upper * 0.5 ** np.arange(SEPARATION_DEPTH)
    points = np.append(upper - gaps, upper)
    pieces = [
        quad(func, a, b, epsabs=0.0, epsrel=1e-12, limit=200)[0]
        for a, b in zip(points[:-1], points[1:], strict=True)
        if b > a
    ]
    record_quadrature()
    return math.fsum(pieces)


def _escape_rate(policy: PolicySpec, lam: float) -> Callable[[float], float]:
    def rate(u: float) -> float:
        return u - float(_evaluate_t(policy, lam, u))

    return rate


def mean_workload_by_separation(
    policy: PolicySpec, lam: float, boundary: float | None = None
) -> float:
    """int_0^inf F(w) dw computed as int_0^boundary u / (u - T(u)) du.

    The ODE is autonomous, so dw = du / (T(u) - u) along the solution.
    """
    check_lambda(lam)
    if boundary is None:
        boundary = default_boundary(policy, lam)
    if not lam <= boundary <= 1.0:
        raise InvalidBoundaryError(f"Boundary {boundary!r} outside [lambda, 1]")
    rate = _escape_rate(policy, lam)
    return _separation_integral(lambda u: u / rate(u), boundary)


def mean_waiting_by_separation(policy: PolicySpec, lam: float) -> float:
    """E[W] = int_0^lambda (T(u)/lambda) / (u - T(u)) du."""
    _workload_policy(policy, lam)
    rate = _escape_rate(policy, lam)
    return _separation_integral(
        lambda u: float(_evaluate_t(policy, lam, u)) / lam / rate(u), lam
    )


def mean_waiting(
    policy: PolicySpec,
    lam: float,
    opts: SolverOptions | None = None,
    method: WaitingMethod = WaitingMethod.ODE,
) -> float:
    """Mean waiting time E[W] = E[Q]/lambda - 1.

    Queue-length policies use the u_{k+1} = T(u_k) recursion instead.

    Raises:
        UnsupportedPolicyError: For Red(d)
    """
    if policy.discipline == Discipline.QUEUE_LENGTH:
        return sq_mean_waiting(policy, lam)
    _workload_policy(policy, lam)
    if method == WaitingMethod.SEPARATION:
        return mean_waiting_by_separation(policy, lam)
    curve = solve_ccdf(policy, lam, lam, opts)
    return max(mean_workload(curve) / lam - 1.0, 0.0)


def mean_response(
    policy: PolicySpec,
    lam: float,
    opts: SolverOptions | None = None,
    method: WaitingMethod = WaitingMethod.ODE,
) -> float:
    """Mean response time; for Red(d) the integral of the response-time ccdf (F(0) = 1)."""
    if policy.kind != PolicyKind.RED_D:
        return 1.0 + mean_waiting(policy, lam, opts, method)
    if method == WaitingMethod.SEPARATION:
        return mean_workload_by_separation(policy, lam, 1.0)
    return mean_workload(solve_ccdf(policy, lam, 1.0, opts))


def class_waiting_times(
    policy: PolicySpec,
    lam: float,
    opts: SolverOptions | None = None,
    method: WaitingMethod = WaitingMethod.ODE,
) -> dict[int, float]:
    """Per-class mean waiting times int_0^inf F(w)^{d_i} dw of a mixed policy.

    Their p_i-weighted sum is E[W].
    """
    if policy.kind != PolicyKind.LL_MIX:
        raise UnsupportedPolicyError(
            f"Class waiting times apply to mixed policies, got {policy.label}"
        )
    check_lambda(lam)
    assert policy.choices is not None
    if method == WaitingMethod.SEPARATION:
        rate = _escape_rate(policy, lam)
        return {
            d: _separation_integral(lambda u, d=d: u**d / rate(u), lam) for d, _ in policy.choices
        }
    curve = solve_ccdf(policy, lam, lam, opts)
    return {d: float(simpson(curve.values**d, x=curve.grid)) for d, _ in policy.choices}


def waiting_ccdf(policy: PolicySpec, lam: float, curve: WorkloadCurve, w: float) -> CcdfPoint:
    """P(W > w) = T(F(w))/lambda, read off a solved curve.

    Beyond the tail cut the certified bound F(cut) e^{-(1-lambda)(w-cut)} is
    returned with ``extrapolated`` set.
    """
    check_lambda(lam)
    if w < 0:
        raise InvalidArgumentError(f"w must be nonnegative, got {w!r}")
    if w > curve.tail_cut:
        return CcdfPoint(w=w, value=float(curve.tail_bound_at(w)), extrapolated=True)
    f = curve.evaluate(w)
    return CcdfPoint(w=w, value=float(_evaluate_t(policy, lam, f)) / lam)
