"""Exact results for LL(d,p) and the M/M/1 reference."""

import logging
import math

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad

from closed_form.models import LLdpParams, QueueBounds, SeriesEvaluation, SeriesMethod
from core.exceptions import InvalidArgumentError

logger = logging.getLogger(__name__)

SLOW_CONVERGENCE_THRESHOLD = 1.0 - 1e-6
MAX_SERIES_TERMS = 10_000_000


def _check_w(w: NDArray[np.float64]) -> None:
    if np.any(w < 0):
        raise InvalidArgumentError("w must be nonnegative")


def lldp_ccdf(params: LLdpParams, w: ArrayLike) -> float | NDArray[np.float64]:
    """Workload ccdf of LL(d,p).

    F(w) = lambda * (z + (1-z) e^{(d-1) b w})^(-1/(d-1)), evaluated in log space.
    """
    w = np.asarray(w, dtype=float)
    _check_w(w)
    d, z = params.d, params.z
    exponent = (d - 1) * params.b * w
    log_inner = np.logaddexp(math.log(z), math.log1p(-z) + exponent)
    values = params.lam * np.exp(-log_inner / (d - 1))
    return float(values) if values.ndim == 0 else values


def lldp_ccdf_slope(params: LLdpParams, w: ArrayLike) -> float | NDArray[np.float64]:
    """Right-hand side of the LL(d,p) ODE, lambda(p F^d + (1-p) F) - F, along the closed form."""
    f = np.asarray(lldp_ccdf(params, w))
    slope = params.lam * (params.p * f**params.d + (1.0 - params.p) * f) - f
    return float(slope) if slope.ndim == 0 else slope


def lldp_ccdf_derivative_residual(params: LLdpParams, w: float, step: float = 1e-5) -> float:
    """Central-difference derivative of the closed form minus the ODE right-hand side."""
    lo = max(w - step, 0.0)
    hi = w + step
    fd = (lldp_ccdf(params, hi) - lldp_ccdf(params, lo)) / (hi - lo)
    return float(fd - lldp_ccdf_slope(params, w))


def _log_form(params: LLdpParams) -> float:
    return -math.log1p(-params.z) / (params.p * params.lam)


def _integral_form(params: LLdpParams) -> float:
    # sum_n z^n / (1 + n(d-1)) = int_0^1 dt / (1 - z t^(d-1))
    z, d = params.z, params.d
    value, _ = quad(
        lambda t: 1.0 / (1.0 - z * t ** (d - 1)),
        0.0,
        1.0,
        epsabs=0.0,
        epsrel=1e-13,
        limit=500,
        points=[1.0 - 1e-3, 1.0 - 1e-6],
    )
    return params.lam / params.b * value


def lldp_series(params: LLdpParams, tol: float = 1e-16) -> SeriesEvaluation:
    """Evaluate E[Q] = lambda/b * sum_n z^n / (1 + n(d-1)).

    Partial sums use compensated (Kahan) summation and stop once a term drops
    below ``tol`` times the running sum. When z is within 1e-6 of one the
    series converges too slowly; d = 2 then uses the logarithmic form and
    larger d the equivalent integral of 1 / (1 - z t^(d-1)) over [0, 1].
    """
    z, d = params.z, params.d
    if z > SLOW_CONVERGENCE_THRESHOLD:
        logger.warning(f"LL(d,p) series converges slowly (z={z!r}); using a closed fallback")
        if d == 2:
            return SeriesEvaluation(
                value=_log_form(params),
                terms=0,
                method=SeriesMethod.LOG_FORM,
                slow_convergence=True,
            )
        return SeriesEvaluation(
            value=_integral_form(params),
            terms=0,
            method=SeriesMethod.INTEGRAL,
            slow_convergence=True,
        )

    total = 1.0
    compensation = 0.0
    power = 1.0
    n = 0
    while n < MAX_SERIES_TERMS:
        n += 1
        power *= z
        term = power / (1 + n * (d - 1))
        y = term - compensation
        t = total + y
        compensation = (t - total) - y
        total = t
        if term < tol * total:
            break
    else:
        return SeriesEvaluation(
            value=_integral_form(params),
            terms=n,
            method=SeriesMethod.INTEGRAL,
            slow_convergence=True,
        )
    return SeriesEvaluation(
        value=params.lam / params.b * total, terms=n + 1, method=SeriesMethod.SERIES
    )


def lldp_mean_queue(params: LLdpParams, tol: float = 1e-16) -> float:
    """Mean queue length (equivalently mean workload) of LL(d,p)."""
    return lldp_series(params, tol).value


def lldp_mean_waiting(params: LLdpParams, tol: float = 1e-16) -> float:
    """Mean waiting time E[Q]/lambda - 1."""
    return lldp_mean_queue(params, tol) / params.lam - 1.0


def lldp_q_tilde(params: LLdpParams) -> float:
    """Q~ = lambda/b * (1 + log(1/(1-z)) / (d-1)), an upper bound on E[Q]."""
    return params.lam / params.b * (1.0 - math.log1p(-params.z) / (params.d - 1))


def lldp_bounds(params: LLdpParams) -> QueueBounds:
    """Bracket E[Q] between Q~ minus a pi^2/6 error term and Q~."""
    upper = lldp_q_tilde(params)
    error = (
        params.lam ** (params.d + 1)
        / (params.p * (params.d - 1) ** 2 * params.b**2)
        * math.pi**2
        / 6.0
    )
    return QueueBounds(lower=upper - error, upper=upper)


def lldp_heavy_traffic_limit(params: LLdpParams) -> float:
    """lim -E[W]/log(1-lambda) = 1/(p(d-1)); lambda in ``params`` is ignored."""
    return 1.0 / (params.p * (params.d - 1))


def mm1_ccdf(lam: float, w: ArrayLike) -> float | NDArray[np.float64]:
    """M/M/1 workload ccdf lambda e^{-(1-lambda) w}."""
    if not 0.0 < lam < 1.0:
        raise InvalidArgumentError(f"lambda must lie in (0, 1), got {lam!r}")
    w = np.asarray(w, dtype=float)
    _check_w(w)
    values = lam * np.exp(-(1.0 - lam) * w)
    return float(values) if values.ndim == 0 else values
