"""Floor/ceil majorization of probe-count mixes.

A mix (p, a) uses a_j probes with probability p_j. Its floor/ceil counterpart
(q, b) only uses floor(d_bar) and ceil(d_bar) probes and has the same mean
d_bar = sum_j p_j a_j. A row-stochastic matrix M with q M = p and
M a = b certifies that (q, b) is majorized by (p, a), which orders the mean
waiting times of the two policies.
"""

import logging
import math

import numpy as np

from cavity.ode import mean_waiting
from core.exceptions import ConstructionFailedError, InvalidArgumentError
from policies.models import PolicySpec
from verification.models import MajorizationCertificate, OrderingCheck

logger = logging.getLogger(__name__)

CERTIFICATE_TOLERANCE = 1e-10
ORDERING_TOLERANCE = 1e-8


def _check_mix(p: list[float], a: list[int]) -> tuple[np.ndarray, np.ndarray]:
    p_arr = np.asarray(p, dtype=float)
    a_arr = np.asarray(a, dtype=float)
    if p_arr.shape != a_arr.shape or p_arr.size == 0:
        raise InvalidArgumentError("p and a must be nonempty and of equal length")
    if np.any(p_arr < 0) or abs(p_arr.sum() - 1.0) > 1e-12:
        raise InvalidArgumentError("p must be a probability vector", details={"p": list(p)})
    if np.any(a_arr < 1) or np.any(a_arr != np.round(a_arr)):
        raise InvalidArgumentError("a must hold positive integers", details={"a": list(a)})
    return p_arr, a_arr


def floor_ceil_mix(p: list[float], a: list[int]) -> tuple[list[float], list[int]]:
    """The (q, (floor(d_bar), ceil(d_bar))) pair with mean d_bar = sum p_j a_j.

    A single entry (q = [1.0]) is returned when d_bar is an integer.
    """
    p_arr, a_arr = _check_mix(p, a)
    d_bar = float(p_arr @ a_arr)
    low = math.floor(d_bar + 1e-12)
    if abs(d_bar - round(d_bar)) <= 1e-12:
        return [1.0], [round(d_bar)]
    q_high = d_bar - low
    return [1.0 - q_high, q_high], [low, low + 1]


def _fill(caps: np.ndarray, order: np.ndarray) -> np.ndarray:
    """Pour unit mass into entries in ``order``, each up to its cap."""
    row = np.zeros_like(caps)
    remaining = 1.0
    for j in order:
        take = min(caps[j], remaining)
        row[j] = take
        remaining -= take
        if remaining <= 0.0:
            break
    return row


def _upper_row(p: np.ndarray, a: np.ndarray, q_high: float, target: float) -> np.ndarray:
    """Row for ceil(d_bar): entries in [0, p_j/q_high], summing to 1, with mean ``target``.

    Mass is poured from the largest a_j down and from the smallest up; the
    two extreme rows are then blended to hit the target mean exactly.
    """
    caps = p / q_high
    top = _fill(caps, np.argsort(-a, kind="stable"))
    bottom = _fill(caps, np.argsort(a, kind="stable"))
    top_mean, bottom_mean = float(top @ a), float(bottom @ a)
    if not bottom_mean - CERTIFICATE_TOLERANCE <= target <= top_mean + CERTIFICATE_TOLERANCE:
        raise ConstructionFailedError(
            f"Target mean {target} outside reachable range [{bottom_mean}, {top_mean}]",
            details={"target": target, "range": [bottom_mean, top_mean], "caps": caps.tolist()},
        )
    if top_mean - bottom_mean <= CERTIFICATE_TOLERANCE:
        return top
    theta = (target - bottom_mean) / (top_mean - bottom_mean)
    return theta * top + (1.0 - theta) * bottom


def _violations(
    matrix: np.ndarray, p: np.ndarray, a: np.ndarray, q: np.ndarray, b: np.ndarray
) -> list[str]:
    found = []
    if np.min(matrix) < -CERTIFICATE_TOLERANCE:
        found.append(f"negative entry {np.min(matrix):.3g}")
    row_sums = matrix.sum(axis=1)
    if np.max(np.abs(row_sums - 1.0)) > CERTIFICATE_TOLERANCE:
        found.append(f"row sums {row_sums.tolist()} differ from 1")
    columns = q @ matrix
    if np.max(np.abs(columns - p)) > CERTIFICATE_TOLERANCE:
        found.append(f"q-weighted columns {columns.tolist()} differ from p")
    means = matrix @ a
    if np.max(np.abs(means - b)) > CERTIFICATE_TOLERANCE:
        found.append(f"row means {means.tolist()} differ from {b.tolist()}")
    return found


def _mix_policy(weights: list[float], counts: list[int]) -> PolicySpec:
    choices = [(d, w) for d, w in zip(counts, weights, strict=True) if w > 0.0]
    if len(choices) == 1:
        return PolicySpec.ll(choices[0][0])
    return PolicySpec.mix([d for d, _ in choices], [w for _, w in choices])


def majorization_certificate(
    p: list[float],
    a: list[int],
    q: list[float] | None = None,
    b: list[int] | None = None,
    lambda_grid: list[float] | None = None,
) -> MajorizationCertificate:
    """Build and verify the matrix certifying (q, b) majorized by (p, a).

    Args:
        p: Probabilities of the original mix
        a: Probe counts of the original mix
        q: Probabilities of the floor/ceil mix (computed when omitted)
        b: Probe counts of the floor/ceil mix (computed when omitted)
        lambda_grid: Loads at which E[W](q, b) <= E[W](p, a) is also checked

    Returns:
        MajorizationCertificate

    Raises:
        InvalidArgumentError: If (q, b) is not the floor/ceil pair of (p, a)
        ConstructionFailedError: If no row for ceil(d_bar) meets both constraints
    """
    p_arr, a_arr = _check_mix(p, a)
    expected_q, expected_b = floor_ceil_mix(p, a)
    q = expected_q if q is None else list(q)
    b = expected_b if b is None else list(b)
    if list(b) != expected_b or not np.allclose(q, expected_q, atol=1e-12, rtol=0.0):
        raise InvalidArgumentError(
            "Only the floor/ceil pair of (p, a) is supported",
            details={"q": q, "b": b, "expected_q": expected_q, "expected_b": expected_b},
        )
    q_arr = np.asarray(q, dtype=float)
    b_arr = np.asarray(b, dtype=float)

    if len(q) == 1:
        matrix = p_arr[None, :].copy()
    else:
        upper = _upper_row(p_arr, a_arr, q_arr[1], b_arr[1])
        lower = (p_arr - q_arr[1] * upper) / q_arr[0]
        matrix = np.vstack([lower, upper])

    violations = _violations(matrix, p_arr, a_arr, q_arr, b_arr)
    ordering = []
    if lambda_grid and not violations:
        majorizing = _mix_policy(q, b)
        original = _mix_policy(list(p), list(a))
        for lam in sorted(lambda_grid):
            w_major = mean_waiting(majorizing, lam)
            w_orig = mean_waiting(original, lam)
            ordering.append(
                OrderingCheck(
                    lam=lam,
                    majorizing_wait=w_major,
                    original_wait=w_orig,
                    holds=w_major <= w_orig + ORDERING_TOLERANCE,
                )
            )
        if not all(check.holds for check in ordering):
            violations.append("mean waiting ordering fails on the lambda grid")

    if violations:
        logger.warning(f"Majorization certificate for p={p}, a={a} fails: {violations}")
    return MajorizationCertificate(
        holds=not violations,
        q=q,
        b=b,
        matrix=matrix.tolist(),
        violations=violations,
        ordering=ordering,
    )
