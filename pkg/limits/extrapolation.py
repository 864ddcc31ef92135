"""Least-squares fits used to read limits off sampled sequences."""

import numpy as np
from numpy.typing import ArrayLike

FIT_POINTS = 4


def polynomial_intercept(
    x: ArrayLike, y: ArrayLike, degree: int = 1, last: int | None = None
) -> tuple[float, float]:
    """Fit y = c_0 + c_1 x + ... + c_degree x^degree and return (c_0, max residual).

    Args:
        x: Abscissae; the limit is taken at x = 0
        y: Samples
        degree: Polynomial degree
        last: Use only the last ``last`` samples
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if last is not None:
        x, y = x[-last:], y[-last:]
    if x.size <= degree:
        raise ValueError(f"Need more than {degree} samples for a degree-{degree} fit")
    coeffs = np.polyfit(x, y, degree)
    residual = float(np.max(np.abs(np.polyval(coeffs, x) - y)))
    return float(coeffs[-1]), residual


def inverse_log_intercept(
    lams: ArrayLike, y: ArrayLike, last: int = FIT_POINTS
) -> tuple[float, float]:
    """Fit y = c_0 + c_1 / (-log(1 - lambda)) and return (c_0, max residual)."""
    lams = np.asarray(lams, dtype=float)
    return polynomial_intercept(1.0 / -np.log1p(-lams), y, degree=1, last=last)


def linear_intercept(x: ArrayLike, y: ArrayLike, last: int = FIT_POINTS) -> tuple[float, float]:
    """Fit y = c_0 + c_1 x and return (c_0, max residual)."""
    return polynomial_intercept(x, y, degree=1, last=last)
