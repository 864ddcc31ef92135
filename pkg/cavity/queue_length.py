"""Mean waiting time when servers are ranked by queue length instead of workload."""

import logging
import math

from core.exceptions import DivergenceError, NonConvergenceError
from policies.kernels import _evaluate_t, check_lambda
from policies.models import PolicySpec

logger = logging.getLogger(__name__)

MAX_TERMS = 1_000_000


def sq_mean_waiting(policy: PolicySpec, lam: float, tol: float = 1e-14) -> float:
    """E[W] from the queue-length tail recursion u_1 = lambda, u_{k+1} = T(u_k).

    u_k is the fraction of servers with at least k jobs, so
    E[Q] = sum_k u_k and E[W] = E[Q]/lambda - 1. Terms are summed until
    u_k < tol.

    Raises:
        DivergenceError: If the sequence stops decreasing
        NonConvergenceError: If it has not dropped below tol after 1e6 terms
    """
    check_lambda(lam)
    terms = [lam]
    u = lam
    while u >= tol:
        if len(terms) >= MAX_TERMS:
            raise NonConvergenceError(
                f"Queue-length recursion for {policy.label} at lambda={lam} "
                f"still at u={u:.3g} after {MAX_TERMS} terms",
                details={"policy": policy.label, "lambda": lam, "u": u},
            )
        nxt = float(_evaluate_t(policy, lam, u))
        if not nxt < u:
            raise DivergenceError(
                f"Queue-length recursion for {policy.label} at lambda={lam} is not decreasing",
                details={"policy": policy.label, "lambda": lam, "term": len(terms), "u": u},
            )
        terms.append(nxt)
        u = nxt

    logger.debug(f"SQ recursion for {policy.label} at lambda={lam}: {len(terms)} terms")
    return max(math.fsum(terms) / lam - 1.0, 0.0)
