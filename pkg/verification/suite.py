"""Run every applicable assumption and lemma check for one policy."""

import logging
from functools import partial

from cavity.models import SolverOptions
from core.exceptions import BNotFoundError, CavityLBError, NoRootError
from core.parallel import parallel_map
from policies.kernels import choose_b
from policies.models import PolicyKind, PolicySpec
from verification.assumptions import DEFAULT_TOLERANCE, check_assumption
from verification.lemmas import (
    check_t_over_u_increasing,
    check_T_dominated,
    check_u_prime_limit,
    check_zeta_agreement,
)
from verification.models import DEFAULT_LAMBDA_GRID, AssumptionReport, Status

logger = logging.getLogger(__name__)

ASSUMPTION_IDS = list(range(1, 8))


def suite_checks(policy: PolicySpec) -> list[int | str]:
    """Check identifiers that apply to ``policy``, in report order."""
    checks: list[int | str] = [*ASSUMPTION_IDS, "T_dominated", "t_over_u_increasing"]
    if policy.kind in (PolicyKind.LL_DK, PolicyKind.LL_MIX):
        checks.append("u_prime_limit")
    if policy.kind == PolicyKind.LL_DK:
        checks.append("zeta_agreement")
    return checks


def _run_check(
    policy: PolicySpec,
    grid: list[float],
    b: int | None,
    tolerance: float,
    opts: SolverOptions | None,
    check: int | str,
) -> AssumptionReport:
    match check:
        case int():
            return check_assumption(policy, check, grid, b, tolerance, opts)
        case "T_dominated":
            return check_T_dominated(policy)
        case "t_over_u_increasing":
            return check_t_over_u_increasing(policy, grid)
        case "u_prime_limit":
            try:
                return check_u_prime_limit(policy, tolerance)
            except CavityLBError as e:
                return AssumptionReport.skipped(check, policy, grid, f"{e.code}: {e.message}")
        case "zeta_agreement":
            return check_zeta_agreement(policy, grid, b or 0)
    raise ValueError(f"Unknown check {check!r}")


def run_suite(
    policy: PolicySpec,
    lambda_grid: list[float] | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    opts: SolverOptions | None = None,
    max_workers: int | None = None,
) -> list[AssumptionReport]:
    """Assumptions 1-7 plus the lemma checks that apply to the policy.

    b is chosen once with choose_b and shared by every check that uses it.
    """
    grid = sorted(lambda_grid or DEFAULT_LAMBDA_GRID)
    b: int | None
    try:
        b = choose_b(policy, grid)
    except (BNotFoundError, NoRootError) as e:
        logger.warning(f"choose_b failed for {policy.label}: {e.message}")
        b = None

    reports = parallel_map(
        partial(_run_check, policy, grid, b, tolerance, opts), suite_checks(policy), max_workers
    )
    failed = [r.assumption_id for r in reports if r.status == Status.FAIL]
    logger.info(
        f"Suite for {policy.label} (b={b}): {len(reports) - len(failed)}/{len(reports)} "
        f"not failed{f', failed: {failed}' if failed else ''}"
    )
    return reports
