"""Command handlers behind the CLI.

``run`` returns the process exit status: 0 on success, 1 for configuration
errors and 2 for numerical failures. Errors are written to stderr as one
JSON object ``{error, message, details}``.
"""

import json
import logging
import sys
from collections.abc import Callable

from pydantic import ValidationError

from cavity.models import WaitingMethod
from cavity.ode import (
    class_waiting_times,
    mean_response,
    mean_waiting,
    mean_workload,
    mean_workload_by_separation,
    solve_ccdf,
)
from cli.models import AnalysisReport, Command, CompareRow, RunConfig
from cli.output import to_payload, write_csv, write_json
from core.exceptions import CavityLBError, ConfigurationError, NoRootError, UnsupportedPolicyError
from core.sentry import add_breadcrumb, capture_exception
from core.telemetry import RunTelemetry, get_solver_stats, init_solver_stats, reset_solver_stats
from fleet.models import SimConfig
from fleet.simulator import convergence_study, simulate
from limits.curves import CSV_FIELDS, curve_csv_row, scaled_curve
from limits.heavy_traffic import limit_report
from policies.kernels import fixed_point_u, p_idle
from policies.models import Discipline, PolicyKind, PolicySpec
from policies.parser import format_policy
from verification.majorization import majorization_certificate
from verification.suite import run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
ORDERING_TOLERANCE = 1e-8
COMPARE_FIELDS = [
    "lambda",
    "policy",
    "mean_wait",
    "floor_ceil_policy",
    "floor_ceil_mean_wait",
    "majorized",
]


def emit_error(error: CavityLBError) -> None:
    """Write the machine-readable error object to stderr."""
    sys.stderr.write(json.dumps(error.to_dict(), default=str) + "\n")


def _single_or_list(items: list) -> object:
    payload = to_payload(items)
    return payload[0] if len(payload) == 1 else payload


def analyze_policy(
    policy: PolicySpec, lam: float, config: RunConfig | None = None
) -> AnalysisReport:
    """E[W], E[Q], E[R] and E[L] for one policy at one load."""
    solver = config.solver if config else None
    method = config.method if config else WaitingMethod.ODE

    wait: float | None
    if policy.kind == PolicyKind.RED_D:
        wait = None
        response = mean_response(policy, lam, solver, method)
        workload = lam * response
    elif policy.discipline == Discipline.QUEUE_LENGTH:
        wait = mean_waiting(policy, lam)
        response = 1.0 + wait
        workload = lam * response
    else:
        if method == WaitingMethod.SEPARATION:
            workload = mean_workload_by_separation(policy, lam)
        else:
            workload = mean_workload(solve_ccdf(policy, lam, lam, solver))
        wait = max(workload / lam - 1.0, 0.0)
        response = 1.0 + wait

    try:
        idle = p_idle(policy, lam)
    except UnsupportedPolicyError:
        idle = None
    try:
        u_lambda = fixed_point_u(policy, lam).u_lambda
    except NoRootError:
        u_lambda = None
    classes = None
    if policy.kind == PolicyKind.LL_MIX and policy.discipline == Discipline.WORKLOAD:
        classes = {
            str(d): w for d, w in class_waiting_times(policy, lam, solver, method).items()
        }

    return AnalysisReport(
        policy=format_policy(policy),
        lam=lam,
        mean_waiting=wait,
        mean_queue=workload,
        mean_response=response,
        mean_jobs=lam * response,
        p_idle=idle,
        u_lambda=u_lambda,
        class_waiting=classes,
    )


def _analyze(config: RunConfig) -> None:
    assert config.lam is not None
    reports = [analyze_policy(policy, config.lam, config) for policy in config.policies]
    write_json(_single_or_list(reports), config.out)


def _curve(config: RunConfig) -> None:
    assert config.lambda_grid is not None
    rows = []
    for policy in config.policies:
        rows.extend(
            scaled_curve(policy, config.lambda_grid, config.scaling, config.method, config.threads)
        )
    failed = [row for row in rows if row.error]
    if failed:
        logger.warning(f"{len(failed)} of {len(rows)} curve rows failed")
    write_csv(CSV_FIELDS, (curve_csv_row(row) for row in rows), config.out)


def _limits(config: RunConfig) -> None:
    reports = [limit_report(policy) for policy in config.policies]
    write_json(_single_or_list(reports), config.out)


def _verify(config: RunConfig) -> None:
    reports = []
    for policy in config.policies:
        reports.extend(
            run_suite(policy, config.lambda_grid, config.tolerance, config.solver, config.threads)
        )
    write_json(to_payload(reports), config.out)


def _simulate(config: RunConfig) -> None:
    if config.ccdf_out is not None and len(config.policies) > 1:
        raise ConfigurationError(
            "--ccdf-out takes a single policy",
            details={"policies": [format_policy(p) for p in config.policies]},
        )
    options = config.simulation.model_dump(exclude={"n_list"})
    results = []
    for policy in config.policies:
        try:
            sim_config = SimConfig(policy=policy, lam=config.lam, **options)
        except ValidationError as e:
            raise ConfigurationError(
                "Invalid simulation configuration",
                details={"errors": [err["msg"] for err in e.errors()]},
            ) from e
        if config.simulation.n_list:
            results.extend(convergence_study(sim_config, config.simulation.n_list, config.threads))
            continue
        report = simulate(sim_config, config.threads)
        results.append(report)
        if config.ccdf_out is not None:
            write_csv(
                ["w", "fraction"],
                (sample.model_dump() for sample in report.empirical_ccdf),
                config.ccdf_out,
            )
    write_json(_single_or_list(results), config.out)


def _mix_components(policy: PolicySpec) -> tuple[list[float], list[int]] | None:
    if policy.kind == PolicyKind.LL_MIX:
        assert policy.choices is not None
        return [p for _, p in policy.choices], [d for d, _ in policy.choices]
    if policy.kind == PolicyKind.LL_D:
        assert policy.d is not None
        return [1.0], [policy.d]
    return None


def _majorizing_policy(q: list[float], b: list[int]) -> PolicySpec:
    if len(q) == 1:
        return PolicySpec.ll(b[0])
    return PolicySpec.mix(b, q)


def compare_rows(config: RunConfig) -> list[CompareRow]:
    """Mean waiting of each policy on the grid, beside its floor/ceil majorizing mix."""
    assert config.lambda_grid is not None
    rows = []
    for lam in config.lambda_grid:
        for policy in config.policies:
            wait = mean_waiting(policy, lam, config.solver, config.method)
            row = CompareRow(lam=lam, policy=format_policy(policy), mean_wait=wait)
            components = _mix_components(policy)
            if components is not None and policy.discipline == Discipline.WORKLOAD:
                certificate = majorization_certificate(*components)
                majorizing = _majorizing_policy(certificate.q, certificate.b)
                fc_wait = mean_waiting(majorizing, lam, config.solver, config.method)
                row.floor_ceil_policy = format_policy(majorizing)
                row.floor_ceil_mean_wait = fc_wait
                row.majorized = certificate.holds and fc_wait <= wait + ORDERING_TOLERANCE
            rows.append(row)
    return rows


def _compare(config: RunConfig) -> None:
    rows = compare_rows(config)
    write_csv(
        COMPARE_FIELDS,
        ({"lambda": row.lam, **row.model_dump(exclude={"lam"})} for row in rows),
        config.out,
    )


_HANDLERS: dict[Command, Callable[[RunConfig], None]] = {
    Command.ANALYZE: _analyze,
    Command.CURVE: _curve,
    Command.LIMITS: _limits,
    Command.VERIFY: _verify,
    Command.SIMULATE: _simulate,
    Command.COMPARE: _compare,
}


def run(config: RunConfig) -> int:
    """Execute one command and return the exit status."""
    telemetry = RunTelemetry()
    stats_token = init_solver_stats()
    context = {
        "command": config.command.value,
        "policies": [format_policy(p) for p in config.policies],
        "lambda": config.lam,
    }
    add_breadcrumb(config.command.value, data=context)

    try:
        with telemetry.track_step(config.command.value):
            _HANDLERS[config.command](config)
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e.message}")
        emit_error(e)
        return EXIT_CONFIG
    except CavityLBError as e:
        logger.error(f"{config.command.value} failed: {e.code}: {e.message}")
        capture_exception(e, context={**context, **e.details, "solver_stats": get_solver_stats()})
        emit_error(e)
        return EXIT_NUMERIC
    finally:
        telemetry.log_summary()
        reset_solver_stats(stats_token)
    return EXIT_OK
