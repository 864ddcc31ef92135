"""Command-line entry point for the cavity load-balancing toolkit."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

from dotenv import load_dotenv
from pydantic import ValidationError

from cli.commands import EXIT_CONFIG, emit_error, run
from cli.models import RunConfig
from config.settings import get_settings
from core.exceptions import ConfigurationError
from core.logging import setup_logging
from core.sentry import init_sentry

logger = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--policy",
        dest="policies",
        action="append",
        help="Policy, e.g. ll:d=2, lldk:d=4,k=2, mix:d=1,2;p=0.5,0.5, red:d=2, mem:d=2,m=1 "
        "(suffix :sq for queue-length ranking); repeatable",
    )
    parser.add_argument("--lambda", dest="lambda", type=float, help="Arrival rate in (0, 1)")
    parser.add_argument("--grid", dest="lambda_grid", help="Lambda grid start:stop:step or a,b,c")
    parser.add_argument("--method", choices=["ode", "separation"], help="Mean waiting method")
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--out", type=Path, help="Output file (default: stdout)")
    parser.add_argument("--threads", type=int, help="Worker processes (default CAVITY_LB_THREADS)")
    parser.add_argument("--log-level", help="Override LOG_LEVEL")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavity-lb",
        description="Mean-field workload analysis and simulation of power-of-d load balancing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="E[W], E[Q], E[R], E[L] for one load")
    _add_common(analyze)

    curve = sub.add_parser("curve", help="Scaled mean waiting over a lambda grid (CSV)")
    _add_common(curve)
    curve.add_argument("--scaling", choices=["log1mlambda", "logplambda"])

    limits = sub.add_parser("limits", help="Heavy-traffic constants and limits (JSON)")
    _add_common(limits)

    verify = sub.add_parser("verify", help="Assumption and lemma checks (JSON)")
    _add_common(verify)
    verify.add_argument("--tolerance", type=float, help="Relative tolerance of limit checks")

    simulate = sub.add_parser("simulate", help="Finite-N simulation (JSON)")
    _add_common(simulate)
    simulate.add_argument("--servers", dest="n_servers", type=int)
    simulate.add_argument("--horizon", type=float)
    simulate.add_argument("--warmup", type=float)
    simulate.add_argument("--seed", type=int)
    simulate.add_argument("--replications", type=int)
    simulate.add_argument("--n-list", help="Comma-separated fleet sizes for a convergence study")
    simulate.add_argument("--ccdf-out", type=Path, help="Empirical ccdf as w,fraction CSV")
    simulate.add_argument("--debug", action="store_true", default=None)

    compare = sub.add_parser("compare", help="Policies side by side with floor/ceil mixes (CSV)")
    _add_common(compare)
    return parser


SIMULATION_FLAGS = ["n_servers", "horizon", "warmup", "seed", "replications", "debug"]
RUN_FLAGS = [
    "policies",
    "lambda",
    "lambda_grid",
    "method",
    "scaling",
    "tolerance",
    "out",
    "ccdf_out",
    "threads",
]


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Merge a --config file with explicit flags (flags win) and validate the result.

    Raises:
        ConfigurationError: If the file cannot be read or the result is invalid
    """
    data: dict[str, Any] = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(
                f"Cannot read config {args.config}: {e}", details={"path": str(args.config)}
            ) from e
        if not isinstance(data, dict):
            raise ConfigurationError("Config file must hold a JSON object")
    data["command"] = args.command

    for name in RUN_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    simulation = dict(data.get("simulation", {}))
    for name in SIMULATION_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            simulation[name] = value
    if getattr(args, "n_list", None):
        try:
            simulation["n_list"] = [int(n) for n in args.n_list.split(",")]
        except ValueError as e:
            raise ConfigurationError(f"Bad --n-list {args.n_list!r}") from e
    if simulation:
        data["simulation"] = simulation

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        errors = [f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors()]
        raise ConfigurationError("Invalid run configuration", details={"errors": errors}) from e


def main(argv: list[str] | None = None) -> int:
    """Parse arguments, configure logging and Sentry, and run the command."""
    load_dotenv()
    args = build_parser().parse_args(argv)
    settings = get_settings()

    setup_logging(level=args.log_level or settings.log_level, log_file=settings.log_file)
    init_sentry(
        dsn=settings.sentry_dsn,
        environment=settings.environment,
        release=settings.app_version,
    )
    logger.info(f"{settings.app_name} v{settings.app_version}: {args.command}")

    try:
        config = config_from_args(args)
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e.message}")
        emit_error(e)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
