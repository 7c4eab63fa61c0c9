"""
Command-line entry point for okdroplet.

Subcommands:
- solve: minimize the droplet energy from a seeded near-ball shape
- stability: second-variation spectrum at the round droplet
- sweep: run the configured verification experiment over r values
- greens: Robin function, harmonic centers and g_r
- asymmetry: Frankel asymmetry and convexity of a shape
- residual: Euler-Lagrange residual of an exact sphere
"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional, Sequence

from .error_utils import (
    EXIT_INVALID_CONFIG,
    EXIT_OK,
    error_response_from_exception,
    exit_code_for,
    format_json_response,
)
from .errors import ConfigurationError, OKDropletError
from .handlers import DEFAULT_OUTPUT_DIR, OPERATION_MAP, RunContext, dispatch_operation
from .models import RunConfig

logger = logging.getLogger(__name__)

OUTPUT_ENV = "OKDROPLET_OUT"


def _float_list(text: str, name: str) -> List[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigurationError(
            f"Invalid {name} '{text}'", "Use comma-separated numbers, e.g. 1,2,4."
        ) from e
    if not values:
        raise ConfigurationError(f"Empty {name}")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (default: built-in defaults)")
    common.add_argument(
        "--out",
        help=f"Output directory (default: experiment.output_dir or {DEFAULT_OUTPUT_DIR}; "
        f"{OUTPUT_ENV} overrides)",
    )
    common.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker threads for independent runs (default: available cores)",
    )
    common.add_argument("--seed", type=int, default=None, help="Random seed override")
    common.add_argument(
        "--resolution",
        help="Comma-separated refinement ladder, e.g. 1,2,4 (the first factor is used "
        "outside sweeps)",
    )
    common.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default="INFO",
        help="Logging level (default: INFO)",
    )
    common.add_argument("--log-file", help="Log file path (default: stderr only)")

    parser = argparse.ArgumentParser(
        prog="okdroplet",
        description="Sharp-interface droplet lab for the nonlocal isoperimetric problem",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
    # Minimize on the planar torus
    okdroplet solve --config torus2d.json

    # Energy expansion sweep with a refinement ladder
    okdroplet sweep --config expansion_n2.json --resolution 1,2

    # Residual of a sphere without a config file
    okdroplet residual --domain torus --r 0.05 --gamma 1

    # Off-center sphere in the unit disk
    okdroplet residual --domain ball --r 0.1 --gamma 1 --center 0.3,0

Exit codes:
  0 success, 2 invalid configuration, 3 numerical failure, 4 experiment assertion failed
        """,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, handler in OPERATION_MAP.items():
        sub = subparsers.add_parser(name, parents=[common], help=(handler.__doc__ or "").strip())
        if name in ("residual", "stability"):
            sub.add_argument("--center", help="Droplet center, comma-separated (default: origin)")
        if name == "residual":
            sub.add_argument("--domain", choices=["torus", "ball"], help="Domain kind")
            sub.add_argument("--dim", type=int, help="Dimension, 2 or 3")
            sub.add_argument("--radius", type=float, help="Ball domain radius R")
            sub.add_argument("--r", type=float, help="Droplet radius r_m")
            sub.add_argument("--gamma", type=float, help="Nonlocal strength")
        if name == "asymmetry":
            sub.add_argument("--shape", help="Shape JSON (a solve result or a bare shape record)")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """Read --config and apply the residual overrides; validation errors are ConfigurationError."""
    config = RunConfig.load(args.config) if args.config else RunConfig()
    data = config.model_dump(mode="json")
    if getattr(args, "domain", None) is not None:
        data["domain"]["kind"] = args.domain
    if getattr(args, "dim", None) is not None:
        data["domain"]["dim"] = args.dim
        data["discretization"] = {}
    if getattr(args, "radius", None) is not None:
        data["domain"]["radius"] = args.radius
    if getattr(args, "r", None) is not None:
        data["params"]["r"] = args.r
        data["params"]["mass"] = None
    if getattr(args, "gamma", None) is not None:
        data["params"]["gamma"] = args.gamma
    return RunConfig.from_json(json.dumps(data))


def build_context(args: argparse.Namespace) -> RunContext:
    config = load_config(args)
    ladder = _float_list(args.resolution, "resolution ladder") if args.resolution else None
    if ladder and any(f <= 0 for f in ladder):
        raise ConfigurationError("Refinement factors must be positive")
    output_dir = (
        os.environ.get(OUTPUT_ENV)
        or args.out
        or config.experiment.output_dir
        or DEFAULT_OUTPUT_DIR
    )
    threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
    if threads < 1:
        raise ConfigurationError(f"--threads must be at least 1, got {threads}")
    center = None
    if getattr(args, "center", None):
        center = _float_list(args.center, "center")
        if len(center) != config.domain.dim:
            raise ConfigurationError(
                f"Center has {len(center)} coordinates, "
                f"the domain is {config.domain.dim}-dimensional"
            )
    return RunContext(
        config=config,
        output_dir=output_dir,
        threads=threads,
        seed=args.seed,
        ladder=ladder,
        shape_path=getattr(args, "shape", None),
        center=center,
    )


def configure_logging(level: str, log_file: Optional[str]) -> None:
    log_handlers = [logging.StreamHandler()]
    if log_file:
        log_handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=getattr(logging, level),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=log_handlers,
    )


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; print its JSON response and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INVALID_CONFIG

    configure_logging(args.log_level, args.log_file)
    logger.info("okdroplet %s starting", args.command)

    try:
        context = build_context(args)
        response = dispatch_operation(args.command, context)
    except OKDropletError as e:
        logger.error("%s failed: %s", args.command, e)
        print(format_json_response(error_response_from_exception(e, args.command)))
        return exit_code_for(e)
    except Exception as e:
        logger.error("%s failed unexpectedly: %s", args.command, e, exc_info=True)
        print(format_json_response(error_response_from_exception(e, args.command)))
        return exit_code_for(e)

    print(format_json_response(response))
    return EXIT_OK


def main():
    """Console script entry point."""
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
