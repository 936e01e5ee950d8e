"""
SpectralDMRI Command Line
=========================
Entry point for `spectral-dmri <subcommand>`.

Subcommands:
- mesh-info  geometry report of the configured mesh
- eig        certified Laplace eigendecomposition (cached)
- signal     MF / MFGA / BTPDE signals
- compare    E metric between two signal CSV files
- btspec     Bloch-Torrey spectrum, A(δ) grid and supports
- sta        short-time ADC approximation
- run        every stage the configuration lists

Exit codes: 0 success, 2 configuration / input, 3 numeric failure, 4 IO.
"""

import argparse
import logging
import sys
from typing import List, Optional

from config import settings
from core.errors import SpectralDMRIError, exit_code_for
from .commands import COMMANDS

logger = logging.getLogger("cli")


def setup_logging(level: str):
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path of the TOML run configuration")
    common.add_argument("--out", help="output directory (overrides output_dir in the configuration)")
    common.add_argument("--threads", type=int, help="worker threads for independent work items")
    common.add_argument("--rms", action="store_true", help="also report the square root of E")
    common.add_argument("--log-level", default=settings.log_level, help="logging level (default %(default)s)")
    common.add_argument("--verbose", action="store_true", help="shorthand for --log-level DEBUG")
    common.add_argument("--debug-dump", action="store_true", help="write assembled matrices as coordinate text")

    parser = argparse.ArgumentParser(
        prog="spectral-dmri",
        description="Diffusion MRI signal simulation with Laplace eigenfunctions and the Bloch-Torrey equation.",
    )
    parser.add_argument("--version", action="version", version=f"{settings.app_name} {settings.app_version}")
    subparsers = parser.add_subparsers(dest="command", metavar="<subcommand>")
    subparsers.required = True

    for name, module in COMMANDS.items():
        sub = subparsers.add_parser(name, parents=[common], help=module.HELP, description=module.HELP)
        module.add_arguments(sub)
        sub.set_defaults(handler=module.handle)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging("DEBUG" if args.verbose else args.log_level)

    if args.threads is not None and args.threads < 1:
        logger.error("--threads must be at least 1")
        return 2

    logger.info("=" * 50)
    logger.info(f"{settings.app_name} {settings.app_version}: {args.command}")
    logger.info("=" * 50)

    try:
        return args.handler(args) or 0
    except SpectralDMRIError as e:
        stage = e.details.get("stage")
        where = f" in stage '{stage}'" if stage else ""
        logger.error(f"{type(e).__name__}{where}: {e.message}")
        return e.exit_code
    except OSError as e:
        logger.error(f"IO error: {e}")
        return exit_code_for(e)
    except KeyboardInterrupt:
        logger.error("Interrupted")
        return 130
    except Exception as e:
        logger.error(f"Unhandled exception: {e}", exc_info=True)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
