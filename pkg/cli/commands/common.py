"""
Shared helpers for subcommands.
"""

import argparse
import json
import logging

from config import ensure_directories
from core.errors import ConfigError
from core.pipeline import SimulationPipeline, load_config

logger = logging.getLogger(__name__)


def make_pipeline(args: argparse.Namespace) -> SimulationPipeline:
    if not args.config:
        raise ConfigError(f"'{args.command}' needs --config <path>")
    ensure_directories()
    config = load_config(args.config)
    return SimulationPipeline(
        config,
        output_dir=args.out,
        threads=args.threads,
        rms=args.rms,
        debug_dump=args.debug_dump,
        command=args.command,
    )


def print_json(payload):
    print(json.dumps(payload, indent=2, sort_keys=True))
