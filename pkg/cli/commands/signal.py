"""signal: MF, MFGA and BTPDE signals over the configured acquisitions"""

from core.errors import ConfigError
from core.models import RunMethod

from .common import make_pipeline

HELP = "Simulate signals with MF, MFGA and/or BTPDE"

SIGNAL_CHOICES = [RunMethod.MF.value, RunMethod.MFGA.value, RunMethod.BTPDE.value]


def add_arguments(parser):
    parser.add_argument(
        "--method", action="append", choices=SIGNAL_CHOICES,
        help="signal method (repeatable); defaults to the signal methods listed in the configuration",
    )


def handle(args) -> int:
    pipeline = make_pipeline(args)
    if args.method:
        methods = [RunMethod(m) for m in args.method]
    else:
        methods = [m for m in pipeline.config.methods if m.value in SIGNAL_CHOICES]
    if not methods:
        raise ConfigError("No signal method requested (mf, mfga or btpde)")

    result = pipeline.run(methods)
    print(f"{result.n_signals} signals written to {result.output_dir}")
    return 0
