"""sta: short-time ADC approximation next to the MF (and optionally BTPDE) ADC"""

from .common import make_pipeline

HELP = "Short-time approximation of the ADC"


def add_arguments(parser):
    pass


def handle(args) -> int:
    pipeline = make_pipeline(args)
    pipeline.run_sta()
    pipeline.manifest.finish()
    print(f"STA table written to {pipeline.output_dir / 'sta.csv'}")
    return 0
