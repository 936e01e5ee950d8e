"""btspec: BT eigenmodes, significance, A(δ) grid and supports"""

from .common import make_pipeline

HELP = "Bloch-Torrey spectral analysis in the Laplace eigenbasis"


def add_arguments(parser):
    pass


def handle(args) -> int:
    pipeline = make_pipeline(args)
    pipeline.run_btspec()
    pipeline.manifest.finish()
    print(f"BT spectrum written to {pipeline.output_dir}")
    return 0
