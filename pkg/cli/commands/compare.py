"""compare: E(f, b) between a test and a reference signal CSV"""

import logging
from pathlib import Path

from config import settings
from core.analysis import compare_records
from core.pipeline import RunManifest, read_signal_csv, write_json

from .common import print_json

logger = logging.getLogger(__name__)

HELP = "Compare two signal CSV files direction by direction"


def add_arguments(parser):
    parser.add_argument("test", help="signal CSV under test (e.g. signals_mf.csv)")
    parser.add_argument("reference", help="reference signal CSV (e.g. signals_btpde.csv)")


def handle(args) -> int:
    out = Path(args.out or settings.outputs_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(output_dir=out, command="compare")

    comparisons = compare_records(read_signal_csv(args.test), read_signal_csv(args.reference))
    payload = {
        "metric": "sum |S_test - S_ref|^2 / sum |S_ref|^2",
        "rms_reported": args.rms,
        "test_file": Path(args.test).name,
        "reference_file": Path(args.reference).name,
        "comparisons": [c.to_dict(include_rms=args.rms) for c in comparisons],
    }
    path = write_json(payload, out / "compare.json")
    manifest.add_file(path)
    manifest.finish()
    print_json(payload)
    return 0
