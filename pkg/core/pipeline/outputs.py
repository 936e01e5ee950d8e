"""
Output Files
============
Atomic CSV / JSON writers and the signal table codec. Floats are written
with 17 significant digits and LF line endings so repeated runs produce
byte-identical files.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, List, Union

import pandas as pd

from ..errors import StorageError
from ..models import BTPDE_COLUMNS, SIGNAL_COLUMNS, Method, SignalRecord

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
FLOAT_FORMAT = "%.17g"


def _replace(tmp: Path, path: Path):
    try:
        os.replace(tmp, path)
    except OSError as e:
        raise StorageError(f"Could not move {tmp} into place: {e}", path=str(path))


def write_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    frame.to_csv(tmp, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    _replace(tmp, path)
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def write_json(payload: Any, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=True, allow_nan=True)
        f.write("\n")
    _replace(tmp, path)
    return path


# === Signal tables ===

def records_to_frame(records: List[SignalRecord]) -> pd.DataFrame:
    """signals_<method>.csv rows; BTPDE tables carry the tolerance columns"""
    columns = list(SIGNAL_COLUMNS)
    if any(r.method == Method.BTPDE for r in records):
        columns += BTPDE_COLUMNS
    return pd.DataFrame([r.to_row() for r in records], columns=columns)


def write_signals(records: List[SignalRecord], path: PathLike) -> Path:
    return write_csv(records_to_frame(records), path)


def read_signal_csv(path: PathLike) -> List[SignalRecord]:
    path = Path(path)
    if not path.is_file():
        raise StorageError(f"Signal file not found: {path}", path=str(path))
    frame = pd.read_csv(path, dtype={"seq_id": str, "method": str})
    # s0 may be absent in older tables
    missing = [c for c in SIGNAL_COLUMNS if c != "s0" and c not in frame.columns]
    if missing:
        raise StorageError(f"Signal file {path} lacks columns {missing}", path=str(path))
    return [SignalRecord.from_row(row) for row in frame.to_dict(orient="records")]
