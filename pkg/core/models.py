"""
SpectralDMRI Core Models
========================
Data structures shared across the simulator: method tags, signal records
and direction sweeps used by the comparison metrics.
"""

from dataclasses import dataclass, field
from typing import List, Dict, Optional, Tuple, Any
from collections import OrderedDict
from enum import Enum

import numpy as np

from .errors import StorageError, SweepMismatchError


# ============================================================================
# ENUMS - Fixed categories
# ============================================================================

class Method(str, Enum):
    """How a signal was computed"""
    MF = "MF"          # Matrix Formalism, exact H11
    MFGA = "MFGA"      # Gaussian approximation from D^MF
    BTPDE = "BTPDE"    # finite element Bloch-Torrey reference


class RunMethod(str, Enum):
    """Stages a run configuration can request"""
    MF = "mf"
    MFGA = "mfga"
    BTPDE = "btpde"
    BTSPEC = "btspec"
    STA = "sta"
    SIGNIFICANCE = "significance"


# ============================================================================
# SIGNALS
# ============================================================================

SIGNAL_COLUMNS = [
    "seq_id", "delta_ms", "Delta_ms", "bvalue_s_mm2",
    "gx", "gy", "gz", "amplitude_T_m", "method",
    "re_signal", "im_signal", "attenuation", "neig", "s0",
]

BTPDE_COLUMNS = ["atol", "rtol", "steps_taken"]


@dataclass
class SignalRecord:
    """
    One simulated echo signal for a (sequence, b-value, direction) tuple.
    The complex value is always kept; attenuation uses its magnitude.
    """
    seq_id: str
    delta: float                  # ms
    Delta: float                  # ms
    bvalue: float                 # s/mm²
    direction: Tuple[float, float, float]
    amplitude: float              # T/m
    signal: complex
    s0: float                     # rho * |Omega|
    method: Method = Method.MF

    neig: Optional[int] = None

    # BTPDE solver provenance
    atol: Optional[float] = None
    rtol: Optional[float] = None
    steps_taken: Optional[int] = None

    wall_time: float = 0.0

    @property
    def attenuation(self) -> float:
        return abs(self.signal) / self.s0

    def to_row(self) -> Dict[str, Any]:
        row = OrderedDict(
            seq_id=self.seq_id,
            delta_ms=self.delta,
            Delta_ms=self.Delta,
            bvalue_s_mm2=self.bvalue,
            gx=self.direction[0],
            gy=self.direction[1],
            gz=self.direction[2],
            amplitude_T_m=self.amplitude,
            method=self.method.value,
            re_signal=self.signal.real,
            im_signal=self.signal.imag,
            attenuation=self.attenuation,
            neig=self.neig if self.neig is not None else -1,
            s0=self.s0,
        )
        if self.method == Method.BTPDE:
            row["atol"] = self.atol
            row["rtol"] = self.rtol
            row["steps_taken"] = self.steps_taken
        return row

    @classmethod
    def from_row(cls, row: Dict[str, Any]) -> "SignalRecord":
        """Rebuild a record from a CSV row; older tables without `s0` fall back to |S| / attenuation"""
        signal = complex(float(row["re_signal"]), float(row["im_signal"]))
        attenuation = float(row["attenuation"])
        if row.get("s0") is not None and float(row["s0"]) > 0:
            s0 = float(row["s0"])
        elif attenuation > 0:
            s0 = abs(signal) / attenuation
        else:
            raise StorageError(
                f"Row for {row.get('seq_id')} has zero attenuation and no s0 column; S0 cannot be recovered"
            )
        neig = int(row["neig"]) if row.get("neig") is not None else -1
        method = Method(row["method"])
        record = cls(
            seq_id=str(row["seq_id"]),
            delta=float(row["delta_ms"]),
            Delta=float(row["Delta_ms"]),
            bvalue=float(row["bvalue_s_mm2"]),
            direction=(float(row["gx"]), float(row["gy"]), float(row["gz"])),
            amplitude=float(row["amplitude_T_m"]),
            signal=signal,
            s0=s0,
            method=method,
            neig=neig if neig >= 0 else None,
        )
        if method == Method.BTPDE and "atol" in row:
            record.atol = float(row["atol"])
            record.rtol = float(row["rtol"])
            record.steps_taken = int(row["steps_taken"])
        return record


# ============================================================================
# DIRECTION SWEEPS - matched signal sets for comparison metrics
# ============================================================================

@dataclass
class DirectionSweep:
    """
    Signals of two methods over the same direction set, for one
    (sequence, b-value) pair. `test` is compared against `reference`.
    """
    seq_id: str
    bvalue: float
    directions: np.ndarray
    test: List[SignalRecord] = field(default_factory=list)
    reference: List[SignalRecord] = field(default_factory=list)

    def validate(self):
        if len(self.test) == 0:
            raise SweepMismatchError("Empty direction sweep")
        if len(self.test) != len(self.reference) or len(self.test) != len(self.directions):
            raise SweepMismatchError(
                f"Sweep sizes differ: {len(self.test)} test, "
                f"{len(self.reference)} reference, {len(self.directions)} directions"
            )
        for a, b in zip(self.test, self.reference):
            if a.seq_id != b.seq_id or not np.isclose(a.bvalue, b.bvalue, rtol=1e-9, atol=1e-9):
                raise SweepMismatchError(
                    f"Records for different acquisitions: {a.seq_id}/b={a.bvalue} vs {b.seq_id}/b={b.bvalue}"
                )
            if not np.allclose(a.direction, b.direction, atol=1e-9):
                raise SweepMismatchError(f"Direction mismatch: {a.direction} vs {b.direction}")

    @property
    def test_signals(self) -> np.ndarray:
        return np.array([r.signal for r in self.test], dtype=complex)

    @property
    def reference_signals(self) -> np.ndarray:
        return np.array([r.signal for r in self.reference], dtype=complex)


def pair_sweeps(test: List[SignalRecord], reference: List[SignalRecord]) -> List[DirectionSweep]:
    """
    Group two record lists by (sequence, b-value) and match them
    direction by direction. Record order inside each group is preserved.
    """
    def group(records):
        groups: "OrderedDict[Tuple[str, float], List[SignalRecord]]" = OrderedDict()
        for r in records:
            groups.setdefault((r.seq_id, round(r.bvalue, 6)), []).append(r)
        return groups

    test_groups = group(test)
    ref_groups = group(reference)

    if set(test_groups) != set(ref_groups):
        missing = set(test_groups) ^ set(ref_groups)
        raise SweepMismatchError(f"Acquisitions present in only one signal set: {sorted(missing)}")

    sweeps = []
    for key, test_records in test_groups.items():
        ref_records = ref_groups[key]
        sweep = DirectionSweep(
            seq_id=key[0],
            bvalue=key[1],
            directions=np.array([r.direction for r in test_records], dtype=float),
            test=test_records,
            reference=ref_records,
        )
        sweep.validate()
        sweeps.append(sweep)
    return sweeps
