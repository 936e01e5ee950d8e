"""
Comparison Metrics
==================
Cross-method signal differences over direction sweeps, remove-one
eigenmode significance, RGB direction colouring of a_1n and the
truncation / length-scale convergence studies.

    E(f, b)        = Σ_dirs |S_test - S_ref|² / Σ_dirs |S_ref|²
    E^{RM,i}(f, b) = E of the model without mode i against the full model
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from config import SIGNIFICANCE_THRESHOLDS
from ..errors import ParameterError
from ..fem import FemMatrices
from ..models import DirectionSweep, SignalRecord, pair_sweeps
from ..parallel import parallel_map
from ..sequences import Gradient, Pgse, amplitude_for_b
from ..signal import MFModel, build_model, h11, j_factors, mf_signal
from ..spectral import LaplaceEig, solve_interval

logger = logging.getLogger(__name__)


# ============================================================================
# SIGNAL DIFFERENCES
# ============================================================================

def _difference(test: np.ndarray, reference: np.ndarray) -> float:
    if test.size == 0:
        raise ParameterError("Cannot compare an empty direction sweep")
    denominator = float(np.sum(np.abs(reference) ** 2))
    if denominator == 0.0:
        raise ParameterError("Reference signals are all zero")
    return float(np.sum(np.abs(test - reference) ** 2)) / denominator


def signal_difference(sweep: DirectionSweep) -> float:
    """E as a fraction (ratio of sums of squares, not its root)"""
    sweep.validate()
    return _difference(sweep.test_signals, sweep.reference_signals)


def signal_difference_rms(sweep: DirectionSweep) -> float:
    return math.sqrt(signal_difference(sweep))


def mean_relative_error(sweep: DirectionSweep) -> float:
    """Mean over directions of |S_test - S_ref| / |S_ref|"""
    sweep.validate()
    reference = np.abs(sweep.reference_signals)
    if (reference == 0).any():
        raise ParameterError("Reference sweep contains a zero signal")
    return float(np.mean(np.abs(sweep.test_signals - sweep.reference_signals) / reference))


@dataclass
class SweepComparison:
    seq_id: str
    bvalue: float
    n_directions: int
    test_method: str
    reference_method: str
    E: float
    E_rms: float
    mean_relative_error: float

    def to_dict(self, include_rms: bool = True) -> Dict:
        data = {
            "seq_id": self.seq_id,
            "bvalue_s_mm2": self.bvalue,
            "n_directions": self.n_directions,
            "test_method": self.test_method,
            "reference_method": self.reference_method,
            "E": self.E,
            "E_percent": 100.0 * self.E,
            "E_rms": self.E_rms,
            "E_rms_percent": 100.0 * self.E_rms,
            "mean_relative_error": self.mean_relative_error,
        }
        if not include_rms:
            data.pop("E_rms")
            data.pop("E_rms_percent")
        return data


def compare_records(test: List[SignalRecord], reference: List[SignalRecord]) -> List[SweepComparison]:
    """Pair two record sets by (sequence, b) and score each sweep"""
    results = []
    for sweep in pair_sweeps(test, reference):
        E = signal_difference(sweep)
        results.append(SweepComparison(
            seq_id=sweep.seq_id,
            bvalue=sweep.bvalue,
            n_directions=len(sweep.directions),
            test_method=sweep.test[0].method.value,
            reference_method=sweep.reference[0].method.value,
            E=E,
            E_rms=math.sqrt(E),
            mean_relative_error=mean_relative_error(sweep),
        ))
        logger.info(
            f"{sweep.seq_id} b={sweep.bvalue:g}: E = {100 * E:.4f}% "
            f"(sqrt E = {100 * math.sqrt(E):.4f}%) over {len(sweep.directions)} directions"
        )
    return results


# ============================================================================
# REMOVE-ONE SIGNIFICANCE
# ============================================================================

@dataclass
class RemoveOneResult:
    """E^{RM,i} per mode; index 0 (constant mode) is never removed and holds NaN"""
    seq_id: str
    bvalue: float
    e_rm: np.ndarray
    thresholds: List[float] = field(default_factory=lambda: list(SIGNIFICANCE_THRESHOLDS))

    @property
    def label(self) -> str:
        return f"{self.seq_id.lower()}_b{self.bvalue:g}"

    def significant(self, threshold: float) -> np.ndarray:
        """Boolean flags per mode; the constant mode is always significant"""
        flags = np.nan_to_num(self.e_rm, nan=0.0) > threshold
        flags[0] = True
        return flags

    def count(self, threshold: float) -> int:
        return int(self.significant(threshold)[1:].sum())


def _gradients(directions: np.ndarray, amplitude: float) -> List[Gradient]:
    return [Gradient.along(u, amplitude) for u in np.asarray(directions, dtype=float)]


def _h11_sweep(model: MFModel, gradients: List[Gradient], seq: Pgse) -> np.ndarray:
    return np.array([h11(model, g.vector, seq) for g in gradients], dtype=complex)


def remove_one_significance(
    model: MFModel,
    directions: np.ndarray,
    seq: Pgse,
    b: float,
    modes: Optional[Sequence[int]] = None,
    thresholds: Sequence[float] = SIGNIFICANCE_THRESHOLDS,
    threads: Optional[int] = None,
) -> RemoveOneResult:
    """
    E^{RM,i} for every mode i >= 1 (0-based), or only for `modes`.
    The sweep reference is the full model over the same directions.
    """
    if model.neig < 2:
        raise ParameterError("Remove-one significance needs at least two modes")
    modes = list(range(1, model.neig)) if modes is None else [int(i) for i in modes]
    if 0 in modes:
        raise ParameterError("The constant mode 0 cannot be removed")
    if any(i < 0 or i >= model.neig for i in modes):
        raise ParameterError(f"Mode indices must lie in 1..{model.neig - 1}")

    gradients = _gradients(directions, amplitude_for_b(seq, b))
    full = _h11_sweep(model, gradients, seq)
    everything = np.arange(model.neig)

    def removed(i: int) -> float:
        reduced = model.subset(everything[everything != i])
        return _difference(_h11_sweep(reduced, gradients, seq), full)

    e_rm = np.full(model.neig, np.nan)
    e_rm[modes] = parallel_map(removed, modes, threads)

    result = RemoveOneResult(seq_id=seq.seq_id, bvalue=float(b), e_rm=e_rm, thresholds=list(thresholds))
    logger.info(
        f"Remove-one {seq.seq_id} b={b:g}: "
        + ", ".join(f"{result.count(t)} modes above {100 * t:g}%" for t in thresholds)
    )
    return result


# ============================================================================
# RGB DIRECTION COLOURING
# ============================================================================

def rgb_direction(a1n) -> tuple:
    """
    (|a_x|, |a_y|, |a_z|) / |a|, plus a `directed` flag.
    A zero triplet has no direction and maps to (0, 0, 0) with the flag False.
    """
    a = np.abs(np.asarray(a1n, dtype=float).reshape(3))
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        return np.zeros(3), False
    return a / norm, True


def significance_table(model: MFModel, results: Sequence[RemoveOneResult] = ()) -> pd.DataFrame:
    """
    significance.csv: n, λ, l_s, a_1n triplet, RGB colour and one
    E_rm column per (sequence, b) pair.
    """
    lambdas = model.L
    a1 = model.a1
    with np.errstate(divide="ignore"):
        l_s = np.where(lambdas > 0, math.pi / np.sqrt(np.maximum(lambdas, 1e-300) / model.D0), np.inf)

    colours = [rgb_direction(a1[:, n]) for n in range(model.neig)]
    frame = pd.DataFrame({
        "n": np.arange(1, model.neig + 1),
        "lambda_ms^-1": lambdas,
        "l_s_um": l_s,
        "a1x": a1[0],
        "a1y": a1[1],
        "a1z": a1[2],
        "rgb_r": [c[0][0] for c in colours],
        "rgb_g": [c[0][1] for c in colours],
        "rgb_b": [c[0][2] for c in colours],
        "directed": [c[1] for c in colours],
    })
    for result in results:
        frame[f"E_rm_{result.label}"] = result.e_rm
    return frame


def mode_adc_contributions(model: MFModel, u_g, seq: Pgse) -> np.ndarray:
    """J(λ_n, f)(u_g · a_1n)²; sums to u_gᵀ D^MF u_g / D0"""
    u = np.asarray(u_g, dtype=float).reshape(3)
    return j_factors(model, seq) * (u @ model.a1) ** 2


# ============================================================================
# CONVERGENCE STUDIES
# ============================================================================

def neig_convergence(
    model: MFModel,
    reference: List[SignalRecord],
    seq: Pgse,
    neig_values: Sequence[int],
    threads: Optional[int] = None,
) -> pd.DataFrame:
    """
    E of the first-N-mode model against `reference` records for each N
    (values above the model size are clipped to it).
    """
    rows = []
    sizes = sorted({min(int(n), model.neig) for n in neig_values if n >= 1})
    for n in sizes:
        reduced = model.truncate(n)
        test = parallel_map(
            lambda r: mf_signal(reduced, Gradient(direction=r.direction, amplitude=r.amplitude), seq),
            reference, threads,
        )
        for comparison in compare_records(test, reference):
            rows.append({"neig": n, "bvalue_s_mm2": comparison.bvalue, "E": comparison.E, "E_rms": comparison.E_rms})
    return pd.DataFrame(rows)


def length_scale_sweep(
    fem: FemMatrices,
    l_s_values: Sequence[float],
    reference: List[SignalRecord],
    seq: Pgse,
    rho: float = 1.0,
    threads: Optional[int] = None,
) -> pd.DataFrame:
    """
    Accuracy against the minimum length scale: for each l_s_min, solve the
    eigen interval, build the model and score MF against `reference`.
    """
    rows = []
    for l_s_min in sorted(l_s_values, reverse=True):
        eig: LaplaceEig = solve_interval(fem, l_s_min)
        model = build_model(eig, fem, rho)
        test = parallel_map(
            lambda r: mf_signal(model, Gradient(direction=r.direction, amplitude=r.amplitude), seq),
            reference, threads,
        )
        for comparison in compare_records(test, reference):
            rows.append({
                "l_s_min_um": float(l_s_min),
                "neig": eig.neig,
                "bvalue_s_mm2": comparison.bvalue,
                "E": comparison.E,
                "E_rms": comparison.E_rms,
            })
    return pd.DataFrame(rows)
