"""
Analysis Module
===============
Cross-method metrics, eigenmode significance, ADC estimates and
convergence studies.
"""

from .adc import (
    sta_coefficient,
    sta_adc,
    sta_adc_short_pulse,
    adc_from_signals,
)
from .metrics import (
    SweepComparison,
    RemoveOneResult,
    signal_difference,
    signal_difference_rms,
    mean_relative_error,
    compare_records,
    remove_one_significance,
    rgb_direction,
    significance_table,
    mode_adc_contributions,
    neig_convergence,
    length_scale_sweep,
)

__all__ = [
    "sta_coefficient",
    "sta_adc",
    "sta_adc_short_pulse",
    "adc_from_signals",
    "SweepComparison",
    "RemoveOneResult",
    "signal_difference",
    "signal_difference_rms",
    "mean_relative_error",
    "compare_records",
    "remove_one_significance",
    "rgb_direction",
    "significance_table",
    "mode_adc_contributions",
    "neig_convergence",
    "length_scale_sweep",
]
