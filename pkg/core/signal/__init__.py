"""
Signal Module
=============
Matrix Formalism signals, the Bloch-Torrey reference solver and the
analytic segment oracle.
"""

from .matrix_formalism import (
    MFModel,
    PulsePropagator,
    build_model,
    parameter_count,
    pulse_propagator,
    h_matrix,
    h11,
    mf_signal,
    mf_signal_expm,
    mf_signal_subset,
    j_factor,
    j_factor_quadrature,
    j_factors,
    d_mf_tensor,
    mf_adc,
    mfga_signal,
    parseval_diagnostic,
)
from .btpde import (
    BtpdeOptions,
    BtpdeResult,
    btpde_solve,
    btpde_signal,
    btpde_adc,
)
from .oracle import SegmentOracle, box_eigenvalues

__all__ = [
    "MFModel",
    "PulsePropagator",
    "build_model",
    "parameter_count",
    "pulse_propagator",
    "h_matrix",
    "h11",
    "mf_signal",
    "mf_signal_expm",
    "mf_signal_subset",
    "j_factor",
    "j_factor_quadrature",
    "j_factors",
    "d_mf_tensor",
    "mf_adc",
    "mfga_signal",
    "parseval_diagnostic",
    "BtpdeOptions",
    "BtpdeResult",
    "btpde_solve",
    "btpde_signal",
    "btpde_adc",
    "SegmentOracle",
    "box_eigenvalues",
]
