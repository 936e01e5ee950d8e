"""
BT Spectrum Module
==================
Bloch-Torrey eigenmodes in the Laplace basis: significance, supports,
the A(δ) coefficient grid and the magnetization at the echo.
"""

from .decomposition import (
    BtEig,
    BtSignificance,
    SupportRegion,
    EchoMagnetization,
    bt_eigendecomposition,
    psi_at_nodes,
    support_region,
    scatter_data,
    significant_bt,
    initial_coefficients,
    a_delta_matrix,
    laplace_coeffs_at,
    a_delta_grid,
    magnetization_at_echo,
    truncated_signal,
)

__all__ = [
    "BtEig",
    "BtSignificance",
    "SupportRegion",
    "EchoMagnetization",
    "bt_eigendecomposition",
    "psi_at_nodes",
    "support_region",
    "scatter_data",
    "significant_bt",
    "initial_coefficients",
    "a_delta_matrix",
    "laplace_coeffs_at",
    "a_delta_grid",
    "magnetization_at_echo",
    "truncated_signal",
]
