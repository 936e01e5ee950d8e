"""
Bloch-Torrey Spectrum
=====================
Eigendecomposition of the Bloch-Torrey operator -(D0∇² - iγ g·x) in the
Laplace eigenbasis: K(g) = L + iγW(g) = VΣV⁻¹. Row j of V⁻¹ holds the
Laplace coefficients of ψ_j; the constant initial density projects onto
ψ_j with weight ρ√|Ω| V_1j.

Normalization: every ψ_j is scaled to unit L² norm (Euclidean norm of
its coefficient row) and V_1j is scaled inversely, so the reconstructed
magnetization is unchanged. Significance thresholds refer to this
normalization.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
import scipy.linalg as sla

from config import settings, BT_SIGNIFICANCE, A_DELTA_THRESHOLD, SUPPORT_FRACTION
from ..errors import ParameterError
from ..sequences import Gradient, Pgse
from ..signal.matrix_formalism import MFModel
from ..spectral.eigensolver import LaplaceEig

logger = logging.getLogger(__name__)


@dataclass
class BtEig:
    """
    BT eigenpairs sorted by Re(μ), ties by Im(μ).

    V      columns: eigenvectors of K, scaled so rows of V⁻¹ have unit norm
    V_inv  rows: normalized ψ coefficients
    """
    mus: np.ndarray
    V: np.ndarray
    V_inv: np.ndarray
    gradient: Gradient
    norms: np.ndarray
    condition: float
    residual: float
    flagged: bool = False

    @property
    def neig(self) -> int:
        return int(self.mus.size)

    @property
    def v1(self) -> np.ndarray:
        """Projection weights V_1j of the constant initial density"""
        return self.V[0, :]


def bt_eigendecomposition(model: MFModel, gradient: Gradient) -> BtEig:
    """Diagonalize K(g) and normalize ψ to unit L² norm"""
    n = model.neig
    if gradient.amplitude == 0.0:
        eye = np.eye(n, dtype=complex)
        return BtEig(
            mus=model.L.astype(complex),
            V=eye,
            V_inv=eye.copy(),
            gradient=gradient,
            norms=np.ones(n),
            condition=1.0,
            residual=0.0,
        )

    K = model.K(gradient.vector)
    mus, V = sla.eig(K)
    order = np.lexsort((mus.imag, mus.real))
    mus, V = mus[order], V[:, order]

    V_inv = sla.lu_solve(sla.lu_factor(V), np.eye(n))
    norms = np.linalg.norm(V_inv, axis=1)
    V_inv = V_inv / norms[:, None]
    V = V * norms[None, :]

    residual = float(np.linalg.norm(K @ V - V * mus[None, :], 2) / (np.linalg.norm(K, 2) * np.linalg.norm(V, 2)))
    condition = float(np.linalg.cond(V))
    flagged = condition > settings.bt_cond_limit
    if flagged:
        logger.warning(
            f"BT eigenvectors ill-conditioned at {gradient.amplitude:g} T/m (cond {condition:.2e}); result flagged"
        )

    return BtEig(
        mus=mus, V=V, V_inv=V_inv, gradient=gradient, norms=norms,
        condition=condition, residual=residual, flagged=flagged,
    )


# === Supports ===

@dataclass
class SupportRegion:
    """Nodes where |ψ_j| reaches `fraction` of its maximum"""
    mode: int
    fraction: float
    node_indices: np.ndarray
    abs_psi: np.ndarray            # |ψ_j| at every node

    @property
    def node_fraction(self) -> float:
        return self.node_indices.size / self.abs_psi.size

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "node_index": self.node_indices + 1,
            "abs_psi": self.abs_psi[self.node_indices],
        })


def _nodal(P: np.ndarray, coefficients: np.ndarray, chunk: Optional[int] = None) -> np.ndarray:
    """P @ coefficients evaluated in row chunks"""
    chunk = chunk or settings.node_chunk_size
    out = np.empty(P.shape[0], dtype=complex)
    for start in range(0, P.shape[0], chunk):
        out[start:start + chunk] = P[start:start + chunk] @ coefficients
    return out


def psi_at_nodes(bt: BtEig, eig: LaplaceEig, j: int) -> np.ndarray:
    if not 0 <= j < bt.neig:
        raise ParameterError(f"BT mode {j} out of range 0..{bt.neig - 1}")
    if eig.neig != bt.neig:
        raise ParameterError(f"BT decomposition has {bt.neig} modes, Laplace basis {eig.neig}")
    return _nodal(eig.P, bt.V_inv[j, :])


def support_region(bt: BtEig, eig: LaplaceEig, j: int, frac: float = SUPPORT_FRACTION) -> SupportRegion:
    """supp ψ_j = {x : |ψ_j(x)| >= frac max|ψ_j|} on mesh nodes (0-based j)"""
    abs_psi = np.abs(psi_at_nodes(bt, eig, j))
    nodes = np.flatnonzero(abs_psi >= frac * abs_psi.max())
    return SupportRegion(mode=j, fraction=frac, node_indices=nodes, abs_psi=abs_psi)


# === Significance ===

@dataclass
class BtSignificance:
    indices: np.ndarray
    threshold: float
    scatter: pd.DataFrame


def scatter_data(bt: BtEig, threshold: float = BT_SIGNIFICANCE) -> pd.DataFrame:
    """bt_modes table: j (1-based), μ parts, |V_1j|, significance"""
    abs_v1 = np.abs(bt.v1)
    return pd.DataFrame({
        "j": np.arange(1, bt.neig + 1),
        "re_mu_ms^-1": bt.mus.real,
        "im_mu_ms^-1": bt.mus.imag,
        "abs_V1j": abs_v1,
        "significant": abs_v1 >= threshold,
    })


def significant_bt(bt: BtEig, threshold: float = BT_SIGNIFICANCE) -> BtSignificance:
    """Modes with |V_1j| >= threshold (0-based indices)"""
    indices = np.flatnonzero(np.abs(bt.v1) >= threshold)
    return BtSignificance(indices=indices, threshold=threshold, scatter=scatter_data(bt, threshold))


def initial_coefficients(bt: BtEig) -> np.ndarray:
    """Σ_j V_1j ψ_j in Laplace coefficients; equals e_1 exactly"""
    return bt.v1 @ bt.V_inv


# === A(δ) ===

def a_delta_matrix(bt: BtEig, delta: float) -> np.ndarray:
    """A(δ) = diag(V_1j e^{-μ_j δ}) V⁻¹"""
    if delta < 0:
        raise ParameterError(f"delta must be non-negative, got {delta}")
    weights = bt.v1 * np.exp(-bt.mus * delta)
    return weights[:, None] * bt.V_inv


def laplace_coeffs_at(bt: BtEig, delta: float) -> np.ndarray:
    """c_k(δ): column sums of A(δ); M(x,δ) = ρ√|Ω| Σ_k c_k φ_k"""
    return a_delta_matrix(bt, delta).sum(axis=0)


def a_delta_grid(bt: BtEig, delta: float, threshold: float = A_DELTA_THRESHOLD) -> pd.DataFrame:
    """Long-form A(δ) grid (1-based j, k) with entries marked above threshold"""
    A = np.abs(a_delta_matrix(bt, delta))
    j, k = np.meshgrid(np.arange(bt.neig), np.arange(bt.neig), indexing="ij")
    return pd.DataFrame({
        "j": j.ravel() + 1,
        "k": k.ravel() + 1,
        "abs_Ajk": A.ravel(),
        "marked": A.ravel() >= threshold,
    })


# === Magnetization at the echo ===

@dataclass
class EchoMagnetization:
    coefficients: np.ndarray       # Laplace coefficients at TE
    values: Optional[np.ndarray]   # nodal field, when a basis was supplied
    signal: complex


def _echo_coefficients(bt: BtEig, model: MFModel, seq: Pgse, coeffs_delta: np.ndarray) -> np.ndarray:
    m_delta = model.rho * math.sqrt(model.volume) * coeffs_delta
    m_Delta = m_delta * np.exp(-model.L * (seq.Delta - seq.delta))
    # ψ̃ coefficients, decay by Σ*, back to φ through V^H
    m_psi = (m_Delta @ bt.V_inv.conj().T) * np.exp(-bt.mus.conj() * seq.delta)
    return m_psi @ bt.V.conj().T


def magnetization_at_echo(bt: BtEig, eig: Optional[LaplaceEig], model: MFModel, seq: Pgse) -> EchoMagnetization:
    """
    M(x, TE) = ρ√|Ω| [V_11..V_1n] e^{-Σδ} V⁻¹ e^{-L(Δ-δ)} (V⁻¹)ᴴ e^{-Σ*δ} Vᴴ [φ]
    """
    coeffs = _echo_coefficients(bt, model, seq, laplace_coeffs_at(bt, seq.delta))
    values = _nodal(eig.P, coeffs) if eig is not None else None
    signal = complex(math.sqrt(model.volume) * coeffs[0])
    return EchoMagnetization(coefficients=coeffs, values=values, signal=signal)


def truncated_signal(bt: BtEig, model: MFModel, seq: Pgse, threshold: float = A_DELTA_THRESHOLD):
    """
    Echo signal with A(δ) entries below `threshold` dropped.
    Returns (signal, relative change against the full signal).
    """
    A = a_delta_matrix(bt, seq.delta)
    kept = np.where(np.abs(A) >= threshold, A, 0.0)
    full = magnetization_at_echo(bt, None, model, seq).signal
    coeffs = _echo_coefficients(bt, model, seq, kept.sum(axis=0))
    value = complex(math.sqrt(model.volume) * coeffs[0])
    change = abs(value - full) / abs(full) if full != 0 else 0.0
    logger.debug(f"A(delta) truncation at {threshold:g}: kept {int((np.abs(A) >= threshold).sum())} entries, change {change:.2e}")
    return value, change
