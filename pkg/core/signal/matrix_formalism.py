"""
Matrix Formalism
================
Reduced signal model built from the Laplace eigendecomposition.

    L    = diag(λ_n)
    A^i  = Pᵀ J^i P                     (i = x, y, z)
    W(g) = Σ g_i (A^i - c_i I)          c = domain centroid
    K(g) = L + iγ W(g)
    H    = e^{-Kδ} e^{-L(Δ-δ)} e^{-K*δ}
    S^MF = ρ|Ω| H_11

plus the effective diffusion tensor D^MF = D0 Σ_n J(λ_n, f) a_1n a_1nᵀ and
the Gaussian approximation S^MFGA = ρ|Ω| exp(-u_gᵀ D^MF u_g b).

Mode indices in this API are 0-based: mode 0 is the constant mode.
"""

import logging
import math
import time
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, Optional, Tuple

import numpy as np
import pandas as pd
import scipy.linalg as sla
from numpy.polynomial import Polynomial
from scipy.integrate import quad

from config import GAMMA, settings
from ..errors import DiagonalizationError, FingerprintMismatchError, ParameterError
from ..fem import FemMatrices
from ..models import Method, SignalRecord
from ..sequences import Gradient, Pgse, bvalue, amplitude_for_b, b_internal
from ..spectral.eigensolver import LaplaceEig

logger = logging.getLogger(__name__)

RESIDUAL_LIMIT = 1e-9
SERIES_LIMIT = 1.0          # λ·TE below which J uses the moment series
SERIES_TERMS = 30


# ============================================================================
# MODEL
# ============================================================================

@dataclass(frozen=True)
class MFModel:
    """
    Complete reduced model. `A` holds the uncentered moment matrices
    (3, N_eig, N_eig); a_11 is then the domain centroid.
    """
    L: np.ndarray
    A: np.ndarray
    centroid: np.ndarray
    volume: float
    rho: float
    D0: float
    second_moments: np.ndarray
    fingerprint: bytes

    @property
    def neig(self) -> int:
        return int(self.L.size)

    @property
    def s0(self) -> float:
        return self.rho * self.volume

    @property
    def a1(self) -> np.ndarray:
        """(3, N_eig) first-row triplets a_1n"""
        return self.A[:, 0, :]

    @property
    def parameter_count(self) -> int:
        return parameter_count(self.neig)

    def W(self, g) -> np.ndarray:
        """Centered Σ g_i (A^i - c_i I)"""
        g = np.asarray(g, dtype=float).reshape(3)
        W = np.tensordot(g, self.A, axes=1)
        W = W - float(g @ self.centroid) * np.eye(self.neig)
        return W

    def K(self, g) -> np.ndarray:
        return np.diag(self.L).astype(complex) + 1j * GAMMA * self.W(g)

    def subset(self, keep: Iterable[int]) -> "MFModel":
        """Principal submatrices on `keep` (0-based, must contain mode 0)"""
        keep = np.array(sorted(set(int(k) for k in keep)), dtype=int)
        if keep.size == 0 or keep[0] != 0:
            raise ParameterError("Mode subset must contain the constant mode 0")
        if keep[-1] >= self.neig:
            raise ParameterError(f"Mode index {keep[-1]} out of range for {self.neig} modes")
        return replace(self, L=self.L[keep], A=self.A[:, keep][:, :, keep])

    def truncate(self, n: int) -> "MFModel":
        return self.subset(range(max(1, min(int(n), self.neig))))


def parameter_count(neig: int) -> int:
    """n eigenvalues + three symmetric n x n matrices without repeated a_11 data"""
    return neig + 3 * neig * (neig - 1) // 2


def build_model(eig: LaplaceEig, fem: FemMatrices, rho: float = 1.0) -> MFModel:
    """A^i = Pᵀ J^i P, symmetrized"""
    if eig.mesh_fingerprint != fem.fingerprint:
        raise FingerprintMismatchError("Eigendecomposition and FEM matrices come from different meshes")
    if rho <= 0:
        raise ParameterError(f"Spin density must be positive, got {rho}")

    P = eig.P
    A = np.empty((3, eig.neig, eig.neig))
    for i, J in enumerate(fem.moments):
        Ai = P.T @ (J @ P)
        A[i] = 0.5 * (Ai + Ai.T)

    logger.info(f"Built MF model: {eig.neig} modes, {parameter_count(eig.neig)} parameters")
    return MFModel(
        L=eig.lambdas.copy(),
        A=A,
        centroid=fem.centroid.copy(),
        volume=fem.volume,
        rho=float(rho),
        D0=fem.D0,
        second_moments=fem.second_moments.copy(),
        fingerprint=fem.fingerprint,
    )


# ============================================================================
# PROPAGATORS
# ============================================================================

@dataclass
class PulsePropagator:
    """e^{-Kδ} and how it was computed"""
    E: np.ndarray
    path: str                 # "diagonal", "eig" or "expm"
    condition: float = 1.0
    residual: float = 0.0


def pulse_propagator(K: np.ndarray, delta: float, force_expm: bool = False) -> PulsePropagator:
    """
    e^{-Kδ} by diagonalization K = VΣV⁻¹ (V⁻¹ from an LU solve); falls
    back to scaling-and-squaring when V is ill-conditioned or the
    eigen-residual is too large.
    """
    n = K.shape[0]
    if not np.any(K - np.diag(np.diag(K))):
        return PulsePropagator(E=np.diag(np.exp(-np.diag(K) * delta)), path="diagonal")

    if not force_expm:
        mus, V = sla.eig(K)
        cond = np.linalg.cond(V)
        k_norm = max(np.linalg.norm(K, 1), 1e-300)
        residual = np.linalg.norm(K @ V - V * mus[None, :], 1) / k_norm
        if cond <= settings.mf_cond_limit and residual <= RESIDUAL_LIMIT * max(1.0, np.linalg.norm(V, 1)):
            V_inv = sla.lu_solve(sla.lu_factor(V), np.eye(n))
            E = (V * np.exp(-mus * delta)[None, :]) @ V_inv
            return PulsePropagator(E=E, path="eig", condition=float(cond), residual=float(residual))
        logger.debug(f"Diagonalization rejected (cond {cond:.2e}, residual {residual:.2e}); using expm")

    E = sla.expm(-K * delta)
    if not np.all(np.isfinite(E)):
        raise DiagonalizationError("Matrix exponential is not finite", neig=n, delta=delta)
    return PulsePropagator(E=E, path="expm")


def h_matrix(model: MFModel, g, seq: Pgse, reverse: bool = False, force_expm: bool = False) -> np.ndarray:
    """
    H = e^{-Kδ} e^{-L(Δ-δ)} e^{-K*δ}; `reverse` evaluates
    e^{-K*δ} e^{-L(Δ-δ)} e^{-Kδ} instead.
    """
    prop = pulse_propagator(model.K(g), seq.delta, force_expm=force_expm)
    E = prop.E
    middle = np.exp(-model.L * (seq.Delta - seq.delta))
    first, last = (E.conj(), E) if reverse else (E, E.conj())
    return (first * middle[None, :]) @ last


def h11(model: MFModel, g, seq: Pgse, force_expm: bool = False) -> complex:
    g = np.asarray(g, dtype=float).reshape(3)
    if not np.any(g):
        return complex(math.exp(-model.L[0] * seq.echo_time))
    prop = pulse_propagator(model.K(g), seq.delta, force_expm=force_expm)
    row = prop.E[0, :]
    col = prop.E[:, 0].conj()
    middle = np.exp(-model.L * (seq.Delta - seq.delta))
    return complex(np.sum(row * middle * col))


# ============================================================================
# SIGNALS
# ============================================================================

def _record(model: MFModel, gradient: Gradient, seq: Pgse, value: complex,
            method: Method, started: float) -> SignalRecord:
    return SignalRecord(
        seq_id=seq.seq_id,
        delta=seq.delta,
        Delta=seq.Delta,
        bvalue=bvalue(seq, gradient.amplitude),
        direction=gradient.direction,
        amplitude=gradient.amplitude,
        signal=value,
        s0=model.s0,
        method=method,
        neig=model.neig,
        wall_time=time.perf_counter() - started,
    )


def mf_signal(model: MFModel, gradient: Gradient, seq: Pgse) -> SignalRecord:
    """S^MF = ρ|Ω| H_11"""
    started = time.perf_counter()
    value = model.s0 * h11(model, gradient.vector, seq)
    return _record(model, gradient, seq, value, Method.MF, started)


def mf_signal_expm(model: MFModel, gradient: Gradient, seq: Pgse) -> SignalRecord:
    """S^MF with every exponential by scaling-and-squaring"""
    started = time.perf_counter()
    value = model.s0 * h11(model, gradient.vector, seq, force_expm=True)
    return _record(model, gradient, seq, value, Method.MF, started)


def mf_signal_subset(model: MFModel, keep: Iterable[int], gradient: Gradient, seq: Pgse) -> SignalRecord:
    """S^MF on the principal submatrices of the kept modes (0-based, 0 required)"""
    return mf_signal(model.subset(keep), gradient, seq)


# ============================================================================
# J FACTOR, D^MF, MFGA
# ============================================================================

def _piecewise_integrals(seq: Pgse, count: int):
    """
    Coefficients c_k = ∫_0^1 F̂(s) F̂_{k+1}(s) ds on the time axis scaled by
    TE, where F̂_1 = F̂ and F̂_{m+1} is the running integral of F̂_m.
    """
    T = seq.echo_time
    breaks = [0.0] + [t1 / T for (_, t1, _) in seq.intervals()]
    levels = [f for (_, _, f) in seq.intervals()]

    # F̂_0 = f̂ on each piece
    current = [Polynomial([f]) for f in levels]
    antiderivatives = []
    for _ in range(count + 1):
        nxt, start_value = [], 0.0
        for piece, poly in enumerate(current):
            integ = poly.integ(lbnd=breaks[piece], k=[start_value])
            nxt.append(integ)
            start_value = integ(breaks[piece + 1])
        antiderivatives.append(nxt)
        current = nxt

    F = antiderivatives[0]
    coeffs = np.empty(count)
    for k in range(count):
        total = 0.0
        for piece in range(len(F)):
            prod = (F[piece] * antiderivatives[k][piece]).integ()
            total += prod(breaks[piece + 1]) - prod(breaks[piece])
        coeffs[k] = total
    return coeffs


@lru_cache(maxsize=256)
def _series_coefficients(delta: float, Delta: float) -> np.ndarray:
    return _piecewise_integrals(Pgse(delta=delta, Delta=Delta), SERIES_TERMS)


def _q_closed_form(lam: float, seq: Pgse) -> float:
    """λ ∫ F(t) ∫_0^t e^{-λ(t-s)} f(s) ds dt for PGSE"""
    a = lam
    x = a * seq.delta
    u = math.exp(-x)
    v = math.exp(-a * seq.Delta)
    w = math.exp(-a * (seq.Delta - seq.delta))
    one_minus_u = -math.expm1(-x)
    if x < 0.1:
        # 1 - e^{-x}(1 + x) = Σ_{k>=2} (-1)^k (k-1) x^k / k!
        h, term = 0.0, 1.0
        for k in range(1, 20):
            term *= x / k
            if k >= 2:
                h += (-1) ** k * (k - 1) * term
    else:
        h = one_minus_u - x * u
    return (x * one_minus_u * (2.0 - v) - h * (2.0 + w - v)) / (a * a)


def j_factor(lam: float, seq: Pgse, D0: float) -> float:
    """
    J(λ, f) = λ ∫F(t)∫_0^t e^{-λ(t-s)} f(s) ds dt / (D0 ∫F²).

    Closed form for λ·TE >= 1; exact moment series in λ·TE below.
    """
    if lam < 0:
        raise ParameterError(f"Eigenvalue must be non-negative, got {lam}")
    if lam == 0:
        return 0.0
    T = seq.echo_time
    if lam * T < SERIES_LIMIT:
        c = _series_coefficients(seq.delta, seq.Delta)
        powers = (-lam * T) ** np.arange(c.size)
        return float(lam / D0 * np.sum(powers * c) / c[0])
    return float(_q_closed_form(lam, seq) / (D0 * seq.f_squared_integral))


def j_factor_quadrature(lam: float, seq: Pgse, D0: float) -> float:
    """Nested adaptive quadrature of the J definition (oracle)"""
    if lam == 0:
        return 0.0
    points = [seq.delta, seq.Delta]

    def inner(t):
        knots = [p for p in points if p < t]
        val, _ = quad(lambda s: math.exp(-lam * (t - s)) * float(seq.profile(s)), 0.0, t,
                      points=knots or None, epsabs=0.0, epsrel=1e-13, limit=200)
        return val

    outer, _ = quad(lambda t: float(seq.integrated_profile(t)) * inner(t), 0.0, seq.echo_time,
                    points=points, epsabs=0.0, epsrel=1e-12, limit=200)
    return lam * outer / (D0 * seq.f_squared_integral)


def j_factors(model: MFModel, seq: Pgse) -> np.ndarray:
    return np.array([j_factor(lam, seq, model.D0) for lam in model.L])


def d_mf_tensor(model: MFModel, seq: Pgse) -> np.ndarray:
    """D^MF = D0 Σ_n J(λ_n, f) a_1n a_1nᵀ (μm²/ms)"""
    J = j_factors(model, seq)
    a = model.a1                                    # (3, N)
    D = model.D0 * (a * J[None, :]) @ a.T
    return 0.5 * (D + D.T)


def mf_adc(model: MFModel, u_g, seq: Pgse) -> float:
    u = np.asarray(u_g, dtype=float).reshape(3)
    return float(u @ d_mf_tensor(model, seq) @ u)


def mfga_signal(model: MFModel, b: float, u_g, seq: Pgse) -> SignalRecord:
    """S^MFGA = ρ|Ω| exp(-u_gᵀ D^MF u_g b)"""
    started = time.perf_counter()
    gradient = Gradient(direction=tuple(np.asarray(u_g, dtype=float)), amplitude=amplitude_for_b(seq, b))
    adc = mf_adc(model, gradient.u, seq)
    value = complex(model.s0 * math.exp(-adc * b_internal(b)))
    record = _record(model, gradient, seq, value, Method.MFGA, started)
    record.bvalue = float(b)
    return record


# ============================================================================
# DIAGNOSTICS
# ============================================================================

def parseval_diagnostic(model: MFModel) -> pd.DataFrame:
    """
    Partial sums Σ_{n<=N} (a^i_1n)² against ⟨x_i²⟩ = ∫x_i²/|Ω|;
    the gap is the truncation diagnostic.
    """
    partial = np.cumsum(model.a1 ** 2, axis=1)         # (3, N)
    limit = model.second_moments / model.volume
    frame = pd.DataFrame({"n": np.arange(1, model.neig + 1)})
    for i, axis in enumerate("xyz"):
        frame[f"sum_a1{axis}^2"] = partial[i]
        frame[f"gap_{axis}"] = limit[i] - partial[i]
    return frame
