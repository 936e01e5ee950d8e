"""
Laplace Eigensolver
===================
All Neumann Laplace eigenpairs S p = λ M p with λ in [0, λ_max],
λ_max = (π / l_s_min)² D0, certified complete by matrix inertia.

Strategy:
- N_v <= dense_eig_limit: dense generalized symmetric solve restricted
  to the interval.
- larger meshes: spectrum slicing. The interval is bisected (inertia
  counts at the cut points) until each slice holds at most
  eig_slice_target eigenvalues, then each slice is solved by shift-invert
  Lanczos centred on the slice. A final Rayleigh-Ritz step on the union
  restores M-orthonormality across slices.

The returned basis is normalized: ascending λ, PᵀMP = I, first
significant component of each column positive, degenerate clusters
ordered deterministically, λ₁ = 0 with the exact constant eigenvector.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
import scipy.linalg as sla
from scipy.sparse.linalg import eigsh

from config import settings
from ..errors import (
    FactorizationError,
    InertiaMismatchError,
    NumericalError,
    ParameterError,
)
from ..fem import FemMatrices
from .inertia import count_below

logger = logging.getLogger(__name__)

CLUSTER_GAP = 1e-8          # relative gap inside which eigenvalues form a cluster
ZERO_MODE_TOL = 1e-8        # λ₁ <= ZERO_MODE_TOL * λ₂
CONSTANT_MODE_TOL = 1e-8
RESIDUAL_TOL = 1e-8
SHIFT_PERTURBATION = 1e-9


@dataclass
class LaplaceEig:
    """Laplace eigendecomposition restricted to an eigenvalue interval"""
    lambdas: np.ndarray            # (N_eig,) ms⁻¹, non-decreasing
    P: np.ndarray                  # (N_v, N_eig), M-orthonormal columns
    l_s_min: float                 # μm
    D0: float                      # μm²/ms
    mesh_fingerprint: bytes

    lambda_max: float = 0.0
    inertia_count: int = 0
    solver: str = "dense"
    max_residual: float = 0.0
    slices: List[Tuple[float, float, int]] = field(default_factory=list)

    @property
    def neig(self) -> int:
        return int(self.lambdas.size)

    @property
    def n_nodes(self) -> int:
        return int(self.P.shape[0])

    def length_scales(self) -> np.ndarray:
        return np.array([length_scale(lam, self.D0) for lam in self.lambdas])

    def truncate(self, n: int) -> "LaplaceEig":
        """First n modes (n >= 1)"""
        n = max(1, min(int(n), self.neig))
        return LaplaceEig(
            lambdas=self.lambdas[:n].copy(),
            P=self.P[:, :n].copy(),
            l_s_min=self.l_s_min,
            D0=self.D0,
            mesh_fingerprint=self.mesh_fingerprint,
            lambda_max=float(self.lambdas[n - 1]),
            inertia_count=n,
            solver=self.solver,
            max_residual=self.max_residual,
        )


# === Interval helpers ===

def lambda_max_for(l_s_min: float, D0: float) -> float:
    if not l_s_min > 0:
        raise ParameterError(f"l_s_min must be positive, got {l_s_min}")
    if not D0 > 0:
        raise ParameterError(f"D0 must be positive, got {D0}")
    return (math.pi / l_s_min) ** 2 * D0


def length_scale(lam: float, D0: float) -> float:
    """l_s(λ) = π / sqrt(λ / D0); +inf for λ = 0"""
    if lam < 0:
        raise ParameterError(f"Eigenvalue must be non-negative, got {lam}")
    if lam == 0:
        return math.inf
    return math.pi / math.sqrt(lam / D0)


def eigen_table(eig: LaplaceEig) -> pd.DataFrame:
    """Mode listing with length scales (1-based n)"""
    return pd.DataFrame({
        "n": np.arange(1, eig.neig + 1),
        "lambda_ms^-1": eig.lambdas,
        "l_s_um": eig.length_scales(),
    })


def _certified_count(fem: FemMatrices, shift: float) -> Tuple[int, float]:
    """Inertia count at `shift`, nudging the shift upward if it hits an eigenvalue"""
    for attempt in range(settings.inertia_max_retries + 1):
        trial = shift * (1.0 + SHIFT_PERTURBATION * attempt) if shift != 0 else SHIFT_PERTURBATION * attempt
        try:
            return count_below(fem.stiffness, fem.mass, trial), trial
        except FactorizationError as e:
            logger.warning(f"Inertia at shift {trial:.12g} failed ({e}); perturbing")
    raise InertiaMismatchError(f"Inertia factorization failed at shift {shift} after retries")


# === Solvers ===

def _solve_dense(fem: FemMatrices, upper: float) -> Tuple[np.ndarray, np.ndarray]:
    S = fem.stiffness.toarray()
    M = fem.mass.toarray()
    lambdas, P = sla.eigh(S, M, subset_by_value=(-np.inf, upper))
    return lambdas, P


def _slice_bounds(fem: FemMatrices, lower: float, upper: float, n_upper: int) -> List[Tuple[float, float, int]]:
    """Bisect [lower, upper) until every slice holds <= eig_slice_target eigenvalues"""
    target = max(1, settings.eig_slice_target)
    pending = [(lower, 0, upper, n_upper)]
    done = []
    while pending:
        a, na, b, nb = pending.pop()
        m = nb - na
        if m == 0:
            continue
        if m <= target or (b - a) <= 1e-12 * max(abs(upper), 1.0):
            done.append((a, b, m))
            continue
        mid = 0.5 * (a + b)
        n_mid, mid = _certified_count(fem, mid)
        pending.append((mid, n_mid, b, nb))
        pending.append((a, na, mid, n_mid))
    done.sort()
    return done


def _solve_slice(fem: FemMatrices, a: float, b: float, m: int) -> Tuple[np.ndarray, np.ndarray]:
    n = fem.n_nodes
    sigma = 0.5 * (a + b)
    pad = max(5, m // 2)
    rng = np.random.default_rng(0)
    v0 = rng.standard_normal(n)
    for attempt in range(3):
        k = min(m + pad, n - 2)
        vals, vecs = eigsh(fem.stiffness, k=k, M=fem.mass, sigma=sigma, which="LM", v0=v0, tol=0.0)
        inside = (vals >= a) & (vals < b)
        if inside.sum() == m:
            return vals[inside], vecs[:, inside]
        logger.debug(f"Slice [{a:.6g}, {b:.6g}): found {inside.sum()} of {m}, widening k")
        pad *= 2
    raise InertiaMismatchError(
        f"Slice [{a:.6g}, {b:.6g}) expected {m} eigenvalues by inertia, Lanczos found {int(inside.sum())}"
    )


def _solve_sliced(fem: FemMatrices, upper: float, count: int) -> Tuple[np.ndarray, np.ndarray, list]:
    lower = -1e-6 * upper
    n_lower, lower = _certified_count(fem, lower)
    if n_lower != 0:
        raise NumericalError(f"{n_lower} eigenvalues below {lower:.3g}; stiffness is not semidefinite")

    slices = _slice_bounds(fem, lower, upper, count)
    logger.info(f"Spectrum sliced into {len(slices)} slices")

    values, vectors = [], []
    for a, b, m in slices:
        if m + 7 >= fem.n_nodes:
            lam, vec = _solve_dense(fem, b)
            keep = lam >= a
            lam, vec = lam[keep], vec[:, keep]
        else:
            lam, vec = _solve_slice(fem, a, b, m)
        values.append(lam)
        vectors.append(vec)

    Q = np.hstack(vectors)
    # Rayleigh-Ritz on the union
    S_r = Q.T @ (fem.stiffness @ Q)
    M_r = Q.T @ (fem.mass @ Q)
    S_r = 0.5 * (S_r + S_r.T)
    M_r = 0.5 * (M_r + M_r.T)
    theta, Y = sla.eigh(S_r, M_r)
    return theta, Q @ Y, slices


# === Normalization ===

def _clusters(lambdas: np.ndarray) -> List[np.ndarray]:
    scale = max(abs(lambdas[-1]), 1e-300)
    groups, start = [], 0
    for i in range(1, lambdas.size + 1):
        if i == lambdas.size or (lambdas[i] - lambdas[i - 1]) > CLUSTER_GAP * max(abs(lambdas[i]), scale * 1e-8):
            groups.append(np.arange(start, i))
            start = i
    return groups


def _m_orthonormalize(P: np.ndarray, M) -> np.ndarray:
    G = P.T @ (M @ P)
    G = 0.5 * (G + G.T)
    L = np.linalg.cholesky(G)
    return sla.solve_triangular(L, P.T, lower=True).T


def _fix_signs(P: np.ndarray) -> np.ndarray:
    P = P.copy()
    for j in range(P.shape[1]):
        col = P[:, j]
        big = np.abs(col) > 1e-8 * np.max(np.abs(col))
        first = np.argmax(big)
        if col[first] < 0:
            P[:, j] = -col
    return P


def _normalize(lambdas: np.ndarray, P: np.ndarray, fem: FemMatrices) -> Tuple[np.ndarray, np.ndarray]:
    order = np.argsort(lambdas, kind="stable")
    lambdas, P = lambdas[order], P[:, order]

    for group in _clusters(lambdas):
        if group.size > 1:
            block = _fix_signs(_m_orthonormalize(P[:, group], fem.mass))
            keys = np.round(block / np.max(np.abs(block)), 8)
            ranked = np.lexsort(keys[::-1])
            P[:, group] = block[:, ranked]
        else:
            P[:, group] = _fix_signs(P[:, group])

    # zero mode: λ₁ = 0 with the exact constant vector
    if lambdas.size > 1 and abs(lambdas[0]) > ZERO_MODE_TOL * lambdas[1]:
        raise NumericalError(
            f"First eigenvalue {lambdas[0]:.3e} is not zero relative to λ₂ = {lambdas[1]:.3e}"
        )
    constant = 1.0 / math.sqrt(fem.volume)
    first = P[:, 0]
    if np.max(np.abs(first - constant)) > CONSTANT_MODE_TOL * constant:
        raise NumericalError("First eigenvector is not constant; is the mesh connected?")
    lambdas = lambdas.copy()
    lambdas[0] = 0.0
    P[:, 0] = constant
    return lambdas, P


def _max_residual(fem: FemMatrices, lambdas: np.ndarray, P: np.ndarray) -> float:
    SP = fem.stiffness @ P
    R = SP - (fem.mass @ P) * lambdas[None, :]
    s_norm = max(np.abs(fem.stiffness).sum(axis=1).max(), 1e-300)
    rel = np.linalg.norm(R, axis=0) / (s_norm * np.maximum(np.linalg.norm(P, axis=0), 1e-300))
    return float(rel.max())


def solve_interval(fem: FemMatrices, l_s_min: float) -> LaplaceEig:
    """
    All eigenpairs with λ <= (π/l_s_min)² D0, certified by inertia.
    """
    lam_max = lambda_max_for(l_s_min, fem.D0)
    count, shift = _certified_count(fem, lam_max)
    logger.info(
        f"Eigen interval [0, {lam_max:.6g}] ms^-1 (l_s_min = {l_s_min} um): {count} eigenvalues by inertia"
    )

    if fem.n_nodes <= settings.dense_eig_limit:
        lambdas, P = _solve_dense(fem, shift)
        lambdas, P = lambdas[lambdas < shift], P[:, lambdas < shift]
        solver, slices = "dense", [(-math.inf, shift, count)]
    else:
        lambdas, P, slices = _solve_sliced(fem, shift, count)
        solver = "sliced-lanczos"

    if lambdas.size != count:
        raise InertiaMismatchError(
            f"Inertia certifies {count} eigenvalues below {shift:.6g}, solver returned {lambdas.size}"
        )

    lambdas, P = _normalize(lambdas, P, fem)
    residual = _max_residual(fem, lambdas, P)
    if residual > RESIDUAL_TOL:
        logger.warning(f"Max relative eigen residual {residual:.2e} above {RESIDUAL_TOL:g}")

    return LaplaceEig(
        lambdas=lambdas,
        P=P,
        l_s_min=float(l_s_min),
        D0=fem.D0,
        mesh_fingerprint=fem.fingerprint,
        lambda_max=lam_max,
        inertia_count=count,
        solver=solver,
        max_residual=residual,
        slices=slices,
    )
