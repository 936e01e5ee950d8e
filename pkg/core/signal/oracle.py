"""
Analytic Oracles
================
Closed-form references independent of the FEM pipeline:

- Neumann eigenvalues of a box (tensor products of line segments)
- Matrix Formalism on a segment [0, H] with the cosine eigenbasis
  φ_0 = 1/√H, φ_k = √(2/H) cos(kπx/H), λ_k = D0 (kπ/H)²,
  and closed-form first-moment matrices. Exponentials by expm.
"""

import itertools
import math
from dataclasses import dataclass
from typing import List

import numpy as np
import scipy.linalg as sla

from config import GAMMA
from ..errors import ParameterError
from ..sequences import Pgse


def box_eigenvalues(Lx: float, Ly: float, Lz: float, D0: float, count: int) -> np.ndarray:
    """Smallest `count` values of D0 π² (i²/Lx² + j²/Ly² + k²/Lz²), with multiplicity"""
    extent = int(math.ceil(2 * count ** (1.0 / 3.0))) + 2
    values: List[float] = []
    for i, j, k in itertools.product(range(extent), repeat=3):
        values.append(D0 * math.pi ** 2 * (i ** 2 / Lx ** 2 + j ** 2 / Ly ** 2 + k ** 2 / Lz ** 2))
    values.sort()
    return np.array(values[:count])


@dataclass
class SegmentOracle:
    """Matrix Formalism on a 1D segment of length H"""
    H: float
    D0: float
    n_modes: int = 60

    def __post_init__(self):
        if self.H <= 0 or self.D0 <= 0 or self.n_modes < 1:
            raise ParameterError("Segment oracle needs H > 0, D0 > 0 and at least one mode")

    @property
    def lambdas(self) -> np.ndarray:
        k = np.arange(self.n_modes)
        return self.D0 * (k * math.pi / self.H) ** 2

    def moment_matrix(self) -> np.ndarray:
        """A_mn = ∫ x φ_m φ_n dx (uncentered)"""
        H, n = self.H, self.n_modes
        A = np.zeros((n, n))
        A[0, 0] = H / 2.0
        for m in range(1, n):
            A[m, m] = H / 2.0
            A[0, m] = A[m, 0] = math.sqrt(2.0) * H * ((-1) ** m - 1) / (m * math.pi) ** 2
            for k in range(m + 1, n):
                value = H * ((-1) ** (m + k) - 1) * (
                    1.0 / ((m - k) * math.pi) ** 2 + 1.0 / ((m + k) * math.pi) ** 2
                )
                A[m, k] = A[k, m] = value
        return A

    def attenuation(self, amplitude: float, seq: Pgse) -> complex:
        """H_11 for a gradient of `amplitude` T/m along the segment"""
        A = self.moment_matrix() - (self.H / 2.0) * np.eye(self.n_modes)
        K = np.diag(self.lambdas).astype(complex) + 1j * GAMMA * amplitude * A
        E = sla.expm(-K * seq.delta)
        middle = np.diag(np.exp(-self.lambdas * (seq.Delta - seq.delta)))
        H = E @ middle @ E.conj()
        return complex(H[0, 0])

    def first_row(self) -> np.ndarray:
        return self.moment_matrix()[0]
