"""
Inertia Counting
================
Number of generalized eigenvalues of (S, M) below a shift σ, read off the
inertia of S - σM (Sylvester's law): the count of negative pivots of a
symmetric LDLᵀ factorization.

Small problems use a dense Bunch-Kaufman LDLᵀ; large ones a sparse LU in
symmetric mode with diagonal pivoting only, where U = D Lᵀ and the signs
of diag(U) give the inertia.
"""

import logging
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from config import settings
from ..errors import FactorizationError

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-14


def _dense_negative_count(A: np.ndarray) -> int:
    _, d, _ = sla.ldl(A, lower=True, hermitian=True)
    n = d.shape[0]
    scale = max(np.max(np.abs(np.diag(d))), 1e-300)
    negatives = 0
    i = 0
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0.0:
            a, b, c = d[i, i], d[i + 1, i], d[i + 1, i + 1]
            det = a * c - b * b
            if abs(det) <= PIVOT_TOLERANCE * scale * scale:
                raise FactorizationError(f"Singular 2x2 pivot at {i}")
            if det < 0:
                negatives += 1
            elif a + c < 0:
                negatives += 2
            i += 2
        else:
            if abs(d[i, i]) <= PIVOT_TOLERANCE * scale:
                raise FactorizationError(f"Zero pivot at {i}: shift coincides with an eigenvalue")
            negatives += int(d[i, i] < 0)
            i += 1
    return negatives


def _sparse_negative_count(A: sp.spmatrix) -> int:
    try:
        lu = splu(
            sp.csc_matrix(A),
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
    except RuntimeError as e:
        raise FactorizationError(f"Sparse LDL factorization failed: {e}")

    if not np.array_equal(lu.perm_r, lu.perm_c):
        raise FactorizationError("Sparse factorization used off-diagonal pivots; inertia unavailable")

    diag = lu.U.diagonal()
    scale = max(np.max(np.abs(diag)), 1e-300)
    if np.min(np.abs(diag)) <= PIVOT_TOLERANCE * scale:
        raise FactorizationError("Zero pivot: shift coincides with an eigenvalue")
    return int(np.sum(diag < 0))


def count_below(
    stiffness: sp.spmatrix,
    mass: sp.spmatrix,
    shift: float,
    dense_limit: Optional[int] = None,
) -> int:
    """
    Number of eigenvalues λ of S p = λ M p with λ < shift.

    Raises FactorizationError when the shift is (numerically) an
    eigenvalue; callers retry with a perturbed shift.
    """
    A = (stiffness - shift * mass).tocsc()
    limit = settings.dense_eig_limit if dense_limit is None else dense_limit
    if A.shape[0] <= limit:
        count = _dense_negative_count(A.toarray())
    else:
        count = _sparse_negative_count(A)
    logger.debug(f"Inertia at shift {shift:.6g}: {count} eigenvalues below")
    return count
