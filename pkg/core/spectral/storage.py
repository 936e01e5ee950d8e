"""
Eigendecomposition Storage
==========================
Lossless little-endian container for a LaplaceEig:

    magic  b"MFEIG001"
    u64 N_v, u64 N_eig, f64 D0, f64 l_s_min
    32-byte mesh fingerprint (SHA-256 of the canonical mesh text)
    f64 lambdas[N_eig]
    f64 P[N_v x N_eig], column-major
"""

import logging
import os
import struct
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..errors import EigFormatError, FingerprintMismatchError
from .eigensolver import LaplaceEig, lambda_max_for

logger = logging.getLogger(__name__)

MAGIC = b"MFEIG001"
_HEADER = struct.Struct("<QQdd")
_FINGERPRINT_BYTES = 32

PathLike = Union[str, Path]


def save_eig(eig: LaplaceEig, path: PathLike):
    """Write atomically (temp file + rename)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fingerprint = eig.mesh_fingerprint
    if len(fingerprint) != _FINGERPRINT_BYTES:
        raise EigFormatError(f"Fingerprint must be {_FINGERPRINT_BYTES} bytes, got {len(fingerprint)}")

    payload = b"".join([
        MAGIC,
        _HEADER.pack(eig.n_nodes, eig.neig, float(eig.D0), float(eig.l_s_min)),
        fingerprint,
        np.ascontiguousarray(eig.lambdas, dtype="<f8").tobytes(),
        np.asarray(eig.P, dtype="<f8").tobytes(order="F"),
    ])
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(payload)
    os.replace(tmp, path)
    logger.info(f"Saved eigendecomposition ({eig.neig} modes) to {path}")


def load_eig(path: PathLike, expected_fingerprint: Optional[bytes] = None) -> LaplaceEig:
    """
    Read a container; with `expected_fingerprint`, refuse files computed
    on another mesh.
    """
    path = Path(path)
    data = path.read_bytes()

    head = len(MAGIC) + _HEADER.size + _FINGERPRINT_BYTES
    if len(data) < len(MAGIC) or data[:len(MAGIC)] != MAGIC:
        raise EigFormatError(f"{path}: not an eigendecomposition file (bad magic/version)")
    if len(data) < head:
        raise EigFormatError(f"{path}: truncated header")

    n_nodes, neig, D0, l_s_min = _HEADER.unpack_from(data, len(MAGIC))
    if not (np.isfinite(D0) and D0 > 0 and np.isfinite(l_s_min) and l_s_min > 0):
        raise EigFormatError(f"{path}: invalid header (D0 = {D0!r}, l_s_min = {l_s_min!r}); both must be positive")
    if not 1 <= neig <= n_nodes:
        raise EigFormatError(f"{path}: invalid header ({neig} modes for {n_nodes} nodes)")
    offset = len(MAGIC) + _HEADER.size
    fingerprint = data[offset:offset + _FINGERPRINT_BYTES]
    offset += _FINGERPRINT_BYTES

    expected_size = offset + 8 * neig + 8 * n_nodes * neig
    if len(data) != expected_size:
        raise EigFormatError(f"{path}: size {len(data)} bytes, expected {expected_size} (truncated or corrupt)")

    if expected_fingerprint is not None and fingerprint != expected_fingerprint:
        raise FingerprintMismatchError(f"{path}: eigendecomposition belongs to a different mesh")

    lambdas = np.frombuffer(data, dtype="<f8", count=neig, offset=offset).astype(np.float64)
    offset += 8 * neig
    P = np.frombuffer(data, dtype="<f8", count=n_nodes * neig, offset=offset)
    P = P.reshape((n_nodes, neig), order="F").astype(np.float64)

    logger.debug(f"Loaded eigendecomposition ({neig} modes, {n_nodes} nodes) from {path}")
    return LaplaceEig(
        lambdas=lambdas,
        P=P,
        l_s_min=l_s_min,
        D0=D0,
        mesh_fingerprint=bytes(fingerprint),
        lambda_max=lambda_max_for(l_s_min, D0),
        inertia_count=int(neig),
        solver="cache",
    )


def cache_path(cache_dir: PathLike, fingerprint: bytes, D0: float, l_s_min: float) -> Path:
    """Cache file keyed by (mesh fingerprint, D0, l_s_min)"""
    return Path(cache_dir) / f"eig_{fingerprint.hex()[:24]}_D{D0:.10g}_ls{l_s_min:.10g}.mfeig"
