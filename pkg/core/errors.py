"""
SpectralDMRI Errors
===================
Exception hierarchy. Every error carries the process exit code the CLI
reports for it: 2 configuration / input, 3 numeric failure, 4 storage.
"""

from typing import Optional


class SpectralDMRIError(Exception):
    """Base class for all simulator errors"""
    exit_code = 3

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details


# === Input / configuration (exit 2) ===

class ConfigError(SpectralDMRIError):
    """Run configuration is missing, malformed or inconsistent"""
    exit_code = 2


class ParameterError(SpectralDMRIError, ValueError):
    """A function precondition on its arguments is violated"""
    exit_code = 2


class MeshError(SpectralDMRIError):
    """Mesh input is invalid"""
    exit_code = 2


class MeshFormatError(MeshError):
    """Node/element file could not be parsed"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None, **details):
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}", path=path, line=line, **details)
        self.path = path
        self.line = line


class MeshIndexError(MeshFormatError):
    """Element or face references a node that does not exist"""


class DegenerateElementError(MeshError):
    """Element volume below the degeneracy threshold"""


class DisconnectedMeshError(MeshError):
    """Mesh has more than one connected component"""


class SweepMismatchError(SpectralDMRIError):
    """Two signal sets cannot be compared direction by direction"""
    exit_code = 2


# === Numerics (exit 3) ===

class NumericalError(SpectralDMRIError):
    """A numerical stage failed"""
    exit_code = 3


class FactorizationError(NumericalError):
    """Sparse or dense factorization failed (singular shift, pivoting)"""


class InertiaMismatchError(NumericalError):
    """Eigenvalue count disagrees with the inertia certificate"""


class StepUnderflowError(NumericalError):
    """Adaptive time step fell below the minimum step"""


class DiagonalizationError(NumericalError):
    """Dense complex diagonalization unusable even after fallback"""


# === Storage (exit 4) ===

class StorageError(SpectralDMRIError):
    """Reading or writing a persisted artifact failed"""
    exit_code = 4


class EigFormatError(StorageError):
    """Eigendecomposition file has wrong magic, version or size"""


class FingerprintMismatchError(StorageError):
    """Artifact belongs to a different mesh"""


def exit_code_for(exc: BaseException) -> int:
    """Map any exception to a CLI exit code"""
    if isinstance(exc, SpectralDMRIError):
        return exc.exit_code
    if isinstance(exc, OSError):
        return 4
    return 3
