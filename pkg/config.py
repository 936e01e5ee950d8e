"""
SpectralDMRI Configuration
==========================
Central configuration for the simulator: runtime settings, physical
constants, unit conversions and sequence / tolerance presets.

Internal units: length μm, time ms, diffusivity μm²/ms, gradient T/m.
"""

import math
from pathlib import Path
from pydantic_settings import BaseSettings


# === Path Configuration ===
BASE_DIR = Path(__file__).parent
STORAGE_DIR = BASE_DIR / "storage"


class Settings(BaseSettings):
    """
    Runtime settings loaded from environment variables.
    Create a .env file in the project root to override them.
    """

    # === Application ===
    app_name: str = "SpectralDMRI"
    app_version: str = "0.1.0"
    debug: bool = False
    log_level: str = "INFO"

    # === Execution ===
    threads: int = 4

    # === Storage Paths ===
    cache_dir: str = str(STORAGE_DIR / "cache")
    outputs_dir: str = str(STORAGE_DIR / "outputs")

    # === Eigensolver ===
    dense_eig_limit: int = 2000      # nodes; above this the sliced Lanczos path is used
    eig_slice_target: int = 60       # eigenvalues per spectrum slice
    inertia_max_retries: int = 3

    # === Matrix Formalism / BT spectrum ===
    mf_cond_limit: float = 1e8       # cond(V) above which expm replaces diagonalization
    bt_cond_limit: float = 1e10      # cond(V) above which a BT decomposition is flagged
    node_chunk_size: int = 20000     # rows of P evaluated at once for nodal fields

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        extra = "ignore"


# === Singleton Instance ===
settings = Settings()


# === Physical Constants ===
GAMMA_SI = 2.67513e8                  # rad s^-1 T^-1, water proton
GAMMA = GAMMA_SI * 1e-3 * 1e-6        # rad ms^-1 μm^-1 (T/m)^-1 = 0.267513
D0_DEFAULT = 2.0                      # μm²/ms (2e-3 mm²/s)
B_INTERNAL_TO_SI = 1e3                # ms/μm² -> s/mm²

SQRT_PI = math.sqrt(math.pi)


# === Sequence Presets ===
SEQUENCES = {
    "SEQ1": {"delta_ms": 10.6, "Delta_ms": 13.0},
    "SEQ2": {"delta_ms": 10.6, "Delta_ms": 73.0},
}

DEFAULT_B_VALUES = [0.0, 1000.0, 2000.0, 3000.0, 4000.0]  # s/mm²


# === BTPDE Tolerance Presets ===
BTPDE_PRESETS = {
    "default": {"atol": 1e-4, "rtol": 1e-2},
    "high_accuracy": {"atol": 1e-6, "rtol": 1e-4},
    "adc": {"atol": 1e-8, "rtol": 1e-6},
}


# === Significance Thresholds ===
SIGNIFICANCE_THRESHOLDS = [0.001, 0.01]   # E^{RM,i} levels (0.1 %, 1 %)
BT_SIGNIFICANCE = 0.01                    # |V_1j| for a significant BT mode
A_DELTA_THRESHOLD = 0.001                 # |A_jk(δ)| marked in the grid
SUPPORT_FRACTION = 0.01                   # fraction of max|ψ| defining a support

ADC_B_VALUE = 1.0                          # s/mm², second point of the two-point ADC


def ensure_directories():
    """Create necessary directories if they don't exist"""
    for dir_path in [settings.cache_dir, settings.outputs_dir]:
        Path(dir_path).mkdir(parents=True, exist_ok=True)
