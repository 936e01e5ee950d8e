"""
Bloch-Torrey Reference Solver
=============================
Finite element semidiscretization of the Bloch-Torrey PDE with
homogeneous Neumann boundary conditions,

    M ξ'(t) = -(S + iγ f(t) W_J) ξ(t),   ξ(0) = ρ 1,
    W_J     = Σ g_i (J^i - c_i M),

integrated by the θ-method over the constant-profile pieces of the PGSE
sequence. Step size is controlled by step doubling: one step of h and
two of h/2 give the local error estimate (ξ_half - ξ_full)/(2^p - 1),
accepted when max_j |err_j| / (atol + rtol |ξ_j|) <= 1. Steps only
change by powers of two so the sparse LU of (M + θhA) is reused.

The signal is S = 1ᵀ M ξ(TE).
"""

import logging
import math
import time
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from config import GAMMA, BTPDE_PRESETS, ADC_B_VALUE
from ..errors import FactorizationError, ParameterError, StepUnderflowError
from ..fem import FemMatrices
from ..models import Method, SignalRecord
from ..sequences import Gradient, Pgse, bvalue, amplitude_for_b

logger = logging.getLogger(__name__)

MIN_STEP = 1e-10        # ms
SAFETY = 0.9


@dataclass
class BtpdeOptions:
    """ODE controls; defaults are the standard tolerances"""
    atol: float = 1e-4
    rtol: float = 1e-2
    max_step: Optional[float] = None     # ms
    theta: float = 0.5
    initial_step: Optional[float] = None

    def __post_init__(self):
        if not (self.atol > 0 and self.rtol > 0):
            raise ParameterError(f"Tolerances must be positive, got atol={self.atol}, rtol={self.rtol}")
        if not (0.5 <= self.theta <= 1.0):
            raise ParameterError(f"theta must lie in [0.5, 1], got {self.theta}")
        if self.max_step is not None and self.max_step <= 0:
            raise ParameterError(f"max_step must be positive, got {self.max_step}")

    @classmethod
    def from_preset(cls, name: str, **overrides) -> "BtpdeOptions":
        if name not in BTPDE_PRESETS:
            raise ParameterError(f"Unknown BTPDE preset '{name}', choose from {sorted(BTPDE_PRESETS)}")
        return cls(**{**BTPDE_PRESETS[name], **overrides})

    @property
    def order(self) -> int:
        return 2 if self.theta == 0.5 else 1


@dataclass
class BtpdeResult:
    """Nodal magnetization at the stop time"""
    xi: np.ndarray
    time: float
    signal: complex
    steps_taken: int
    steps_rejected: int
    wall_time: float


class _StepCache:
    """LU factors of (M + θhA) and the explicit operator, keyed by h"""

    def __init__(self, M: sp.csr_matrix, A: sp.csr_matrix, theta: float):
        self.M = M
        self.A = A
        self.theta = theta
        self._cache: Dict[float, Tuple[object, sp.csr_matrix]] = {}

    def step(self, y: np.ndarray, h: float) -> np.ndarray:
        if h not in self._cache:
            lhs = (self.M + (self.theta * h) * self.A).tocsc()
            rhs = (self.M - ((1.0 - self.theta) * h) * self.A).tocsr()
            try:
                self._cache[h] = (splu(lhs), rhs)
            except RuntimeError as e:
                raise FactorizationError(f"Sparse LU of the time-step matrix failed (h = {h:g} ms): {e}")
        lu, rhs = self._cache[h]
        return lu.solve(rhs @ y)


def _integrate_piece(cache: _StepCache, y: np.ndarray, t0: float, t1: float,
                     h: float, opts: BtpdeOptions, stats: Dict[str, int]) -> Tuple[np.ndarray, float]:
    """Advance from t0 to t1; returns the state and the last accepted step size"""
    t = t0
    p = opts.order
    max_step = min(opts.max_step or math.inf, t1 - t0)
    h = min(h, max_step)

    while t1 - t > 1e-12 * max(1.0, t1):
        step = min(h, t1 - t)
        full = cache.step(y, step)
        half = cache.step(cache.step(y, 0.5 * step), 0.5 * step)
        err = (half - full) / (2 ** p - 1)
        scale = opts.atol + opts.rtol * np.abs(half)
        ratio = float(np.max(np.abs(err) / scale))

        if ratio <= 1.0:
            y = half
            t += step
            stats["accepted"] += 1
            if step < h:
                continue                       # truncated final step; keep h
            factor = SAFETY * (ratio ** (-1.0 / (p + 1)) if ratio > 0 else 4.0)
            if factor >= 2.0 and 2.0 * h <= max_step:
                h *= 2.0
        else:
            stats["rejected"] += 1
            factor = SAFETY * ratio ** (-1.0 / (p + 1))
            halvings = max(1, int(math.ceil(-math.log2(max(factor, 1e-6)))))
            h = step * 0.5 ** halvings
            if h < MIN_STEP:
                raise StepUnderflowError(f"Step size {h:.3e} ms below {MIN_STEP:g} ms at t = {t:.6g} ms")
    return y, h


def btpde_solve(
    fem: FemMatrices,
    gradient: Gradient,
    seq: Pgse,
    opts: Optional[BtpdeOptions] = None,
    t_stop: Optional[float] = None,
    rho: float = 1.0,
) -> BtpdeResult:
    """Integrate to `t_stop` (default TE) and return the nodal field"""
    opts = opts or BtpdeOptions()
    started = time.perf_counter()
    t_end = seq.echo_time if t_stop is None else float(t_stop)
    if not (0.0 <= t_end <= seq.echo_time):
        raise ParameterError(f"t_stop must lie in [0, TE = {seq.echo_time}], got {t_stop}")

    M, S = fem.mass, fem.stiffness
    W = fem.gradient_moment(gradient.vector) if gradient.amplitude > 0 else None
    y = np.full(fem.n_nodes, rho, dtype=complex)

    stats = {"accepted": 0, "rejected": 0}
    h = opts.initial_step or min(seq.delta, seq.Delta - seq.delta or seq.delta) / 16.0
    for t0, t1, f in seq.intervals():
        if t0 >= t_end:
            break
        t1 = min(t1, t_end)
        if f == 0.0 or W is None:
            A = S.astype(complex)
        else:
            A = (S + (1j * GAMMA * f) * W).tocsr()
        cache = _StepCache(M.astype(complex).tocsr(), A, opts.theta)
        y, h = _integrate_piece(cache, y, t0, t1, h, opts, stats)
        logger.debug(f"Piece [{t0:g}, {t1:g}] ms done, {stats['accepted']} steps so far")

    signal = complex(np.sum(M @ y))
    return BtpdeResult(
        xi=y,
        time=t_end,
        signal=signal,
        steps_taken=stats["accepted"],
        steps_rejected=stats["rejected"],
        wall_time=time.perf_counter() - started,
    )


def btpde_signal(
    fem: FemMatrices,
    gradient: Gradient,
    seq: Pgse,
    opts: Optional[BtpdeOptions] = None,
    rho: float = 1.0,
) -> SignalRecord:
    """S = 1ᵀ M ξ(TE) as a SignalRecord"""
    opts = opts or BtpdeOptions()
    result = btpde_solve(fem, gradient, seq, opts, rho=rho)
    return SignalRecord(
        seq_id=seq.seq_id,
        delta=seq.delta,
        Delta=seq.Delta,
        bvalue=bvalue(seq, gradient.amplitude),
        direction=gradient.direction,
        amplitude=gradient.amplitude,
        signal=result.signal,
        s0=rho * fem.volume,
        method=Method.BTPDE,
        atol=opts.atol,
        rtol=opts.rtol,
        steps_taken=result.steps_taken,
        wall_time=result.wall_time,
    )


def btpde_adc(
    fem: FemMatrices,
    u_g,
    seq: Pgse,
    opts: Optional[BtpdeOptions] = None,
    b1: float = ADC_B_VALUE,
) -> float:
    """
    Two-point ADC from |S| at b = 0 and b = b1 (s/mm²), μm²/ms.
    Defaults to the tight `adc` tolerance preset.
    """
    from ..analysis.adc import adc_from_signals

    opts = opts or BtpdeOptions.from_preset("adc")
    u = tuple(np.asarray(u_g, dtype=float))
    s0 = btpde_solve(fem, Gradient(direction=u, amplitude=0.0), seq, opts).signal
    sb = btpde_solve(fem, Gradient(direction=u, amplitude=amplitude_for_b(seq, b1)), seq, opts).signal
    return adc_from_signals(abs(s0), abs(sb), b1)
