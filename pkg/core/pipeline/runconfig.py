"""
Run Configuration
=================
TOML run files validated into pydantic models. Every physical quantity
carries its unit in the key name.

    methods = ["mf", "btpde"]

    [mesh.box]
    Lx_um = 20.0
    Ly_um = 2.0
    Lz_um = 2.0
    n_per_axis = [40, 2, 2]

    [physics]
    D0_um2_per_ms = 2.0
    l_s_min_um = 1.5

    [[sequences]]
    preset = "SEQ1"

    [acquisition]
    bvalues_s_mm2 = [0, 1000, 4000]
"""

import hashlib
import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from config import (
    settings,
    BTPDE_PRESETS,
    BT_SIGNIFICANCE,
    A_DELTA_THRESHOLD,
    D0_DEFAULT,
    DEFAULT_B_VALUES,
    SEQUENCES,
    SIGNIFICANCE_THRESHOLDS,
    SUPPORT_FRACTION,
)
from ..errors import ConfigError
from ..models import RunMethod
from ..sequences import Pgse

logger = logging.getLogger(__name__)


class _Strict(BaseModel):
    model_config = {"extra": "forbid"}


# === Mesh ===

class BoxSpec(_Strict):
    Lx_um: float = Field(..., gt=0)
    Ly_um: float = Field(..., gt=0)
    Lz_um: float = Field(..., gt=0)
    n_per_axis: Union[int, Tuple[int, int, int]] = 8

    @field_validator("n_per_axis")
    @classmethod
    def _positive_counts(cls, v):
        counts = (v, v, v) if isinstance(v, int) else v
        if any(c < 1 for c in counts):
            raise ValueError("cell counts must be at least 1")
        return v


class MeshSource(_Strict):
    """Exactly one of a TetGen file pair or a generated box"""
    node_path: Optional[str] = None
    ele_path: Optional[str] = None
    box: Optional[BoxSpec] = None

    @model_validator(mode="after")
    def _one_source(self):
        has_files = self.node_path is not None or self.ele_path is not None
        if has_files and self.box is not None:
            raise ValueError("give either node_path/ele_path or box, not both")
        if not has_files and self.box is None:
            raise ValueError("a mesh source (node_path/ele_path or box) is required")
        if has_files and (self.node_path is None or self.ele_path is None):
            raise ValueError("node_path and ele_path must be given together")
        return self


# === Physics and acquisition ===

class PhysicsSpec(_Strict):
    D0_um2_per_ms: float = Field(D0_DEFAULT, gt=0)
    rho: float = Field(1.0, gt=0)
    l_s_min_um: float = Field(..., gt=0)


class SequenceSpec(_Strict):
    preset: Optional[str] = None
    delta_ms: Optional[float] = Field(None, gt=0)
    Delta_ms: Optional[float] = Field(None, gt=0)
    seq_id: Optional[str] = None

    @model_validator(mode="after")
    def _preset_or_timing(self):
        if self.preset is not None:
            if self.preset not in SEQUENCES:
                raise ValueError(f"unknown preset '{self.preset}', choose from {sorted(SEQUENCES)}")
            if self.delta_ms is not None or self.Delta_ms is not None:
                raise ValueError("give a preset or explicit timings, not both")
        elif self.delta_ms is None or self.Delta_ms is None:
            raise ValueError("delta_ms and Delta_ms are required without a preset")
        elif self.delta_ms > self.Delta_ms:
            raise ValueError("delta_ms must not exceed Delta_ms")
        return self

    def to_pgse(self) -> Pgse:
        if self.preset is not None:
            seq = Pgse.from_preset(self.preset)
            return Pgse(delta=seq.delta, Delta=seq.Delta, seq_id=self.seq_id or seq.seq_id)
        seq_id = self.seq_id or f"PGSE_{self.delta_ms:g}_{self.Delta_ms:g}"
        return Pgse(delta=self.delta_ms, Delta=self.Delta_ms, seq_id=seq_id)


class AcquisitionSpec(_Strict):
    """b-values or gradient amplitudes; b-values win when both are absent"""
    bvalues_s_mm2: Optional[List[float]] = None
    amplitudes_T_m: Optional[List[float]] = None

    @model_validator(mode="after")
    def _one_list(self):
        if self.bvalues_s_mm2 is not None and self.amplitudes_T_m is not None:
            raise ValueError("give bvalues_s_mm2 or amplitudes_T_m, not both")
        if self.bvalues_s_mm2 is None and self.amplitudes_T_m is None:
            self.bvalues_s_mm2 = list(DEFAULT_B_VALUES)
        values = self.bvalues_s_mm2 if self.bvalues_s_mm2 is not None else self.amplitudes_T_m
        if not values:
            raise ValueError("at least one b-value or amplitude is required")
        if any(v < 0 for v in values):
            raise ValueError("b-values and amplitudes must be non-negative")
        return self


class DirectionSpec(_Strict):
    count: int = Field(30, ge=1)
    hemisphere: bool = False


class ToleranceSpec(_Strict):
    preset: str = "default"
    atol: Optional[float] = Field(None, gt=0)
    rtol: Optional[float] = Field(None, gt=0)
    theta: float = Field(0.5, ge=0.5, le=1.0)

    @field_validator("preset")
    @classmethod
    def _known_preset(cls, v):
        if v not in BTPDE_PRESETS:
            raise ValueError(f"unknown tolerance preset '{v}', choose from {sorted(BTPDE_PRESETS)}")
        return v


# === Analysis stages ===

class BtSpecSpec(_Strict):
    """BT spectrum stage: amplitudes along one direction for the first sequence"""
    amplitudes_T_m: List[float] = Field(default_factory=lambda: [0.1])
    direction: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    significance: float = Field(BT_SIGNIFICANCE, gt=0)
    a_delta_threshold: float = Field(A_DELTA_THRESHOLD, gt=0)
    support_modes: List[int] = Field(default_factory=list)      # 1-based j
    support_fraction: float = Field(SUPPORT_FRACTION, gt=0, lt=1)

    @field_validator("amplitudes_T_m")
    @classmethod
    def _amplitudes(cls, v):
        if not v or any(a < 0 for a in v):
            raise ValueError("at least one non-negative amplitude is required")
        return v

    @field_validator("support_modes")
    @classmethod
    def _one_based(cls, v):
        if any(j < 1 for j in v):
            raise ValueError("support modes are 1-based")
        return v


class SignificanceSpec(_Strict):
    thresholds: List[float] = Field(default_factory=lambda: list(SIGNIFICANCE_THRESHOLDS))


class StaSpec(_Strict):
    include_btpde: bool = False


class RunConfig(_Strict):
    mesh: MeshSource
    physics: PhysicsSpec
    sequences: List[SequenceSpec] = Field(..., min_length=1)
    acquisition: AcquisitionSpec = Field(default_factory=AcquisitionSpec)
    directions: DirectionSpec = Field(default_factory=DirectionSpec)
    methods: List[RunMethod] = Field(..., min_length=1)
    tolerances: ToleranceSpec = Field(default_factory=ToleranceSpec)
    btspec: BtSpecSpec = Field(default_factory=BtSpecSpec)
    significance: SignificanceSpec = Field(default_factory=SignificanceSpec)
    sta: StaSpec = Field(default_factory=StaSpec)

    output_dir: str = settings.outputs_dir
    cache_dir: str = settings.cache_dir
    threads: int = Field(settings.threads, ge=1)

    @model_validator(mode="after")
    def _unique_sequences(self):
        ids = [s.to_pgse().seq_id for s in self.sequences]
        if len(set(ids)) != len(ids):
            raise ValueError(f"sequence ids must be unique, got {ids}")
        return self

    def pgse_list(self) -> List[Pgse]:
        return [s.to_pgse() for s in self.sequences]

    def wants(self, method: RunMethod) -> bool:
        return method in self.methods

    def config_hash(self) -> str:
        return hashlib.sha256(self.model_dump_json().encode("utf-8")).hexdigest()


# === Loading ===

def _format_errors(err: ValidationError) -> List[str]:
    lines = []
    for item in err.errors():
        path = ".".join(str(p) for p in item["loc"]) or "<root>"
        lines.append(f"{path}: {item['msg']}")
    return lines


def parse_config(data: dict, base_dir: Optional[Path] = None) -> RunConfig:
    """Validate a parsed TOML document; relative mesh paths resolve against base_dir"""
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        lines = _format_errors(e)
        raise ConfigError("Invalid run configuration:\n  " + "\n  ".join(lines), fields=lines)

    if base_dir is not None and config.mesh.node_path is not None:
        for key in ("node_path", "ele_path"):
            p = Path(getattr(config.mesh, key))
            if not p.is_absolute():
                setattr(config.mesh, key, str(base_dir / p))
    return config


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Configuration file not found: {path}", path=str(path))
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Configuration file {path} is not valid TOML: {e}", path=str(path))

    config = parse_config(data, base_dir=path.parent)
    logger.info(
        f"Loaded run configuration {path.name}: methods {[m.value for m in config.methods]}, "
        f"{len(config.sequences)} sequences"
    )
    return config
