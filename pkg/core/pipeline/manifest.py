"""
Run Manifest
============
manifest.json lists package versions, the configuration hash, per-stage
wall times and the SHA-256 of every emitted file. `complete` stays false
until the last stage has finished, so an interrupted run is recognizable.
"""

import hashlib
import logging
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

import numpy
import pandas
import pydantic
import scipy

from config import settings
from .outputs import write_json

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def package_versions() -> Dict[str, str]:
    return {
        settings.app_name: settings.app_version,
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "pandas": pandas.__version__,
        "pydantic": pydantic.VERSION,
    }


@dataclass
class StageRecord:
    name: str
    seconds: float
    cache_hit: Optional[bool] = None
    status: str = "ok"


@dataclass
class RunManifest:
    output_dir: Path
    command: str
    config_hash: str = ""
    stages: List[StageRecord] = field(default_factory=list)
    files: Dict[str, str] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    complete: bool = False
    started: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    @property
    def path(self) -> Path:
        return self.output_dir / MANIFEST_NAME

    def stage(self, name: str, seconds: float, cache_hit: Optional[bool] = None, status: str = "ok"):
        self.stages.append(StageRecord(name=name, seconds=seconds, cache_hit=cache_hit, status=status))
        self.write()

    def add_file(self, path: Path):
        self.files[path.name] = file_sha256(path)

    def cache_hit(self, name: str) -> Optional[bool]:
        for record in self.stages:
            if record.name == name:
                return record.cache_hit
        return None

    def to_dict(self) -> Dict:
        return {
            "command": self.command,
            "started": self.started,
            "complete": self.complete,
            "versions": package_versions(),
            "config_hash": self.config_hash,
            "stages": [
                {"name": s.name, "seconds": s.seconds, "cache_hit": s.cache_hit, "status": s.status}
                for s in self.stages
            ],
            "files": dict(sorted(self.files.items())),
            "warnings": self.warnings,
        }

    def write(self):
        write_json(self.to_dict(), self.path)

    def finish(self):
        self.complete = True
        self.write()
        logger.info(f"Manifest written to {self.path} ({len(self.files)} files)")
