"""
Pipeline Module
===============
Run configuration, staged execution, atomic outputs and the run manifest.
"""

from .runconfig import RunConfig, load_config, parse_config
from .runner import SimulationPipeline, RunResult, Acquisition
from .outputs import write_csv, write_json, write_signals, records_to_frame, read_signal_csv
from .manifest import RunManifest, file_sha256, package_versions

__all__ = [
    "RunConfig",
    "load_config",
    "parse_config",
    "SimulationPipeline",
    "RunResult",
    "Acquisition",
    "write_csv",
    "write_json",
    "write_signals",
    "records_to_frame",
    "read_signal_csv",
    "RunManifest",
    "file_sha256",
    "package_versions",
]
