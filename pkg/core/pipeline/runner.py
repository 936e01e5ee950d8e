"""
Simulation Pipeline
===================
Main entry point for a simulation run.
Orchestrates: Mesh → Assemble → Eigensolve (cached) → Model → Signals →
Compare → BT spectrum → STA → Significance

Every stage is timed into the run manifest; outputs are written
atomically as they are produced.
"""

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd

from ..analysis import (
    compare_records,
    remove_one_significance,
    significance_table,
    sta_adc,
    sta_adc_short_pulse,
    sta_coefficient,
)
from ..btspec import (
    a_delta_grid,
    bt_eigendecomposition,
    scatter_data,
    significant_bt,
    support_region,
    truncated_signal,
)
from ..errors import EigFormatError, FingerprintMismatchError, SpectralDMRIError
from ..fem import FemMatrices, assemble, dump_matrices
from ..mesh import (
    Mesh,
    MeshReport,
    directional_area,
    drop_dangling_nodes,
    generate_box_mesh,
    read_tetgen,
    surface_area,
    volume,
)
from ..models import Method, RunMethod, SignalRecord
from ..parallel import parallel_map
from ..sequences import Gradient, Pgse, amplitude_for_b, bvalue, fibonacci_directions
from ..signal import (
    BtpdeOptions,
    MFModel,
    btpde_adc,
    btpde_signal,
    build_model,
    mf_adc,
    mf_signal,
    mfga_signal,
    parseval_diagnostic,
)
from ..spectral import LaplaceEig, cache_path, eigen_table, load_eig, save_eig, solve_interval
from .manifest import RunManifest
from .outputs import write_csv, write_json, write_signals
from .runconfig import RunConfig

logger = logging.getLogger(__name__)

# Signal stages always run in this order
SIGNAL_METHODS = [RunMethod.MF, RunMethod.MFGA, RunMethod.BTPDE]
MODEL_METHODS = {RunMethod.MF, RunMethod.MFGA, RunMethod.BTSPEC, RunMethod.STA, RunMethod.SIGNIFICANCE}


@dataclass
class RunResult:
    """Result of a complete pipeline run"""
    success: bool
    output_dir: Path

    files: List[str] = field(default_factory=list)
    stage_times: Dict[str, float] = field(default_factory=dict)
    eig_cache_hit: Optional[bool] = None
    n_signals: int = 0

    processing_time_seconds: float = 0.0

    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)


@dataclass
class Acquisition:
    """One (sequence, amplitude, direction) work item"""
    seq: Pgse
    amplitude: float
    bvalue: float
    direction: Tuple[float, float, float]

    @property
    def gradient(self) -> Gradient:
        return Gradient(direction=self.direction, amplitude=self.amplitude)


class SimulationPipeline:
    """
    Staged simulator run.

    Usage:
        pipeline = SimulationPipeline(load_config("run.toml"))
        result = pipeline.run()
    """

    def __init__(
        self,
        config: RunConfig,
        output_dir: Optional[str] = None,
        threads: Optional[int] = None,
        rms: bool = False,
        debug_dump: bool = False,
        command: str = "run",
    ):
        self.config = config
        self.output_dir = Path(output_dir or config.output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.threads = threads or config.threads
        self.rms = rms
        self.debug_dump = debug_dump

        self.manifest = RunManifest(output_dir=self.output_dir, command=command, config_hash=config.config_hash())
        self.stage_times: Dict[str, float] = {}
        self._cache_hit: Optional[bool] = None

        self.mesh: Optional[Mesh] = None
        self.mesh_report: Optional[MeshReport] = None
        self.fem: Optional[FemMatrices] = None
        self.eig: Optional[LaplaceEig] = None
        self.model: Optional[MFModel] = None
        self.signals: Dict[Method, List[SignalRecord]] = {}
        self.directions = fibonacci_directions(config.directions.count, config.directions.hemisphere)

    # === Bookkeeping ===

    @contextmanager
    def _stage(self, name: str):
        logger.info(f"Stage '{name}' started")
        started = time.perf_counter()
        try:
            yield
        except Exception as e:
            elapsed = time.perf_counter() - started
            self.manifest.stage(name, elapsed, status="failed")
            if isinstance(e, SpectralDMRIError):
                e.details.setdefault("stage", name)
            logger.error(f"Stage '{name}' failed after {elapsed:.2f}s: {e}")
            raise
        elapsed = time.perf_counter() - started
        self.stage_times[name] = elapsed
        self.manifest.stage(name, elapsed, cache_hit=self._cache_hit if name == "eig" else None)
        logger.info(f"Stage '{name}' finished in {elapsed:.2f}s")

    def _emit(self, path: Path):
        self.manifest.add_file(path)
        self.manifest.write()

    def _warn(self, message: str):
        logger.warning(message)
        self.manifest.warnings.append(message)

    # === Stages ===

    def load_mesh(self) -> Mesh:
        if self.mesh is not None:
            return self.mesh
        with self._stage("mesh"):
            source = self.config.mesh
            if source.box is not None:
                box = source.box
                counts = box.n_per_axis if isinstance(box.n_per_axis, int) else tuple(box.n_per_axis)
                mesh = generate_box_mesh(box.Lx_um, box.Ly_um, box.Lz_um, counts)
                report = MeshReport(n_nodes=mesh.n_nodes, n_elements=mesh.n_elements, n_faces=mesh.n_faces)
            else:
                mesh, report = read_tetgen(source.node_path, source.ele_path)
            for message in report.warnings:
                self.manifest.warnings.append(message)
            if mesh.dangling_nodes.size:
                mesh = drop_dangling_nodes(mesh)
            self.mesh, self.mesh_report = mesh, report
        return self.mesh

    def assemble(self) -> FemMatrices:
        if self.fem is not None:
            return self.fem
        mesh = self.load_mesh()
        with self._stage("assemble"):
            self.fem = assemble(mesh, self.config.physics.D0_um2_per_ms)
            if self.debug_dump:
                dump_matrices(self.fem, self.output_dir / "matrices")
        return self.fem

    def eigendecompose(self) -> LaplaceEig:
        if self.eig is not None:
            return self.eig
        fem = self.assemble()
        l_s_min = self.config.physics.l_s_min_um
        path = cache_path(self.config.cache_dir, fem.fingerprint, fem.D0, l_s_min)
        with self._stage("eig"):
            self._cache_hit = False
            if path.is_file():
                try:
                    self.eig = load_eig(path, expected_fingerprint=fem.fingerprint)
                    self._cache_hit = True
                    logger.info(f"Eigendecomposition cache hit: {path.name} ({self.eig.neig} modes)")
                except (EigFormatError, FingerprintMismatchError) as e:
                    self._warn(f"Ignoring unusable eigen cache {path.name}: {e}")
            if self.eig is None:
                self.eig = solve_interval(fem, l_s_min)
                save_eig(self.eig, path)
            self._emit(write_csv(eigen_table(self.eig), self.output_dir / "eigenvalues.csv"))
        return self.eig

    def build(self) -> MFModel:
        if self.model is not None:
            return self.model
        eig = self.eigendecompose()
        with self._stage("model"):
            self.model = build_model(eig, self.fem, self.config.physics.rho)
        return self.model

    # === Signals ===

    def acquisitions(self) -> List[Acquisition]:
        acq = self.config.acquisition
        items = []
        for seq in self.config.pgse_list():
            if acq.bvalues_s_mm2 is not None:
                pairs = [(amplitude_for_b(seq, b), float(b)) for b in acq.bvalues_s_mm2]
            else:
                pairs = [(float(a), bvalue(seq, a)) for a in acq.amplitudes_T_m]
            for amplitude, b in pairs:
                for u in self.directions:
                    items.append(Acquisition(seq=seq, amplitude=amplitude, bvalue=b, direction=tuple(u)))
        return items

    def btpde_options(self) -> BtpdeOptions:
        tol = self.config.tolerances
        overrides = {"theta": tol.theta}
        if tol.atol is not None:
            overrides["atol"] = tol.atol
        if tol.rtol is not None:
            overrides["rtol"] = tol.rtol
        return BtpdeOptions.from_preset(tol.preset, **overrides)

    def compute_signals(self, method: RunMethod) -> List[SignalRecord]:
        items = self.acquisitions()
        if method == RunMethod.BTPDE:
            fem, opts = self.assemble(), self.btpde_options()
            rho = self.config.physics.rho
            fn = lambda a: btpde_signal(fem, a.gradient, a.seq, opts, rho)
        elif method == RunMethod.MF:
            model = self.build()
            fn = lambda a: mf_signal(model, a.gradient, a.seq)
        else:
            model = self.build()
            fn = lambda a: mfga_signal(model, a.bvalue, a.direction, a.seq)

        tag = Method(method.value.upper())
        with self._stage(f"signals_{method.value}"):
            records = parallel_map(fn, items, self.threads)
            self.signals[tag] = records
            self._emit(write_signals(records, self.output_dir / f"signals_{method.value}.csv"))
            mean_time = sum(r.wall_time for r in records) / max(len(records), 1)
            logger.info(f"{len(records)} {tag.value} signals, {mean_time * 1e3:.3f} ms per signal")
        return records

    def compare(self) -> Optional[Path]:
        reference = self.signals.get(Method.BTPDE)
        tests = [m for m in (Method.MF, Method.MFGA) if m in self.signals]
        if reference is None or not tests:
            return None
        with self._stage("compare"):
            comparisons = []
            for method in tests:
                comparisons += compare_records(self.signals[method], reference)
            payload = {
                "metric": "sum |S_test - S_ref|^2 / sum |S_ref|^2",
                "rms_reported": self.rms,
                "comparisons": [c.to_dict(include_rms=self.rms) for c in comparisons],
            }
            path = write_json(payload, self.output_dir / "compare.json")
            self._emit(path)
        return path

    # === Analysis stages ===

    def run_btspec(self):
        spec = self.config.btspec
        model = self.build()
        seq = self.config.pgse_list()[0]
        u = Gradient.along(spec.direction, 1.0).direction

        with self._stage("btspec"):
            frames, summary = [], []
            bt = None
            for amplitude in sorted(spec.amplitudes_T_m):
                bt = bt_eigendecomposition(model, Gradient(direction=u, amplitude=amplitude))
                significance = significant_bt(bt, spec.significance)
                frame = scatter_data(bt, spec.significance)
                frame.insert(0, "amplitude_T_m", amplitude)
                frames.append(frame)
                _, change = truncated_signal(bt, model, seq, spec.a_delta_threshold)
                summary.append({
                    "amplitude_T_m": amplitude,
                    "n_significant": int(significance.indices.size),
                    "condition": bt.condition,
                    "flagged": bt.flagged,
                    "truncated_signal_change": change,
                })
                if bt.flagged:
                    self._warn(f"BT decomposition at {amplitude:g} T/m is ill-conditioned (cond {bt.condition:.2e})")

            self._emit(write_csv(pd.concat(frames, ignore_index=True), self.output_dir / "bt_modes.csv"))
            self._emit(write_csv(pd.DataFrame(summary), self.output_dir / "bt_summary.csv"))
            self._emit(write_csv(a_delta_grid(bt, seq.delta, spec.a_delta_threshold), self.output_dir / "a_delta_grid.csv"))

            for j in spec.support_modes:
                if j > bt.neig:
                    self._warn(f"Support mode {j} exceeds the {bt.neig} available BT modes; skipped")
                    continue
                region = support_region(bt, self.eig, j - 1, spec.support_fraction)
                self._emit(write_csv(region.to_frame(), self.output_dir / f"support_{j}.csv"))

    def run_sta(self):
        mesh = self.load_mesh()
        model = self.build()
        D0 = self.config.physics.D0_um2_per_ms
        include_btpde = self.config.sta.include_btpde

        with self._stage("sta"):
            items = [(seq, tuple(u)) for seq in self.config.pgse_list() for u in self.directions]

            def row(item):
                seq, u = item
                record = {
                    "seq_id": seq.seq_id,
                    "delta_ms": seq.delta,
                    "Delta_ms": seq.Delta,
                    "gx": u[0], "gy": u[1], "gz": u[2],
                    "C_delta_Delta": sta_coefficient(seq),
                    "A_ug_over_V_um^-1": directional_area(mesh, u) / volume(mesh),
                    "sta_adc_um2_ms": sta_adc(mesh, D0, seq, u),
                    "sta_short_pulse_um2_ms": sta_adc_short_pulse(mesh, D0, seq, u),
                    "mf_adc_um2_ms": mf_adc(model, u, seq),
                }
                if include_btpde:
                    record["btpde_adc_um2_ms"] = btpde_adc(self.fem, u, seq)
                return record

            rows = parallel_map(row, items, self.threads)
            self._emit(write_csv(pd.DataFrame(rows), self.output_dir / "sta.csv"))

    def run_significance(self):
        model = self.build()
        spec = self.config.significance
        acq = self.config.acquisition

        with self._stage("significance"):
            results = []
            for seq in self.config.pgse_list():
                if acq.bvalues_s_mm2 is not None:
                    bvalues = acq.bvalues_s_mm2
                else:
                    bvalues = [bvalue(seq, a) for a in acq.amplitudes_T_m]
                for b in bvalues:
                    if b <= 0:
                        continue
                    results.append(remove_one_significance(
                        model, self.directions, seq, b, thresholds=spec.thresholds, threads=self.threads,
                    ))
            self._emit(write_csv(significance_table(model, results), self.output_dir / "significance.csv"))
            self._emit(write_csv(parseval_diagnostic(model), self.output_dir / "parseval.csv"))

    # === Whole run ===

    def mesh_info(self) -> Dict:
        mesh = self.load_mesh()
        lo, hi = mesh.bounding_box
        info = {
            "n_nodes": mesh.n_nodes,
            "n_elements": mesh.n_elements,
            "n_boundary_faces": mesh.n_faces,
            "volume_um3": volume(mesh),
            "surface_um2": surface_area(mesh),
            "A_x_um2": directional_area(mesh, (1.0, 0.0, 0.0)),
            "A_y_um2": directional_area(mesh, (0.0, 1.0, 0.0)),
            "A_z_um2": directional_area(mesh, (0.0, 0.0, 1.0)),
            "bounding_box_um": [lo.tolist(), hi.tolist()],
            "reoriented_elements": self.mesh_report.reoriented,
            "warnings": list(self.mesh_report.warnings),
        }
        self._emit(write_json(info, self.output_dir / "mesh_info.json"))
        return info

    def run(self, methods: Optional[List[RunMethod]] = None) -> RunResult:
        """Run the requested stages (default: the configuration's method list)"""
        started = time.time()
        methods = set(methods or self.config.methods)
        self.manifest.write()

        self.load_mesh()
        self.assemble()
        if methods & MODEL_METHODS:
            self.build()

        for method in SIGNAL_METHODS:
            if method in methods:
                self.compute_signals(method)
        self.compare()

        if RunMethod.BTSPEC in methods:
            self.run_btspec()
        if RunMethod.STA in methods:
            self.run_sta()
        if RunMethod.SIGNIFICANCE in methods:
            self.run_significance()

        self.manifest.finish()
        result = RunResult(
            success=True,
            output_dir=self.output_dir,
            files=sorted(self.manifest.files),
            stage_times=dict(self.stage_times),
            eig_cache_hit=self._cache_hit,
            n_signals=sum(len(r) for r in self.signals.values()),
            processing_time_seconds=time.time() - started,
            warnings=list(self.manifest.warnings),
        )
        logger.info(f"Run complete in {result.processing_time_seconds:.2f}s: {len(result.files)} files in {self.output_dir}")
        return result
