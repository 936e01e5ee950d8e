"""
Test Simulation Pipeline
========================
Run configuration validation, staged runs with the eigen cache, output
determinism and the command line entry point.

Run with: python -m tests.test_pipeline
"""

import json
import sys
import tempfile
from pathlib import Path

import pandas as pd

# Add parent to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from cli.main import main as cli_main
from core.errors import ConfigError, StorageError
from core.models import SIGNAL_COLUMNS, RunMethod, SignalRecord
from core.pipeline import (
    SimulationPipeline,
    load_config,
    parse_config,
    read_signal_csv,
    records_to_frame,
    write_signals,
)


def _config_text(tmp: Path, methods: str = '["mf", "mfga"]', extra: str = "") -> str:
    return f"""
methods = {methods}
output_dir = "{(tmp / 'out').as_posix()}"
cache_dir = "{(tmp / 'cache').as_posix()}"
threads = 2

[mesh.box]
Lx_um = 4.0
Ly_um = 2.0
Lz_um = 2.0
n_per_axis = [4, 2, 2]

[physics]
D0_um2_per_ms = 2.0
l_s_min_um = 1.5

[[sequences]]
preset = "SEQ1"

[acquisition]
bvalues_s_mm2 = [0, 1000]

[directions]
count = 3
{extra}
"""


def _write_config(tmp: Path, **kwargs) -> Path:
    path = tmp / "run.toml"
    path.write_text(_config_text(tmp, **kwargs))
    return path


def _base() -> dict:
    return {
        "methods": ["mf"],
        "mesh": {"box": {"Lx_um": 4.0, "Ly_um": 2.0, "Lz_um": 2.0}},
        "physics": {"l_s_min_um": 1.5},
        "sequences": [{"preset": "SEQ1"}],
    }


def _expect_config_error(data: dict, fragment: str):
    try:
        parse_config(data)
        assert False, f"configuration accepted, expected error at '{fragment}'"
    except ConfigError as e:
        print(f"Caught: {e.details['fields']}")
        assert any(line.startswith(fragment) for line in e.details["fields"]), e.details["fields"]
        assert e.exit_code == 2


def test_config_validation():
    print("\n" + "="*50)
    print("TEST: Configuration Validation")
    print("="*50)

    config = parse_config(_base())
    assert config.acquisition.bvalues_s_mm2 == [0.0, 1000.0, 2000.0, 3000.0, 4000.0]
    assert config.directions.count == 30
    assert config.pgse_list()[0].seq_id == "SEQ1"
    assert config.wants(RunMethod.MF) and not config.wants(RunMethod.BTPDE)
    assert config.config_hash() == parse_config(_base()).config_hash()

    missing = _base()
    del missing["physics"]
    _expect_config_error(missing, "physics")

    both = _base()
    both["mesh"]["node_path"] = "a.node"
    both["mesh"]["ele_path"] = "a.ele"
    _expect_config_error(both, "mesh")

    typo = _base()
    typo["physics"]["D0"] = 2.0
    _expect_config_error(typo, "physics.D0")

    preset = _base()
    preset["sequences"] = [{"preset": "SEQ9"}]
    _expect_config_error(preset, "sequences.0")

    negative = _base()
    negative["acquisition"] = {"bvalues_s_mm2": [0, -100]}
    _expect_config_error(negative, "acquisition")

    duplicate = _base()
    duplicate["sequences"] = [{"preset": "SEQ1"}, {"delta_ms": 10.6, "Delta_ms": 13.0, "seq_id": "SEQ1"}]
    _expect_config_error(duplicate, "<root>")

    unknown = _base()
    unknown["methods"] = ["mf", "dti"]
    _expect_config_error(unknown, "methods.1")


def test_config_files():
    print("\n" + "="*50)
    print("TEST: Configuration Files")
    print("="*50)

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        try:
            load_config(tmp / "absent.toml")
            assert False, "missing file accepted"
        except ConfigError:
            pass

        broken = tmp / "broken.toml"
        broken.write_text("methods = [\n")
        try:
            load_config(broken)
            assert False, "invalid TOML accepted"
        except ConfigError:
            pass

        files = tmp / "files.toml"
        files.write_text(
            'methods = ["mf"]\n'
            '[mesh]\nnode_path = "meshes/cell.node"\nele_path = "meshes/cell.ele"\n'
            '[physics]\nl_s_min_um = 1.0\n'
            '[[sequences]]\ndelta_ms = 5.0\nDelta_ms = 10.0\n'
        )
        config = load_config(files)
        assert Path(config.mesh.node_path) == tmp / "meshes" / "cell.node"
        assert config.pgse_list()[0].seq_id == "PGSE_5_10"


def test_run_and_cache():
    """Two runs: eig cache miss then hit, byte-identical outputs"""
    print("\n" + "="*50)
    print("TEST: Run with Eigen Cache")
    print("="*50)

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        config = load_config(_write_config(tmp))

        first = SimulationPipeline(config, output_dir=str(tmp / "first")).run()
        second = SimulationPipeline(config, output_dir=str(tmp / "second")).run()
        print(f"Files: {first.files}")
        print(f"Cache: first {first.eig_cache_hit}, second {second.eig_cache_hit}")

        assert first.success and second.success
        assert first.eig_cache_hit is False
        assert second.eig_cache_hit is True
        assert first.n_signals == 2 * (2 * 3)

        signals = pd.read_csv(tmp / "first" / "signals_mf.csv")
        assert list(signals.columns) == SIGNAL_COLUMNS
        assert len(signals) == 2 * 3
        assert (signals[signals["bvalue_s_mm2"] == 0]["attenuation"] == 1.0).all()
        assert (signals["attenuation"] <= 1.0 + 1e-6).all()

        for name in ("signals_mf.csv", "signals_mfga.csv", "eigenvalues.csv"):
            assert (tmp / "first" / name).read_bytes() == (tmp / "second" / name).read_bytes(), name

        manifest = json.loads((tmp / "second" / "manifest.json").read_text())
        assert manifest["complete"] is True
        assert manifest["config_hash"] == config.config_hash()
        assert set(manifest["files"]) == {"signals_mf.csv", "signals_mfga.csv", "eigenvalues.csv"}
        eig_stage = [s for s in manifest["stages"] if s["name"] == "eig"][0]
        assert eig_stage["cache_hit"] is True

        records = read_signal_csv(tmp / "first" / "signals_mf.csv")
        assert len(records) == 6 and records[0].method.value == "MF"
        assert all(abs(r.s0 - 16.0) < 1e-12 for r in records)

        # a cold run against an empty cache writes an identical container
        cold = config.model_copy(update={"cache_dir": str(tmp / "cache_cold")})
        third = SimulationPipeline(cold, output_dir=str(tmp / "third")).run()
        assert third.eig_cache_hit is False
        warm_files = sorted((tmp / "cache").glob("*.mfeig"))
        cold_files = sorted((tmp / "cache_cold").glob("*.mfeig"))
        assert len(warm_files) == len(cold_files) == 1
        assert warm_files[0].name == cold_files[0].name
        assert warm_files[0].read_bytes() == cold_files[0].read_bytes()


def test_signal_table_zero_signal():
    """A fully attenuated record keeps its S0 through the CSV"""
    print("\n" + "="*50)
    print("TEST: Signal Table with Zero Signal")
    print("="*50)

    record = SignalRecord(
        seq_id="SEQ1", delta=10.6, Delta=13.0, bvalue=1000.0,
        direction=(1.0, 0.0, 0.0), amplitude=0.0716, signal=0j, s0=80.0, neig=26,
    )
    with tempfile.TemporaryDirectory() as tmp:
        path = write_signals([record], Path(tmp) / "signals_mf.csv")
        frame = pd.read_csv(path)
        assert list(frame.columns) == SIGNAL_COLUMNS
        assert frame["s0"].iloc[0] == 80.0

        loaded = read_signal_csv(path)[0]
        print(f"Loaded: s0 {loaded.s0}, attenuation {loaded.attenuation}")
        assert loaded.s0 == 80.0
        assert loaded.attenuation == 0.0
        assert loaded.signal == 0j
        assert loaded.neig == 26

        # tables written before the s0 column: S0 comes from |S| / attenuation
        partial = SignalRecord(
            seq_id="SEQ1", delta=10.6, Delta=13.0, bvalue=1000.0,
            direction=(1.0, 0.0, 0.0), amplitude=0.0716, signal=8.0 + 0j, s0=80.0,
        )
        older = Path(tmp) / "older.csv"
        records_to_frame([partial]).drop(columns=["s0"]).to_csv(older, index=False)
        assert abs(read_signal_csv(older)[0].s0 - 80.0) < 1e-9

        legacy = Path(tmp) / "legacy.csv"
        frame.drop(columns=["s0"]).to_csv(legacy, index=False)
        try:
            read_signal_csv(legacy)
            assert False, "zero-attenuation row without s0 accepted"
        except StorageError as e:
            print(f"Caught: {e}")
            assert e.exit_code == 4


def test_full_stages():
    print("\n" + "="*50)
    print("TEST: All Stages")
    print("="*50)

    extra = """
[tolerances]
preset = "default"

[btspec]
amplitudes_T_m = [0.0, 0.05]
support_modes = [1, 2, 500]
"""
    methods = '["mf", "btpde", "btspec", "sta", "significance"]'
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        config = load_config(_write_config(tmp, methods=methods, extra=extra))
        result = SimulationPipeline(config, output_dir=str(tmp / "out"), rms=True).run()
        print(f"Files: {result.files}")
        print(f"Warnings: {result.warnings}")

        for name in (
            "signals_mf.csv", "signals_btpde.csv", "compare.json", "bt_modes.csv", "bt_summary.csv",
            "a_delta_grid.csv", "support_1.csv", "support_2.csv", "sta.csv", "significance.csv",
            "parseval.csv", "eigenvalues.csv",
        ):
            assert name in result.files, name
        assert "support_500.csv" not in result.files
        assert any("Support mode 500" in w for w in result.warnings)

        compare = json.loads((tmp / "out" / "compare.json").read_text())
        assert compare["rms_reported"] is True
        assert [c["bvalue_s_mm2"] for c in compare["comparisons"]] == [0.0, 1000.0]
        assert all(c["E"] < 0.022 for c in compare["comparisons"])

        btpde = pd.read_csv(tmp / "out" / "signals_btpde.csv")
        assert list(btpde.columns) == SIGNAL_COLUMNS + ["atol", "rtol", "steps_taken"]

        sta = pd.read_csv(tmp / "out" / "sta.csv")
        assert len(sta) == 3
        assert (sta["sta_adc_um2_ms"] < 2.0).all()

        summary = pd.read_csv(tmp / "out" / "bt_summary.csv")
        assert list(summary["amplitude_T_m"]) == [0.0, 0.05]
        assert summary["n_significant"].iloc[0] == 1


def test_cli():
    print("\n" + "="*50)
    print("TEST: Command Line")
    print("="*50)

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        config = _write_config(tmp)
        out = tmp / "cli"

        assert cli_main(["mesh-info", "--config", str(config), "--out", str(out)]) == 0
        info = json.loads((out / "mesh_info.json").read_text())
        assert info["n_nodes"] == 45
        assert abs(info["volume_um3"] - 16.0) < 1e-12

        assert cli_main(["eig", "--config", str(config), "--out", str(out)]) == 0
        assert cli_main(["signal", "--config", str(config), "--out", str(out), "--method", "mf"]) == 0
        signals = out / "signals_mf.csv"
        assert signals.is_file()
        assert not (out / "signals_mfga.csv").exists()

        compare_out = tmp / "self"
        assert cli_main(["compare", str(signals), str(signals), "--out", str(compare_out)]) == 0
        payload = json.loads((compare_out / "compare.json").read_text())
        assert all(c["E"] == 0.0 for c in payload["comparisons"])
        assert "E_rms" not in payload["comparisons"][0]

        # exit codes: 2 configuration, 4 storage
        assert cli_main(["eig"]) == 2
        assert cli_main(["run", "--config", str(tmp / "absent.toml")]) == 2
        missing = ["compare", str(tmp / "none.csv"), str(signals), "--out", str(compare_out)]
        assert cli_main(missing) == StorageError.exit_code == 4
        assert cli_main(["run", "--config", str(config), "--threads", "0"]) == 2


def main():
    print("\n" + "="*60)
    print("PIPELINE TESTS")
    print("="*60)

    test_config_validation()
    test_config_files()
    test_run_and_cache()
    test_signal_table_zero_signal()
    test_full_stages()
    test_cli()

    print("\n" + "="*60)
    print("ALL TESTS COMPLETE")
    print("="*60)


if __name__ == "__main__":
    main()
