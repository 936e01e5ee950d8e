"""
Test Laplace Eigensolver
========================
Interval eigenpairs, inertia certification and the binary container.

Run with: python -m tests.test_eig
"""

import struct
import sys
import tempfile
from pathlib import Path

import numpy as np
import scipy.linalg as sla

# Add parent to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from config import settings
from core.errors import EigFormatError, FingerprintMismatchError, ParameterError
from core.fem import assemble
from core.mesh import generate_box_mesh
from core.signal import box_eigenvalues
from core.spectral import (
    cache_path,
    count_below,
    eigen_table,
    lambda_max_for,
    length_scale,
    load_eig,
    save_eig,
    solve_interval,
)

D0 = 2.0
# λ_max sits between the (2,0,0) and (2,1,0) families of the 10 um cube
CUBE_L_S_MIN = 4.6


def _slab():
    return assemble(generate_box_mesh(20.0, 2.0, 2.0, (40, 2, 2)), D0)


def _cube_errors(n: int) -> np.ndarray:
    fem = assemble(generate_box_mesh(10.0, 10.0, 10.0, n), D0)
    eig = solve_interval(fem, CUBE_L_S_MIN)
    print(f"n={n}: {eig.neig} modes via {eig.solver}, residual {eig.max_residual:.2e}")
    assert eig.neig == 11
    exact = box_eigenvalues(10.0, 10.0, 10.0, D0, eig.neig)
    # conforming Galerkin eigenvalues bound the exact ones from above
    assert (eig.lambdas[1:] >= exact[1:] * (1.0 - 1e-10)).all()
    return (eig.lambdas[1:] - exact[1:]) / exact[1:]


def test_cube_convergence():
    """Nonzero eigenvalues of [0,10]³ approach D0 π²(i²+j²+k²)/100 at second order"""
    print("\n" + "="*50)
    print("TEST: Cube Eigenvalues")
    print("="*50)

    coarse = _cube_errors(8)
    fine = _cube_errors(16)
    print(f"Relative errors n=8:  {np.round(coarse, 5)}")
    print(f"Relative errors n=16: {np.round(fine, 5)}")

    assert fine.max() < 0.02
    order = np.log2(coarse.mean() / fine.mean())
    print(f"Observed order: {order:.3f}")
    assert order >= 1.8


def test_basis_normalization():
    print("\n" + "="*50)
    print("TEST: Basis Normalization")
    print("="*50)

    fem = _slab()
    eig = solve_interval(fem, 1.5)
    print(f"Slab: {eig.neig} modes, lambda_max {eig.lambda_max:.4f}")

    assert eig.neig == eig.inertia_count
    assert eig.lambdas[0] == 0.0
    assert np.all(np.diff(eig.lambdas) >= 0)
    assert eig.lambdas[-1] <= lambda_max_for(1.5, D0)
    assert np.allclose(eig.P[:, 0], 1.0 / np.sqrt(fem.volume))

    gram = eig.P.T @ (fem.mass @ eig.P)
    assert np.abs(gram - np.eye(eig.neig)).max() < 1e-10
    residual = fem.stiffness @ eig.P - (fem.mass @ eig.P) * eig.lambdas
    assert np.abs(residual).max() < 1e-8 * max(eig.lambdas[-1], 1.0)

    for j in range(eig.neig):
        col = eig.P[:, j]
        first = np.argmax(np.abs(col) > 1e-8 * np.abs(col).max())
        assert col[first] > 0

    # lowest longitudinal modes of the 20 um slab
    longitudinal = D0 * (np.arange(1, 4) * np.pi / 20.0) ** 2
    assert np.allclose(eig.lambdas[1:4], longitudinal, rtol=0.01)


def test_sliced_matches_dense():
    """Spectrum slicing with sparse inertia reproduces the dense solve"""
    print("\n" + "="*50)
    print("TEST: Sliced Lanczos vs Dense")
    print("="*50)

    fem = _slab()
    dense = solve_interval(fem, 1.5)

    limit, target = settings.dense_eig_limit, settings.eig_slice_target
    settings.dense_eig_limit, settings.eig_slice_target = 0, 6
    try:
        sliced = solve_interval(fem, 1.5)
    finally:
        settings.dense_eig_limit, settings.eig_slice_target = limit, target

    print(f"Slices: {len(sliced.slices)}, solver {sliced.solver}")
    assert sliced.solver == "sliced-lanczos"
    assert len(sliced.slices) > 1
    assert sliced.neig == dense.neig
    assert np.allclose(sliced.lambdas, dense.lambdas, rtol=1e-9, atol=1e-12)
    gram = sliced.P.T @ (fem.mass @ sliced.P)
    assert np.abs(gram - np.eye(sliced.neig)).max() < 1e-10


def test_inertia_count():
    print("\n" + "="*50)
    print("TEST: Inertia Count")
    print("="*50)

    fem = assemble(generate_box_mesh(3.0, 2.0, 1.0, (3, 2, 2)), D0)
    exact = sla.eigh(fem.stiffness.toarray(), fem.mass.toarray(), eigvals_only=True)
    shifts = 0.5 * (exact[1:9] + exact[2:10])
    shifts = shifts[np.diff(exact[1:10]) > 1e-6]

    for shift in shifts:
        expected = int(np.sum(exact < shift))
        dense = count_below(fem.stiffness, fem.mass, shift)
        sparse = count_below(fem.stiffness, fem.mass, shift, dense_limit=0)
        print(f"shift {shift:.4f}: expected {expected}, dense {dense}, sparse {sparse}")
        assert dense == sparse == expected


def test_length_scales():
    print("\n" + "="*50)
    print("TEST: Length Scales")
    print("="*50)

    assert length_scale(0.0, D0) == float("inf")
    assert abs(length_scale(lambda_max_for(2.5, D0), D0) - 2.5) < 1e-12
    assert abs(lambda_max_for(4.0, D0) - 1.2337) < 1e-4
    assert abs(length_scale(D0 * np.pi ** 2 / 100.0, D0) - 10.0) < 1e-12

    fem = _slab()
    table = eigen_table(solve_interval(fem, 3.0))
    print(table.head())
    assert list(table.columns) == ["n", "lambda_ms^-1", "l_s_um"]
    assert table["n"].iloc[0] == 1
    assert np.isinf(table["l_s_um"].iloc[0])
    assert (table["l_s_um"].iloc[1:] >= 3.0).all()

    for bad in (0.0, -1.0):
        try:
            lambda_max_for(bad, D0)
            assert False, f"l_s_min={bad} accepted"
        except ParameterError:
            pass


def test_storage():
    print("\n" + "="*50)
    print("TEST: Eigen Container")
    print("="*50)

    fem = _slab()
    eig = solve_interval(fem, 3.0)
    with tempfile.TemporaryDirectory() as tmp:
        path = cache_path(tmp, fem.fingerprint, D0, 3.0)
        assert path != cache_path(tmp, fem.fingerprint, D0, 2.0)

        save_eig(eig, path)
        first = path.read_bytes()
        save_eig(eig, path)
        assert path.read_bytes() == first
        assert first[:8] == b"MFEIG001"

        loaded = load_eig(path, expected_fingerprint=fem.fingerprint)
        assert np.array_equal(loaded.lambdas, eig.lambdas)
        assert np.array_equal(loaded.P, eig.P)
        assert loaded.l_s_min == 3.0 and loaded.D0 == D0
        assert loaded.solver == "cache"

        try:
            load_eig(path, expected_fingerprint=b"\x00" * 32)
            assert False, "fingerprint mismatch accepted"
        except FingerprintMismatchError:
            pass

        truncated = Path(tmp) / "truncated.bin"
        truncated.write_bytes(first[:-8])
        try:
            load_eig(truncated)
            assert False, "truncated container accepted"
        except EigFormatError:
            pass

        garbage = Path(tmp) / "garbage.bin"
        garbage.write_bytes(b"NOTANEIG" + first[8:])
        try:
            load_eig(garbage)
            assert False, "bad magic accepted"
        except EigFormatError:
            pass

        # well-sized files whose header values are impossible
        headers = [
            (eig.n_nodes, eig.neig, D0, 0.0),
            (eig.n_nodes, eig.neig, D0, -3.0),
            (eig.n_nodes, eig.neig, 0.0, 3.0),
            (eig.n_nodes, eig.neig, float("nan"), 3.0),
        ]
        for values in headers:
            crafted = Path(tmp) / "crafted.bin"
            crafted.write_bytes(first[:8] + struct.pack("<QQdd", *values) + first[40:])
            try:
                load_eig(crafted)
                assert False, f"header {values} accepted"
            except EigFormatError as e:
                print(f"Caught: {e}")

        # an independent solve on a freshly built mesh writes the same bytes
        again = solve_interval(_slab(), 3.0)
        other = Path(tmp) / "again" / path.name
        save_eig(again, other)
        assert other.read_bytes() == first


def main():
    print("\n" + "="*60)
    print("EIGENSOLVER TESTS")
    print("="*60)

    test_cube_convergence()
    test_basis_normalization()
    test_sliced_matches_dense()
    test_inertia_count()
    test_length_scales()
    test_storage()

    print("\n" + "="*60)
    print("ALL TESTS COMPLETE")
    print("="*60)


if __name__ == "__main__":
    main()
