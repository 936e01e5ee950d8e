"""
Test Bloch-Torrey Spectrum
==========================
BT eigendecomposition in the Laplace basis, A(δ), supports and the
magnetization at the echo.

Run with: python -m tests.test_btspec
"""

import sys
from functools import lru_cache
from pathlib import Path

import numpy as np

# Add parent to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from core.btspec import (
    a_delta_grid,
    a_delta_matrix,
    bt_eigendecomposition,
    initial_coefficients,
    laplace_coeffs_at,
    magnetization_at_echo,
    psi_at_nodes,
    scatter_data,
    significant_bt,
    support_region,
    truncated_signal,
)
from config import A_DELTA_THRESHOLD
from core.errors import ParameterError
from core.fem import assemble
from core.mesh import generate_box_mesh, generate_dumbbell_mesh
from core.sequences import Gradient, Pgse
from core.signal import BtpdeOptions, btpde_solve, build_model, mf_signal
from core.spectral import solve_interval

D0 = 2.0
X_AXIS = (1.0, 0.0, 0.0)


@lru_cache(maxsize=None)
def _slab():
    fem = assemble(generate_box_mesh(20.0, 2.0, 2.0, (40, 2, 2)), D0)
    eig = solve_interval(fem, 1.5)
    return fem, eig, build_model(eig, fem)


def test_zero_gradient():
    """g = 0: μ = λ and only the constant mode is excited"""
    print("\n" + "="*50)
    print("TEST: Zero Gradient")
    print("="*50)

    _, _, model = _slab()
    bt = bt_eigendecomposition(model, Gradient.along(X_AXIS, 0.0))
    assert np.array_equal(bt.mus.real, model.L)
    assert np.array_equal(bt.v1, np.eye(model.neig)[0])
    assert list(significant_bt(bt).indices) == [0]
    assert not bt.flagged


def test_spectrum_structure():
    print("\n" + "="*50)
    print("TEST: Spectrum Structure")
    print("="*50)

    _, _, model = _slab()
    bt = bt_eigendecomposition(model, Gradient.along(X_AXIS, 0.05))
    print(f"{bt.neig} modes, cond(V) {bt.condition:.2e}, residual {bt.residual:.2e}")
    print(f"Lowest mu: {bt.mus[:4]}")

    assert bt.residual < 1e-10
    assert np.all(bt.mus.real >= -1e-10)
    assert np.all(np.diff(bt.mus.real) >= 0)
    assert np.allclose(np.linalg.norm(bt.V_inv, axis=1), 1.0, atol=1e-12)
    assert np.allclose(bt.V @ bt.V_inv, np.eye(bt.neig), atol=1e-8)

    # K(-g) = K(g)*, so the spectrum of the reversed gradient is conjugated
    reversed_bt = bt_eigendecomposition(model, Gradient.along((-1.0, 0.0, 0.0), 0.05))
    gaps = np.abs(bt.mus.conj()[:, None] - reversed_bt.mus[None, :]).min(axis=1)
    assert gaps.max() < 1e-9 * max(1.0, np.abs(bt.mus).max())

    # the constant density is exactly Σ V_1j ψ_j
    e1 = np.eye(bt.neig)[0]
    assert np.allclose(initial_coefficients(bt), e1, atol=1e-10)
    assert np.allclose(laplace_coeffs_at(bt, 0.0), e1, atol=1e-10)


def test_significance_tables():
    print("\n" + "="*50)
    print("TEST: Significant Modes")
    print("="*50)

    _, _, model = _slab()
    bt = bt_eigendecomposition(model, Gradient.along(X_AXIS, 0.1))
    frame = scatter_data(bt)
    significant = significant_bt(bt, threshold=0.01)
    print(f"Significant BT modes: {len(significant.indices)} of {bt.neig}")

    assert list(frame.columns) == ["j", "re_mu_ms^-1", "im_mu_ms^-1", "abs_V1j", "significant"]
    assert frame["j"].iloc[0] == 1
    assert 0 < len(significant.indices) < bt.neig
    assert list(np.flatnonzero(frame["significant"])) == list(significant.indices)
    # a looser threshold keeps a superset
    assert set(significant.indices) <= set(significant_bt(bt, threshold=1e-4).indices)


def test_a_delta():
    print("\n" + "="*50)
    print("TEST: A(delta) Grid")
    print("="*50)

    _, _, model = _slab()
    seq = Pgse.from_preset("SEQ1")
    bt = bt_eigendecomposition(model, Gradient.along(X_AXIS, 0.1))

    A = a_delta_matrix(bt, seq.delta)
    assert A.shape == (bt.neig, bt.neig)
    assert np.allclose(A.sum(axis=0), laplace_coeffs_at(bt, seq.delta))

    grid = a_delta_grid(bt, seq.delta, threshold=1e-3)
    assert len(grid) == bt.neig ** 2
    assert grid[["j", "k"]].iloc[1].tolist() == [1, 2]
    assert grid["marked"].sum() == int((np.abs(A) >= 1e-3).sum())

    try:
        a_delta_matrix(bt, -1.0)
        assert False, "negative delta accepted"
    except ParameterError:
        pass


def test_echo_matches_mf():
    """Magnetization reconstructed at TE integrates to the MF signal"""
    print("\n" + "="*50)
    print("TEST: Echo Magnetization")
    print("="*50)

    fem, eig, model = _slab()
    for preset in ("SEQ1", "SEQ2"):
        seq = Pgse.from_preset(preset)
        gradient = Gradient.along((1.0, 0.3, 0.0), 0.08)
        bt = bt_eigendecomposition(model, gradient)
        echo = magnetization_at_echo(bt, eig, model, seq)
        reference = mf_signal(model, gradient, seq).signal
        print(f"{preset}: echo {echo.signal:.10g}, MF {reference:.10g}")

        assert abs(echo.signal - reference) <= 1e-8 * abs(reference)
        integral = np.ones(fem.n_nodes) @ (fem.mass @ echo.values)
        assert abs(integral - reference) <= 1e-8 * abs(reference)

        value, change = truncated_signal(bt, model, seq, threshold=0.0)
        assert change < 1e-14 and abs(value - echo.signal) <= 1e-12 * abs(reference)
        _, coarse = truncated_signal(bt, model, seq, threshold=0.05)
        assert coarse > 0


def test_amplitude_trends():
    """Stronger gradients excite more modes, A(δ) thins out with δ, ψ1 localizes"""
    print("\n" + "="*50)
    print("TEST: Trends with Gradient and Pulse Length")
    print("="*50)

    _, _, model = _slab()
    counts = {g: len(significant_bt(bt_eigendecomposition(model, Gradient.along(X_AXIS, g))).indices)
              for g in (0.0, 0.075, 0.3745)}
    print(f"Significant modes by amplitude: {counts}")
    # the count is not monotone between neighbouring amplitudes, only across this range
    assert counts[0.0] == 1
    assert counts[0.3745] >= counts[0.075] > counts[0.0]

    strong = bt_eigendecomposition(model, Gradient.along(X_AXIS, 0.3745))
    rows = {}
    for delta in (2.5, 5.0, 10.0, 25.0):
        grid = a_delta_grid(strong, delta, threshold=A_DELTA_THRESHOLD)
        rows[delta] = int(grid.groupby("j")["marked"].any().sum())
    print(f"A(delta) rows with a marked entry: {rows}")
    values = list(rows.values())
    assert all(later <= earlier for earlier, later in zip(values, values[1:]))
    assert rows[25.0] < rows[2.5]

    fem = assemble(generate_dumbbell_mesh(), D0)
    eig = solve_interval(fem, 1.5)
    dumbbell = build_model(eig, fem)
    fractions = {}
    for g in (0.0, 0.3745):
        bt = bt_eigendecomposition(dumbbell, Gradient.along(X_AXIS, g))
        fractions[g] = support_region(bt, eig, 0, frac=0.01).node_fraction
    print(f"Dumbbell psi_1 support fraction: {fractions} ({eig.neig} modes)")
    assert fractions[0.0] == 1.0
    assert fractions[0.3745] < fractions[0.0]


def test_against_btpde_field():
    """Modal magnetization at δ and TE against the finite element solution"""
    print("\n" + "="*50)
    print("TEST: Modal vs BTPDE Field")
    print("="*50)

    fem, eig, model = _slab()
    seq = Pgse.from_preset("SEQ1")
    gradient = Gradient.along(X_AXIS, 0.1)
    opts = BtpdeOptions.from_preset("high_accuracy")
    bt = bt_eigendecomposition(model, gradient)

    at_delta = btpde_solve(fem, gradient, seq, opts, t_stop=seq.delta)
    projected = eig.P.T @ (fem.mass @ at_delta.xi) / np.sqrt(fem.volume)
    modal = laplace_coeffs_at(bt, seq.delta)
    print(f"|c_k(delta)| modal {np.abs(modal[:4])}, BTPDE {np.abs(projected[:4])}")
    assert np.abs(modal[:6] - projected[:6]).max() < 5e-3

    echo = magnetization_at_echo(bt, eig, model, seq)
    final = btpde_solve(fem, gradient, seq, opts)
    gap = np.abs(echo.values - final.xi).max() / np.abs(final.xi).max()
    print(f"Max relative nodal gap at TE: {gap:.2e}")
    assert gap < 0.02


def test_supports():
    print("\n" + "="*50)
    print("TEST: Support Regions")
    print("="*50)

    _, eig, model = _slab()
    bt = bt_eigendecomposition(model, Gradient.along(X_AXIS, 0.1))
    for j in (0, 1, 2):
        region = support_region(bt, eig, j, frac=0.01)
        psi = np.abs(psi_at_nodes(bt, eig, j))
        print(f"psi_{j + 1}: support covers {100 * region.node_fraction:.1f}% of nodes")
        assert np.argmax(psi) in region.node_indices
        assert 0 < region.node_fraction <= 1.0
        frame = region.to_frame()
        assert frame["node_index"].min() >= 1
        assert (frame["abs_psi"] >= 0.01 * psi.max()).all()

    try:
        psi_at_nodes(bt, eig, bt.neig)
        assert False, "out-of-range mode accepted"
    except ParameterError:
        pass
    try:
        psi_at_nodes(bt, eig.truncate(3), 0)
        assert False, "basis size mismatch accepted"
    except ParameterError:
        pass


def main():
    print("\n" + "="*60)
    print("BT SPECTRUM TESTS")
    print("="*60)

    test_zero_gradient()
    test_spectrum_structure()
    test_significance_tables()
    test_a_delta()
    test_echo_matches_mf()
    test_amplitude_trends()
    test_against_btpde_field()
    test_supports()

    print("\n" + "="*60)
    print("ALL TESTS COMPLETE")
    print("="*60)


if __name__ == "__main__":
    main()
