"""
Test Sequences
==============
PGSE profile, b-values and gradient direction sets.

Run with: python -m tests.test_sequences
"""

import sys
from pathlib import Path

import numpy as np

# Add parent to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from config import GAMMA
from core.errors import ParameterError
from core.sequences import (
    Gradient,
    Pgse,
    amplitude_for_b,
    b_internal,
    bvalue,
    bvalue_quadrature,
    diffusion_time_series,
    fibonacci_directions,
)


def test_bvalue_closed_form():
    """γ²|g|²δ²(Δ - δ/3) against adaptive quadrature of F²"""
    print("\n" + "="*50)
    print("TEST: b-value Closed Form")
    print("="*50)

    for name in ("SEQ1", "SEQ2"):
        seq = Pgse.from_preset(name)
        for g in (0.01, 0.1, 0.3):
            closed, numeric = bvalue(seq, g), bvalue_quadrature(seq, g)
            print(f"{seq.label()} g={g}: b = {closed:.6f} s/mm2 (quadrature {numeric:.6f})")
            assert abs(closed - numeric) <= 1e-10 * closed

    seq = Pgse(delta=5.0, Delta=10.0)
    expected = GAMMA ** 2 * 0.1 ** 2 * 25.0 * (10.0 - 5.0 / 3.0) * 1e3
    assert abs(bvalue(seq, 0.1) - expected) < 1e-9 * expected
    assert bvalue(seq, 0.0) == 0.0

    # δ = Δ = 25 ms at 0.3745 T/m is tabulated as b ≈ 104167 s/mm² (rounded)
    long_pulse = Pgse(delta=25.0, Delta=25.0)
    assert abs(bvalue(long_pulse, 0.3745) - 104167.0) < 5e-3 * 104167.0


def test_amplitude_inverse():
    print("\n" + "="*50)
    print("TEST: Amplitude for b")
    print("="*50)

    seq = Pgse.from_preset("SEQ2")
    for b in (100.0, 1000.0, 4000.0):
        g = amplitude_for_b(seq, b)
        assert abs(bvalue(seq, g) - b) < 1e-9 * b
    assert amplitude_for_b(seq, 0.0) == 0.0
    assert abs(b_internal(1000.0) - 1.0) < 1e-15

    try:
        amplitude_for_b(seq, -1.0)
        assert False, "negative b accepted"
    except ParameterError:
        pass

    series = diffusion_time_series([1.0, 2.5, 10.0])
    assert [s.Delta for s in series] == [2.0, 5.0, 20.0]
    assert series[1].seq_id == "PGSE_d2.5"
    assert np.allclose([s.diffusion_time for s in series], [5.0 / 3.0 * d for d in (1.0, 2.5, 10.0)])


def test_profile_and_intervals():
    print("\n" + "="*50)
    print("TEST: Profile and Intervals")
    print("="*50)

    seq = Pgse(delta=2.0, Delta=6.0)
    assert seq.echo_time == 8.0
    assert list(seq.profile([1.0, 4.0, 7.0])) == [1.0, 0.0, -1.0]
    assert np.allclose(seq.integrated_profile([1.0, 4.0, 7.0, 8.0]), [1.0, 2.0, 1.0, 0.0])
    assert len(seq.intervals()) == 3

    touching = Pgse(delta=3.0, Delta=3.0)
    assert [f for _, _, f in touching.intervals()] == [1.0, -1.0]

    for delta, Delta in ((0.0, 1.0), (2.0, 1.0)):
        try:
            Pgse(delta=delta, Delta=Delta)
            assert False, f"delta={delta}, Delta={Delta} accepted"
        except ParameterError:
            pass

    try:
        Pgse.from_preset("SEQ9")
        assert False, "unknown preset accepted"
    except ParameterError:
        pass


def test_gradient_direction():
    print("\n" + "="*50)
    print("TEST: Gradient Direction")
    print("="*50)

    g = Gradient.along((3.0, 0.0, 4.0), 0.05)
    assert np.allclose(g.u, [0.6, 0.0, 0.8])
    assert np.allclose(g.vector, [0.03, 0.0, 0.04])
    assert np.allclose(g.reversed().u, [-0.6, 0.0, -0.8])

    for bad in ((1.0, 1.0, 0.0), (1.0, 0.0)):
        try:
            Gradient(direction=bad, amplitude=0.1)
            assert False, f"direction {bad} accepted"
        except ParameterError:
            pass
    try:
        Gradient.along((0.0, 0.0, 0.0), 0.1)
        assert False, "zero direction accepted"
    except ParameterError:
        pass


def test_fibonacci_directions():
    print("\n" + "="*50)
    print("TEST: Fibonacci Directions")
    print("="*50)

    full = fibonacci_directions(30)
    half = fibonacci_directions(30, hemisphere=True)
    print(f"First directions: {full[:2]}")

    assert full.shape == half.shape == (30, 3)
    assert np.allclose(np.linalg.norm(full, axis=1), 1.0, atol=1e-15)
    assert np.allclose(np.linalg.norm(half, axis=1), 1.0, atol=1e-15)
    assert (half[:, 2] > 0).all()
    # the full lattice is balanced about the origin in z
    assert abs(full[:, 2].sum()) < 1e-12
    assert np.array_equal(full, fibonacci_directions(30))
    assert np.array_equal(fibonacci_directions(1), [[1.0, 0.0, 0.0]])

    try:
        fibonacci_directions(0)
        assert False, "zero directions accepted"
    except ParameterError:
        pass


def main():
    print("\n" + "="*60)
    print("SEQUENCE MODULE TESTS")
    print("="*60)

    test_bvalue_closed_form()
    test_amplitude_inverse()
    test_profile_and_intervals()
    test_gradient_direction()
    test_fibonacci_directions()

    print("\n" + "="*60)
    print("ALL TESTS COMPLETE")
    print("="*60)


if __name__ == "__main__":
    main()
