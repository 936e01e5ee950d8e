"""
Test FEM Assembly
=================
Mass, stiffness and first-moment matrices on analytic meshes.

Run with: python -m tests.test_fem
"""

import sys
import tempfile
from pathlib import Path

import numpy as np
import scipy.sparse as sp

# Add parent to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from core.errors import ParameterError
from core.fem import assemble, dump_matrices
from core.mesh import build_mesh, generate_box_mesh, translate


def test_unit_tetrahedron():
    """Element mass matrix |T|/20 (1 + δ_ab)"""
    print("\n" + "="*50)
    print("TEST: Unit Tetrahedron")
    print("="*50)

    nodes = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    mesh, _ = build_mesh(nodes, [[0, 1, 2, 3]])
    fem = assemble(mesh, D0=1.0)

    expected = (np.ones((4, 4)) + np.eye(4)) / 120.0
    print(f"Mass:\n{fem.mass.toarray()}")
    assert np.allclose(fem.mass.toarray(), expected, atol=1e-15)
    assert abs(fem.volume - 1.0 / 6.0) < 1e-15
    assert np.allclose(fem.centroid, [0.25, 0.25, 0.25], atol=1e-15)


def test_box_identities():
    print("\n" + "="*50)
    print("TEST: Box Identities")
    print("="*50)

    mesh = generate_box_mesh(4.0, 3.0, 2.0, (4, 3, 2))
    D0 = 2.0
    fem = assemble(mesh, D0)
    ones = np.ones(fem.n_nodes)
    x = mesh.nodes[:, 0]

    assert abs(ones @ fem.mass @ ones - 24.0) < 1e-12
    assert np.abs(fem.stiffness @ ones).max() < 1e-12
    # ∫ D0 |∇x|² = D0 |Ω| since x lies in the P1 space
    assert abs(x @ fem.stiffness @ x - D0 * 24.0) < 1e-10
    assert np.allclose(fem.centroid, [2.0, 1.5, 1.0], atol=1e-12)
    assert abs(fem.second_moments[0] - 3.0 * 2.0 * 64.0 / 3.0) < 1e-10

    for A in (fem.mass, fem.stiffness) + fem.moments:
        assert abs(A - A.T).max() < 1e-15
        assert A.has_sorted_indices

    # 1ᵀ J^i 1 = ∫ x_i
    first = np.array([ones @ J @ ones for J in fem.moments])
    assert np.allclose(first, fem.centroid * fem.volume, rtol=1e-12)
    print(f"Volume {fem.volume}, centroid {fem.centroid}")


def test_translation():
    """S is unchanged; J^i shifts by c_i M"""
    print("\n" + "="*50)
    print("TEST: Translation")
    print("="*50)

    mesh = generate_box_mesh(2.0, 2.0, 2.0, 2)
    offset = np.array([3.0, -1.0, 0.5])
    a = assemble(mesh, 2.0)
    b = assemble(translate(mesh, offset), 2.0)

    assert abs(a.stiffness - b.stiffness).max() < 1e-12
    for i in range(3):
        shifted = a.moments[i] + offset[i] * a.mass
        assert abs(shifted - b.moments[i]).max() < 1e-12
        assert abs(a.centered_moment(i) - b.centered_moment(i)).max() < 1e-12


def test_determinism():
    print("\n" + "="*50)
    print("TEST: Bit-identical Assembly")
    print("="*50)

    mesh = generate_box_mesh(3.0, 1.0, 1.0, (6, 2, 2))
    a, b = assemble(mesh, 2.0), assemble(mesh, 2.0)
    assert np.array_equal(a.mass.data, b.mass.data)
    assert np.array_equal(a.stiffness.indices, b.stiffness.indices)
    assert a.fingerprint == b.fingerprint


def test_dump_and_errors():
    print("\n" + "="*50)
    print("TEST: Debug Dump")
    print("="*50)

    mesh = generate_box_mesh(1.0, 1.0, 1.0, 1)
    fem = assemble(mesh, 2.0)
    with tempfile.TemporaryDirectory() as tmp:
        dump_matrices(fem, tmp)
        lines = (Path(tmp) / "mass.coo").read_text().splitlines()
        n, m, nnz = (int(t) for t in lines[0].split())
        assert n == m == 8
        assert nnz == len(lines) - 1
        i, j, _ = lines[1].split()
        assert int(i) == 1 and int(j) == 1

        # in memory both triangles are stored; the dump keeps i <= j and rebuilds the full matrix
        for name, A in (("mass", fem.mass), ("stiffness", fem.stiffness), ("moment_x", fem.moments[0])):
            assert A.format == "csr"
            assert sp.tril(A, k=-1).nnz == sp.triu(A, k=1).nnz > 0
            rows = np.loadtxt(Path(tmp) / f"{name}.coo", skiprows=1, ndmin=2)
            assert (rows[:, 0] <= rows[:, 1]).all()
            upper = sp.coo_matrix((rows[:, 2], (rows[:, 0] - 1, rows[:, 1] - 1)), shape=A.shape)
            rebuilt = upper + sp.triu(upper, k=1).T
            assert abs(rebuilt - A).max() < 1e-15 * abs(A).max()
        assert sorted(p.name for p in Path(tmp).iterdir()) == [
            "mass.coo", "moment_x.coo", "moment_y.coo", "moment_z.coo", "stiffness.coo",
        ]

    try:
        assemble(mesh, 0.0)
        assert False, "D0 = 0 accepted"
    except ParameterError:
        pass


def main():
    print("\n" + "="*60)
    print("FEM MODULE TESTS")
    print("="*60)

    test_unit_tetrahedron()
    test_box_identities()
    test_translation()
    test_determinism()
    test_dump_and_errors()

    print("\n" + "="*60)
    print("ALL TESTS COMPLETE")
    print("="*60)


if __name__ == "__main__":
    main()
