import numpy as np
import pytest

from polyale import mesh as msh
from polyale.errors import InvalidCellError
from oracles import quad_integrate

UNIT_SQUARE_NODES = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def square_mesh(alpha=0):
    return msh.Mesh(UNIT_SQUARE_NODES, [[0, 1, 2, 3]], alpha=alpha)


def test_pseudo_radius():
    assert msh.pseudo_radius(0, 7.3) == 1.0
    assert msh.pseudo_radius(1, 2.5) == 2.5
    assert msh.pseudo_radius(1, 0.0) == 0.0


def test_cell_measures_unit_square():
    A, V, Rbar, Xax = msh.cell_measures(square_mesh(alpha=1), 0)
    assert A == pytest.approx(1.0)
    assert V == pytest.approx(0.5)
    assert Rbar == pytest.approx(0.5)
    np.testing.assert_allclose(Xax, [0.5, 2.0 / 3.0], atol=1e-14)
    A, V, Rbar, Xax = msh.cell_measures(square_mesh(alpha=0), 0)
    assert (A, V, Rbar) == (pytest.approx(1.0), pytest.approx(1.0), pytest.approx(1.0))
    np.testing.assert_allclose(Xax, [0.5, 0.5], atol=1e-14)


def test_cell_measures_triangle():
    tri = msh.Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), [[0, 1, 2]], alpha=0)
    A, V, Rbar, Xc = msh.cell_measures(tri, 0)
    assert A == pytest.approx(0.5)
    np.testing.assert_allclose(Xc, [1 / 3, 1 / 3], atol=1e-14)


def test_cell_measures_rejects_degenerate():
    bad = msh.Mesh(np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]),
                   [[0, 1, 2, 3]], alpha=0)  # clockwise: negative area
    with pytest.raises(InvalidCellError):
        msh.cell_measures(bad, 0)


def test_corner_geometry_unit_square():
    g = msh.corner_geometry(square_mesh(), 0, 1)  # node (1, 0)
    assert g["lm"] == pytest.approx(0.5)
    assert g["lp"] == pytest.approx(0.5)
    np.testing.assert_allclose(g["nm"], [0.0, -1.0], atol=1e-15)
    np.testing.assert_allclose(g["np"], [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(g["cnorm"], [0.5, -0.5], atol=1e-15)


def test_corner_normal_closure_per_cell():
    mesh = msh.polar_sector(16, 10, 1.0)
    g = mesh.corner_geometry_arrays()
    per_cell = mesh.cell_reduce(g["cnorm"])
    assert np.max(np.abs(per_cell)) < 1e-13


def test_corner_normal_closure_per_interior_node():
    mesh = msh.cartesian_box(5, 4, (0, 1, 0, 1))
    g = mesh.corner_geometry_arrays()
    sums = np.zeros((mesh.n_nodes, 2))
    np.add.at(sums, mesh.corner_node, g["cnorm"])
    interior = np.setdiff1d(np.arange(mesh.n_nodes), mesh.boundary_nodes)
    assert np.max(np.abs(sums[interior])) < 1e-13


def test_shared_edge_normals_oppose():
    mesh = msh.cartesian_box(2, 1, (0, 2, 0, 1))
    # The shared edge of cells 0 and 1 runs along x = 1 (nodes 1 and 4):
    # the two cells see opposite outward normals on it.
    g0 = msh.corner_geometry(mesh, 0, 1)
    g1 = msh.corner_geometry(mesh, 1, 1)
    np.testing.assert_allclose(g0["np"], [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(g1["nm"], [-1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(g0["np"], -g1["nm"], atol=1e-15)


def test_validate():
    ok_mesh = msh.polar_sector(16, 10, 1.0)
    invalid, folded = msh.validate(ok_mesh)
    assert invalid == [] and folded == []
    swapped = msh.Mesh(UNIT_SQUARE_NODES, [[0, 2, 1, 3]], alpha=0)
    invalid, _ = msh.validate(swapped)
    assert invalid == [0]
    bowtie = msh.Mesh(np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float),
                      [[0, 1, 2, 3]], alpha=0)
    invalid, _ = msh.validate(bowtie)
    assert invalid == [0]


def test_nonconvex_cell_reported_not_invalid():
    pts = np.array([[0, 0], [2, 0], [2, 2], [1, 0.5], [0, 2]], dtype=float)
    mesh = msh.Mesh(pts, [[0, 1, 2, 3, 4]], alpha=0)
    invalid, folded = msh.validate(mesh)
    assert invalid == []
    assert (0, 3) in folded


def test_volume_matches_quadrature():
    mesh = msh.polar_sector(6, 3, 1.0)
    _, V, _, _, _ = mesh.measures()
    for c in range(mesh.n_cells):
        ref = quad_integrate(mesh.cell_polygon(c), lambda x, y: y)
        assert V[c] == pytest.approx(ref, rel=1e-8)


def test_alpha_zero_collapse():
    nodes = UNIT_SQUARE_NODES + np.array([0.2, 3.0])
    m0 = msh.Mesh(nodes, [[0, 1, 2, 3]], alpha=0)
    A, V, Rbar, Xax, Xpl = m0.measures()
    np.testing.assert_array_equal(V, A)
    np.testing.assert_array_equal(Xax, Xpl)
    np.testing.assert_array_equal(Rbar, np.ones_like(A))


def test_polar_sector_symmetry_and_axis():
    mesh = msh.polar_sector(8, 4, 1.2)
    invalid, folded = msh.validate(mesh)
    assert invalid == [] and folded == []
    Y = mesh.nodes[:, 1]
    axis_nodes = [p for p in range(mesh.n_nodes) if "axis" in mesh.node_tags[p]]
    assert len(axis_nodes) == 2 * 4 + 1
    assert np.all(Y[axis_nodes] == 0.0)
    # Mirror symmetry about the y axis is exact.
    X = mesh.nodes
    for i in range(1, mesh.n_nodes):
        r = np.hypot(*X[i])
        mirrored = np.array([-X[i][0], X[i][1]])
        dists = np.hypot(X[:, 0] - mirrored[0], X[:, 1] - mirrored[1])
        assert dists.min() < 1e-15 * max(r, 1.0)


def test_mixed_core_disc_valid():
    mesh = msh.mixed_core_disc(5, 7, 0.25, 1.2)
    assert mesh.n_cells == 2 * 25 + 4 * 5 * 7
    invalid, folded = msh.validate(mesh)
    assert invalid == []
    # Core region cartesian, rings polar.
    assert mesh.region.max() == 1 and mesh.region.min() == 0


def test_equal_mass_radii():
    radii = msh.equal_mass_radii([(0.0, 10.0, 0.05), (10.0, 12.0, 1.0)], (5, 4))
    assert len(radii) == 9
    assert radii[4] == pytest.approx(10.0)
    assert radii[-1] == pytest.approx(12.0)
    masses = np.diff(np.concatenate([[0.0], radii[:5] ** 3]))
    assert np.allclose(masses, masses[0])


def test_with_positions_shares_connectivity():
    mesh = msh.cartesian_box(3, 3)
    moved = mesh.with_positions(mesh.nodes + 0.01)
    assert moved.cells is mesh.cells
    assert moved.nodes is not mesh.nodes
    np.testing.assert_array_equal(moved.initial_nodes, mesh.initial_nodes)
