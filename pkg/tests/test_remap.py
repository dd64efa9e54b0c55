import numpy as np
import pytest

from polyale import eos, geometry as geo, lagrange as lag, mesh as msh, mof, remap
from oracles import quad_integrate, random_star_polygon

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
GAMMA = 1.4


def test_moment_integrate_examples():
    assert remap.moment_integrate(UNIT_SQUARE, 0, 0) == pytest.approx(1.0)
    assert remap.moment_integrate(UNIT_SQUARE, 1, 0) == pytest.approx(0.5)
    assert remap.moment_integrate(UNIT_SQUARE, 2, 1) == pytest.approx(1 / 6)


def test_moment_integrate_vs_quadrature_random():
    rng = np.random.default_rng(31)
    for _ in range(40):
        poly = random_star_polygon(rng, center=(0.5, 1.2))
        for (a, b) in [(0, 0), (1, 0), (0, 1), (2, 1), (1, 2), (3, 0), (0, 3)]:
            ref = quad_integrate(poly, lambda x, y: x**a * y**b)
            assert remap.moment_integrate(poly, a, b) == pytest.approx(
                ref, rel=1e-10, abs=1e-13)


def test_polygon_intersect_examples():
    same = remap.polygon_intersect(UNIT_SQUARE, UNIT_SQUARE)
    assert sum(geo.signed_area(p) for p in same) == pytest.approx(1.0)
    off = remap.polygon_intersect(UNIT_SQUARE, UNIT_SQUARE + [0.5, 0.0])
    assert sum(geo.signed_area(p) for p in off) == pytest.approx(0.5)
    assert remap.polygon_intersect(UNIT_SQUARE, UNIT_SQUARE + 3.0) == []


def _single_mat_setup(nx=6, ny=6, alpha=0, rho_fn=None, eps_fn=None, U_fn=None,
                      bounds=(0.0, 1.0, 0.0, 1.0)):
    mesh = msh.cartesian_box(nx, ny, bounds, alpha=alpha)
    nc = mesh.n_cells
    _, V, _, Xax, Xpl = mesh.measures()
    e = eos.GasEos(GAMMA)
    rho = rho_fn(Xax) if rho_fn else np.ones(nc)
    epsv = eps_fn(Xax) if eps_fn else np.ones(nc)
    mats = eos.single_material(e, rho, epsv, Xax, Xpl)
    U = U_fn(Xax) if U_fn else np.zeros((nc, 2))
    state = lag.state_from_materials(mesh, mats, U)
    return mesh, state, mats


def _interior_wiggle(mesh, amp, seed=0):
    rng = np.random.default_rng(seed)
    X = mesh.nodes.copy()
    interior = np.setdiff1d(np.arange(mesh.n_nodes), mesh.boundary_nodes)
    h = mesh.min_edge_per_cell().min()
    X[interior] += amp * h * rng.uniform(-1.0, 1.0, (len(interior), 2))
    return X


def test_classify_single_material():
    mesh, state, mats = _single_mat_setup()
    cls = remap.classify(mesh, mats)
    assert not cls.mixed_nodes.any()
    assert cls.swept_cells.all()
    assert not cls.intersection_cells.any()


def test_classify_one_mixed_cell():
    mesh, state, mats = _single_mat_setup(5, 5)
    nc = mesh.n_cells
    alpha = np.zeros((2, nc))
    alpha[0] = 1.0
    center = 12  # middle cell of the 5x5 grid
    alpha[0, center] = 0.6
    alpha[1, center] = 0.4
    rho = np.ones((2, nc))
    eps = np.ones((2, nc))
    _, V, _, Xax, Xpl = mesh.measures()
    cax = np.stack([Xax, Xax])
    mats2 = eos.MaterialState([eos.GasEos(1.4), eos.GasEos(1.6)], alpha,
                              alpha * rho * V, rho, eps, cax, cax.copy())
    cls = remap.classify(mesh, mats2)
    assert cls.mixed_nodes.sum() == 4
    assert cls.interface_cells.sum() == 1
    assert cls.intersection_cells.sum() == 9  # the 3x3 block
    assert cls.swept_cells.sum() == nc - 1    # all but the mixed cell
    # hybrid off: everything goes through the intersection path
    cls_off = remap.classify(mesh, mats2, hybrid=False)
    assert cls_off.intersection_cells.all() and not cls_off.swept_cells.any()


def test_classify_face_aligned_interface():
    mesh, state, mats = _single_mat_setup(4, 2)
    nc = mesh.n_cells
    _, V, _, Xax, Xpl = mesh.measures()
    alpha = np.zeros((2, nc))
    left = Xax[:, 0] < 0.5
    alpha[0, left] = 1.0
    alpha[1, ~left] = 1.0
    rho = np.ones((2, nc))
    mats2 = eos.MaterialState([eos.GasEos(1.4)] * 2, alpha, alpha * rho * V,
                              rho, np.ones((2, nc)), np.stack([Xax, Xax]),
                              np.stack([Xpl, Xpl]))
    cls = remap.classify(mesh, mats2)
    # Cells on both sides of x = 0.5 lie on the interface.
    assert cls.interface_cells.sum() == 4
    assert cls.mixed_nodes.sum() == 9  # three node columns around the face


def test_gradient_constant_and_linear():
    assert np.allclose(remap.gradient(np.zeros(5), np.random.rand(5, 2)), 0.0)
    rng = np.random.default_rng(3)
    dx = rng.uniform(-1, 1, (8, 2))
    g_true = np.array([2.0, -1.0])
    g = remap.gradient(dx @ g_true, dx)
    np.testing.assert_allclose(g, g_true, atol=1e-12)
    # Rank-deficient stencil (collinear points) falls back to zero slope.
    line = np.outer(np.arange(4.0), [1.0, 1.0])
    assert np.allclose(remap.gradient(line @ g_true, line), 0.0)


def test_limiter_keeps_reconstruction_in_range():
    mesh, state, mats = _single_mat_setup(5, 5)
    nc = mesh.n_cells
    rng = np.random.default_rng(8)
    mats.rho[0] = 1.0 + 0.5 * rng.random(nc)
    c = 12
    mats.rho[0, c] = 3.0  # local extremum
    mats.eps[0] = 1.0
    state = lag.state_from_materials(mesh, mats, np.zeros((nc, 2)))
    donors = remap.build_donors(mesh, state, mats, {}, limiter=True)
    dn = donors[(c, 0)]
    nbrs = mesh.cell_node_neighbors[c]
    lo = min(mats.rho[0, c], mats.rho[0, nbrs].min())
    hi = max(mats.rho[0, c], mats.rho[0, nbrs].max())
    for v in mesh.cell_polygon(c):
        val = dn.values["rho"] + dn.grad["rho"] @ (v - dn.cen_ax)
        assert lo - 1e-12 <= val <= hi + 1e-12


def test_identity_remap_exact():
    for alpha, bounds in ((0, (0, 1, 0, 1)), (1, (0, 1, 0.2, 1.2))):
        mesh, state, mats = _single_mat_setup(
            5, 4, alpha=alpha, bounds=bounds,
            rho_fn=lambda X: 1 + 0.4 * np.sin(3 * X[:, 0]) * X[:, 1],
            eps_fn=lambda X: 1 + 0.2 * X[:, 0],
            U_fn=lambda X: np.column_stack([0.1 * X[:, 1], -0.2 * X[:, 0]]))
        for hybrid in (True, False):
            new_state, new_mats, diag = remap.hybrid_remap(
                mesh, state, mats.copy(), {}, mesh.nodes.copy(), hybrid=hybrid)
            np.testing.assert_allclose(new_state.rho, state.rho, rtol=1e-12)
            np.testing.assert_allclose(new_state.E, state.E, rtol=1e-12)
            np.testing.assert_allclose(new_state.U, state.U, atol=1e-12)


def test_constant_preservation_and_conservation():
    mesh, state, mats = _single_mat_setup(6, 6, alpha=1, bounds=(0, 1, 0.0, 1.0))
    X_new = _interior_wiggle(mesh, 0.25, seed=5)
    new_state, new_mats, diag = remap.hybrid_remap(mesh, state, mats.copy(),
                                                   {}, X_new)
    np.testing.assert_allclose(new_state.rho, 1.0, rtol=1e-12)
    np.testing.assert_allclose(new_state.E, state.E[0], rtol=1e-12)
    assert abs(diag["d_mass"]) < 1e-12 * diag["mass"]
    assert abs(diag["d_energy"]) < 1e-12 * abs(diag["energy"])


def test_pcsf_zero_displacement_bit_exact():
    mesh, state, mats = _single_mat_setup(4, 4)
    donors = remap.build_donors(mesh, state, mats, {}, limiter=True)
    cls = remap.classify(mesh, mats)
    acc, leak = remap.pcsf_remap(mesh, mesh.nodes, mesh.nodes.copy(), state,
                                 mats, donors, cls.swept_cells)
    for c in range(mesh.n_cells):
        assert acc[c].R[0]["rho"] == state.rho[c] * state.V[c]
    assert leak == 0.0


def test_pcsf_global_conservation_smooth_field():
    mesh, state, mats = _single_mat_setup(
        8, 8, alpha=1, bounds=(0, 2, 0, 2),
        rho_fn=lambda X: 1 + 0.3 * np.cos(X[:, 0]) * X[:, 1],
        U_fn=lambda X: 0.2 * X)
    X_new = _interior_wiggle(mesh, 0.3, seed=11)
    new_state, _, diag = remap.hybrid_remap(mesh, state, mats.copy(), {}, X_new)
    assert abs(diag["d_mass"]) < 1e-12 * diag["mass"]
    assert abs(diag["d_energy"]) < 1e-12 * abs(diag["energy"])
    assert np.all(np.abs(diag["d_momentum"]) < 1e-12 * diag["mass"])


def test_mcib_linearity_preservation():
    # Globally linear conserved densities, unlimited gradients, pure
    # intersection path: remapped means are exact to 1e-10.
    g_rho = np.array([0.3, -0.2])

    def rho_fn(X):
        return 2.0 + X @ g_rho

    mesh, state, mats = _single_mat_setup(6, 5, alpha=1, bounds=(0, 1, 0.5, 1.5),
                                          rho_fn=rho_fn)
    mats.eps[0, :] = 1.0  # rhoE = rho * (1 + 0) stays linear with U = 0
    state = lag.state_from_materials(mesh, mats, np.zeros((mesh.n_cells, 2)))
    X_new = _interior_wiggle(mesh, 0.3, seed=2)
    new_state, new_mats, _ = remap.hybrid_remap(mesh, state, mats.copy(), {},
                                                X_new, limiter=False,
                                                hybrid=False)
    new_mesh = mesh.with_positions(X_new)
    _, V, _, Xax, _ = new_mesh.measures()
    expect = 2.0 + Xax @ g_rho   # mean of a linear field = value at centroid
    np.testing.assert_allclose(new_state.rho, expect, rtol=1e-10)


def test_hybrid_paths_agree_on_single_material():
    # On a globally linear field with unlimited slopes every donor
    # reconstruction is the same linear function, so the swept-face and
    # intersection paths integrate identical data and must agree.
    mesh, state, mats = _single_mat_setup(
        6, 6, alpha=1, bounds=(0, 1, 0.0, 1.0),
        rho_fn=lambda X: 1 + 0.5 * X[:, 0] + 0.25 * X[:, 1],
        U_fn=lambda X: np.tile([0.3, -0.1], (len(X), 1)))
    X_new = _interior_wiggle(mesh, 0.2, seed=3)
    s1, _, _ = remap.hybrid_remap(mesh, state, mats.copy(), {}, X_new,
                                  hybrid=True, limiter=False)
    s2, _, _ = remap.hybrid_remap(mesh, state, mats.copy(), {}, X_new,
                                  hybrid=False, limiter=False)
    np.testing.assert_allclose(s1.rho, s2.rho, rtol=1e-10)
    np.testing.assert_allclose(s1.E, s2.E, rtol=1e-10)
    np.testing.assert_allclose(s1.U, s2.U, atol=1e-10)


def _two_material_box(nx=8, ny=6, x_int=0.52):
    """Two materials split by a vertical line cutting through cells."""
    mesh = msh.cartesian_box(nx, ny, (0, 1, 0.2, 0.8), alpha=1)
    nc = mesh.n_cells
    K = 2
    alpha = np.zeros((K, nc))
    cax = np.zeros((K, nc, 2))
    cpl = np.zeros((K, nc, 2))
    _, V, _, Xax, Xpl = mesh.measures()
    nrm = np.array([1.0, 0.0])
    for c in range(nc):
        poly = mesh.cell_polygon(c)
        left = geo.clip_halfplane(poly, nrm, x_int)
        right = geo.clip_halfplane(poly, -nrm, -x_int)
        ms_l = mof.MomentSet.from_polygon(left, 1)
        ms_r = mof.MomentSet.from_polygon(right, 1)
        alpha[0, c] = ms_l.M0 / V[c]
        alpha[1, c] = ms_r.M0 / V[c]
        cax[0, c] = ms_l.centroid("axi") if ms_l.M0 > 0 else Xax[c]
        cax[1, c] = ms_r.centroid("axi") if ms_r.M0 > 0 else Xax[c]
        cpl[0, c] = ms_l.centroid("planar") if ms_l.M0_pl > 0 else Xpl[c]
        cpl[1, c] = ms_r.centroid("planar") if ms_r.M0_pl > 0 else Xpl[c]
    rho = np.vstack([np.ones(nc), np.full(nc, 2.0)])
    eps = np.vstack([np.full(nc, 2.5), np.full(nc, 1.25)])
    mats = eos.MaterialState([eos.GasEos(1.4), eos.GasEos(1.6)], alpha,
                             alpha * rho * V[None, :], rho, eps, cax, cpl)
    state = lag.state_from_materials(mesh, mats, np.zeros((nc, 2)))
    partitions = {int(c): mof.reconstruct_cell(mesh, mats, int(c))
                  for c in mats.mixed_cells()}
    return mesh, state, mats, partitions


def test_multimaterial_identity_noop():
    mesh, state, mats, parts = _two_material_box()
    new_state, new_mats, diag = remap.hybrid_remap(mesh, state, mats.copy(),
                                                   parts, mesh.nodes.copy())
    np.testing.assert_allclose(new_state.rho, state.rho, rtol=1e-11)
    np.testing.assert_allclose(new_mats.alpha, mats.alpha, atol=1e-11)
    np.testing.assert_allclose(new_mats.rho[mats.present()],
                               mats.rho[mats.present()], rtol=1e-10)
    assert abs(diag["d_mass"]) < 1e-12 * diag["mass"]


def test_multimaterial_conservation_under_rezone():
    mesh, state, mats, parts = _two_material_box()
    X_new = _interior_wiggle(mesh, 0.25, seed=7)
    new_state, new_mats, diag = remap.hybrid_remap(mesh, state, mats.copy(),
                                                   parts, X_new)
    assert abs(diag["d_mass"]) < 1e-11 * diag["mass"]
    assert abs(diag["d_energy"]) < 1e-11 * abs(diag["energy"])
    assert np.all(np.abs(diag["d_momentum"]) < 1e-11 * diag["mass"])
    # Volume fractions still partition each intersection cell.
    cls = remap.classify(mesh, mats)
    sums = new_mats.alpha.sum(axis=0)
    assert np.max(np.abs(sums[cls.intersection_cells] - 1.0)) < 1e-10
    # Constant per-material densities are preserved exactly.
    pres = new_mats.present()
    np.testing.assert_allclose(new_mats.rho[0][pres[0]], 1.0, rtol=1e-10)
    np.testing.assert_allclose(new_mats.rho[1][pres[1]], 2.0, rtol=1e-10)
