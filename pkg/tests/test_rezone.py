import numpy as np
import pytest

from polyale import mesh as msh, rezone as rz


def test_map_round_trip():
    rng = np.random.default_rng(4)
    pts = rng.uniform(0.1, 2.0, (50, 2))
    np.testing.assert_allclose(rz.map_to_polar(pts, 0), pts)
    mapped = rz.map_to_polar(pts, 1)
    back = rz.map_back(mapped, 1)
    np.testing.assert_allclose(back, pts, atol=1e-14)
    np.testing.assert_allclose(rz.map_to_polar(np.array([1.0, 1.0]), 1),
                               [np.sqrt(2.0), np.pi / 4])
    np.testing.assert_allclose(rz.map_to_polar(np.array([3.0, 4.0]), 0),
                               [3.0, 4.0])


def test_corner_condition_bounds():
    # kappa = 2 exactly for an orthogonal equal-length corner, > 2 for any
    # other unfolded corner ({prev, node, next} counterclockwise).
    assert rz.corner_condition([0, 0], [0, -1], [1, 0]) == pytest.approx(2.0)
    rng = np.random.default_rng(9)
    for _ in range(50):
        x = rng.uniform(-1, 1, 2)
        phi = rng.uniform(0, 2 * np.pi)
        psi = rng.uniform(0.1, np.pi - 0.1)
        s = x + rng.uniform(0.2, 1.0) * np.array([np.cos(phi), np.sin(phi)])
        q = x + rng.uniform(0.2, 1.0) * np.array([np.cos(phi - psi),
                                                  np.sin(phi - psi)])
        assert rz.corner_condition(x, q, s) >= 2.0 - 1e-12


def test_kappa_gradient_hessian_match_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(20):
        x = rng.uniform(0.4, 0.6, 2)
        q = rng.uniform(0.8, 1.2, 2)
        s = rng.uniform(-0.2, 0.2, 2)
        av, bv = x - q, x - s
        if av[0] * bv[1] - av[1] * bv[0] < 0.1:
            continue
        xc = x[None, :]
        _, _, kx, ky, hxx, hxy, hyy = rz._kappa_terms(xc, q[None, :], s[None, :])
        h = 1e-6

        def kap(p):
            return rz.corner_condition(p, q, s)

        gx_fd = (kap(x + [h, 0]) - kap(x - [h, 0])) / (2 * h)
        gy_fd = (kap(x + [0, h]) - kap(x - [0, h])) / (2 * h)
        assert kx[0] == pytest.approx(gx_fd, rel=1e-5, abs=1e-7)
        assert ky[0] == pytest.approx(gy_fd, rel=1e-5, abs=1e-7)
        hxx_fd = (kap(x + [h, 0]) - 2 * kap(x) + kap(x - [h, 0])) / h**2
        hyy_fd = (kap(x + [0, h]) - 2 * kap(x) + kap(x - [0, h])) / h**2
        assert hxx[0] == pytest.approx(hxx_fd, rel=1e-3, abs=1e-5)
        assert hyy[0] == pytest.approx(hyy_fd, rel=1e-3, abs=1e-5)


def test_uniform_cartesian_grid_is_cns_fixed_point():
    mesh = msh.cartesian_box(6, 6)
    X = rz.rezone(mesh, rz.RezoneConfig(sweeps=20))
    assert np.max(np.abs(X - mesh.nodes)) < 1e-10


def test_perturbed_cartesian_node_moves_back():
    mesh = msh.cartesian_box(4, 4)
    X0 = mesh.nodes.copy()
    center = 12  # interior node of the 5x5 lattice
    assert center not in set(mesh.boundary_nodes)
    X0[center] += np.array([0.04, -0.03])
    work = mesh.with_positions(X0)
    F_before, _ = rz._node_F(work, X0, center)
    X1 = rz.rezone(work, rz.RezoneConfig(sweeps=1, boundary_smoothing=False),
                   X_start=X0)
    work1 = mesh.with_positions(X1)
    F_after, _ = rz._node_F(work1, X1, center)
    assert F_after < F_before
    assert (np.linalg.norm(X1[center] - mesh.nodes[center])
            < np.linalg.norm(X0[center] - mesh.nodes[center]))


def test_uniform_polar_grid_mapped_smoothing_fixed_point():
    mesh = msh.polar_sector(16, 10, 1.0)
    X = rz.rezone(mesh, rz.RezoneConfig(sweeps=100))
    assert np.max(np.abs(X - mesh.nodes)) < 1e-10


def test_cartesian_smoothing_collapses_polar_grid():
    mesh = msh.polar_sector(16, 10, 1.0)
    plain = msh.Mesh(mesh.nodes, [c for c in mesh.cells], alpha=1,
                     region=np.zeros(mesh.n_nodes, dtype=np.uint8),
                     fixed=mesh.fixed.copy())
    ring1 = [1 + j for j in range(17)]  # first ring of nodes
    X = plain.nodes.copy()
    radii = [np.hypot(X[ring1, 0], X[ring1, 1]).mean()]
    for _ in range(10):
        X = rz.rezone(plain.with_positions(X),
                      rz.RezoneConfig(sweeps=1, boundary_smoothing=False),
                      X_start=X)
        radii.append(np.hypot(X[ring1, 0], X[ring1, 1]).mean())
    for k in range(len(radii) - 1):
        assert radii[k + 1] < radii[k]  # documented collapse toward origin


def test_mixed_grid_smoothing_stays_valid():
    mesh = msh.mixed_core_disc(4, 5, 0.3, 1.2, interfacial_region="cartesian")
    X = rz.rezone(mesh, rz.RezoneConfig(sweeps=100))
    invalid, _ = msh.validate(mesh.with_positions(X))
    assert invalid == []
    cross = mesh.with_positions(X).corner_cross()
    assert np.min(cross) > 0.0


def test_boundary_bezier_straight_line_equalizes():
    mesh = msh.cartesian_box(4, 2, (0, 4, 0, 2))
    X0 = mesh.nodes.copy()
    # Perturb one bottom-boundary node along the wall.
    p = 2  # node at (2, 0)
    X0[p, 0] = 2.35
    work = mesh.with_positions(X0)
    newpos = rz.smooth_boundary_node(work, X0, p)
    assert abs(newpos[1]) < 1e-12          # stays on the wall line
    assert abs(newpos[0] - 2.35) > 1e-3    # slides back toward uniform
    assert abs(newpos[0] - 2.0) < 0.35
    # Unperturbed boundary node stays put.
    straight = rz.smooth_boundary_node(mesh, mesh.nodes, 2)
    np.testing.assert_allclose(straight, mesh.nodes[2], atol=1e-9)


def test_relax_endpoints_and_adaptive_rigid_motion():
    mesh = msh.cartesian_box(3, 3)
    X_lag = mesh.nodes + 0.01
    X_rez = mesh.nodes - 0.02
    np.testing.assert_array_equal(rz.relax(X_lag, X_rez, 0.0), X_lag)
    np.testing.assert_array_equal(rz.relax(X_lag, X_rez, 1.0), X_rez)
    with pytest.raises(ValueError):
        rz.relax(X_lag, X_rez, 1.5)
    # Rigid motion (translation + rotation): adaptive omega is zero.
    ang = 0.3
    R = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    X_rigid = mesh.nodes @ R.T + np.array([0.5, -0.2])
    omega = rz.adaptive_omega(mesh, mesh.nodes, X_rigid, mu=1.0)
    assert np.max(omega) < 1e-10
    # Shear switches it on.
    X_shear = mesh.nodes.copy()
    X_shear[:, 0] += 0.5 * mesh.nodes[:, 1]
    omega = rz.adaptive_omega(mesh, mesh.nodes, X_shear, mu=1.0)
    assert np.max(omega) > 0.1
