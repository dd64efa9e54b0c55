import numpy as np
import pytest

from polyale import geometry as geo
from oracles import quad_integrate, random_star_polygon

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def test_monomial_moment_unit_square():
    assert geo.monomial_moment(UNIT_SQUARE, 0, 0) == pytest.approx(1.0, abs=1e-14)
    assert geo.monomial_moment(UNIT_SQUARE, 1, 0) == pytest.approx(0.5, abs=1e-14)
    assert geo.monomial_moment(UNIT_SQUARE, 2, 1) == pytest.approx(1.0 / 6.0, abs=1e-14)


def test_poly_monomials_match_general_path():
    rng = np.random.default_rng(7)
    for _ in range(25):
        poly = random_star_polygon(rng)
        m = geo.poly_monomials(poly)
        for (a, b), val in m.items():
            assert val == pytest.approx(geo.monomial_moment(poly, a, b),
                                        rel=1e-12, abs=1e-14)


def test_moments_match_quadrature_oracle():
    rng = np.random.default_rng(11)
    for _ in range(30):
        poly = random_star_polygon(rng, center=(0.3, 0.8))
        for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1), (0, 2), (2, 1), (0, 3)]:
            ref = quad_integrate(poly, lambda x, y: x**a * y**b)
            got = geo.monomial_moment(poly, a, b)
            assert got == pytest.approx(ref, rel=1e-10, abs=1e-12)


def test_poly_measures_unit_square():
    A, V, M1pl, M1ax = geo.poly_measures(UNIT_SQUARE, alpha=1)
    assert A == pytest.approx(1.0)
    assert V == pytest.approx(0.5)
    assert M1ax[0] / V == pytest.approx(0.5)
    assert M1ax[1] / V == pytest.approx(2.0 / 3.0)
    A0, V0, M1pl0, M1ax0 = geo.poly_measures(UNIT_SQUARE, alpha=0)
    assert V0 == pytest.approx(A0)
    np.testing.assert_allclose(M1ax0, M1pl0)


def test_clip_halfplane_basic():
    lower = geo.clip_halfplane(UNIT_SQUARE, np.array([0.0, 1.0]), 0.5)
    assert geo.signed_area(lower) == pytest.approx(0.5, abs=1e-14)
    m = geo.poly_monomials(lower)
    assert m[(0, 1)] == pytest.approx(0.125, abs=1e-14)  # axisymmetric measure
    empty = geo.clip_halfplane(UNIT_SQUARE, np.array([0.0, 1.0]), -0.2)
    assert len(empty) == 0
    full = geo.clip_halfplane(UNIT_SQUARE, np.array([0.0, 1.0]), 2.0)
    assert geo.signed_area(full) == pytest.approx(1.0)


def test_clip_complement_additivity():
    rng = np.random.default_rng(3)
    for _ in range(20):
        poly = random_star_polygon(rng)
        th = rng.uniform(0.0, 2 * np.pi)
        nrm = np.array([np.cos(th), np.sin(th)])
        d = float(nrm @ poly[rng.integers(len(poly))]) + rng.uniform(-0.2, 0.2)
        below = geo.clip_halfplane(poly, nrm, d)
        above = geo.clip_halfplane(poly, -nrm, -d)
        a_below = geo.signed_area(below) if len(below) else 0.0
        a_above = geo.signed_area(above) if len(above) else 0.0
        assert a_below + a_above == pytest.approx(geo.signed_area(poly), rel=1e-12)


def test_clip_moments_match_quadrature():
    rng = np.random.default_rng(5)
    for _ in range(10):
        poly = random_star_polygon(rng, center=(0.0, 1.5))
        nrm = np.array([np.cos(0.9), np.sin(0.9)])
        sub = geo.clip_halfplane(poly, nrm, float(nrm @ poly.mean(axis=0)))
        if len(sub) < 3:
            continue
        for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1), (0, 2)]:
            ref = quad_integrate(sub, lambda x, y: x**a * y**b)
            assert geo.poly_monomials(sub)[(a, b)] == pytest.approx(ref, rel=1e-8, abs=1e-12)


def test_triangulate_partitions_area():
    lshape = np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], dtype=float)
    tris = geo.triangulate(lshape)
    assert sum(geo.signed_area(t) for t in tris) == pytest.approx(3.0, rel=1e-12)
    for t in tris:
        assert geo.signed_area(t) > 0


def test_intersect_pieces_squares():
    sq2 = UNIT_SQUARE + np.array([0.5, 0.0])
    same = geo.intersect_pieces(UNIT_SQUARE, UNIT_SQUARE)
    assert sum(geo.signed_area(p) for p in same) == pytest.approx(1.0, rel=1e-12)
    off = geo.intersect_pieces(UNIT_SQUARE, sq2)
    assert sum(geo.signed_area(p) for p in off) == pytest.approx(0.5, rel=1e-12)
    far = geo.intersect_pieces(UNIT_SQUARE, UNIT_SQUARE + 5.0)
    assert far == []


def test_intersect_nonconvex():
    lshape = np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], dtype=float)
    box = np.array([[0.5, 0.5], [1.5, 0.5], [1.5, 1.5], [0.5, 1.5]])
    pieces = geo.intersect_pieces(lshape, box)
    # L-shape covers the box minus its upper-right quadrant.
    assert sum(geo.signed_area(p) for p in pieces) == pytest.approx(0.75, rel=1e-10)


def test_quad_batch_matches_scalar():
    rng = np.random.default_rng(13)
    quads = []
    for _ in range(40):
        base = rng.uniform(0, 2, size=2)
        quads.append(base + np.array([[0, 0], [1, 0], [1, 1], [0, 1]])
                     + 0.2 * rng.uniform(-1, 1, size=(4, 2)))
    quads = np.array(quads)
    batch = geo.quad_batch_monomials(quads)
    for i in range(len(quads)):
        m = geo.poly_monomials(quads[i])
        for key in batch:
            assert batch[key][i] == pytest.approx(m[key], rel=1e-12, abs=1e-14)


def test_polygon_is_simple():
    bowtie = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float)
    assert not geo.polygon_is_simple(bowtie)
    assert geo.polygon_is_simple(UNIT_SQUARE)


def test_quad_is_simple():
    assert geo.quad_is_simple(UNIT_SQUARE)
    assert not geo.quad_is_simple(np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float))


def test_mean_value_map_affine():
    rng = np.random.default_rng(17)
    poly = random_star_polygon(rng, center=(0.2, 0.4))
    x = np.array([0.21, 0.38])
    # Identity
    np.testing.assert_allclose(geo.mean_value_map(x, poly, poly), x, atol=1e-12)
    # Translation
    t = np.array([3.0, -1.0])
    np.testing.assert_allclose(geo.mean_value_map(x, poly, poly + t), x + t, atol=1e-12)
    # Scaling about the origin
    np.testing.assert_allclose(geo.mean_value_map(x, poly, 2.5 * poly), 2.5 * x, atol=1e-12)
    # General affine map
    A = np.array([[1.3, 0.4], [-0.2, 0.8]])
    np.testing.assert_allclose(geo.mean_value_map(x, poly, poly @ A.T), A @ x, atol=1e-12)
