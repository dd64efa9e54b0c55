"""Polygon computational geometry: exact moments, clipping, intersection.

All polygons are (n, 2) float arrays with counterclockwise vertex order.
Moments are evaluated exactly with per-edge closed forms (Green's formula),
so every surface integral of a polynomial integrand reduces to sums over
edges.  The pseudo-radius weight R(y) = 1 - alpha + alpha*y (alpha in {0,1})
turns planar integrals into the axisymmetric measure used by the solver;
with alpha = 0 every R-weighted quantity collapses to its planar value.
"""

from __future__ import annotations

from math import comb

import numpy as np

_EPS = 1.0e-14


def polygon_scale(pts: np.ndarray) -> float:
    """Characteristic length used to set geometric tolerances."""
    if len(pts) == 0:
        return 1.0
    ext = np.ptp(pts, axis=0)
    return float(max(ext[0], ext[1], 1.0e-300))


def signed_area(pts: np.ndarray) -> float:
    """Shoelace signed area; positive for counterclockwise order."""
    x = pts[:, 0]
    y = pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def edge_cross(pts: np.ndarray) -> np.ndarray:
    """Per-edge cross terms x_i*y_{i+1} - x_{i+1}*y_i of the shoelace sum."""
    x1 = pts[:, 0]
    y1 = pts[:, 1]
    x2 = np.roll(x1, -1)
    y2 = np.roll(y1, -1)
    return x1 * y2 - x2 * y1


def poly_monomials(pts: np.ndarray) -> dict:
    """Closed-form monomial moments m_ab = int x^a y^b dA up to degree 2.

    Returns the signed values for keys (0,0), (1,0), (0,1), (2,0), (1,1),
    (0,2).  These are the hot-path moments; higher degrees go through
    monomial_moment().
    """
    if len(pts) < 3:
        z = 0.0
        return {(0, 0): z, (1, 0): z, (0, 1): z, (2, 0): z, (1, 1): z, (0, 2): z}
    x1 = pts[:, 0]
    y1 = pts[:, 1]
    x2 = np.roll(x1, -1)
    y2 = np.roll(y1, -1)
    cr = x1 * y2 - x2 * y1
    m00 = np.sum(cr) / 2.0
    m10 = np.sum(cr * (x1 + x2)) / 6.0
    m01 = np.sum(cr * (y1 + y2)) / 6.0
    m20 = np.sum(cr * (x1 * x1 + x1 * x2 + x2 * x2)) / 12.0
    m02 = np.sum(cr * (y1 * y1 + y1 * y2 + y2 * y2)) / 12.0
    m11 = np.sum(cr * (2.0 * x1 * y1 + x1 * y2 + x2 * y1 + 2.0 * x2 * y2)) / 24.0
    return {(0, 0): float(m00), (1, 0): float(m10), (0, 1): float(m01),
            (2, 0): float(m20), (1, 1): float(m11), (0, 2): float(m02)}


def monomial_moment(pts: np.ndarray, a: int, b: int) -> float:
    """Exact int_polygon x^a y^b dA by per-edge line integrals.

    Green's formula with the potential x^{a+1} y^b / (a+1) gives, on each
    edge parameterized as (x1 + t dx, y1 + t dy), t in [0, 1]:

        dy/(a+1) * sum_ij C(a+1,i) C(b,j) x1^{a+1-i} dx^i y1^{b-j} dy^j / (i+j+1)
    """
    if a < 0 or b < 0:
        raise ValueError("monomial exponents must be non-negative")
    if len(pts) < 3:
        return 0.0
    x1 = pts[:, 0]
    y1 = pts[:, 1]
    x2 = np.roll(x1, -1)
    y2 = np.roll(y1, -1)
    dx = x2 - x1
    dy = y2 - y1
    total = np.zeros_like(x1)
    for i in range(a + 2):
        ci = comb(a + 1, i) * x1 ** (a + 1 - i) * dx ** i
        for j in range(b + 1):
            cj = comb(b, j) * y1 ** (b - j) * dy ** j
            total += ci * cj / (i + j + 1)
    return float(np.sum(total * dy) / (a + 1))


def poly_measures(pts: np.ndarray, alpha: int):
    """Planar area, R-weighted volume and both first moments of a polygon.

    Returns (A, V, M1pl, M1ax) where M1pl = int X dA and M1ax = int R X dA
    (2-vectors).  Centroids are M1pl/A and M1ax/V.
    """
    m = poly_monomials(pts)
    A = m[(0, 0)]
    if alpha == 0:
        M1 = np.array([m[(1, 0)], m[(0, 1)]])
        return A, A, M1.copy(), M1
    V = m[(0, 1)]
    M1pl = np.array([m[(1, 0)], m[(0, 1)]])
    M1ax = np.array([m[(1, 1)], m[(0, 2)]])
    return A, V, M1pl, M1ax


def clip_halfplane(pts: np.ndarray, normal: np.ndarray, d: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a polygon by the half-plane n.x <= d."""
    n = len(pts)
    if n == 0:
        return pts
    s = pts @ np.asarray(normal, dtype=float) - d
    if np.all(s <= 0.0):
        return pts
    if np.all(s >= 0.0):
        # Touching vertices with s == 0 carry no area.
        return np.empty((0, 2))
    out = []
    for i in range(n):
        j = (i + 1) % n
        si, sj = s[i], s[j]
        if si <= 0.0:
            out.append(pts[i])
        if (si < 0.0 and sj > 0.0) or (si > 0.0 and sj < 0.0):
            t = si / (si - sj)
            out.append(pts[i] + t * (pts[j] - pts[i]))
    if len(out) < 3:
        return np.empty((0, 2))
    res = np.asarray(out)
    # Drop consecutive duplicates produced by vertices lying on the line.
    keep = np.ones(len(res), dtype=bool)
    for i in range(len(res)):
        j = (i + 1) % len(res)
        if np.all(np.abs(res[j] - res[i]) < _EPS * polygon_scale(res)):
            keep[j] = False
    res = res[keep]
    return res if len(res) >= 3 else np.empty((0, 2))


def convex_clip(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Clip a polygon against a convex CCW polygon (repeated half-planes)."""
    res = subject
    m = len(clip)
    for i in range(m):
        if len(res) < 3:
            return np.empty((0, 2))
        a = clip[i]
        b = clip[(i + 1) % m]
        e = b - a
        nrm = np.array([e[1], -e[0]])  # outward normal of a CCW edge
        res = clip_halfplane(res, nrm, float(nrm @ a))
    return res


def _ear_clip(pts: np.ndarray) -> list:
    """Triangulate a simple CCW polygon by ear clipping."""
    idx = list(range(len(pts)))
    tris = []
    guard = 0
    scale2 = polygon_scale(pts) ** 2
    while len(idx) > 3 and guard < 4 * len(pts) ** 2:
        guard += 1
        n = len(idx)
        clipped = False
        for k in range(n):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % n]
            a, b, c = pts[i0], pts[i1], pts[i2]
            cr = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if cr <= _EPS * scale2:
                continue
            ok = True
            for m in idx:
                if m in (i0, i1, i2):
                    continue
                if _point_in_triangle(pts[m], a, b, c):
                    ok = False
                    break
            if ok:
                tris.append(np.array([a, b, c]))
                idx.pop(k)
                clipped = True
                break
        if not clipped:
            break
    if len(idx) == 3:
        tris.append(pts[idx])
    return tris


def _point_in_triangle(p, a, b, c) -> bool:
    d1 = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    d2 = (c[0] - b[0]) * (p[1] - b[1]) - (c[1] - b[1]) * (p[0] - b[0])
    d3 = (a[0] - c[0]) * (p[1] - c[1]) - (a[1] - c[1]) * (p[0] - c[0])
    return d1 >= 0.0 and d2 >= 0.0 and d3 >= 0.0


def triangulate(pts: np.ndarray) -> list:
    """Decompose a simple CCW polygon into positively oriented triangles.

    A centroid fan is used when the polygon is star-shaped about its vertex
    mean (always true for convex cells); the ear-clipping fallback covers
    non-convex cells produced by strong Lagrangian shear.
    """
    n = len(pts)
    if n < 3:
        return []
    if n == 3:
        return [pts]
    c = pts.mean(axis=0)
    scale2 = polygon_scale(pts) ** 2
    fan = []
    ok = True
    for i in range(n):
        a = pts[i]
        b = pts[(i + 1) % n]
        cr = (a[0] - c[0]) * (b[1] - c[1]) - (a[1] - c[1]) * (b[0] - c[0])
        if cr <= _EPS * scale2:
            ok = False
            break
        fan.append(np.array([c, a, b]))
    if ok:
        return fan
    return _ear_clip(pts)


def intersect_pieces(P: np.ndarray, Q: np.ndarray) -> list:
    """Intersection of two simple polygons as a list of convex CCW pieces.

    Both inputs are triangulated and the triangle pairs clipped against each
    other; areas and moments of the intersection are additive over the
    returned pieces.
    """
    if len(P) < 3 or len(Q) < 3:
        return []
    # Quick reject on bounding boxes.
    if (P[:, 0].min() > Q[:, 0].max() or Q[:, 0].min() > P[:, 0].max()
            or P[:, 1].min() > Q[:, 1].max() or Q[:, 1].min() > P[:, 1].max()):
        return []
    scale2 = max(polygon_scale(P), polygon_scale(Q)) ** 2
    pieces = []
    tris_a = triangulate(P)
    tris_b = triangulate(Q)
    boxes_a = [(t[:, 0].min(), t[:, 0].max(), t[:, 1].min(), t[:, 1].max())
               for t in tris_a]
    boxes_b = [(t[:, 0].min(), t[:, 0].max(), t[:, 1].min(), t[:, 1].max())
               for t in tris_b]
    for ta, ba in zip(tris_a, boxes_a):
        for tb, bb in zip(tris_b, boxes_b):
            if ba[0] > bb[1] or bb[0] > ba[1] or ba[2] > bb[3] or bb[2] > ba[3]:
                continue
            c = convex_clip(ta, tb)
            if len(c) >= 3 and signed_area(c) > 1.0e-16 * scale2:
                pieces.append(c)
    return pieces


def quad_batch_monomials(quads: np.ndarray) -> dict:
    """Signed monomial moments for a batch of quadrilaterals.

    quads has shape (n, 4, 2); returns arrays for the keys of
    poly_monomials().  Used for the face-swept regions of the remap where
    every region is a 4-gon.
    """
    x1 = quads[:, :, 0]
    y1 = quads[:, :, 1]
    x2 = np.roll(x1, -1, axis=1)
    y2 = np.roll(y1, -1, axis=1)
    cr = x1 * y2 - x2 * y1
    m00 = cr.sum(axis=1) / 2.0
    m10 = (cr * (x1 + x2)).sum(axis=1) / 6.0
    m01 = (cr * (y1 + y2)).sum(axis=1) / 6.0
    m02 = (cr * (y1 * y1 + y1 * y2 + y2 * y2)).sum(axis=1) / 12.0
    m11 = (cr * (2 * x1 * y1 + x1 * y2 + x2 * y1 + 2 * x2 * y2)).sum(axis=1) / 24.0
    return {(0, 0): m00, (1, 0): m10, (0, 1): m01, (1, 1): m11, (0, 2): m02}


def segments_intersect(p0, p1, q0, q1) -> bool:
    """Proper intersection test for two open segments."""
    d1 = _orient(q0, q1, p0)
    d2 = _orient(q0, q1, p1)
    d3 = _orient(p0, p1, q0)
    d4 = _orient(p0, p1, q1)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def quad_is_simple(quad: np.ndarray) -> bool:
    """True when the 4-gon has no crossing between its opposite edges."""
    return not (segments_intersect(quad[0], quad[1], quad[2], quad[3])
                or segments_intersect(quad[1], quad[2], quad[3], quad[0]))


def polygon_is_simple(pts: np.ndarray) -> bool:
    """True when no two non-adjacent edges cross (O(n^2); n is small)."""
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]):
                return False
    return True


def circle_polygon(center, radius, n=512) -> np.ndarray:
    """Regular n-gon approximation of a disc (CCW)."""
    ang = 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([center[0] + radius * np.cos(ang),
                            center[1] + radius * np.sin(ang)])


def mean_value_map(x: np.ndarray, old_pts: np.ndarray, new_pts: np.ndarray):
    """Map an interior point through a polygon deformation.

    The point is expressed in mean-value coordinates of the old polygon and
    re-evaluated with the new vertex positions.  Mean-value coordinates have
    linear precision, so affine motions (translation, rotation, scaling) map
    the point exactly.  Returns None when the coordinates degenerate (point
    on the boundary or polygon folded); callers fall back to the cell
    centroid in that case.
    """
    d = old_pts - x
    r = np.hypot(d[:, 0], d[:, 1])
    scale = polygon_scale(old_pts)
    if np.any(r < 1.0e-13 * scale):
        k = int(np.argmin(r))
        return new_pts[k].copy()
    dn = np.roll(d, -1, axis=0)
    rn = np.roll(r, -1)
    cross = d[:, 0] * dn[:, 1] - d[:, 1] * dn[:, 0]
    dot = d[:, 0] * dn[:, 0] + d[:, 1] * dn[:, 1]
    den = r * rn + dot
    if np.any(den <= 1.0e-14 * scale * scale):
        return None
    tan_half = cross / den
    w = (tan_half + np.roll(tan_half, 1)) / r
    ws = w.sum()
    if not np.isfinite(ws) or abs(ws) < 1.0e-300:
        return None
    w = w / ws
    return w @ new_pts
