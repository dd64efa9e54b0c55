"""Three-material single-cell reconstruction benchmarks.

The unit cell [0,1]^2 is partitioned by interfaces lying on circles of
radius chi: a filament (two nested arcs, no junction), a T-junction and a
Y-junction.  Large chi reduces the curves to piecewise straight interfaces
(we build the straight limit directly for chi >= 32, where the arc sagitta
would be far below the reconstruction tolerance anyway); chi = 1 gives the
strongly curved variants.  The exact parameterization used here is recorded
by this module since only the partition topology is standardized.
"""

from __future__ import annotations

import numpy as np

CELL = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
_STRAIGHT_LIMIT = 32.0
_N_ARC = 400


def _upper_arc(chi, x_apex, y_apex, xs):
    """y(x) of the circle through (x_apex, y_apex) with apex there,
    center chi below the apex."""
    cy = y_apex - chi
    return cy + np.sqrt(chi**2 - (xs - x_apex) ** 2)


def filament(chi: float):
    """Bottom material, curved strip, top material (no junction)."""
    h1, h2 = 0.4, 0.6
    if chi >= _STRAIGHT_LIMIT:
        bottom = np.array([[0, 0], [1, 0], [1, h1], [0, h1]], dtype=float)
        strip = np.array([[0, h1], [1, h1], [1, h2], [0, h2]], dtype=float)
        top = np.array([[0, h2], [1, h2], [1, 1], [0, 1]], dtype=float)
        return [bottom, strip, top]
    xs = np.linspace(0.0, 1.0, _N_ARC)
    # Concentric arcs about (0.5, h1 - chi) through (0.5, h1) and (0.5, h2).
    y1 = _upper_arc(chi, 0.5, h1, xs)
    y2 = (h1 - chi) + np.sqrt((chi + (h2 - h1)) ** 2 - (xs - 0.5) ** 2)
    bottom = np.vstack([[[0, 0], [1, 0]],
                        np.column_stack([xs, y1])[::-1]])
    strip = np.vstack([np.column_stack([xs, y1]),
                       np.column_stack([xs, y2])[::-1]])
    top = np.vstack([np.column_stack([xs, y2]), [[1, 1], [0, 1]]])
    return [bottom, strip, top]


def t_junction(chi: float):
    """Bottom material, top split left/right; junction at (0.5, 0.5)."""
    if chi >= _STRAIGHT_LIMIT:
        bottom = np.array([[0, 0], [1, 0], [1, 0.5], [0, 0.5]], dtype=float)
        left = np.array([[0, 0.5], [0.5, 0.5], [0.5, 1], [0, 1]], dtype=float)
        right = np.array([[0.5, 0.5], [1, 0.5], [1, 1], [0.5, 1]], dtype=float)
        return [bottom, left, right]
    xs = np.linspace(0.0, 1.0, _N_ARC)
    yh = _upper_arc(chi, 0.5, 0.5, xs)
    ys = np.linspace(0.5, 1.0, _N_ARC // 2)
    xv = (0.5 - chi) + np.sqrt(chi**2 - (ys - 0.5) ** 2)
    bottom = np.vstack([[[0, 0], [1, 0]],
                        np.column_stack([xs, yh])[::-1]])
    mid = _N_ARC // 2
    left = np.vstack([np.column_stack([xs[: mid + 1], yh[: mid + 1]]),
                      np.column_stack([xv, ys])[1:],
                      [[0.0, 1.0]]])
    right = np.vstack([np.column_stack([xv, ys])[::-1],
                       np.column_stack([xs[mid:], yh[mid:]])[1:],
                       [[1.0, 1.0]]])
    return [bottom, left, right]


def _perimeter(p):
    """Perimeter coordinate of a point on the unit-square boundary, CCW
    from (0, 0)."""
    x, y = p
    if abs(y) < 1e-12:
        return x
    if abs(x - 1.0) < 1e-12:
        return 1.0 + y
    if abs(y - 1.0) < 1e-12:
        return 3.0 - x
    return 4.0 - y


def _walk_corners(s_from, s_to):
    """Unit-square corners strictly between two perimeter coordinates CCW."""
    corners = [(1.0, np.array([1.0, 0.0])), (2.0, np.array([1.0, 1.0])),
               (3.0, np.array([0.0, 1.0])), (4.0, np.array([0.0, 0.0]))]
    if s_to <= s_from:
        s_to += 4.0
    out = []
    for lap in (0.0, 4.0):
        for s, p in corners:
            if s_from < s + lap < s_to:
                out.append(p)
    return out


def y_junction(chi: float):
    """Three sectors meeting at (0.5, 0.5); branch tangents at 90/210/330
    degrees.  For finite chi every branch follows a circle of radius chi
    whose center sits 90 degrees to the left of the branch direction."""
    c0 = np.array([0.5, 0.5])
    phis = np.deg2rad([90.0, 210.0, 330.0])
    branches = []
    for phi in phis:
        if chi >= _STRAIGHT_LIMIT:
            direction = np.array([np.cos(phi), np.sin(phi)])
            # straight ray: intersect with square sides
            ts = []
            if direction[0] > 1e-12:
                ts.append((1.0 - c0[0]) / direction[0])
            if direction[0] < -1e-12:
                ts.append((0.0 - c0[0]) / direction[0])
            if direction[1] > 1e-12:
                ts.append((1.0 - c0[1]) / direction[1])
            if direction[1] < -1e-12:
                ts.append((0.0 - c0[1]) / direction[1])
            t = min(t for t in ts if t > 0)
            pts = np.vstack([c0, c0 + t * direction])
        else:
            n_i = np.array([np.cos(phi + np.pi / 2), np.sin(phi + np.pi / 2)])
            ci = c0 + chi * n_i
            psi0 = np.arctan2(c0[1] - ci[1], c0[0] - ci[0])
            ts = np.linspace(0.0, 2.0, 600)
            pts_all = np.column_stack([ci[0] + chi * np.cos(psi0 + ts),
                                       ci[1] + chi * np.sin(psi0 + ts)])
            inside = ((pts_all[:, 0] >= 0) & (pts_all[:, 0] <= 1)
                      & (pts_all[:, 1] >= 0) & (pts_all[:, 1] <= 1))
            last = int(np.argmin(inside)) if not inside.all() else len(ts)
            pts = pts_all[:max(last, 2)]
            # Trim the final point onto the boundary by bisection.
            if last < len(ts):
                t_in, t_out = ts[last - 1], ts[last]
                for _ in range(60):
                    tm = 0.5 * (t_in + t_out)
                    pm = ci + chi * np.array([np.cos(psi0 + tm), np.sin(psi0 + tm)])
                    if 0 <= pm[0] <= 1 and 0 <= pm[1] <= 1:
                        t_in = tm
                    else:
                        t_out = tm
                pend = ci + chi * np.array([np.cos(psi0 + t_in), np.sin(psi0 + t_in)])
                pts = np.vstack([pts, np.clip(pend, 0.0, 1.0)])
        branches.append(pts)
    regions = []
    for i in range(3):
        bi = branches[i]
        bj = branches[(i + 1) % 3]
        s_i = _perimeter(bi[-1])
        s_j = _perimeter(bj[-1])
        poly = [*bi, *_walk_corners(s_i, s_j), *bj[::-1][: len(bj) - 1]]
        regions.append(np.array(poly))
    return regions


def static_cases(chi: float) -> dict:
    """name -> list of true material polygons for the benchmark cell."""
    return {"filament": filament(chi),
            "t_junction": t_junction(chi),
            "y_junction": y_junction(chi)}
