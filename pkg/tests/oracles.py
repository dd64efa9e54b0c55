"""Independent reference computations used by the test suite.

Everything here deliberately avoids the library's own Green's-formula code
paths: integrals are done by refined midpoint quadrature on a vertex fan
(with Richardson extrapolation), and the 1D Lagrangian reference scheme is
written directly from the acoustic-solver update formulas.
"""

from __future__ import annotations

import numpy as np


def _midpoint_on_triangle(f, A, B, C, n):
    """Composite midpoint rule with n^2 congruent sub-triangles."""
    area = 0.5 * ((B[0] - A[0]) * (C[1] - A[1]) - (B[1] - A[1]) * (C[0] - A[0]))
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    up = (i + j) <= n - 1
    iu, ju = i[up], j[up]
    u_up = (3 * iu + 1) / (3.0 * n)
    v_up = (3 * ju + 1) / (3.0 * n)
    down = (i + j) <= n - 2
    idn, jdn = i[down], j[down]
    u_dn = (3 * idn + 2) / (3.0 * n)
    v_dn = (3 * jdn + 2) / (3.0 * n)
    u = np.concatenate([u_up, u_dn])
    v = np.concatenate([v_up, v_dn])
    x = A[0] + u * (B[0] - A[0]) + v * (C[0] - A[0])
    y = A[1] + u * (B[1] - A[1]) + v * (C[1] - A[1])
    return area / n**2 * np.sum(f(x, y))


def quad_integrate(poly, f, levels=6):
    """Reference integral of f over a simple polygon.

    Signed vertex-0 fan triangulation (valid for any simple polygon) with
    midpoint quadrature refined over `levels` dyadic levels and Richardson
    extrapolation in h^2.  Exact to round-off for low-degree polynomials.
    """
    poly = np.asarray(poly, dtype=float)
    vals = []
    for lev in range(levels):
        n = 2**lev
        total = 0.0
        for k in range(1, len(poly) - 1):
            total += _midpoint_on_triangle(f, poly[0], poly[k], poly[k + 1], n)
        vals.append(total)
    # Richardson in powers of 4 (midpoint error expansion is in h^2).
    table = [vals]
    for m in range(1, levels):
        prev = table[-1]
        fac = 4.0**m
        table.append([(fac * prev[k + 1] - prev[k]) / (fac - 1.0)
                      for k in range(len(prev) - 1)])
    return table[-1][0]


def random_star_polygon(rng, n_min=4, n_max=9, center=(0.0, 0.0), scale=1.0):
    """Random simple polygon, star-shaped about its center."""
    n = int(rng.integers(n_min, n_max + 1))
    ang = np.sort(rng.uniform(0.0, 2.0 * np.pi, n))
    # Keep angular gaps away from zero so edges are well separated.
    while np.min(np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))) < 0.05:
        ang = np.sort(rng.uniform(0.0, 2.0 * np.pi, n))
    rad = rng.uniform(0.35, 1.0, n) * scale
    return np.column_stack([center[0] + rad * np.cos(ang),
                            center[1] + rad * np.sin(ang)])


class Lagrangian1D:
    """Reference 1D cell-centered Lagrangian scheme (planar geometry).

    Node velocities come from the two-state acoustic solver,
        u* = (Z_l u_l + Z_r u_r + P_l - P_r) / (Z_l + Z_r),
    the face pressure seen by the left cell is P_l - Z_l (u* - u_l), and the
    conservative updates use the star values directly.  Wall ends impose
    u* = 0 with the reflected-state pressure.
    """

    def __init__(self, x_nodes, rho, p, u, gamma):
        self.x = np.asarray(x_nodes, dtype=float).copy()
        self.rho = np.asarray(rho, dtype=float).copy()
        self.u = np.asarray(u, dtype=float).copy()
        self.gamma = gamma
        vol = np.diff(self.x)
        self.m = self.rho * vol
        eps = p / ((gamma - 1.0) * self.rho)
        self.E = eps + 0.5 * self.u**2
        self.p = p.copy()

    def sound_speed(self):
        return np.sqrt(self.gamma * self.p / self.rho)

    def step(self, dt):
        a = self.sound_speed()
        Z = self.rho * a
        # Interior nodes.
        zl, zr = Z[:-1], Z[1:]
        ustar = np.empty_like(self.x)
        ustar[1:-1] = (zl * self.u[:-1] + zr * self.u[1:]
                       + self.p[:-1] - self.p[1:]) / (zl + zr)
        ustar[0] = 0.0
        ustar[-1] = 0.0
        pstar = np.empty_like(self.x)
        pstar[1:-1] = self.p[:-1] - Z[:-1] * (ustar[1:-1] - self.u[:-1])
        pstar[0] = self.p[0] - Z[0] * (ustar[0] - self.u[0]) * (-1.0)
        # Wall at the left: flux pressure as seen from the cell.
        pstar[0] = self.p[0] + Z[0] * self.u[0]
        pstar[-1] = self.p[-1] - Z[-1] * (ustar[-1] - self.u[-1])
        self.u = self.u - dt / self.m * (pstar[1:] - pstar[:-1])
        self.E = self.E - dt / self.m * (pstar[1:] * ustar[1:]
                                         - pstar[:-1] * ustar[:-1])
        self.x = self.x + dt * ustar
        vol = np.diff(self.x)
        self.rho = self.m / vol
        eps = self.E - 0.5 * self.u**2
        self.p = (self.gamma - 1.0) * self.rho * eps
