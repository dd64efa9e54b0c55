"""Test-problem setups, analytic references and derived diagnostics.

Four presets are provided: a spherical point blast with passive interfaces
(sedov), an axisymmetric three-state Riemann problem (triple_point), a
shock hitting a helium half-bubble (shock_bubble) and a pressure-driven
spherical implosion with a Legendre-perturbed interface (implosion).  All
use the perfect-gas law; parameters are exposed through CaseSpec.params so
a run can override any of them from its configuration.

The blast-wave reference is the self-similar solution integrated here from
the similarity ODEs (an independent oracle for the accuracy criteria); the
total energy 0.851072 for gamma = 7/5 places the spherical shock front at
radius 1 at time 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from . import geometry as geo, mesh as msh, remap
from .eos import GasEos, MaterialState
from .lagrange import BoundaryRule
from .mof import MomentSet

SEDOV_ENERGY = 0.851072
CIRCLE_SIDES = 720


@dataclass
class CaseSpec:
    name: str
    alpha: int
    mesh: msh.Mesh
    materials: MaterialState
    U0: np.ndarray
    rules: dict
    t_end: float
    params: dict = field(default_factory=dict)


# -- Sedov similarity solution ---------------------------------------------

def _similarity_rhs(s, y, gamma):
    v, g, h, _J = y
    c = v - s
    A = np.array([[c, 0.0, 1.0 / g],
                  [g, c, 0.0],
                  [0.0, -gamma * (h / g) * c, c]])
    b = np.array([1.5 * v, -2.0 * g * v / s, 3.0 * h])
    dv, dg, dh = np.linalg.solve(A, b)
    dJ = (0.5 * g * v * v + h / (gamma - 1.0)) * s * s
    return [dv, dg, dh, dJ]


@lru_cache(maxsize=8)
def sedov_similarity(gamma: float):
    """Spherical strong-blast similarity profiles and the front constant.

    Integrates the scaled velocity/density/pressure ODEs inward from the
    strong-shock state at s = r/R = 1; returns (xi0, profile) where
    profile(s) -> (v, g, h) and the front radius is R(t) =
    xi0 * (E t^2 / rho0)^(1/5).
    """
    s_min = 1.0e-5
    y0 = [2.0 / (gamma + 1.0), (gamma + 1.0) / (gamma - 1.0),
          2.0 / (gamma + 1.0), 0.0]
    sol = solve_ivp(_similarity_rhs, [1.0, s_min], y0, args=(gamma,),
                    method="LSODA", rtol=1e-11, atol=1e-13,
                    dense_output=True)
    if not sol.success:
        raise RuntimeError(f"similarity integration failed: {sol.message}")
    J = -float(sol.y[3, -1])  # integrated downward
    xi0 = (25.0 / (16.0 * np.pi * J)) ** 0.2
    v_min, g_min, h_min = sol.y[0, -1], sol.y[1, -1], sol.y[2, -1]
    power = 3.0 / (gamma - 1.0)

    def profile(s):
        s = np.asarray(s, dtype=float)
        v = np.empty_like(s)
        g = np.empty_like(s)
        h = np.empty_like(s)
        inner = s < s_min
        mid = ~inner & (s <= 1.0)
        if np.any(mid):
            vals = sol.sol(s[mid])
            v[mid], g[mid], h[mid] = vals[0], vals[1], vals[2]
        if np.any(inner):
            # Near the center: u ~ r, rho ~ r^(3/(gamma-1)), p ~ const.
            ratio = s[inner] / s_min
            v[inner] = v_min * ratio
            g[inner] = g_min * ratio ** power
            h[inner] = h_min
        v[s > 1.0] = 0.0
        g[s > 1.0] = 1.0
        h[s > 1.0] = 0.0
        return v, g, h

    return xi0, profile


def sedov_analytic(r, t, gamma=1.4, E0=SEDOV_ENERGY, rho0=1.0):
    """(rho, u, P) of the spherical blast at radius r, time t > 0."""
    xi0, profile = sedov_similarity(gamma)
    R = xi0 * (E0 * t * t / rho0) ** 0.2
    Rdot = 0.4 * R / t
    s = np.asarray(r, dtype=float) / R
    v, g, h = profile(s)
    rho = rho0 * g
    u = Rdot * v
    P = rho0 * Rdot * Rdot * h
    return rho, u, P


def sedov_front_radius(t, gamma=1.4, E0=SEDOV_ENERGY, rho0=1.0):
    xi0, _ = sedov_similarity(gamma)
    return xi0 * (E0 * t * t / rho0) ** 0.2


def advected_radius(r0, t_end, gamma=1.4, E0=SEDOV_ENERGY, n_steps=4000):
    """Radius of a passive tracer advected by the blast velocity field
    (RK4 on dr/dt = u(r, t) from t ~ 0)."""
    t0 = 1.0e-8
    ts = np.linspace(t0, t_end, n_steps + 1)
    r = float(r0)
    for i in range(n_steps):
        t, dt = ts[i], ts[i + 1] - ts[i]

        def u_of(rr, tt):
            return float(sedov_analytic(max(rr, 1e-12), tt, gamma, E0)[1])

        k1 = u_of(r, t)
        k2 = u_of(r + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = u_of(r + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = u_of(r + dt * k3, t + dt)
        r += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return r


# -- Legendre polynomials ---------------------------------------------------

def legendre(l: int, x):
    """P_l(x) via the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    if l == 0:
        return np.ones_like(x)
    p_prev = np.ones_like(x)
    p = x.copy()
    for n in range(1, l):
        p, p_prev = ((2 * n + 1) * x * p - n * p_prev) / (n + 1), p
    return p


# -- material initialization helpers ---------------------------------------

def _materials_from_moments(mesh, eos_list, moments, states):
    """Assemble a MaterialState from per-cell MomentSets and (rho, eps)."""
    nc = mesh.n_cells
    K = len(eos_list)
    _, V, _, Xax, Xpl = mesh.measures()
    alpha = np.zeros((K, nc))
    rho = np.ones((K, nc))
    eps = np.zeros((K, nc))
    cax = np.zeros((K, nc, 2))
    cpl = np.zeros((K, nc, 2))
    for k in range(K):
        rho_k, eps_k = states[k]
        for c in range(nc):
            ms = moments[k][c]
            vol = ms.M0 if mesh.alpha == 1 else ms.M0_pl
            if vol <= 1.0e-14 * V[c]:
                cax[k, c] = Xax[c]
                cpl[k, c] = Xpl[c]
                continue
            alpha[k, c] = vol / V[c]
            cax[k, c] = (ms.centroid("axi") if mesh.alpha == 1
                         else ms.centroid("planar"))
            cpl[k, c] = ms.centroid("planar")
        rho[k] = rho_k
        eps[k] = eps_k
    # Clean up round-off so fractions sum to one exactly where intended.
    ssum = alpha.sum(axis=0)
    alpha /= ssum[None, :]
    m = alpha * rho * V[None, :]
    return MaterialState(eos_list, alpha, m, rho, eps, cax, cpl)


def _nested_disc_moments(mesh, radii, center=(0.0, 0.0)):
    """Per-cell MomentSets of the shells cut by nested discs (innermost
    first); K = len(radii) + 1 shells, discs as regular polygons."""
    nc = mesh.n_cells
    discs = [geo.circle_polygon(center, r, CIRCLE_SIDES) for r in radii]
    cumulative = []
    for disc in discs:
        per_cell = []
        for c in range(nc):
            pieces = geo.intersect_pieces(mesh.cell_polygon(c), disc)
            ms = MomentSet(0.0, np.zeros(2), 0.0, np.zeros(2))
            for p in pieces:
                ms = ms + MomentSet.from_polygon(p, mesh.alpha)
            per_cell.append(ms)
        cumulative.append(per_cell)
    whole = [MomentSet.from_polygon(mesh.cell_polygon(c), mesh.alpha)
             for c in range(nc)]
    shells = [cumulative[0]]
    for k in range(1, len(radii)):
        shells.append([MomentSet(a.M0 - b.M0, a.M1 - b.M1,
                                 a.M0_pl - b.M0_pl, a.M1_pl - b.M1_pl)
                       for a, b in zip(cumulative[k], cumulative[k - 1])])
    last = cumulative[-1]
    shells.append([MomentSet(w.M0 - a.M0, w.M1 - a.M1,
                             w.M0_pl - a.M0_pl, w.M1_pl - a.M1_pl)
                   for w, a in zip(whole, last)])
    return shells


def _halfplane_region_moments(mesh, regions):
    """MomentSets of materials defined by half-plane constraint lists."""
    out = []
    for constraints in regions:
        per_cell = []
        for c in range(mesh.n_cells):
            poly = mesh.cell_polygon(c)
            for nrm, d in constraints:
                poly = geo.clip_halfplane(poly, np.asarray(nrm, float), d)
                if len(poly) < 3:
                    break
            per_cell.append(MomentSet.from_polygon(poly, mesh.alpha))
        out.append(per_cell)
    return out


def origin_pressure(gamma, rho, E0, V_origin):
    """Point-blast pressure deposited over the physical origin volume."""
    return (gamma - 1.0) * rho * E0 / V_origin


# -- case presets -----------------------------------------------------------

def init_sedov(scale=1.0, mesh_kind="mixed", interface_radii=(0.1, 0.2, 0.3),
               r_max=1.2, E0=SEDOV_ENERGY, gamma=1.4, t_end=1.0) -> CaseSpec:
    """Point blast in a half-disc of radius r_max with passive interfaces.

    mesh_kind 'polar' gives the equi-angular grid (symmetry studies);
    'mixed' the Cartesian-core/polar-ring unstructured layout (~500 quads at
    scale 1).  Interfaces fall on mesh rings for the polar grid (pure cells)
    and cut cells on the mixed grid.
    """
    if mesh_kind == "polar":
        n_theta = max(4, round(20 * scale))
        n_r = max(4, round(36 * scale))
        # Rings exactly on the interface radii keep the initial cells pure.
        radii = np.unique(np.concatenate(
            [np.linspace(0.0, r_max, n_r + 1)[1:], interface_radii]))
        mesh = msh.polar_sector(n_theta, len(radii), r_max, radii=radii,
                                outer_tag="wall")
    else:
        m = max(2, round(7 * np.sqrt(scale)))
        n_rings = max(2, round(14 * np.sqrt(scale)))
        mesh = msh.mixed_core_disc(m, n_rings, 0.25, r_max, outer_tag="wall")
    nc = mesh.n_cells
    _, V, _, Xax, Xpl = mesh.measures()
    eos_list = [GasEos(gamma) for _ in range(len(interface_radii) + 1)]
    if mesh_kind == "polar":
        r_cell = np.hypot(Xpl[:, 0], Xpl[:, 1])
        moments = []
        bounds = [0.0, *interface_radii, np.inf]
        for k in range(len(eos_list)):
            per_cell = []
            for c in range(nc):
                inside = bounds[k] <= r_cell[c] < bounds[k + 1]
                per_cell.append(MomentSet.from_polygon(mesh.cell_polygon(c),
                                                       mesh.alpha)
                                if inside else
                                MomentSet(0.0, np.zeros(2), 0.0, np.zeros(2)))
            moments.append(per_cell)
    else:
        moments = _nested_disc_moments(mesh, list(interface_radii))

    P_floor = 1.0e-6
    rho0 = 1.0
    eps_floor = P_floor / ((gamma - 1.0) * rho0)
    states = [(np.full(nc, rho0), np.full(nc, eps_floor)) for _ in eos_list]
    materials = _materials_from_moments(mesh, eos_list, moments, states)

    origin_node = int(np.argmin(np.hypot(mesh.nodes[:, 0], mesh.nodes[:, 1])))
    origin_cells = mesh.node_cells[origin_node]
    V_or_physical = 2.0 * np.pi * float(V[origin_cells].sum())
    P_or = origin_pressure(gamma, rho0, E0, V_or_physical)
    materials.eps[:, origin_cells] = P_or / ((gamma - 1.0) * rho0)
    materials.P[:, origin_cells] = P_or

    rules = {"wall": BoundaryRule("wall"), "axis": BoundaryRule("axis")}
    params = {"E0": E0, "gamma": gamma, "interface_radii": interface_radii,
              "r_max": r_max, "mesh_kind": mesh_kind, "P_floor": P_floor,
              "origin_pressure": P_or, "scale": scale}
    return CaseSpec("sedov", 1, mesh, materials, np.zeros((nc, 2)), rules,
                    t_end, params)


def init_triple_point(scale=1.0, t_end=5.0) -> CaseSpec:
    """Axisymmetric three-state Riemann problem on [0,7]x[0,3].

    High-pressure driver (rho, P) = (1, 1), gamma = 1.5 on x < 1; low
    density (0.1, 0.125), gamma = 1.5 below y = 1.5; heavy low pressure
    (1, 0.1), gamma = 1.4 above.  Walls top/left/right, axis at the bottom;
    all fluids start at rest.  The sub-region extents follow the standard
    layout and are parameters, not assertions.
    """
    nx = max(7, round(140 * scale))
    ny = max(3, round(60 * scale))
    mesh = msh.cartesian_box(nx, ny, (0.0, 7.0, 0.0, 3.0), alpha=1)
    ex = np.array([1.0, 0.0])
    ey = np.array([0.0, 1.0])
    regions = [
        [(ex, 1.0)],                       # blue: x <= 1
        [(-ex, -1.0), (ey, 1.5)],          # green: x >= 1, y <= 1.5
        [(-ex, -1.0), (-ey, -1.5)],        # red: x >= 1, y >= 1.5
    ]
    moments = _halfplane_region_moments(mesh, regions)
    nc = mesh.n_cells
    eos_list = [GasEos(1.5), GasEos(1.5), GasEos(1.4)]
    setups = [(1.0, 1.0), (0.1, 0.125), (1.0, 0.1)]
    states = []
    for (rho_k, P_k), e in zip(setups, eos_list):
        eps_k = P_k / ((e.gamma - 1.0) * rho_k)
        states.append((np.full(nc, rho_k), np.full(nc, eps_k)))
    materials = _materials_from_moments(mesh, eos_list, moments, states)
    rules = {"wall": BoundaryRule("wall"), "axis": BoundaryRule("axis")}
    params = {"nx": nx, "ny": ny, "states": setups,
              "gammas": [1.5, 1.5, 1.4], "scale": scale}
    return CaseSpec("triple_point", 1, mesh, materials, np.zeros((nc, 2)),
                    rules, t_end, params)


def init_shock_bubble(scale=1.0, t_end=None) -> CaseSpec:
    """Mach 1.25 air shock driven by a piston into a helium half-bubble.

    Domain [0, 0.65] x [0, 0.0445]; air (0.182, 1e5, gamma 1.4, M 28.963)
    everywhere except a half-disc of radius 0.0225 centered on-axis at
    x = 0.32 holding helium (1, 1e5, gamma 1.648, M 5.269e-3); the right
    boundary drives with u* = -140.312 (shock speed -467.707).  The final
    time defaults to t_i + 600e-6 with t_i = 657.463e-6.
    """
    t_i = 657.463e-6
    if t_end is None:
        t_end = t_i + 600.0e-6
    nx = max(10, round(520 * scale))
    ny = max(3, round(72 * scale))
    mesh = msh.cartesian_box(nx, ny, (0.0, 0.65, 0.0, 0.0445), alpha=1,
                             tags={"right": "piston"})
    nc = mesh.n_cells
    center, radius = (0.32, 0.0), 0.0225
    moments = _nested_disc_moments(mesh, [radius], center=center)
    helium = GasEos(1.648, molar_mass=5.269e-3)
    air = GasEos(1.4, molar_mass=28.963)
    P0 = 1.0e5
    states = [(np.full(nc, 1.0), np.full(nc, P0 / ((helium.gamma - 1) * 1.0))),
              (np.full(nc, 0.182), np.full(nc, P0 / ((air.gamma - 1) * 0.182)))]
    materials = _materials_from_moments(mesh, [helium, air], moments, states)
    u_star = -140.312
    rules = {"wall": BoundaryRule("wall"), "axis": BoundaryRule("axis"),
             "piston": BoundaryRule("piston", velocity=(u_star, 0.0))}
    params = {"nx": nx, "ny": ny, "u_star": u_star, "shock_speed": -467.707,
              "t_interaction": t_i, "bubble_center": center,
              "bubble_radius": radius, "P0": P0, "scale": scale}
    return CaseSpec("shock_bubble", 1, mesh, materials, np.zeros((nc, 2)),
                    rules, t_end, params)


def drive_pressure(t: float) -> float:
    """Implosion drive: 10 on [0, 0.5], then 12 - 4t (zero at t = 3)."""
    return 10.0 if t <= 0.5 else 12.0 - 4.0 * t


def perturb_nodes(mesh, a0, l, r_i=10.0, r_e=12.0):
    """Radial node perturbation r -> r (1 + a0 D(r) P_l(cos theta)) with the
    tent damping D (1 at r_i, 0 at the origin and at r_e)."""
    X = mesh.nodes.copy()
    r = np.hypot(X[:, 0], X[:, 1])
    nz = r > 1e-14 * r_e
    ct = np.where(nz, X[:, 0] / np.where(nz, r, 1.0), 1.0)
    D = np.where(r <= r_i, 1.0 - (r_i - r) / r_i,
                 np.where(r <= r_e, 1.0 - (r - r_i) / (r_e - r_i), 0.0))
    fac = 1.0 + a0 * D * legendre(l, ct)
    X[nz] *= fac[nz, None]
    return X


def init_implosion(a0=0.0, l=10, scale=1.0, n_ball=None, n_shell=None,
                   t_end=3.0) -> CaseSpec:
    """Pressure-driven spherical implosion with a perturbed interface.

    Light ball (0.05, 0.1) for r < 10 inside a heavy shell (1, 0.1) out to
    r = 12, both gamma = 5/3; the outer boundary follows the drive_pressure
    law.  Ring radii give equal mass per ring inside each region, with a
    ring exactly at the r = 10 interface so the initial cells are pure; the
    perturbation moves the nodes, not the volume fractions.
    """
    n_theta = max(6, round(40 * scale))
    if n_ball is None:
        n_ball = max(3, round(56 * scale))
    if n_shell is None:
        n_shell = max(3, round(34 * scale))
    shells = [(0.0, 10.0, 0.05), (10.0, 12.0, 1.0)]
    radii = msh.equal_mass_radii(shells, (n_ball, n_shell))
    mesh = msh.polar_sector(n_theta, len(radii), 12.0, radii=radii,
                            outer_tag="drive")
    if a0 != 0.0:
        X = perturb_nodes(mesh, a0, l)
        perturbed = mesh.with_positions(X)
        invalid, _ = msh.validate(perturbed)
        if invalid:
            raise ValueError(f"perturbation a0={a0} folds cells {invalid[:5]}")
        perturbed.initial_nodes = X.copy()
        mesh = perturbed
    nc = mesh.n_cells
    _, _, _, _, Xpl = mesh.measures()
    r_cell = np.hypot(Xpl[:, 0], Xpl[:, 1])
    gamma = 5.0 / 3.0
    e = GasEos(gamma)
    light = r_cell < 10.0 * (1.0 + 0.5 * a0)
    moments = []
    for k, mask in enumerate((light, ~light)):
        per_cell = []
        for c in range(nc):
            per_cell.append(MomentSet.from_polygon(mesh.cell_polygon(c), 1)
                            if mask[c] else
                            MomentSet(0.0, np.zeros(2), 0.0, np.zeros(2)))
        moments.append(per_cell)
    states = [(np.full(nc, 0.05), np.full(nc, 0.1 / ((gamma - 1) * 0.05))),
              (np.full(nc, 1.0), np.full(nc, 0.1 / ((gamma - 1) * 1.0)))]
    materials = _materials_from_moments(mesh, [e, e], moments, states)
    rules = {"wall": BoundaryRule("wall"), "axis": BoundaryRule("axis"),
             "drive": BoundaryRule("pressure", pressure=drive_pressure)}
    params = {"a0": a0, "l": l, "n_theta": n_theta, "n_ball": n_ball,
              "n_shell": n_shell, "r_interface": 10.0, "r_outer": 12.0,
              "gamma": gamma, "scale": scale}
    return CaseSpec("implosion", 1, mesh, materials, np.zeros((nc, 2)),
                    rules, t_end, params)


CASES = {
    "sedov": init_sedov,
    "triple_point": init_triple_point,
    "shock_bubble": init_shock_bubble,
    "implosion": init_implosion,
}


# -- diagnostics -------------------------------------------------------------

def radial_profile(mesh, values, bins=None):
    """(r, value) per cell sorted by the cell-center radius; optionally a
    (bin_center, mean) table when bins is an integer."""
    _, _, _, _, Xpl = mesh.measures()
    r = np.hypot(Xpl[:, 0], Xpl[:, 1])
    order = np.argsort(r)
    rs, vs = r[order], np.asarray(values)[order]
    if bins is None:
        return rs, vs
    edges = np.linspace(0.0, rs.max() * 1.0000001, bins + 1)
    idx = np.digitize(rs, edges) - 1
    centers = 0.5 * (edges[:-1] + edges[1:])
    means = np.full(bins, np.nan)
    for b in range(bins):
        sel = idx == b
        if np.any(sel):
            means[b] = vs[sel].mean()
    return centers, means


def schlieren(mesh, rho, k=15.0):
    """Per-cell exp(-k |grad rho| / max |grad rho|) shading field."""
    _, _, _, Xax, _ = mesh.measures()
    nc = mesh.n_cells
    grads = np.zeros(nc)
    rho = np.asarray(rho, dtype=float)
    for c in range(nc):
        nbrs = mesh.cell_node_neighbors[c]
        if len(nbrs) < 2:
            continue
        g = remap.gradient(rho[nbrs] - rho[c], Xax[nbrs] - Xax[c])
        grads[c] = np.hypot(g[0], g[1])
    gmax = grads.max()
    if gmax <= 0.0:
        return np.ones(nc)
    return np.exp(-k * grads / gmax)


def material_radius(materials, V, upto_k):
    """Equivalent spherical radius of the volume held by materials 0..upto_k
    (2pi-omitted measure: a sphere of radius r has volume 2 r^3 / 3)."""
    vol = float((materials.alpha[: upto_k + 1] * V[None, :]).sum())
    return (1.5 * vol) ** (1.0 / 3.0)


def sector_interface_radii(mesh, materials, k_inner=0):
    """Per-angular-sector interface radius on a polar grid.

    Uses the light-material volume of each sector: a spherical cap sector
    [theta_j, theta_j+1] of radius r has volume (r^3/3)(cos th_j - cos th_j+1),
    so the sector radius follows from the material volume exactly when the
    interface is spherical.
    """
    meta = mesh.meta
    if meta.get("kind") != "polar":
        raise ValueError("sector radii need a polar-layout mesh")
    n_theta = meta["n_theta"]
    n_r = meta["n_r"]
    _, V, _, _, _ = mesh.measures()
    vol_lo = materials.alpha[k_inner] * V
    # Cells are ordered: n_theta origin triangles, then ring-major quads.
    sector_vol = np.zeros(n_theta)
    for j in range(n_theta):
        sector_vol[j] += vol_lo[j]
    for i in range(1, n_r):
        base = n_theta + (i - 1) * n_theta
        for j in range(n_theta):
            sector_vol[j] += vol_lo[base + j]
    th = meta["theta0"] + (meta["theta1"] - meta["theta0"]) * \
        np.arange(n_theta + 1) / n_theta
    dcos = np.cos(th[:-1]) - np.cos(th[1:])
    return (3.0 * sector_vol / dcos) ** (1.0 / 3.0)
