"""First-order explicit cell-centered Lagrangian step, area-weighted form.

The momentum equation is advanced in planar measure scaled by Rbar = V/A
(equivalently: with the planar mass rho*A), while the energy flux carries
the nodal pseudo-radius R_p.  This split is what preserves spherical
symmetry for radial flows on equi-angular polar grids; see the divergence
pair below for the compatibility diagnostic.

Node velocities come from the one-pass acoustic solver: each corner
contributes the 2x2 matrix

    M_pc = Z_c (L- N- (x) N- + L+ N+ (x) N+),   Z_c = rho_c a_c,

and the node solves M_p U_p = sum_c (L_pc P_c N_pc + M_pc U_c), constrained
by the boundary rules.  Corner fluxes F_pc = L_pc P_c N_pc - M_pc (U_p - U_c)
then sum to zero around interior nodes, which is the discrete statement of
total momentum/energy conservation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .eos import MaterialState, equal_strain_update
from .errors import PositivityError, SingularNodeError, TanglingError
from .mesh import Mesh, pseudo_radius, validate


@dataclass
class CellState:
    """Cell-averaged hydrodynamic state (struct of arrays)."""
    rho: np.ndarray
    U: np.ndarray          # (n_cells, 2)
    E: np.ndarray          # specific total energy
    P: np.ndarray
    a: np.ndarray
    m: np.ndarray          # constant in time
    V: np.ndarray          # R-weighted volume
    A: np.ndarray          # planar area
    Rbar: np.ndarray       # V/A

    def eps(self) -> np.ndarray:
        return self.E - 0.5 * (self.U ** 2).sum(axis=1)

    def copy(self) -> "CellState":
        return CellState(*(getattr(self, f).copy() for f in
                           ("rho", "U", "E", "P", "a", "m", "V", "A", "Rbar")))


@dataclass
class BoundaryRule:
    """Behaviour of one boundary tag.

    wall/axis constrain the normal velocity to zero; piston prescribes the
    normal component of `velocity`; pressure adds the external pressure as a
    ghost contribution to the nodal right-hand side (nodes move freely).
    """
    kind: str
    velocity: tuple = (0.0, 0.0)
    pressure: Callable[[float], float] | float = 0.0

    def pressure_at(self, t: float) -> float:
        if callable(self.pressure):
            return float(self.pressure(t))
        return float(self.pressure)


DEFAULT_RULES = {"wall": BoundaryRule("wall"), "axis": BoundaryRule("axis")}


@dataclass
class NodalSolution:
    U: np.ndarray            # (n_nodes, 2) node velocities
    F: np.ndarray            # (n_corners, 2) corner fluxes
    residual: np.ndarray     # (n_nodes, 2) sum of corner fluxes per node
    R_node: np.ndarray       # pseudo-radius of each node
    diag: dict = field(default_factory=dict)


def _scatter(values, index, n):
    """Deterministic per-node accumulation of corner values."""
    if values.ndim == 1:
        return np.bincount(index, weights=values, minlength=n)
    out = np.empty((n, values.shape[1]))
    for k in range(values.shape[1]):
        out[:, k] = np.bincount(index, weights=values[:, k], minlength=n)
    return out


def _node_constraints(mesh: Mesh, rules: dict, geom, t: float):
    """Collect (normal, value) velocity constraints per boundary node."""
    constraints = {}
    tagged = np.nonzero(mesh.corner_face_tag)[0]
    for i in tagged:
        tag = mesh.boundary_tag_names[mesh.corner_face_tag[i]]
        rule = rules.get(tag, DEFAULT_RULES.get(tag))
        if rule is None:
            raise SingularNodeError(f"no boundary rule for tag '{tag}'")
        if rule.kind == "pressure":
            continue
        n_face = geom["np"][i]
        if rule.kind in ("wall", "axis"):
            g = 0.0
        elif rule.kind == "piston":
            g = float(np.asarray(rule.velocity) @ n_face)
        else:
            raise SingularNodeError(f"unknown boundary kind '{rule.kind}'")
        for p in (mesh.corner_node[i], mesh.corner_next[i]):
            constraints.setdefault(int(p), []).append((n_face.copy(), g))
    merged = {}
    for p, lst in constraints.items():
        uniq = []
        for n_f, g in lst:
            for entry in uniq:
                if abs(n_f[0] * entry[0][1] - n_f[1] * entry[0][0]) < 1.0e-10:
                    break
            else:
                uniq.append((n_f, g))
        merged[p] = uniq[:2]
    return merged


def solve_nodes(mesh: Mesh, state: CellState, rules=None, t=0.0,
                geom=None) -> NodalSolution:
    """Assemble and solve the nodal systems; return velocities and fluxes."""
    rules = rules or DEFAULT_RULES
    if geom is None:
        geom = mesh.corner_geometry_arrays()
    cc = mesh.corner_cell
    pn = mesh.corner_node
    n_nodes = mesh.n_nodes

    Z = (state.rho * state.a)[cc]
    lm, lp = geom["lm"], geom["lp"]
    nm, np_ = geom["nm"], geom["np"]
    mxx = Z * (lm * nm[:, 0] ** 2 + lp * np_[:, 0] ** 2)
    mxy = Z * (lm * nm[:, 0] * nm[:, 1] + lp * np_[:, 0] * np_[:, 1])
    myy = Z * (lm * nm[:, 1] ** 2 + lp * np_[:, 1] ** 2)

    Uc = state.U[cc]
    rhs_c = state.P[cc, None] * geom["cnorm"]
    rhs_c[:, 0] += mxx * Uc[:, 0] + mxy * Uc[:, 1]
    rhs_c[:, 1] += mxy * Uc[:, 0] + myy * Uc[:, 1]

    Mxx = _scatter(mxx, pn, n_nodes)
    Mxy = _scatter(mxy, pn, n_nodes)
    Myy = _scatter(myy, pn, n_nodes)
    rhs = _scatter(rhs_c, pn, n_nodes)

    # External pressure drive: ghost contribution -L_half P*(t) n_out on
    # both end nodes of each tagged boundary face.
    for i in np.nonzero(mesh.corner_face_tag)[0]:
        tag = mesh.boundary_tag_names[mesh.corner_face_tag[i]]
        rule = rules.get(tag, DEFAULT_RULES.get(tag))
        if rule is None or rule.kind != "pressure":
            continue
        term = geom["lp"][i] * rule.pressure_at(t) * geom["np"][i]
        rhs[mesh.corner_node[i]] -= term
        rhs[mesh.corner_next[i]] -= term

    constraints = _node_constraints(mesh, rules, geom, t)

    U = np.zeros((n_nodes, 2))
    det = Mxx * Myy - Mxy ** 2
    scale = Mxx + Myy
    free = np.ones(n_nodes, dtype=bool)
    for p in constraints:
        free[p] = False
    bad = free & (det <= 1.0e-28 * np.maximum(scale, 1e-300) ** 2)
    if np.any(bad):
        raise SingularNodeError(
            f"singular nodal matrix at nodes {np.nonzero(bad)[0][:5].tolist()}")
    with np.errstate(divide="ignore", invalid="ignore"):
        U[:, 0] = np.where(free, (Myy * rhs[:, 0] - Mxy * rhs[:, 1]) / det, 0.0)
        U[:, 1] = np.where(free, (Mxx * rhs[:, 1] - Mxy * rhs[:, 0]) / det, 0.0)

    for p, cons in constraints.items():
        M = np.array([[Mxx[p], Mxy[p]], [Mxy[p], Myy[p]]])
        b = rhs[p]
        if len(cons) >= 2:
            N = np.array([cons[0][0], cons[1][0]])
            g = np.array([cons[0][1], cons[1][1]])
            U[p] = np.linalg.solve(N, g)
        else:
            n_f, g = cons[0]
            t_f = np.array([-n_f[1], n_f[0]])
            tMt = t_f @ M @ t_f
            if tMt <= 1.0e-14 * max(scale[p], 1e-300):
                raise SingularNodeError(f"singular constrained node {p}")
            ut = (t_f @ b - g * (t_f @ M @ n_f)) / tMt
            U[p] = g * n_f + ut * t_f

    Up = U[pn]
    dU = Up - Uc
    F = state.P[cc, None] * geom["cnorm"]
    F[:, 0] -= mxx * dU[:, 0] + mxy * dU[:, 1]
    F[:, 1] -= mxy * dU[:, 0] + myy * dU[:, 1]
    residual = _scatter(F, pn, n_nodes)
    R_node = pseudo_radius(mesh.alpha, mesh.nodes[:, 1])
    return NodalSolution(U=U, F=F, residual=residual, R_node=R_node,
                         diag={"constrained": set(constraints)})


def corner_flux(P_c, corner_geom, Z_c, U_p, U_c):
    """Single-corner flux F = L P N - M (U_p - U_c) (test/diagnostic path)."""
    lm, lp = corner_geom["lm"], corner_geom["lp"]
    nm, np_ = np.asarray(corner_geom["nm"]), np.asarray(corner_geom["np"])
    M = Z_c * (lm * np.outer(nm, nm) + lp * np.outer(np_, np_))
    return P_c * np.asarray(corner_geom["cnorm"]) - M @ (np.asarray(U_p) - np.asarray(U_c))


def corner_matrix(corner_geom, Z_c) -> np.ndarray:
    lm, lp = corner_geom["lm"], corner_geom["lp"]
    nm, np_ = np.asarray(corner_geom["nm"]), np.asarray(corner_geom["np"])
    return Z_c * (lm * np.outer(nm, nm) + lp * np.outer(np_, np_))


def divergence(mesh: Mesh, U_nodes: np.ndarray, V=None) -> np.ndarray:
    """Discrete divergence of the scheme: (1/V) sum_p R_p L_pc N_pc . U_p."""
    geom = mesh.corner_geometry_arrays()
    if V is None:
        V = mesh.measures()[1]
    R = pseudo_radius(mesh.alpha, mesh.nodes[:, 1])[mesh.corner_node]
    contrib = R * np.einsum("ij,ij->i", geom["cnorm"], U_nodes[mesh.corner_node])
    return mesh.cell_reduce(contrib) / V


def gcl_divergence(mesh: Mesh, U_nodes: np.ndarray, V=None) -> np.ndarray:
    """Divergence compatible with the volume evolution (GCL form).

    (1/V) sum_p (1/3)[(2R_p + R_p-) L- N- + (2R_p + R_p+) L+ N+] . U_p
    """
    geom = mesh.corner_geometry_arrays()
    if V is None:
        V = mesh.measures()[1]
    y = mesh.nodes[:, 1]
    R = pseudo_radius(mesh.alpha, y)
    Rp = R[mesh.corner_node]
    Rm = R[mesh.corner_prev]
    Rn = R[mesh.corner_next]
    wm = (2.0 * Rp + Rm) / 3.0
    wp = (2.0 * Rp + Rn) / 3.0
    vec = (wm * geom["lm"])[:, None] * geom["nm"] + (wp * geom["lp"])[:, None] * geom["np"]
    contrib = np.einsum("ij,ij->i", vec, U_nodes[mesh.corner_node])
    return mesh.cell_reduce(contrib) / V


def compute_dt(mesh: Mesh, state: CellState, cfl=0.25, max_growth=0.1,
               dt_prev=None, U_nodes=None) -> float:
    """CFL bound from the shortest edge, volume-growth bound from the GCL
    divergence of the previous node velocities, and 1.05x growth cap."""
    edge = mesh.min_edge_per_cell()
    speed = state.a + np.hypot(state.U[:, 0], state.U[:, 1])
    ok = speed > 0.0
    dt = np.inf
    if np.any(ok):
        dt = cfl * float(np.min(edge[ok] / speed[ok]))
    if U_nodes is not None:
        div = np.abs(gcl_divergence(mesh, U_nodes, V=state.V))
        big = div > 0.0
        if np.any(big):
            dt = min(dt, max_growth / float(np.max(div[big])))
    if dt_prev is not None:
        dt = min(dt, 1.05 * dt_prev)
    if not np.isfinite(dt):
        raise SingularNodeError("cannot form a time step: no wave speeds")
    return dt


def step(mesh: Mesh, state: CellState, materials: MaterialState, dt: float,
         rules=None, t=0.0):
    """One forward-Euler Lagrangian step.

    Returns (new_mesh, new_state, nodal_solution, diagnostics).  The mesh
    motion is purely kinematic: volumes are re-measured from the moved
    polygons, never integrated from a volume equation.
    """
    geom = mesh.corner_geometry_arrays()
    sol = solve_nodes(mesh, state, rules=rules, t=t, geom=geom)

    force = mesh.cell_reduce(sol.F)
    U_new = state.U - (dt * state.Rbar / state.m)[:, None] * force

    R_pu = sol.R_node[mesh.corner_node, None] * sol.U[mesh.corner_node]
    ework = mesh.cell_reduce(np.einsum("ij,ij->i", sol.F, R_pu))
    E_new = state.E - dt / state.m * ework

    X_new = mesh.nodes + dt * sol.U
    new_mesh = mesh.with_positions(X_new)
    invalid, _ = validate(new_mesh)
    if invalid:
        raise TanglingError(f"mesh tangled at t={t:.6g}: cells {invalid[:8]}")
    A, V, Rbar, _, _ = new_mesh.measures()
    if np.any(V <= 0.0):
        raise TanglingError(f"non-positive volume at t={t:.6g}")

    rho_new = state.m / V
    eps_cell = E_new - 0.5 * (U_new ** 2).sum(axis=1)
    if np.any(eps_cell < 0.0):
        bad = int(np.argmin(eps_cell))
        raise PositivityError(
            f"negative internal energy in cell {bad} at t={t:.6g}")

    rho_mix, P_new, a_new = equal_strain_update(materials, state.V, V, eps_cell)

    new_state = CellState(rho=rho_new, U=U_new, E=E_new, P=P_new, a=a_new,
                          m=state.m, V=V, A=A, Rbar=Rbar)
    boundary = np.zeros(mesh.n_nodes, dtype=bool)
    boundary[mesh.boundary_nodes] = True
    work_rate = -np.einsum("ij,ij->i", sol.residual,
                           sol.R_node[:, None] * sol.U)
    diag = {
        "boundary_work": dt * float(work_rate[boundary].sum()),
        "max_interior_residual": float(
            np.abs(sol.residual[~boundary]).max() if np.any(~boundary) else 0.0),
    }
    return new_mesh, new_state, sol, diag


def totals(state: CellState):
    """Total mass, momentum and energy (mass-weighted sums)."""
    return (float(state.m.sum()),
            (state.m[:, None] * state.U).sum(axis=0),
            float((state.m * state.E).sum()))


def state_from_materials(mesh: Mesh, materials: MaterialState,
                         U=None) -> CellState:
    """Assemble the cell state implied by a material set on a mesh.

    Fills the partial masses m_k = alpha_k rho_k V_c and applies the mixture
    closure (volume-fraction averaged density/pressure, max sound speed).
    """
    from .eos import sound_speed

    A, V, Rbar, _, _ = mesh.measures()
    materials.m = materials.alpha * materials.rho * V[None, :]
    pres = materials.present()
    rho_c = (materials.alpha * materials.rho).sum(axis=0)
    P_c = (materials.alpha * materials.P).sum(axis=0)
    a_all = np.zeros_like(materials.rho)
    for k, e in enumerate(materials.eos):
        mask = pres[k]
        a_all[k, mask], _ = sound_speed(e, materials.rho[k, mask],
                                        materials.P[k, mask])
    a_c = np.where(pres, a_all, 0.0).max(axis=0)
    m_c = rho_c * V
    eps_c = (materials.m * materials.eps).sum(axis=0) / m_c
    if U is None:
        U = np.zeros((mesh.n_cells, 2))
    U = np.asarray(U, dtype=float)
    E = eps_c + 0.5 * (U ** 2).sum(axis=1)
    return CellState(rho=rho_c, U=U.copy(), E=E, P=P_c, a=a_c, m=m_c,
                     V=V, A=A, Rbar=Rbar)
