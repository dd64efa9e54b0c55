"""Conservative remap from the Lagrangian grid onto the rezoned grid.

Two complementary paths share the work:

* swept-face remap for cells away from material interfaces: per mesh face,
  the quadrilateral swept between the old and new face positions is
  integrated against the upwind donor reconstruction and exchanged
  antisymmetrically between the two adjacent cells (exact conservation by
  construction);
* intersection remap near interfaces: every target cell integrates the
  donor reconstructions over exact polygon intersections with the donor
  material sub-polygons of its one-ring neighborhood.

The hybrid driver moves the pure nodes first (swept-face pass on the pure
cell set), then the mixed nodes (intersection pass on the mixed cell set);
cells in both sets are remapped twice and keep the intersection result.
Mass and energy are remapped in the R-weighted measure; momentum carries a
parallel planar-measure bookkeeping from which the velocity is rebuilt,
matching the planar form of the Lagrangian momentum equation.

Every reconstruction is centered on the donor material centroid of the
matching measure, which is what makes the integrals of the linear terms
vanish and conservation exact up to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .eos import MaterialState, PRESENT_TOL, pressure, sound_speed
from .errors import CoverageError, PositivityError
from .lagrange import CellState
from .mesh import Mesh

R_FIELDS = ("rho", "rhoE", "rhoeps", "rhou", "rhov")  # R-weighted bookkeeping
PL_FIELDS = ("rho", "rhou", "rhov")                   # planar bookkeeping


def moment_integrate(poly: np.ndarray, a: int, b: int) -> float:
    """Exact integral of x^a y^b over a polygon (a + b <= 3 supported,
    arbitrary small degrees accepted)."""
    return geo.monomial_moment(np.asarray(poly, dtype=float), a, b)


def polygon_intersect(P: np.ndarray, Q: np.ndarray) -> list:
    """Intersection of two simple polygons as convex pieces (possibly [])."""
    return geo.intersect_pieces(np.asarray(P, dtype=float),
                                np.asarray(Q, dtype=float))


@dataclass
class RemapClassification:
    mixed_nodes: np.ndarray         # bool per node
    swept_cells: np.ndarray         # bool per cell (pure/swept set)
    intersection_cells: np.ndarray  # bool per cell (mixed/intersection set)
    interface_cells: np.ndarray     # bool per cell (contains/touches interface)

    @property
    def pure_nodes(self):
        return ~self.mixed_nodes


def classify(mesh: Mesh, materials: MaterialState,
             hybrid: bool = True) -> RemapClassification:
    """Split nodes and cells between the two remap paths.

    Interface cells are multi-material cells plus pure cells whose face
    neighbor holds a different material (interface lying on a face).  Mixed
    nodes are the nodes of interface cells; the intersection cell set adds
    the node-neighbors of interface cells, the swept set keeps every cell
    with at least one pure node.  With hybrid off, everything goes through
    the intersection path.
    """
    nc, nn = mesh.n_cells, mesh.n_nodes
    if not hybrid:
        return RemapClassification(np.ones(nn, dtype=bool),
                                   np.zeros(nc, dtype=bool),
                                   np.ones(nc, dtype=bool),
                                   np.ones(nc, dtype=bool))
    pres = materials.present()
    n_pres = pres.sum(axis=0)
    dominant = np.argmax(materials.alpha, axis=0)
    interface = n_pres > 1
    # Pure cells facing a different pure material across a face.
    cn = mesh.corner_face_neighbor
    cc = mesh.corner_cell
    has_nbr = cn >= 0
    facing = np.zeros(len(cc), dtype=bool)
    facing[has_nbr] = ((n_pres[cc[has_nbr]] == 1)
                       & (n_pres[cn[has_nbr]] == 1)
                       & (dominant[cc[has_nbr]] != dominant[cn[has_nbr]]))
    interface[cc[facing]] = True
    interface[cn[facing]] = True
    mixed_nodes = np.zeros(nn, dtype=bool)
    for c in np.nonzero(interface)[0]:
        mixed_nodes[mesh.cells[c]] = True
    inter_cells = interface.copy()
    for c in np.nonzero(interface)[0]:
        inter_cells[mesh.cell_node_neighbors[c]] = True
    all_mixed = np.minimum.reduceat(mixed_nodes[mesh.corner_node].astype(np.int8),
                                    mesh.cell_start[:-1]) == 1
    swept = ~all_mixed
    return RemapClassification(mixed_nodes, swept, inter_cells, interface)


def gradient(dpsi: np.ndarray, dx: np.ndarray):
    """Unweighted least-squares slope of the centered differences dpsi at
    offsets dx (n, 2); zero for rank-deficient stencils."""
    At_A = dx.T @ dx
    det = At_A[0, 0] * At_A[1, 1] - At_A[0, 1] ** 2
    scale = At_A[0, 0] + At_A[1, 1]
    if det <= 1.0e-14 * max(scale, 1e-300) ** 2:
        return np.zeros(2)
    rhs = dx.T @ dpsi
    return np.array([(At_A[1, 1] * rhs[0] - At_A[0, 1] * rhs[1]) / det,
                     (At_A[0, 0] * rhs[1] - At_A[0, 1] * rhs[0]) / det])


def limit_bj(psi0, g, verts, cen, lo, hi):
    """Barth-Jespersen factor keeping vertex reconstructions in [lo, hi]."""
    if not np.any(g):
        return g
    phi = 1.0
    for v in verts:
        dv = float(g @ (v - cen))
        if dv > 1e-300:
            phi = min(phi, max(0.0, (hi - psi0) / dv))
        elif dv < -1e-300:
            phi = min(phi, max(0.0, (lo - psi0) / dv))
    return phi * g


@dataclass
class DonorField:
    """Per-cell per-material donor data for the remap integrals.

    The R-weighted reconstruction is centered on cen_ax (the R-weighted
    centroid of the donor region) and the planar one on cen_pl; those
    centerings are what make constant fields integrate exactly to the donor
    content.  values/values_pl may differ once a donor has itself been
    remapped (its R-mean and planar mean then separate).
    """
    values: dict                    # R-side field values
    values_pl: dict                 # planar-side field values
    grad: dict                      # field name -> (2,) slope
    cen_ax: np.ndarray
    cen_pl: np.ndarray
    V_k: float                      # R-measure content of the donor region
    A_k: float                      # planar content
    poly: np.ndarray = None         # material sub-polygon (intersection path)


def build_donors(mesh: Mesh, state: CellState, materials: MaterialState,
                 partitions: dict, limiter: bool = True,
                 grad_cells=None) -> dict:
    """Reconstruction data for every (cell, material) pair.

    Values are densities per unit volume: rho_k, rho_k*E_k, rho_k*U_c (one
    velocity per cell).  Slopes come from a least-squares fit over the
    node-neighbor cells holding the same material, optionally limited.
    partitions supplies the material sub-polygons of multi-material cells;
    their exact geometric centroids replace the tracked ones so that the
    intersection integrals conserve to round-off.
    """
    pres = materials.present()
    donors = {}
    values = {}
    for k in range(materials.n_materials):
        E_k = materials.eps[k] + 0.5 * (state.U ** 2).sum(axis=1)
        values[k] = {
            "rho": materials.rho[k],
            "rhoE": materials.rho[k] * E_k,
            "rhoeps": materials.rho[k] * materials.eps[k],
            "rhou": materials.rho[k] * state.U[:, 0],
            "rhov": materials.rho[k] * state.U[:, 1],
        }
    _, _, _, Xax, Xpl = mesh.measures()
    for c in range(mesh.n_cells):
        part = partitions.get(c)
        for k in np.nonzero(pres[:, c])[0]:
            poly = None
            if part is not None and k in part.pieces:
                poly = part.pieces[k]
                ms = part.moments[k]
                cen_ax = ms.centroid("axi") if mesh.alpha else ms.centroid("planar")
                cen_pl = ms.centroid("planar")
                V_k, A_k = ms.M0, ms.M0_pl
            else:
                cen_ax = Xax[c]
                cen_pl = Xpl[c]
                V_k = materials.alpha[k, c] * state.V[c]
                A_k = materials.alpha[k, c] * state.A[c]
            nbrs = [d for d in mesh.cell_node_neighbors[c] if pres[k, d]]
            vals = {f: float(values[k][f][c]) for f in R_FIELDS}
            grads = {}
            if len(nbrs) >= 2:
                dx = materials.cax[k, nbrs] - materials.cax[k, c]
                verts = mesh.cell_polygon(c)
                for f in R_FIELDS:
                    dpsi = values[k][f][nbrs] - vals[f]
                    g = gradient(dpsi, dx)
                    if limiter and np.any(g):
                        lo = min(vals[f], float(values[k][f][nbrs].min()))
                        hi = max(vals[f], float(values[k][f][nbrs].max()))
                        g = limit_bj(vals[f], g, verts, cen_ax, lo, hi)
                    grads[f] = g
            else:
                grads = {f: np.zeros(2) for f in R_FIELDS}
            donors[(c, int(k))] = DonorField(
                vals, {f: vals[f] for f in PL_FIELDS}, grads,
                np.asarray(cen_ax, float).copy(),
                np.asarray(cen_pl, float).copy(),
                float(V_k), float(A_k), poly)
    return donors


def _recon_integrals(dn: DonorField, m00, m10, m01, m11, m02, alpha):
    """R-weighted and planar integrals of the donor reconstructions over a
    region given by its signed monomial moments."""
    if alpha == 1:
        Vq = m01
        M1ax = (m11, m02)
    else:
        Vq = m00
        M1ax = (m10, m01)
    Aq = m00
    M1pl = (m10, m01)
    out_R = {}
    out_pl = {}
    for f in R_FIELDS:
        g = dn.grad[f]
        out_R[f] = (dn.values[f] * Vq
                    + g[0] * (M1ax[0] - dn.cen_ax[0] * Vq)
                    + g[1] * (M1ax[1] - dn.cen_ax[1] * Vq))
    for f in PL_FIELDS:
        g = dn.grad[f]
        out_pl[f] = (dn.values_pl[f] * Aq
                     + g[0] * (M1pl[0] - dn.cen_pl[0] * Aq)
                     + g[1] * (M1pl[1] - dn.cen_pl[1] * Aq))
    return Vq, Aq, M1ax, M1pl, out_R, out_pl


@dataclass
class CellAccumulator:
    """Integral accumulators of one target cell, per material."""
    V: dict = field(default_factory=dict)       # R-measure volume
    A: dict = field(default_factory=dict)       # planar area
    M1ax: dict = field(default_factory=dict)
    M1pl: dict = field(default_factory=dict)
    R: dict = field(default_factory=dict)       # field -> integral
    PL: dict = field(default_factory=dict)

    def add(self, k, Vq, Aq, m1ax, m1pl, intR, intPL, sign=1.0):
        if k not in self.V:
            self.V[k] = 0.0
            self.A[k] = 0.0
            self.M1ax[k] = np.zeros(2)
            self.M1pl[k] = np.zeros(2)
            self.R[k] = {f: 0.0 for f in R_FIELDS}
            self.PL[k] = {f: 0.0 for f in PL_FIELDS}
        self.V[k] += sign * Vq
        self.A[k] += sign * Aq
        self.M1ax[k] += sign * np.asarray(m1ax)
        self.M1pl[k] += sign * np.asarray(m1pl)
        for f in R_FIELDS:
            self.R[k][f] += sign * intR[f]
        for f in PL_FIELDS:
            self.PL[k][f] += sign * intPL[f]


def seed_accumulators(mesh: Mesh, state: CellState, materials: MaterialState,
                      donors: dict, cells) -> dict:
    """Start accumulators from the Lagrangian cell content (swept form)."""
    acc = {}
    pres = materials.present()
    for c in cells:
        a = CellAccumulator()
        for k in np.nonzero(pres[:, c])[0]:
            dn = donors[(c, int(k))]
            intR = {f: dn.values[f] * dn.V_k for f in R_FIELDS}
            intPL = {f: dn.values_pl[f] * dn.A_k for f in PL_FIELDS}
            a.add(int(k), dn.V_k, dn.A_k, dn.cen_ax * dn.V_k,
                  dn.cen_pl * dn.A_k, intR, intPL)
        acc[c] = a
    return acc


def pcsf_remap(mesh: Mesh, X_from: np.ndarray, X_to: np.ndarray,
               state: CellState, materials: MaterialState, donors: dict,
               cells_mask: np.ndarray) -> dict:
    """Swept-face pass: returns accumulators for the masked (pure) cells.

    Face sweeps are integrated once per face with the owner orientation
    {X_p, X~_p, X~_p+, X_p+}; a positive signed area means the quad lies
    outside the owner cell and the neighbor donates.  Boundary faces must
    not sweep (boundary nodes are either fixed or slide along their own
    faces); any residual boundary sweep is ignored (and reported), keeping
    the pass exactly conservative.
    """
    dominant = np.argmax(materials.alpha, axis=0)
    acc = seed_accumulators(mesh, state, materials, donors,
                            np.nonzero(cells_mask)[0])
    corners = mesh.face_owner_corner
    p = mesh.corner_node[corners]
    pn = mesh.corner_next[corners]
    moved = ((np.abs(X_to[p] - X_from[p]).max(axis=1) > 0.0)
             | (np.abs(X_to[pn] - X_from[pn]).max(axis=1) > 0.0))
    boundary_leak = 0.0
    quads = np.stack([X_from[p[moved]], X_to[p[moved]],
                      X_to[pn[moved]], X_from[pn[moved]]], axis=1)
    areas = mesh.with_positions(X_from).areas()
    if len(quads):
        # Twisted quads (differential tangential node motion) integrate
        # correctly with signed moments and the net-sign donor; only a
        # sweep comparable to the cell itself is a genuine failure.
        d1 = quads[:, 1] - quads[:, 0]
        d2 = quads[:, 2] - quads[:, 0]
        d3 = quads[:, 3] - quads[:, 0]
        gross = 0.5 * (np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
                       + np.abs(d2[:, 0] * d3[:, 1] - d2[:, 1] * d3[:, 0]))
        cap = areas[mesh.corner_cell[corners[moved]]]
        if np.any(gross > 0.5 * cap):
            raise CoverageError("sweep region exceeds half the cell area: "
                                "rezoned displacement too large")
        mom = geo.quad_batch_monomials(quads)
    idxs = np.nonzero(moved)[0]
    for row, fi in enumerate(idxs):
        i = corners[fi]
        c = int(mesh.corner_cell[i])
        cn = int(mesh.corner_face_neighbor[i])
        m00 = float(mom[(0, 0)][row])
        m10 = float(mom[(1, 0)][row])
        m01 = float(mom[(0, 1)][row])
        m11 = float(mom[(1, 1)][row])
        m02 = float(mom[(0, 2)][row])
        if cn < 0:
            boundary_leak += abs(m00)
            continue
        if not (cells_mask[c] or cells_mask[cn]):
            continue
        donor = cn if m00 > 0.0 else c
        dn = donors[(donor, int(dominant[donor]))]
        Vq, Aq, M1ax, M1pl, intR, intPL = _recon_integrals(
            dn, m00, m10, m01, m11, m02, mesh.alpha)
        if cells_mask[c]:
            acc[c].add(int(dominant[c]), Vq, Aq, M1ax, M1pl, intR, intPL, +1.0)
        if cells_mask[cn]:
            acc[cn].add(int(dominant[cn]), Vq, Aq, M1ax, M1pl, intR, intPL, -1.0)
    return acc, boundary_leak


def _tri_list(poly):
    return [[(float(t[0][0]), float(t[0][1])), (float(t[1][0]), float(t[1][1])),
             (float(t[2][0]), float(t[2][1]))] for t in geo.triangulate(poly)]


def _clip_tri_tri(sub, clip):
    """Sutherland-Hodgman of one triangle against another (scalar floats)."""
    out = sub
    for i in range(3):
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % 3]
        nx, ny = by - ay, ax - bx
        d = nx * ax + ny * ay
        res = []
        m = len(out)
        if m == 0:
            return res
        s = [out[j][0] * nx + out[j][1] * ny - d for j in range(m)]
        for j in range(m):
            jj = j + 1 if j + 1 < m else 0
            if s[j] <= 0.0:
                res.append(out[j])
            if (s[j] < 0.0 and s[jj] > 0.0) or (s[j] > 0.0 and s[jj] < 0.0):
                t = s[j] / (s[j] - s[jj])
                res.append((out[j][0] + t * (out[jj][0] - out[j][0]),
                            out[j][1] + t * (out[jj][1] - out[j][1])))
        out = res
    return out


def _poly_monomials_scalar(pts):
    m = len(pts)
    m00 = m10 = m01 = m11 = m02 = 0.0
    for i in range(m):
        j = i + 1 if i + 1 < m else 0
        x1, y1 = pts[i]
        x2, y2 = pts[j]
        cr = x1 * y2 - x2 * y1
        m00 += cr
        m10 += cr * (x1 + x2)
        m01 += cr * (y1 + y2)
        m02 += cr * (y1 * y1 + y1 * y2 + y2 * y2)
        m11 += cr * (2.0 * x1 * y1 + x1 * y2 + x2 * y1 + 2.0 * x2 * y2)
    return m00 / 2.0, m10 / 6.0, m01 / 6.0, m11 / 24.0, m02 / 12.0


def _intersection_moments(tris_a, tris_b):
    """Summed monomial moments of the intersection of two triangulated
    polygons; returns None when empty."""
    m00 = m10 = m01 = m11 = m02 = 0.0
    hit = False
    for ta in tris_a:
        axlo = min(p[0] for p in ta); axhi = max(p[0] for p in ta)
        aylo = min(p[1] for p in ta); ayhi = max(p[1] for p in ta)
        for tb in tris_b:
            if (axlo > max(p[0] for p in tb) or min(p[0] for p in tb) > axhi
                    or aylo > max(p[1] for p in tb)
                    or min(p[1] for p in tb) > ayhi):
                continue
            c = _clip_tri_tri(ta, tb)
            if len(c) >= 3:
                r = _poly_monomials_scalar(c)
                m00 += r[0]; m10 += r[1]; m01 += r[2]; m11 += r[3]; m02 += r[4]
                hit = True
    if not hit:
        return None
    return m00, m10, m01, m11, m02


def mcib_remap(mesh: Mesh, X_donor: np.ndarray, X_target: np.ndarray,
               donors: dict, materials: MaterialState, donor_values: dict,
               target_cells) -> dict:
    """Intersection pass: accumulators for the target cells.

    Donor material polygons live on the X_donor geometry (whole cells for
    pure donors, reconstructed sub-polygons for multi-material donors);
    targets are the X_target cell polygons.  A coverage error signals that
    the one-ring donor stencil did not tile a target cell.
    """
    donor_mesh = mesh.with_positions(X_donor)
    target_mesh = mesh.with_positions(X_target)
    A_t = target_mesh.areas()
    pres = materials.present()

    tri_cache = {}

    def donor_tris(c, k, poly):
        key = (c, k)
        if key not in tri_cache:
            tri_cache[key] = _tri_list(poly if poly is not None
                                       else donor_mesh.cell_polygon(c))
        return tri_cache[key]

    acc = {}
    for c in target_cells:
        a = CellAccumulator()
        tris_t = _tri_list(target_mesh.cell_polygon(c))
        covered = 0.0
        for d in [c, *mesh.cell_node_neighbors[c]]:
            for k in np.nonzero(pres[:, d])[0]:
                key = (int(d), int(k))
                dn = donor_values.get(key, donors.get(key))
                mom = _intersection_moments(donor_tris(int(d), int(k), dn.poly),
                                            tris_t)
                if mom is None:
                    continue
                m00, m10, m01, m11, m02 = mom
                covered += m00
                Vq, Aq, M1ax, M1pl, intR, intPL = _recon_integrals(
                    dn, m00, m10, m01, m11, m02, mesh.alpha)
                a.add(int(k), Vq, Aq, M1ax, M1pl, intR, intPL)
        if abs(covered - A_t[c]) > 1.0e-8 * A_t[c]:
            raise CoverageError(
                f"target cell {c} covered {covered:.12g} of {A_t[c]:.12g}: "
                "rezoned displacement exceeds the one-ring stencil")
        acc[c] = a
    return acc


def donor_totals(donors: dict):
    """Total mass, energy (R measure) and planar momentum of the donors."""
    mass = energy = momx = momy = 0.0
    for dn in donors.values():
        mass += dn.values["rho"] * dn.V_k
        energy += dn.values["rhoE"] * dn.V_k
        momx += dn.values_pl["rhou"] * dn.A_k
        momy += dn.values_pl["rhov"] * dn.A_k
    return mass, energy, np.array([momx, momy])


def _acc_totals(acc: dict):
    mass = energy = momx = momy = 0.0
    for a in acc.values():
        for k in a.V:
            mass += a.R[k]["rho"]
            energy += a.R[k]["rhoE"]
            momx += a.PL[k]["rhou"]
            momy += a.PL[k]["rhov"]
    return mass, energy, np.array([momx, momy])


DUST_FRACTION = 1.0e-14


def _rebuild(mesh: Mesh, X_new: np.ndarray, acc: dict,
             materials: MaterialState):
    """Assemble the remapped cell and material state on the new grid."""
    new_mesh = mesh.with_positions(X_new)
    A, V, Rbar, Xax, Xpl = new_mesh.measures()
    nc = mesh.n_cells
    K = materials.n_materials
    alpha = np.zeros((K, nc))
    m_k = np.zeros((K, nc))
    rho_k = np.ones((K, nc))
    eps_k = np.zeros((K, nc))
    cax = np.zeros((K, nc, 2))
    cpl = np.zeros((K, nc, 2))
    rho_c = np.zeros(nc)
    U_c = np.zeros((nc, 2))
    E_c = np.zeros(nc)
    P_c = np.zeros(nc)
    a_c = np.zeros(nc)

    for c in range(nc):
        a = acc[c]
        # Fold sub-resolution dust into the dominant material so nothing is
        # lost and orderings stay bounded.
        if len(a.V) > 1:
            main = max(a.V, key=lambda kk: a.V[kk])
            for k in [kk for kk in a.V if kk != main
                      and a.V[kk] < DUST_FRACTION * V[c]]:
                a.V[main] += a.V.pop(k)
                a.A[main] += a.A.pop(k)
                a.M1ax[main] += a.M1ax.pop(k)
                a.M1pl[main] += a.M1pl.pop(k)
                for f in R_FIELDS:
                    a.R[main][f] += a.R[k][f]
                for f in PL_FIELDS:
                    a.PL[main][f] += a.PL[k][f]
                del a.R[k], a.PL[k]
        mass = sum(a.R[k]["rho"] for k in a.V)
        energy = sum(a.R[k]["rhoE"] for k in a.V)
        if mass <= 0.0:
            raise PositivityError(f"non-positive remapped mass in cell {c}")
        single = len(a.V) == 1
        U = np.zeros(2)
        eint_raw = {}
        for k in a.V:
            Vk = a.V[k]
            if Vk <= 0.0:
                raise PositivityError(f"non-positive material volume in cell {c}")
            alpha[k, c] = 1.0 if single else Vk / V[c]
            m_k[k, c] = a.R[k]["rho"]
            rho_k[k, c] = a.R[k]["rho"] / Vk
            if rho_k[k, c] <= 0.0:
                raise PositivityError(f"non-positive remapped density in cell {c}")
            # Partial velocity from the planar bookkeeping of this material;
            # the cell velocity is the mass-weighted average below.
            pl_mass_k = a.PL[k]["rho"]
            if pl_mass_k <= 0.0:
                raise PositivityError(f"non-positive planar mass in cell {c}")
            U_kc = np.array([a.PL[k]["rhou"], a.PL[k]["rhov"]]) / pl_mass_k
            eint_raw[k] = max(a.R[k]["rhoeps"], 0.0)
            U += m_k[k, c] * U_kc
            if single:
                cax[k, c] = Xax[c]
                cpl[k, c] = Xpl[c]
            else:
                cax[k, c] = a.M1ax[k] / Vk
                cpl[k, c] = a.M1pl[k] / max(a.A[k], 1e-300)
        U /= mass
        # Internal energies: the separately remapped rho*eps integrals set
        # the partition between materials; their sum is rescaled onto the
        # conserved cell budget m*(E - |U|^2/2) so total energy is exact
        # and every eps stays non-negative (kinetic-energy fix).
        budget = energy - 0.5 * mass * float(U @ U)
        if budget < 0.0:
            if budget > -1.0e-12 * abs(energy):
                budget = 0.0
            else:
                raise PositivityError(
                    f"negative remapped internal energy in cell {c}")
        raw_sum = sum(eint_raw.values())
        for k in a.V:
            share = (eint_raw[k] / raw_sum if raw_sum > 0.0
                     else m_k[k, c] / mass)
            eps_k[k, c] = share * budget / m_k[k, c]
        rho_c[c] = mass / V[c]
        U_c[c] = U
        E_c[c] = energy / mass

    new_materials = MaterialState(materials.eos, alpha, m_k, rho_k, eps_k,
                                  cax, cpl)
    pres = new_materials.present()
    a_all = np.zeros((K, nc))
    for k, e in enumerate(new_materials.eos):
        mask = pres[k]
        if np.any(mask):
            a_all[k, mask], _ = sound_speed(e, rho_k[k, mask],
                                            new_materials.P[k, mask])
    P_c = (alpha * new_materials.P).sum(axis=0)
    a_c = np.where(pres, a_all, 0.0).max(axis=0)
    m_c = m_k.sum(axis=0)
    new_state = CellState(rho=rho_c, U=U_c, E=E_c, P=P_c, a=a_c, m=m_c,
                          V=V, A=A, Rbar=Rbar)
    return new_state, new_materials


def hybrid_remap(mesh: Mesh, state: CellState, materials: MaterialState,
                 partitions: dict, X_new: np.ndarray, limiter: bool = True,
                 hybrid: bool = True):
    """Full conservative remap of (state, materials) onto node positions
    X_new.

    partitions maps multi-material cell ids to their InterfacePartition
    (an empty dict is fine for single-material runs).  Returns
    (new_state, new_materials, diagnostics); the diagnostics carry the
    global conservation deltas of the cycle.
    """
    cls = classify(mesh, materials, hybrid)
    donors = build_donors(mesh, state, materials, partitions, limiter)
    before = donor_totals(donors)

    X_lag = mesh.nodes
    X_mid = np.where(cls.mixed_nodes[:, None], X_lag, X_new)
    acc, boundary_leak = pcsf_remap(mesh, X_lag, X_mid, state, materials,
                                    donors, cls.swept_cells)

    targets = np.nonzero(cls.intersection_cells)[0]
    if len(targets):
        mid_mesh = mesh.with_positions(X_mid)
        A_mid, V_mid, _, Xax_mid, Xpl_mid = mid_mesh.measures()
        donor_values = {}
        for c in np.nonzero(cls.swept_cells)[0]:
            a = acc[c]
            for k in a.V:
                base = donors[(c, k)]
                donor_values[(c, k)] = DonorField(
                    values={f: a.R[k][f] / V_mid[c] for f in R_FIELDS},
                    values_pl={f: a.PL[k][f] / A_mid[c] for f in PL_FIELDS},
                    grad=base.grad, cen_ax=Xax_mid[c], cen_pl=Xpl_mid[c],
                    V_k=float(V_mid[c]), A_k=float(A_mid[c]), poly=None)
        acc_m = mcib_remap(mesh, X_mid, X_new, donors, materials,
                           donor_values, targets)
        for c in targets:
            acc[int(c)] = acc_m[int(c)]

    new_state, new_materials = _rebuild(mesh, X_new, acc, materials)
    after = _acc_totals(acc)
    diag = {
        "d_mass": after[0] - before[0],
        "d_energy": after[1] - before[1],
        "d_momentum": after[2] - before[2],
        "mass": before[0],
        "energy": before[1],
        "boundary_sweep": boundary_leak,
        "n_intersection_cells": int(len(targets)),
    }
    return new_state, new_materials, diag
