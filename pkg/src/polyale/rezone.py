"""Mesh-quality smoothing: condition-number descent in mapped coordinates.

Classical condition-number smoothing (all nodes in Cartesian coordinates)
collapses polar grids toward the origin.  The generalized variant smooths
each node in the coordinate frame selected by its region tag: polar-region
nodes work in (r, theta), where a uniform polar grid is a uniform Cartesian
one and therefore a fixed point.  The frame of the node being smoothed is
applied to its whole corner neighborhood; the origin node itself never
moves, and when it appears as a corner vertex of a polar-frame node it is
replicated onto the r = 0 axis at the angular coordinate of that node.

Gradients/Hessians of the corner condition number

    kappa = (|a|^2 + |b|^2) / cross(a, b),
    a = x - x_next,  b = x - x_prev

are analytic (cross(a, b) is affine in x).  A corner is valid when
cross(a, b) > 0, i.e. the corner triangle {prev, node, next} has positive
area.  Note the frame mapping assumes meshes spanning at most the upper
half plane (no branch cut crossing at theta = pi), which all generators
guarantee.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TanglingError
from .mesh import Mesh, validate

_ORIGIN_TOL = 1.0e-12


@dataclass
class RezoneConfig:
    sweeps: int = 1
    boundary_smoothing: str = "bezier"  # 'off' | 'auto' | 'bezier'
    omega_mode: str = "fixed"       # 'fixed' | 'adaptive'
    omega: float = 1.0
    mu: float = 1.0                 # gain of the adaptive deformation rule
    max_halvings: int = 10

    def __post_init__(self):
        # Accept booleans for convenience.
        if self.boundary_smoothing is True:
            self.boundary_smoothing = "bezier"
        elif self.boundary_smoothing is False:
            self.boundary_smoothing = "off"


def map_to_polar(x, beta: int):
    """(X, Y) -> (r, theta) for beta = 1; identity for beta = 0."""
    x = np.asarray(x, dtype=float)
    if beta == 0:
        return x.copy()
    r = np.hypot(x[..., 0], x[..., 1])
    theta = np.arctan2(x[..., 1], x[..., 0])
    return np.stack([r, theta], axis=-1)


def map_back(xhat, beta: int):
    xhat = np.asarray(xhat, dtype=float)
    if beta == 0:
        return xhat.copy()
    r = xhat[..., 0]
    th = xhat[..., 1]
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)


def corner_condition(x, q, s):
    """Condition number of the corner at x with next vertex q, previous s."""
    a = np.asarray(x, dtype=float) - np.asarray(q, dtype=float)
    b = np.asarray(x, dtype=float) - np.asarray(s, dtype=float)
    D = a[0] * b[1] - a[1] * b[0]
    return (a @ a + b @ b) / D


def _node_corner_csr(mesh: Mesh):
    """Corner indices grouped by their center node (built once per mesh)."""
    if "nc_csr" not in mesh.conn_cache:
        order = np.argsort(mesh.corner_node, kind="stable")
        counts = np.bincount(mesh.corner_node, minlength=mesh.n_nodes)
        start = np.concatenate([[0], np.cumsum(counts)])
        mesh.conn_cache["nc_csr"] = (order, start)
    return mesh.conn_cache["nc_csr"]


def _boundary_neighbors(mesh: Mesh):
    if "bnd_nbrs" not in mesh.conn_cache:
        nbrs = {}
        for i in np.nonzero(mesh.corner_face_tag)[0]:
            a, b = int(mesh.corner_node[i]), int(mesh.corner_next[i])
            nbrs.setdefault(a, []).append(b)
            nbrs.setdefault(b, []).append(a)
        mesh.conn_cache["bnd_nbrs"] = nbrs
    return mesh.conn_cache["bnd_nbrs"]


def _mapped_triples(mesh, X, nodes_c, nxt, prv):
    """Map (center, next, prev) corner points into each center node's frame.

    Any neighbor sitting at the origin is replicated to (r=0, theta of the
    center node); vectorized over corners.
    """
    polar = mesh.region[nodes_c] == 1
    xc = X[nodes_c].copy()
    xq = X[nxt].copy()
    xs = X[prv].copy()
    if np.any(polar):
        for arr, is_center in ((xc, True), (xq, False), (xs, False)):
            sub = arr[polar]
            r = np.hypot(sub[:, 0], sub[:, 1])
            th = np.arctan2(sub[:, 1], sub[:, 0])
            if not is_center:
                # Origin replica: r = 0 rows take the center node's angle.
                at0 = r < _ORIGIN_TOL
                if np.any(at0):
                    cen = xc[polar]
                    th[at0] = cen[at0, 1]  # xc already mapped (center first)
                    r[at0] = 0.0
            arr[polar, 0] = r
            arr[polar, 1] = th
    return xc, xq, xs


def _kappa_terms(xc, xq, xs):
    """Per-corner kappa, gradient and Hessian entries w.r.t. the center."""
    a = xc - xq
    b = xc - xs
    N = (a * a).sum(1) + (b * b).sum(1)
    D = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    gx = xq[:, 1] - xs[:, 1]
    gy = xs[:, 0] - xq[:, 0]
    dNx = 2.0 * (a[:, 0] + b[:, 0])
    dNy = 2.0 * (a[:, 1] + b[:, 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = N / D
        invD = 1.0 / D
        invD2 = invD * invD
        invD3 = invD2 * invD
        kx = dNx * invD - N * gx * invD2
        ky = dNy * invD - N * gy * invD2
        hxx = 4.0 * invD - 2.0 * dNx * gx * invD2 + 2.0 * N * gx * gx * invD3
        hxy = (-(dNx * gy + dNy * gx)) * invD2 + 2.0 * N * gx * gy * invD3
        hyy = 4.0 * invD - 2.0 * dNy * gy * invD2 + 2.0 * N * gy * gy * invD3
    return kappa, D, kx, ky, hxx, hxy, hyy


def _node_F(mesh, X, p, x_cand_hat=None):
    """F_p = sum of corner condition numbers in node p's frame; the center
    may be overridden with a candidate mapped position.  Returns (F, min D)."""
    order, start = _node_corner_csr(mesh)
    idx = order[start[p]:start[p + 1]]
    nodes_c = mesh.corner_node[idx]
    xc, xq, xs = _mapped_triples(mesh, X, nodes_c, mesh.corner_next[idx],
                                 mesh.corner_prev[idx])
    if x_cand_hat is not None:
        xc = np.tile(np.asarray(x_cand_hat, dtype=float), (len(idx), 1))
    kappa, D, *_ = _kappa_terms(xc, xq, xs)
    if np.any(D <= 0.0):
        return np.inf, float(D.min())
    return float(kappa.sum()), float(D.min())


def smooth_interior(mesh: Mesh, X: np.ndarray, movable: np.ndarray,
                    max_halvings: int = 10) -> np.ndarray:
    """One Jacobi sweep of Newton descent on F_p for the movable nodes.

    Returns candidate positions (physical frame).  Each node's step is
    halved until no incident corner folds and F_p does not increase; nodes
    with an indefinite Hessian (or already-folded corners) stay put.
    """
    order, start = _node_corner_csr(mesh)
    nodes_c = mesh.corner_node[order]
    xc, xq, xs = _mapped_triples(mesh, X, nodes_c, mesh.corner_next[order],
                                 mesh.corner_prev[order])
    kappa, D, kx, ky, hxx, hxy, hyy = _kappa_terms(xc, xq, xs)

    n = mesh.n_nodes
    valid_corner = D > 0.0
    ok = np.ones(n, dtype=bool)
    np.minimum.at(ok, nodes_c, valid_corner)
    F0 = np.zeros(n)
    np.add.at(F0, nodes_c, np.where(valid_corner, kappa, 0.0))
    Gx = np.zeros(n); Gy = np.zeros(n)
    Hxx = np.zeros(n); Hxy = np.zeros(n); Hyy = np.zeros(n)
    np.add.at(Gx, nodes_c, kx)
    np.add.at(Gy, nodes_c, ky)
    np.add.at(Hxx, nodes_c, hxx)
    np.add.at(Hxy, nodes_c, hxy)
    np.add.at(Hyy, nodes_c, hyy)

    det = Hxx * Hyy - Hxy * Hxy
    posdef = (Hxx > 0.0) & (det > 0.0)
    active = movable & ok & posdef
    with np.errstate(divide="ignore", invalid="ignore"):
        dx = np.where(active, -(Hyy * Gx - Hxy * Gy) / det, 0.0)
        dy = np.where(active, -(Hxx * Gy - Hxy * Gx) / det, 0.0)

    # Mapped current positions of the centers, one row per node.
    xhat0 = np.zeros((n, 2))
    xhat0[nodes_c] = xc  # repeated writes agree per node
    lam = np.ones(n)
    pending = active.copy()
    accepted_hat = xhat0.copy()
    for _ in range(max_halvings + 1):
        if not np.any(pending):
            break
        cand_hat = xhat0 + lam[:, None] * np.column_stack([dx, dy])
        # Evaluate fold + objective at candidate centers, per corner.
        cc = cand_hat[nodes_c]
        kappa_c, D_c, *_ = _kappa_terms(cc, xq, xs)
        bad = np.zeros(n, dtype=bool)
        np.maximum.at(bad, nodes_c, D_c <= 0.0)
        F1 = np.zeros(n)
        np.add.at(F1, nodes_c, np.where(D_c > 0.0, kappa_c, np.inf))
        good = pending & ~bad & (F1 <= F0 + 1e-14 * np.abs(F0))
        accepted_hat[good] = cand_hat[good]
        pending = pending & ~good
        lam[pending] *= 0.5
    # pending nodes keep their original position.
    out = X.copy()
    moved = active & ~pending
    for p in np.nonzero(moved)[0]:
        out[p] = map_back(accepted_hat[p], int(mesh.region[p]))
    return out


def smooth_boundary_node(mesh: Mesh, X: np.ndarray, p: int,
                         n_golden: int = 60, frame: str = "node"):
    """Slide a boundary node along the quadratic Bezier curve through its
    two boundary neighbors; the control point is chosen so the curve passes
    through the current position at s = 1/2.  Returns the new physical
    position (s minimizes F_p; s = 1/2 reproduces the current position).

    frame 'node' builds the curve in the node's mapped coordinates (static
    smoothing harness); 'physical' builds it in physical coordinates, which
    keeps nodes of straight boundaries exactly on their line (affine
    combinations of exact coordinates).
    """
    nbrs = _boundary_neighbors(mesh).get(p)
    if not nbrs or len(nbrs) != 2:
        return X[p].copy()
    beta = int(mesh.region[p])
    Pm_hat = map_to_polar(X[p], beta)
    physical = frame == "physical"

    if physical:
        P0, P2, Pm = X[nbrs[0]], X[nbrs[1]], X[p]
    else:
        def in_frame(x):
            xh = map_to_polar(x, beta)
            if beta == 1 and xh[0] < _ORIGIN_TOL:
                return np.array([0.0, Pm_hat[1]])  # origin replica
            return xh
        P0, P2, Pm = in_frame(X[nbrs[0]]), in_frame(X[nbrs[1]]), Pm_hat
    Xi = 2.0 * Pm - 0.5 * (P0 + P2)

    def curve(s):
        return (1 - s) ** 2 * P0 + 2 * s * (1 - s) * Xi + s ** 2 * P2

    def F(s):
        cand = curve(s)
        if physical:
            cand = map_to_polar(cand, beta)
        val, _ = _node_F(mesh, X, p, x_cand_hat=cand)
        return val

    lo, hi = 0.0, 1.0
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    c = hi - phi * (hi - lo)
    d = lo + phi * (hi - lo)
    fc, fd = F(c), F(d)
    for _ in range(n_golden):
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - phi * (hi - lo)
            fc = F(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + phi * (hi - lo)
            fd = F(d)
    s_best = 0.5 * (lo + hi)
    # Accept only a strict improvement over the current position (s = 1/2),
    # so an already-optimal node stays put exactly.
    F_half = F(0.5)
    if not (F(s_best) < F_half - 1.0e-12 * abs(F_half)):
        return X[p].copy()
    out = curve(s_best)
    return out if physical else map_back(out, beta)


def rezone(mesh: Mesh, config: RezoneConfig | None = None,
           X_start=None) -> np.ndarray:
    """Smoothed candidate positions after the configured sweeps.

    The input mesh must be valid (untangling is out of scope).  Fixed nodes
    (origin, domain corners) never move; boundary nodes follow the Bezier
    rule when boundary smoothing is enabled.  Jacobi update order with a
    global fold safeguard: if a simultaneous sweep folds a previously valid
    corner, the whole sweep displacement is halved.
    """
    config = config or RezoneConfig()
    X = mesh.nodes.copy() if X_start is None else np.asarray(X_start, float).copy()
    work = mesh.with_positions(X)
    invalid, _ = validate(work)
    if invalid:
        raise TanglingError(f"rezone requires a valid mesh; bad cells {invalid[:8]}")
    boundary = np.zeros(mesh.n_nodes, dtype=bool)
    boundary[mesh.boundary_nodes] = True
    movable_int = ~mesh.fixed & ~boundary
    cross0_pos = mesh.with_positions(X).corner_cross() > 0.0
    nbrs = _boundary_neighbors(mesh)

    for _ in range(config.sweeps):
        work = mesh.with_positions(X)
        X_new = smooth_interior(work, X, movable_int, config.max_halvings)
        if config.boundary_smoothing != "off":
            for p in mesh.boundary_nodes:
                if mesh.fixed[p]:
                    continue
                if config.boundary_smoothing == "auto":
                    # Slide only along straight boundary portions: the
                    # swept-face remap then sees exactly zero boundary
                    # flux.  Curved boundaries stay Lagrangian.
                    two = nbrs.get(int(p))
                    if not two or len(two) != 2:
                        continue
                    e1 = X[two[0]] - X[p]
                    e2 = X[two[1]] - X[p]
                    cr = e1[0] * e2[1] - e1[1] * e2[0]
                    if abs(cr) > 1.0e-12 * (np.hypot(*e1) * np.hypot(*e2)):
                        continue
                    X_new[p] = smooth_boundary_node(work, X, int(p),
                                                    frame="physical")
                else:
                    X_new[p] = smooth_boundary_node(work, X, int(p))
        # Global safeguard: a simultaneous update must not fold any corner
        # that was valid at the start of the sweep.
        lam = 1.0
        for _ in range(config.max_halvings + 1):
            X_try = X + lam * (X_new - X)
            cross = mesh.with_positions(X_try).corner_cross()
            if not np.any(cross0_pos & (cross <= 0.0)):
                X = X_try
                break
            lam *= 0.5
        else:
            break  # no displacement possible without folding
    return X


def relax(X_lag: np.ndarray, X_rez: np.ndarray, omega) -> np.ndarray:
    """Convex combination X_lag + omega * (X_rez - X_lag), omega per node
    or scalar in [0, 1]."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0.0) or np.any(omega > 1.0):
        raise ValueError("relaxation weights must lie in [0, 1]")
    if omega.ndim == 1:
        omega = omega[:, None]
    # Barycentric form: exact at both endpoints.
    return (1.0 - omega) * X_lag + omega * X_rez


def adaptive_omega(mesh: Mesh, X_before: np.ndarray, X_after: np.ndarray,
                   mu: float = 1.0) -> np.ndarray:
    """Per-node relaxation weight from the Lagrangian step deformation.

    The corner deformation gradient Fd maps the pre-step corner edges onto
    the post-step ones; omega_p = min(1, mu * max_corners ||Fd^T Fd - I||_F)
    so rigid motion gives omega = 0 (pure Lagrangian) and strong shear turns
    the rezoning on.
    """
    a0 = X_before[mesh.corner_node] - X_before[mesh.corner_next]
    b0 = X_before[mesh.corner_node] - X_before[mesh.corner_prev]
    a1 = X_after[mesh.corner_node] - X_after[mesh.corner_next]
    b1 = X_after[mesh.corner_node] - X_after[mesh.corner_prev]
    det0 = a0[:, 0] * b0[:, 1] - a0[:, 1] * b0[:, 0]
    safe = np.abs(det0) > 1e-300
    inv = np.zeros((len(a0), 2, 2))
    inv[safe, 0, 0] = b0[safe, 1] / det0[safe]
    inv[safe, 0, 1] = -b0[safe, 0] / det0[safe]
    inv[safe, 1, 0] = -a0[safe, 1] / det0[safe]
    inv[safe, 1, 1] = a0[safe, 0] / det0[safe]
    M = np.stack([a1, b1], axis=2)          # columns a1 | b1
    Fd = np.einsum("nij,njk->nik", M, inv)
    C = np.einsum("nji,njk->nik", Fd, Fd)
    C[:, 0, 0] -= 1.0
    C[:, 1, 1] -= 1.0
    dev = np.sqrt((C ** 2).sum(axis=(1, 2)))
    omega = np.zeros(mesh.n_nodes)
    np.maximum.at(omega, mesh.corner_node, np.where(safe, dev, 0.0))
    return np.minimum(1.0, mu * omega)
