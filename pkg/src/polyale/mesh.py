"""Unstructured polygonal mesh with corner geometry and R-weighted measures.

Connectivity is static for the whole run; only node positions change, so all
adjacency (corner tables, face neighbors, node->cell lists) is built once and
shared by the position-updated views returned from :meth:`Mesh.with_positions`.

Geometry convention: cell vertex lists are counterclockwise, so the outward
normal of the edge p -> p+ is the rotated edge direction (dy, -dx)/|d|.  The
corner normal of the pair (p, c) is L+ N+ + L- N- with L+- the half lengths
of the edges adjacent to p in c.
"""

from __future__ import annotations

import numpy as np

from . import geometry as geo
from .errors import DegenerateEdgeError, InvalidCellError

INTERIOR = ""


def pseudo_radius(alpha: int, y):
    """Measure weight R(y) = 1 - alpha + alpha*y.

    alpha = 0 is planar geometry (R = 1); alpha = 1 is axisymmetric and R is
    the distance to the rotation axis y = 0.
    """
    return 1.0 - alpha + alpha * np.asarray(y, dtype=float)


class Mesh:
    """Polygonal mesh: positions + static connectivity + boundary tags."""

    def __init__(self, nodes, cells, alpha=0, face_tags=None, region=None,
                 fixed=None, _parent=None):
        self.nodes = np.asarray(nodes, dtype=float)
        if _parent is not None:
            self._share_connectivity(_parent)
            return
        self.cells = [np.asarray(c, dtype=np.int64) for c in cells]
        self.alpha = int(alpha)
        self.n_nodes = len(self.nodes)
        self.n_cells = len(self.cells)
        self._build_corners()
        self._build_adjacency(face_tags or {})
        self.region = (np.zeros(self.n_nodes, dtype=np.uint8)
                       if region is None else np.asarray(region, dtype=np.uint8))
        self.fixed = (np.zeros(self.n_nodes, dtype=bool)
                      if fixed is None else np.asarray(fixed, dtype=bool))
        self.initial_nodes = self.nodes.copy()

    # -- construction -----------------------------------------------------

    def _build_corners(self):
        sizes = np.array([len(c) for c in self.cells])
        self.cell_start = np.concatenate([[0], np.cumsum(sizes)])
        n_corners = int(self.cell_start[-1])
        self.corner_cell = np.empty(n_corners, dtype=np.int64)
        self.corner_node = np.empty(n_corners, dtype=np.int64)
        self.corner_prev = np.empty(n_corners, dtype=np.int64)
        self.corner_next = np.empty(n_corners, dtype=np.int64)
        for c, verts in enumerate(self.cells):
            k = len(verts)
            s = self.cell_start[c]
            self.corner_cell[s:s + k] = c
            self.corner_node[s:s + k] = verts
            self.corner_prev[s:s + k] = np.roll(verts, 1)
            self.corner_next[s:s + k] = np.roll(verts, -1)

    def _build_adjacency(self, face_tags):
        edge_map = {}
        for i in range(len(self.corner_cell)):
            key = (min(self.corner_node[i], self.corner_next[i]),
                   max(self.corner_node[i], self.corner_next[i]))
            edge_map.setdefault(key, []).append(i)
        self.corner_face_neighbor = np.full(len(self.corner_cell), -1, dtype=np.int64)
        tag_names = [INTERIOR]
        tag_index = {INTERIOR: 0}
        self.corner_face_tag = np.zeros(len(self.corner_cell), dtype=np.int16)
        for key, corners in edge_map.items():
            if len(corners) == 2:
                a, b = corners
                self.corner_face_neighbor[a] = self.corner_cell[b]
                self.corner_face_neighbor[b] = self.corner_cell[a]
            elif len(corners) == 1:
                tag = face_tags.get(key, "wall")
                if tag not in tag_index:
                    tag_index[tag] = len(tag_names)
                    tag_names.append(tag)
                self.corner_face_tag[corners[0]] = tag_index[tag]
            else:
                raise InvalidCellError(f"edge {key} shared by >2 cells")
        self.boundary_tag_names = tag_names

        # Node -> incident cells, counterclockwise by centroid direction.
        node_cells = [[] for _ in range(self.n_nodes)]
        for i in range(len(self.corner_cell)):
            node_cells[self.corner_node[i]].append(self.corner_cell[i])
        centroids = np.array([self.nodes[c].mean(axis=0) for c in self.cells])
        self.node_cells = []
        for p, lst in enumerate(node_cells):
            if not lst:
                self.node_cells.append(np.empty(0, dtype=np.int64))
                continue
            d = centroids[lst] - self.nodes[p]
            order = np.argsort(np.arctan2(d[:, 1], d[:, 0]))
            self.node_cells.append(np.asarray(lst, dtype=np.int64)[order])

        # Node boundary tags: union of adjacent boundary-face tags.
        self.node_tags = [set() for _ in range(self.n_nodes)]
        bdry = np.nonzero(self.corner_face_tag)[0]
        for i in bdry:
            t = tag_names[self.corner_face_tag[i]]
            self.node_tags[self.corner_node[i]].add(t)
            self.node_tags[self.corner_next[i]].add(t)
        self.boundary_nodes = np.array(
            [p for p in range(self.n_nodes) if self.node_tags[p]], dtype=np.int64)

        # Unique faces (owner corner per face) for the swept-face remap.
        owners = []
        for key, corners in edge_map.items():
            owners.append(min(corners))
        self.face_owner_corner = np.array(sorted(owners), dtype=np.int64)

        # Node-neighbor cells of each cell (cells sharing >= 1 node).
        self.cell_node_neighbors = []
        for c, verts in enumerate(self.cells):
            s = set()
            for p in verts:
                s.update(node_cells[p])
            s.discard(c)
            self.cell_node_neighbors.append(np.array(sorted(s), dtype=np.int64))

        # Lazily filled connectivity-derived tables, shared by positional
        # variants of this mesh.
        self.conn_cache = {}
        # Generator metadata (grid layout, spacing recipe) for diagnostics.
        self.meta = {}

    def _share_connectivity(self, parent):
        for attr in ("cells", "alpha", "n_nodes", "n_cells", "cell_start",
                     "corner_cell", "corner_node", "corner_prev", "corner_next",
                     "corner_face_neighbor", "corner_face_tag",
                     "boundary_tag_names", "node_cells", "node_tags",
                     "boundary_nodes", "face_owner_corner",
                     "cell_node_neighbors", "conn_cache", "meta", "region",
                     "fixed", "initial_nodes"):
            setattr(self, attr, getattr(parent, attr))

    def with_positions(self, nodes) -> "Mesh":
        """Cheap positional variant sharing all connectivity."""
        return Mesh(nodes, None, _parent=self)

    # -- geometry queries --------------------------------------------------

    def cell_polygon(self, c) -> np.ndarray:
        return self.nodes[self.cells[c]]

    def corner_geometry_arrays(self):
        """Vectorized corner geometry over every (node, cell) pair.

        Returns a dict with half lengths lm/lp, outward unit normals
        nm/np_ (shape (n_corners, 2)) and the corner normal vector
        cnorm = lp*np_ + lm*nm.
        """
        X = self.nodes
        xp = X[self.corner_node]
        xm = X[self.corner_prev]
        xn = X[self.corner_next]
        em = xp - xm               # edge p- -> p
        ep = xn - xp               # edge p -> p+
        len_m = np.hypot(em[:, 0], em[:, 1])
        len_p = np.hypot(ep[:, 0], ep[:, 1])
        if np.any(len_m <= 0.0) or np.any(len_p <= 0.0):
            raise DegenerateEdgeError("zero-length edge")
        nm = np.column_stack([em[:, 1], -em[:, 0]]) / len_m[:, None]
        np_ = np.column_stack([ep[:, 1], -ep[:, 0]]) / len_p[:, None]
        lm = 0.5 * len_m
        lp = 0.5 * len_p
        cnorm = lp[:, None] * np_ + lm[:, None] * nm
        return {"lm": lm, "lp": lp, "nm": nm, "np": np_, "cnorm": cnorm,
                "edge_p": ep, "len_p": len_p}

    def cell_reduce(self, corner_values: np.ndarray) -> np.ndarray:
        """Sum corner-indexed values per cell (deterministic fixed order)."""
        return np.add.reduceat(corner_values, self.cell_start[:-1], axis=0)

    def areas(self) -> np.ndarray:
        """Signed planar cell areas only (cheap validity probe)."""
        X = self.nodes
        x1 = X[self.corner_node, 0]
        y1 = X[self.corner_node, 1]
        x2 = X[self.corner_next, 0]
        y2 = X[self.corner_next, 1]
        return self.cell_reduce(x1 * y2 - x2 * y1) / 2.0

    def measures(self):
        """Planar areas, R-weighted volumes, Rbar and both centroids.

        Returns (A, V, Rbar, Xax, Xpl).  For alpha = 0 the volume equals the
        area and both centroids coincide.
        """
        X = self.nodes
        x1 = X[self.corner_node, 0]
        y1 = X[self.corner_node, 1]
        x2 = X[self.corner_next, 0]
        y2 = X[self.corner_next, 1]
        cr = x1 * y2 - x2 * y1
        A = self.cell_reduce(cr) / 2.0
        m10 = self.cell_reduce(cr * (x1 + x2)) / 6.0
        m01 = self.cell_reduce(cr * (y1 + y2)) / 6.0
        Xpl = np.column_stack([m10, m01]) / A[:, None]
        if self.alpha == 0:
            return A, A.copy(), np.ones_like(A), Xpl.copy(), Xpl
        m02 = self.cell_reduce(cr * (y1 * y1 + y1 * y2 + y2 * y2)) / 12.0
        m11 = self.cell_reduce(cr * (2 * x1 * y1 + x1 * y2 + x2 * y1
                                     + 2 * x2 * y2)) / 24.0
        V = m01
        Rbar = V / A
        Xax = np.column_stack([m11, m02]) / V[:, None]
        return A, V, Rbar, Xax, Xpl

    def min_edge_per_cell(self) -> np.ndarray:
        X = self.nodes
        e = X[self.corner_next] - X[self.corner_node]
        lengths = np.hypot(e[:, 0], e[:, 1])
        return np.minimum.reduceat(lengths, self.cell_start[:-1])

    def corner_cross(self) -> np.ndarray:
        """Per-corner 2x(triangle {p-, p, p+} area); negative = reflex/folded."""
        X = self.nodes
        a = X[self.corner_node] - X[self.corner_next]
        b = X[self.corner_node] - X[self.corner_prev]
        return a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]


def cell_measures(mesh: Mesh, c: int):
    """Single-cell measures (A, V, Rbar, Xax): raises on degenerate cells."""
    poly = mesh.cell_polygon(c)
    A, V, _, M1ax = geo.poly_measures(poly, mesh.alpha)
    if A <= 0.0:
        raise InvalidCellError(f"cell {c} has non-positive area {A}")
    return A, V, V / A, M1ax / V


def corner_geometry(mesh: Mesh, c: int, p: int):
    """Corner geometry of node p in cell c (scalar convenience wrapper)."""
    verts = mesh.cells[c]
    where = np.nonzero(verts == p)[0]
    if len(where) == 0:
        raise ValueError(f"node {p} is not a vertex of cell {c}")
    k = int(where[0])
    i = mesh.cell_start[c] + k
    g = None
    X = mesh.nodes
    xm = X[mesh.corner_prev[i]]
    xp = X[p]
    xn = X[mesh.corner_next[i]]
    em = xp - xm
    ep = xn - xp
    len_m = float(np.hypot(*em))
    len_p = float(np.hypot(*ep))
    if len_m <= 0.0 or len_p <= 0.0:
        raise DegenerateEdgeError(f"zero-length edge at corner ({p}, {c})")
    nm = np.array([em[1], -em[0]]) / len_m
    np_ = np.array([ep[1], -ep[0]]) / len_p
    lm, lp = 0.5 * len_m, 0.5 * len_p
    return {"lm": lm, "lp": lp, "nm": nm, "np": np_,
            "cnorm": lp * np_ + lm * nm}


def validate(mesh: Mesh):
    """Mesh diagnostic: (invalid_cells, folded_corners).

    invalid_cells: non-positive signed area, or a non-simple polygon (edges
    cross) -- these abort a run.  folded_corners: (cell, node) pairs whose
    corner triangle {p-, p, p+} has non-positive area; a simple cell with
    folded corners is merely non-convex and is reported, not fatal.
    """
    A = mesh.areas()
    cross = mesh.corner_cross()
    invalid = set(np.nonzero(A <= 0.0)[0].tolist())
    folded = []
    suspect = np.nonzero(cross <= 0.0)[0]
    checked = set()
    for i in suspect:
        c = int(mesh.corner_cell[i])
        folded.append((c, int(mesh.corner_node[i])))
        if c in checked or c in invalid:
            continue
        checked.add(c)
        if not geo.polygon_is_simple(mesh.cell_polygon(c)):
            invalid.add(c)
    return sorted(invalid), folded


# -- generators -----------------------------------------------------------

def cartesian_box(nx, ny, bounds=(0.0, 1.0, 0.0, 1.0), alpha=0,
                  tags=None) -> Mesh:
    """Structured quad grid; tags maps side names (left/right/bottom/top)
    to boundary-condition tags.  The bottom defaults to the symmetry axis
    when alpha = 1 and y0 = 0."""
    x0, x1, y0, y1 = bounds
    tags = dict(tags or {})
    tags.setdefault("bottom", "axis" if (alpha == 1 and y0 == 0.0) else "wall")
    for side in ("left", "right", "top"):
        tags.setdefault(side, "wall")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    nid = lambda i, j: j * (nx + 1) + i
    nodes = np.array([[xs[i], ys[j]] for j in range(ny + 1) for i in range(nx + 1)])
    cells = []
    for j in range(ny):
        for i in range(nx):
            cells.append([nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)])
    face_tags = {}
    for i in range(nx):
        face_tags[_fkey(nid(i, 0), nid(i + 1, 0))] = tags["bottom"]
        face_tags[_fkey(nid(i, ny), nid(i + 1, ny))] = tags["top"]
    for j in range(ny):
        face_tags[_fkey(nid(0, j), nid(0, j + 1))] = tags["left"]
        face_tags[_fkey(nid(nx, j), nid(nx, j + 1))] = tags["right"]
    fixed = np.zeros(len(nodes), dtype=bool)
    for i, j in [(0, 0), (nx, 0), (0, ny), (nx, ny)]:
        fixed[nid(i, j)] = True
    return Mesh(nodes, cells, alpha=alpha, face_tags=face_tags, fixed=fixed)


def _fkey(a, b):
    return (min(a, b), max(a, b))


def _mirrored_units(n_theta, theta0, theta1):
    """Unit vectors at n_theta+1 equally spaced angles with exact mirror
    symmetry about the mid angle when the range is [0, pi]."""
    thetas = theta0 + (theta1 - theta0) * np.arange(n_theta + 1) / n_theta
    c = np.cos(thetas)
    s = np.sin(thetas)
    if abs(theta0) < 1e-15 and abs(theta1 - np.pi) < 1e-15:
        c[0], s[0] = 1.0, 0.0
        c[n_theta], s[n_theta] = -1.0, 0.0
        for j in range(n_theta + 1):
            k = n_theta - j
            if k < j:
                c[j] = -c[k]
                s[j] = s[k]
        if n_theta % 2 == 0:
            c[n_theta // 2] = 0.0
            s[n_theta // 2] = 1.0
    return c, s


def polar_sector(n_theta, n_r, r_max, theta0=0.0, theta1=np.pi, radii=None,
                 alpha=1, outer_tag="wall") -> Mesh:
    """Equi-angular polar grid with a fan of triangles at the origin.

    radii optionally prescribes the n_r ring radii (ascending); the default
    is uniform spacing.  Straight edges lying on y = 0 are tagged 'axis'
    when alpha = 1, 'wall' otherwise.
    """
    if radii is None:
        radii = np.linspace(0.0, r_max, n_r + 1)[1:]
    radii = np.asarray(radii, dtype=float)
    if len(radii) != n_r:
        raise ValueError("radii must list the n_r ring radii")
    c, s = _mirrored_units(n_theta, theta0, theta1)
    nodes = [np.array([0.0, 0.0])]
    for i in range(n_r):
        for j in range(n_theta + 1):
            nodes.append(np.array([radii[i] * c[j], radii[i] * s[j]]))
    nodes = np.array(nodes)
    nid = lambda i, j: 1 + (i - 1) * (n_theta + 1) + j  # ring i >= 1
    cells = []
    for j in range(n_theta):
        cells.append([0, nid(1, j), nid(1, j + 1)])
    for i in range(1, n_r):
        for j in range(n_theta):
            cells.append([nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)])
    axis_tag0 = "axis" if (alpha == 1 and abs(s[0]) == 0.0) else "wall"
    axis_tag1 = "axis" if (alpha == 1 and abs(s[n_theta]) == 0.0) else "wall"
    face_tags = {}
    face_tags[_fkey(0, nid(1, 0))] = axis_tag0
    face_tags[_fkey(0, nid(1, n_theta))] = axis_tag1
    for i in range(1, n_r):
        face_tags[_fkey(nid(i, 0), nid(i + 1, 0))] = axis_tag0
        face_tags[_fkey(nid(i, n_theta), nid(i + 1, n_theta))] = axis_tag1
    for j in range(n_theta):
        face_tags[_fkey(nid(n_r, j), nid(n_r, j + 1))] = outer_tag
    fixed = np.zeros(len(nodes), dtype=bool)
    fixed[0] = True
    fixed[nid(n_r, 0)] = True
    fixed[nid(n_r, n_theta)] = True
    region = np.ones(len(nodes), dtype=np.uint8)
    mesh = Mesh(nodes, cells, alpha=alpha, face_tags=face_tags,
                region=region, fixed=fixed)
    mesh.meta = {"kind": "polar", "n_theta": n_theta, "n_r": n_r,
                 "radii": radii.copy(), "theta0": theta0, "theta1": theta1}
    return mesh


def mixed_core_disc(m, n_rings, core_half_width, r_max, alpha=1,
                    outer_tag="wall", interfacial_region="cartesian",
                    ring_fractions=None) -> Mesh:
    """Half-disc mesh: Cartesian quad core around the origin, polar-graded
    quad rings between the core boundary and the outer arc.

    m is the number of core cells per half-side (core is 2m x m quads over
    [-s, s] x [0, s]); the ring layer has 4m cells around and n_rings deep.
    Total cells: 2m^2 + 4m*n_rings.  Nodes in the core are tagged as the
    Cartesian rezoning region, ring nodes as polar; the core-boundary nodes
    follow `interfacial_region`.
    """
    s_half = core_half_width
    xs = np.linspace(-s_half, s_half, 2 * m + 1)
    ys = np.linspace(0.0, s_half, m + 1)
    nid = lambda i, j: j * (2 * m + 1) + i
    nodes = [np.array([xs[i], ys[j]]) for j in range(m + 1) for i in range(2 * m + 1)]
    cells = []
    for j in range(m):
        for i in range(2 * m):
            cells.append([nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)])
    # Core boundary path, (s, 0) -> (s, s) -> (-s, s) -> (-s, 0).
    path = [nid(2 * m, j) for j in range(m + 1)]
    path += [nid(i, m) for i in range(2 * m - 1, -1, -1)]
    path += [nid(0, j) for j in range(m - 1, -1, -1)]
    n_path = len(path)  # 4m + 1
    path_pts = np.array([nodes[p] for p in path])
    theta = np.arctan2(path_pts[:, 1], path_pts[:, 0])
    theta[0] = 0.0
    theta[-1] = np.pi
    r_core = np.hypot(path_pts[:, 0], path_pts[:, 1])
    if ring_fractions is None:
        ring_fractions = np.arange(1, n_rings + 1) / n_rings
    ring_ids = []
    for t in ring_fractions:
        row = []
        for k in range(n_path):
            r = r_core[k] + t * (r_max - r_core[k])
            if k == 0:
                pos = np.array([r, 0.0])
            elif k == n_path - 1:
                pos = np.array([-r, 0.0])
            else:
                pos = np.array([r * np.cos(theta[k]), r * np.sin(theta[k])])
            row.append(len(nodes))
            nodes.append(pos)
        ring_ids.append(row)
    rows = [path] + ring_ids
    for j in range(n_rings):
        inner, outer = rows[j], rows[j + 1]
        for k in range(n_path - 1):
            cells.append([inner[k], outer[k], outer[k + 1], inner[k + 1]])
    nodes = np.array(nodes)
    face_tags = {}
    axis_tag = "axis" if alpha == 1 else "wall"
    for i in range(2 * m):
        face_tags[_fkey(nid(i, 0), nid(i + 1, 0))] = axis_tag
    for j in range(n_rings):
        face_tags[_fkey(rows[j][0], rows[j + 1][0])] = axis_tag
        face_tags[_fkey(rows[j][-1], rows[j + 1][-1])] = axis_tag
    outer_row = rows[-1]
    for k in range(n_path - 1):
        face_tags[_fkey(outer_row[k], outer_row[k + 1])] = outer_tag
    region = np.zeros(len(nodes), dtype=np.uint8)
    for row in ring_ids:
        region[row] = 1
    if interfacial_region == "polar":
        region[path] = 1
    else:
        region[path] = 0
    fixed = np.zeros(len(nodes), dtype=bool)
    fixed[outer_row[0]] = True
    fixed[outer_row[-1]] = True
    mesh = Mesh(nodes, cells, alpha=alpha, face_tags=face_tags,
                region=region, fixed=fixed)
    mesh.meta = {"kind": "mixed_core_disc", "m": m, "n_rings": n_rings,
                 "core_half_width": core_half_width, "r_max": r_max}
    return mesh


def equal_mass_radii(shells, counts):
    """Ring radii giving equal mass per ring inside each (r0, r1, rho) shell.

    Mass of a spherical shell scales with rho*(r1^3 - r0^3), so the radii
    follow a cube-root law inside each region.  Returns the concatenated
    ascending radii (region boundaries included once).
    """
    radii = []
    for (r0, r1, _rho), n in zip(shells, counts):
        ks = np.arange(1, n + 1) / n
        radii.extend((r0**3 + ks * (r1**3 - r0**3)) ** (1.0 / 3.0))
    return np.array(radii)
