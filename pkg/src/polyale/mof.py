"""Moment-of-fluid interface reconstruction, planar and axisymmetric.

Each material in a mixed cell is known by two moments: its volume (the
R-weighted zeroth moment, always conserved by the reconstruction) and its
centroid.  A single interface is the line whose below-half-plane cut of the
cell matches the target volume exactly (enforced inside the angle search by
a flood fill on the signed distance) and whose sub-polygon centroid is as
close as possible to the target.  Multi-material cells are cut sequentially
(nested dissection); all orderings of the present materials are tried and
the one with the smallest total centroid defect wins.

Centroids can be matched in the axisymmetric measure (int R X dA / int R dA)
or the planar one; the axisymmetric form is the default in cylindrical
geometry, the planar variant is kept for comparison studies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
from scipy.optimize import minimize_scalar

from . import geometry as geo
from .errors import ConfigError

VOLUME_TOL = 1.0e-12        # relative volume conservation of a cut
ABSENT_TOL = 1.0e-14        # material treated as absent below this fraction
MAX_MATERIALS = 4


@dataclass
class MomentSet:
    """Zeroth/first moments of a region in both measures."""
    M0: float
    M1: np.ndarray
    M0_pl: float
    M1_pl: np.ndarray

    @classmethod
    def from_polygon(cls, poly: np.ndarray, alpha: int) -> "MomentSet":
        if len(poly) < 3:
            z = np.zeros(2)
            return cls(0.0, z, 0.0, z.copy())
        A, V, M1pl, M1ax = geo.poly_measures(poly, alpha)
        return cls(V, M1ax, A, M1pl)

    def __add__(self, other: "MomentSet") -> "MomentSet":
        return MomentSet(self.M0 + other.M0, self.M1 + other.M1,
                         self.M0_pl + other.M0_pl, self.M1_pl + other.M1_pl)

    def centroid(self, mode: str) -> np.ndarray:
        if mode == "axi":
            return self.M1 / self.M0 if self.M0 > 0 else self.M1 * 0.0
        return self.M1_pl / self.M0_pl if self.M0_pl > 0 else self.M1_pl * 0.0

    def measure(self, mode: str) -> float:
        return self.M0 if mode == "axi" else self.M0_pl


@dataclass
class InterfacePartition:
    order: tuple
    pieces: dict                      # material -> (n, 2) polygon
    moments: dict                     # material -> MomentSet
    lines: dict = field(default_factory=dict)   # material -> (theta, d)
    defect: float = 0.0
    warning: bool = False


def normal_of(theta: float) -> np.ndarray:
    return np.array([np.cos(theta), np.sin(theta)])


def clip_halfplane(poly: np.ndarray, theta: float, d: float, alpha: int):
    """Sub-polygon {n(theta).X <= d} of poly with its moments."""
    sub = geo.clip_halfplane(poly, normal_of(theta), d)
    return sub, MomentSet.from_polygon(sub, alpha)


# Scalar clip/moment kernel: the flood fill and the angle search evaluate
# tiny polygons thousands of times per cell, where plain float arithmetic
# beats array machinery by more than an order of magnitude.

def _clip_list(pts, nx, ny, d):
    out = []
    m = len(pts)
    sx = [pts[i][0] * nx + pts[i][1] * ny - d for i in range(m)]
    for i in range(m):
        j = i + 1 if i + 1 < m else 0
        si, sj = sx[i], sx[j]
        if si <= 0.0:
            out.append(pts[i])
        if (si < 0.0 and sj > 0.0) or (si > 0.0 and sj < 0.0):
            t = si / (si - sj)
            xi, yi = pts[i]
            xj, yj = pts[j]
            out.append((xi + t * (xj - xi), yi + t * (yj - yi)))
    return out


def _moments_list(pts, alpha):
    """(A, V, M1pl, M1ax) of a scalar polygon; V/M1ax carry the R weight."""
    m = len(pts)
    if m < 3:
        return 0.0, 0.0, (0.0, 0.0), (0.0, 0.0)
    a = mx = my = m11 = m02 = 0.0
    for i in range(m):
        j = i + 1 if i + 1 < m else 0
        x1, y1 = pts[i]
        x2, y2 = pts[j]
        cr = x1 * y2 - x2 * y1
        a += cr
        mx += cr * (x1 + x2)
        my += cr * (y1 + y2)
        if alpha:
            m02 += cr * (y1 * y1 + y1 * y2 + y2 * y2)
            m11 += cr * (2.0 * x1 * y1 + x1 * y2 + x2 * y1 + 2.0 * x2 * y2)
    a *= 0.5
    mx /= 6.0
    my /= 6.0
    if alpha:
        return a, my, (mx, my), (m11 / 24.0, m02 / 12.0)
    return a, a, (mx, my), (mx, my)


def _clip_measure(pts, nx, ny, d, alpha, mode):
    sub = _clip_list(pts, nx, ny, d)
    a, v, _, _ = _moments_list(sub, alpha)
    return v if mode == "axi" else a


def _measure_of(poly, alpha, mode):
    if len(poly) < 3:
        return 0.0
    A, V, _, _ = geo.poly_measures(poly, alpha)
    return V if mode == "axi" else A


def _flood_fill_list(pts, nx, ny, target, alpha, mode, total, d_hint=None):
    lo = min(x * nx + y * ny for x, y in pts)
    hi = max(x * nx + y * ny for x, y in pts)
    if target <= VOLUME_TOL * total:
        return lo
    if target >= total * (1.0 - VOLUME_TOL):
        return hi
    d_lo = lo
    d_hi = hi
    if d_hint is not None and lo < d_hint < hi:
        d = d_hint
    else:
        d = 0.5 * (lo + hi)
    last = None  # previous (d, f) pair for the secant proposal
    for _ in range(120):
        fd = _clip_measure(pts, nx, ny, d, alpha, mode) - target
        if abs(fd) <= VOLUME_TOL * total:
            return d
        if fd > 0.0:
            d_hi = d
        else:
            d_lo = d
        if d_hi - d_lo <= 1.0e-16 * max(abs(d_hi), abs(d_lo), 1.0):
            return d
        # Secant on the two most recent iterates, guarded by the bracket.
        d_new = None
        if last is not None and last[1] != fd:
            d_new = d - fd * (d - last[0]) / (fd - last[1])
        last = (d, fd)
        if d_new is None or not (d_lo < d_new < d_hi):
            d_new = 0.5 * (d_lo + d_hi)
        d = d_new
    return d


def flood_fill(poly: np.ndarray, theta: float, target: float, alpha: int,
               mode: str = "axi") -> float:
    """Distance d such that the clip at angle theta has the target measure.

    The measure is monotone non-decreasing in d, so a bracketing secant
    (regula falsi with bisection safeguard) converges unconditionally;
    iteration stops at VOLUME_TOL relative to the whole-polygon measure.
    """
    total = _measure_of(poly, alpha, mode)
    if total <= 0.0:
        raise ValueError("flood fill on a polygon of zero measure")
    if not (-VOLUME_TOL * total <= target <= total * (1.0 + VOLUME_TOL)):
        raise ValueError(f"flood-fill target {target} outside [0, {total}]")
    pts = [(float(p[0]), float(p[1])) for p in poly]
    return _flood_fill_list(pts, float(np.cos(theta)), float(np.sin(theta)),
                            target, alpha, mode, total)


def reconstruct_single(poly: np.ndarray, target_m0: float,
                       target_centroid: np.ndarray, alpha: int,
                       mode: str = "axi", seeds=None, n_seeds: int = 16,
                       xatol: float = 1.0e-10, n_polish: int = 2):
    """Best single-interface cut of poly matching volume exactly and the
    centroid in the least-squares sense.

    Returns (theta, d, piece, moments, defect, warning).  Exact (defect ~ 0)
    whenever the true sub-region is a half-plane cut.  The angle search
    seeds a coarse scan (plus the direction opposite the target centroid
    offset and any caller-provided warm starts) and polishes the best
    candidates with a bounded scalar minimization; the flood fill is
    warm-started across angle evaluations since neighboring angles cut at
    nearly the same distance.
    """
    from math import cos, sin

    target_centroid = np.asarray(target_centroid, dtype=float)
    cell_ms = MomentSet.from_polygon(poly, alpha)
    cell_c = cell_ms.centroid(mode)
    pts = [(float(p[0]), float(p[1])) for p in poly]
    total = cell_ms.measure(mode)
    tx, ty = float(target_centroid[0]), float(target_centroid[1])
    d_prev = [None]

    def objective(theta):
        nx, ny = cos(theta), sin(theta)
        d = _flood_fill_list(pts, nx, ny, target_m0, alpha, mode, total,
                             d_hint=d_prev[0])
        d_prev[0] = d
        sub = _clip_list(pts, nx, ny, d)
        a, v, m1pl, m1ax = _moments_list(sub, alpha)
        m0 = v if mode == "axi" else a
        if m0 <= 0.0:
            return 1.0e30
        m1 = m1ax if mode == "axi" else m1pl
        dx = m1[0] / m0 - tx
        dy = m1[1] / m0 - ty
        return dx * dx + dy * dy

    angles = list(np.linspace(0.0, 2.0 * np.pi, n_seeds, endpoint=False))
    off = cell_c - target_centroid
    if np.hypot(*off) > 1.0e-14:
        angles.append(float(np.arctan2(off[1], off[0])))
    for s in (seeds or []):
        angles.append(float(s))

    scored = sorted(((objective(th), th) for th in angles))
    span = 2.0 * np.pi / max(n_seeds, 8)
    best = (np.inf, None)
    warning = False
    for f0, th in scored[:n_polish]:
        d_prev[0] = None
        res = minimize_scalar(objective, bounds=(th - span, th + span),
                              method="bounded",
                              options={"xatol": xatol, "maxiter": 200})
        if not res.success:
            warning = True
        cand = (float(res.fun), float(res.x))
        if cand[0] < best[0]:
            best = cand
    f_best, theta = best
    d = flood_fill(poly, theta, target_m0, alpha, mode)
    sub, ms = clip_halfplane(poly, theta, d, alpha)
    dc = ms.centroid(mode) - target_centroid
    return theta, d, sub, ms, float(dc @ dc), warning


def reconstruct_multi(poly: np.ndarray, targets: dict, alpha: int,
                      mode: str = "axi", seeds=None, n_seeds: int = 16,
                      xatol: float = 1.0e-10,
                      n_polish: int = 2) -> InterfacePartition:
    """Nested-dissection partition of a cell into its materials.

    targets maps material id -> (M0_target, centroid_target); every ordering
    of the materials is tried (K <= 4) and nested single-interface cuts are
    applied, the last material receiving the remainder.  The partition with
    the smallest sum of squared centroid defects is returned.
    """
    mats = [k for k, (m0, _) in targets.items()]
    if len(mats) > MAX_MATERIALS:
        raise ConfigError(f"{len(mats)} materials exceeds the ordering cap "
                          f"of {MAX_MATERIALS}")
    if len(mats) == 1:
        k = mats[0]
        ms = MomentSet.from_polygon(poly, alpha)
        return InterfacePartition(order=(k,), pieces={k: poly},
                                  moments={k: ms}, defect=0.0)
    cell_total = _measure_of(poly, alpha, mode)
    seeds = seeds or {}

    best = None
    for perm in permutations(mats):
        remaining = poly
        remaining_m0 = cell_total
        pieces, moments, lines = {}, {}, {}
        defect = 0.0
        warning = False
        feasible = True
        for k in perm[:-1]:
            m0_t, c_t = targets[k]
            if m0_t > remaining_m0 * (1.0 + 1.0e-9):
                feasible = False
                break
            m0_t = min(m0_t, remaining_m0)
            th, d, sub, ms, dk, warn = reconstruct_single(
                remaining, m0_t, c_t, alpha, mode, seeds=seeds.get(k),
                n_seeds=n_seeds, xatol=xatol, n_polish=n_polish)
            pieces[k] = sub
            moments[k] = ms
            lines[k] = (th, d)
            defect += dk
            warning = warning or warn
            remaining = geo.clip_halfplane(remaining, -normal_of(th), -d)
            remaining_m0 -= ms.measure(mode)
            if len(remaining) < 3:
                feasible = len(perm) == len(pieces)
                break
        if not feasible or len(pieces) < len(perm) - 1:
            continue
        k_last = perm[-1]
        ms_last = MomentSet.from_polygon(remaining, alpha)
        pieces[k_last] = remaining
        moments[k_last] = ms_last
        dc = ms_last.centroid(mode) - np.asarray(targets[k_last][1])
        defect += float(dc @ dc)
        if best is None or defect < best.defect:
            best = InterfacePartition(order=perm, pieces=pieces,
                                      moments=moments, lines=lines,
                                      defect=defect, warning=warning)
    if best is None:
        raise ConfigError("no feasible material ordering (volume targets "
                          "inconsistent with the cell)")
    return best


def reconstruct_cell(mesh, materials, c: int, mode: str = "axi",
                     seeds=None, n_seeds: int = 16, xatol: float = 1.0e-10,
                     n_polish: int = 2) -> InterfacePartition:
    """Partition cell c of a mesh from the current material state.

    Volume targets are alpha_k * V_c; materials below the absent threshold
    are excluded from the reconstruction (their mass stays tracked in the
    material state).
    """
    poly = mesh.cell_polygon(c)
    ms = MomentSet.from_polygon(poly, mesh.alpha)
    V_c = ms.M0 if mesh.alpha == 1 else ms.M0_pl
    targets = {}
    for k in range(materials.n_materials):
        frac = materials.alpha[k, c]
        if frac * V_c < ABSENT_TOL * V_c:
            continue
        cen = materials.cax[k, c] if mode == "axi" else materials.cpl[k, c]
        targets[k] = (frac * V_c, cen)
    if not targets:
        raise ConfigError(f"cell {c} has no present material")
    return reconstruct_multi(poly, targets, mesh.alpha, mode, seeds=seeds,
                             n_seeds=n_seeds, xatol=xatol, n_polish=n_polish)


def update_centroids_lagrangian(materials, mesh_old, mesh_new):
    """Carry material centroids through the node motion.

    Centroids are re-expressed in mean-value coordinates of the old cell
    polygon and evaluated at the new vertex positions (exact for affine cell
    motions); degenerate coordinates fall back to the new cell centroid.
    Volume fractions do not change here.
    """
    _, _, _, Xax, Xpl = mesh_new.measures()
    pres = materials.present()
    multi = pres.sum(axis=0) > 1
    for c in range(mesh_new.n_cells):
        old_poly = mesh_old.cell_polygon(c)
        new_poly = mesh_new.cell_polygon(c)
        for k in range(materials.n_materials):
            if not pres[k, c]:
                continue
            if not multi[c]:
                materials.cax[k, c] = Xax[c]
                materials.cpl[k, c] = Xpl[c]
                continue
            for attr, fallback in (("cax", Xax[c]), ("cpl", Xpl[c])):
                arr = getattr(materials, attr)
                mapped = geo.mean_value_map(arr[k, c], old_poly, new_poly)
                arr[k, c] = fallback if mapped is None else mapped
