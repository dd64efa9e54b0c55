"""Matplotlib renderings written next to the delimited outputs.

Everything draws on the Agg backend and saves PNG files; nothing here is
needed by the solver itself.
"""

from __future__ import annotations

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import PolyCollection

_MAT_COLORS = ["#3465a4", "#4e9a06", "#cc0000", "#f57900"]


def _poly_collection(mesh, values, cmap="viridis", edge=None):
    polys = [mesh.cell_polygon(c) for c in range(mesh.n_cells)]
    pc = PolyCollection(polys, array=np.asarray(values), cmap=cmap)
    if edge:
        pc.set_edgecolor(edge)
        pc.set_linewidth(0.15)
    return pc


def field_map(path, mesh, values, label, cmap="viridis", show_mesh=False):
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    pc = _poly_collection(mesh, values, cmap=cmap,
                          edge="k" if show_mesh else None)
    ax.add_collection(pc)
    ax.autoscale()
    ax.set_aspect("equal")
    ax.set_xlabel("X")
    ax.set_ylabel("Y")
    fig.colorbar(pc, ax=ax, label=label)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def schlieren_map(path, mesh, shading):
    field_map(path, mesh, shading, "schlieren", cmap="gray")


def mesh_plot(path, mesh, title=None):
    fig, ax = plt.subplots(figsize=(6, 6))
    polys = [mesh.cell_polygon(c) for c in range(mesh.n_cells)]
    pc = PolyCollection(polys, facecolor="none", edgecolor="k", linewidth=0.3)
    ax.add_collection(pc)
    ax.autoscale()
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def radial_profile_plot(path, r, rho, reference=None, label="density"):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(r, rho, ".", ms=2.5, label="cells")
    if reference is not None:
        ax.plot(reference[0], reference[1], "-", lw=1.0, color="crimson",
                label="reference")
        ax.legend(frameon=False)
    ax.set_xlabel("radius")
    ax.set_ylabel(label)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def interface_plot(path, mesh, partitions, materials=None, title=None):
    """Mixed-cell material sub-polygons over a light mesh wireframe."""
    fig, ax = plt.subplots(figsize=(6, 6))
    polys = [mesh.cell_polygon(c) for c in range(mesh.n_cells)]
    ax.add_collection(PolyCollection(polys, facecolor="none",
                                     edgecolor="0.8", linewidth=0.2))
    for c, part in partitions.items():
        for k, poly in part.pieces.items():
            if len(poly) >= 3:
                ax.fill(poly[:, 0], poly[:, 1],
                        color=_MAT_COLORS[k % len(_MAT_COLORS)], alpha=0.8,
                        linewidth=0.0)
    ax.autoscale()
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def static_suite_plot(path, cell, truth, reconstruction, title):
    """Side-by-side true partition and reconstruction of one benchmark cell."""
    fig, axes = plt.subplots(1, 2, figsize=(8, 4))
    for ax, pieces, name in ((axes[0], dict(enumerate(truth)), "true"),
                             (axes[1], reconstruction.pieces, "reconstructed")):
        ax.plot(np.append(cell[:, 0], cell[0, 0]),
                np.append(cell[:, 1], cell[0, 1]), "k-", lw=1)
        for k, poly in pieces.items():
            if len(poly) >= 3:
                ax.fill(poly[:, 0], poly[:, 1],
                        color=_MAT_COLORS[k % len(_MAT_COLORS)], alpha=0.85,
                        linewidth=0.0)
        ax.set_aspect("equal")
        ax.set_title(name)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.suptitle(title)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
