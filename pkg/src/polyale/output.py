"""File outputs: legacy-ASCII VTK snapshots, CSV tables, mesh dumps, logs.

Field ordering is fixed so repeated runs produce byte-identical artifacts.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .mesh import Mesh


def write_vtk(path, mesh: Mesh, cell_data=None, point_data=None,
              title="polyale snapshot"):
    """Legacy ASCII VTK unstructured grid with polygon cells.

    cell_data / point_data map names to scalar arrays or (n, 2) vector
    arrays; insertion order is preserved.
    """
    cell_data = cell_data or {}
    point_data = point_data or {}
    lines = ["# vtk DataFile Version 3.0", title, "ASCII",
             "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_nodes} double"]
    for p in mesh.nodes:
        lines.append(f"{p[0]:.17g} {p[1]:.17g} 0")
    total = sum(len(c) + 1 for c in mesh.cells)
    lines.append(f"CELLS {mesh.n_cells} {total}")
    for c in mesh.cells:
        lines.append(" ".join([str(len(c))] + [str(int(v)) for v in c]))
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines.extend(["7"] * mesh.n_cells)  # VTK_POLYGON
    if cell_data:
        lines.append(f"CELL_DATA {mesh.n_cells}")
        for name, arr in cell_data.items():
            lines.extend(_data_block(name, np.asarray(arr)))
    if point_data:
        lines.append(f"POINT_DATA {mesh.n_nodes}")
        for name, arr in point_data.items():
            lines.extend(_data_block(name, np.asarray(arr)))
    Path(path).write_text("\n".join(lines) + "\n")


def _data_block(name, arr):
    out = []
    if arr.ndim == 2:
        out.append(f"VECTORS {name} double")
        for v in arr:
            out.append(f"{v[0]:.17g} {v[1]:.17g} 0")
    else:
        out.append(f"SCALARS {name} double")
        out.append("LOOKUP_TABLE default")
        for v in arr:
            out.append(f"{v:.17g}")
    return out


def read_vtk(path):
    """Fixture reader for the writer above: returns (points, cells,
    cell_data, point_data)."""
    tokens = Path(path).read_text().split("\n")
    i = 0
    points = cells = None
    cell_data = {}
    point_data = {}
    target = None
    n_items = 0
    while i < len(tokens):
        line = tokens[i].strip()
        if line.startswith("POINTS"):
            n = int(line.split()[1])
            points = np.array([[float(x) for x in tokens[i + 1 + j].split()[:2]]
                               for j in range(n)])
            i += n
        elif line.startswith("CELLS"):
            n = int(line.split()[1])
            cells = []
            for j in range(n):
                parts = [int(x) for x in tokens[i + 1 + j].split()]
                cells.append(parts[1:1 + parts[0]])
            i += n
        elif line.startswith("CELL_DATA"):
            target, n_items = cell_data, int(line.split()[1])
        elif line.startswith("POINT_DATA"):
            target, n_items = point_data, int(line.split()[1])
        elif line.startswith("SCALARS"):
            name = line.split()[1]
            vals = [float(tokens[i + 2 + j]) for j in range(n_items)]
            target[name] = np.array(vals)
            i += n_items + 1
        elif line.startswith("VECTORS"):
            name = line.split()[1]
            vals = [[float(x) for x in tokens[i + 1 + j].split()[:2]]
                    for j in range(n_items)]
            target[name] = np.array(vals)
            i += n_items
        i += 1
    return points, cells, cell_data, point_data


def write_mesh_dump(path, mesh: Mesh):
    """Plain-text mesh dump (node/cell counts, coordinates, connectivity)."""
    lines = [f"{mesh.n_nodes} {mesh.n_cells} {mesh.alpha}"]
    for p in mesh.nodes:
        lines.append(f"{p[0]:.17g} {p[1]:.17g}")
    for c in mesh.cells:
        lines.append(" ".join(str(int(v)) for v in c))
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh_dump(path) -> Mesh:
    lines = Path(path).read_text().strip().split("\n")
    n_nodes, n_cells, alpha = (int(x) for x in lines[0].split())
    nodes = np.array([[float(x) for x in lines[1 + i].split()]
                      for i in range(n_nodes)])
    cells = [[int(x) for x in lines[1 + n_nodes + i].split()]
             for i in range(n_cells)]
    return Mesh(nodes, cells, alpha=alpha)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v
                        for v in row])


def write_profile_csv(path, r, values, name="rho"):
    write_csv(path, ["r", name], list(zip(map(float, r), map(float, values))))


def write_interfaces_csv(path, partitions):
    """Material sub-polygons of the mixed cells, one vertex per row."""
    rows = []
    for c in sorted(partitions):
        part = partitions[c]
        for k in sorted(part.pieces):
            poly = part.pieces[k]
            for j, (x, y) in enumerate(poly):
                rows.append([c, k, j, float(x), float(y)])
    write_csv(path, ["cell", "material", "vertex", "x", "y"], rows)


LOG_FIELDS = ["step", "t", "dt", "mass", "mom_x", "mom_y", "energy",
              "boundary_work", "min_volume", "max_gcl_disc",
              "remap_d_mass", "remap_d_energy", "remap_d_mom"]


def write_log_csv(path, rows):
    write_csv(path, LOG_FIELDS, [[row.get(k, 0.0) for k in LOG_FIELDS]
                                 for row in rows])
