"""Command-line interface.

    polyale run [config.ini] [--case NAME] [--mode M] [--scale F]
                [--out DIR] [--until T]
    polyale mof-static [--chi 1 64] [--out DIR]
    polyale rezone-static [--grid polar|mixed] [--coords cartesian|mapped]
                [--sweeps N] [--interfacial cartesian|polar] [--out DIR]

The run subcommand writes VTK snapshots, CSV profiles/interfaces, the
conservation log and PNG figures into the output directory and exits
nonzero on any fatal solver error (tangling, positivity, coverage), naming
the failing phase and cell/node.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import (driver, figures, geometry as geo, mesh as msh, mof,
               mof_static, output, rezone as rz)
from .config import RunConfig, load_config
from .errors import PolyAleError


def _cmd_run(args) -> int:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = RunConfig()
    if args.case:
        cfg.case = args.case
    if args.mode:
        cfg.mode = args.mode
    if args.scale is not None:
        cfg.scale = args.scale
    if args.out:
        cfg.out_dir = args.out
    if args.until is not None:
        cfg.t_end = args.until
    if cfg.out_dir is None:
        cfg.out_dir = f"out_{cfg.case}_{cfg.mode}"
    try:
        result = driver.run(cfg, progress=args.progress)
    except PolyAleError as exc:
        print(f"FATAL [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 2
    last = result.log[-1] if result.log else {}
    print(f"completed {cfg.case} ({cfg.mode}) at t={result.t:.8g} in "
          f"{result.steps} steps; mass={last.get('mass', float('nan')):.12g} "
          f"energy={last.get('energy', float('nan')):.12g}")
    print(f"artifacts in {result.out_dir}")
    return 0


def _cmd_mof_static(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cell = mof_static.CELL
    rows = []
    for chi in args.chi:
        truths = mof_static.static_cases(chi)
        for name, truth in truths.items():
            for mode, alpha in (("planar", 0), ("axi", 1)):
                targets = {}
                for k, poly in enumerate(truth):
                    ms = mof.MomentSet.from_polygon(poly, alpha)
                    targets[k] = (ms.M0 if alpha else ms.M0_pl,
                                  ms.centroid(mode))
                part = mof.reconstruct_multi(cell, targets, alpha, mode)
                sym = []
                for k, poly in enumerate(truth):
                    ia = sum(geo.signed_area(q) for q in
                             geo.intersect_pieces(poly, part.pieces[k]))
                    sym.append(geo.signed_area(poly)
                               + geo.signed_area(part.pieces[k]) - 2 * ia)
                rows.append([name, chi, mode, part.defect, max(sym),
                             " ".join(str(m) for m in part.order)])
                prefix = out / f"{name}_chi{int(chi)}_{mode}"
                output.write_interfaces_csv(f"{prefix}_pieces.csv",
                                            {0: part})
                figures.static_suite_plot(f"{prefix}.png", cell, truth, part,
                                          f"{name} chi={chi} ({mode} centroids)")
    output.write_csv(out / "defects.csv",
                     ["case", "chi", "centroids", "defect",
                      "max_sym_diff_area", "ordering"], rows)
    print(f"static reconstruction suite written to {out}")
    return 0


def _cmd_rezone_static(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.grid == "polar":
        mesh = msh.polar_sector(16, 10, 1.0)
    else:
        mesh = msh.mixed_core_disc(5, 7, 0.25, 1.2,
                                   interfacial_region=args.interfacial)
    if args.coords == "cartesian":
        mesh.region[:] = 0
    X = mesh.nodes.copy()
    output.write_mesh_dump(out / "mesh_0000.txt", mesh)
    figures.mesh_plot(out / "mesh_0000.png", mesh, title="initial")
    cfg = rz.RezoneConfig(sweeps=1, boundary_smoothing=True)
    stride = max(1, args.sweeps // 10)
    for sweep in range(1, args.sweeps + 1):
        X = rz.rezone(mesh.with_positions(X), cfg, X_start=X)
        if sweep % stride == 0 or sweep == args.sweeps:
            work = mesh.with_positions(X)
            output.write_mesh_dump(out / f"mesh_{sweep:04d}.txt", work)
            figures.mesh_plot(out / f"mesh_{sweep:04d}.png", work,
                              title=f"sweep {sweep}")
    disp = float(np.hypot(*(X - mesh.nodes).T).max())
    invalid, folded = msh.validate(mesh.with_positions(X))
    print(f"{args.sweeps} sweeps ({args.coords} coordinates, {args.grid} "
          f"grid): max displacement {disp:.3e}, invalid cells {len(invalid)}")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="polyale",
                                 description="Multi-material ALE "
                                 "hydrodynamics on polygonal meshes")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation")
    p_run.add_argument("config", nargs="?", help="INI configuration file")
    p_run.add_argument("--case", choices=["sedov", "triple_point",
                                          "shock_bubble", "implosion"])
    p_run.add_argument("--mode", choices=["lagrangian", "eulerian", "ale"])
    p_run.add_argument("--scale", type=float)
    p_run.add_argument("--out")
    p_run.add_argument("--until", type=float, help="override the end time")
    p_run.add_argument("--progress", type=int, default=0,
                       help="print progress every N steps")
    p_run.set_defaults(func=_cmd_run)

    p_mof = sub.add_parser("mof-static",
                           help="single-cell reconstruction benchmarks")
    p_mof.add_argument("--chi", type=float, nargs="+", default=[1.0, 64.0])
    p_mof.add_argument("--out", default="out_mof_static")
    p_mof.set_defaults(func=_cmd_mof_static)

    p_rz = sub.add_parser("rezone-static", help="static smoothing harness")
    p_rz.add_argument("--grid", choices=["polar", "mixed"], default="polar")
    p_rz.add_argument("--coords", choices=["cartesian", "mapped"],
                      default="mapped")
    p_rz.add_argument("--sweeps", type=int, default=100)
    p_rz.add_argument("--interfacial", choices=["cartesian", "polar"],
                      default="cartesian")
    p_rz.add_argument("--out", default="out_rezone_static")
    p_rz.set_defaults(func=_cmd_rezone_static)

    args = ap.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
