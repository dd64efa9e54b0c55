"""Run orchestration: the Lagrangian / reconstruct / rezone / remap loop.

Per cycle: a time step bounded by the CFL and volume-growth rules, one
explicit Lagrangian step, material-centroid transport, interface
reconstruction of the mixed cells, then (in ale/eulerian modes) rezoning,
relaxation and the conservative hybrid remap.  Diagnostics are appended to
the run log every cycle; artifacts (VTK, CSV, figures) are emitted at the
configured cadence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cases, figures, lagrange as lag, mof, output, remap, rezone as rz
from .config import RunConfig
from .errors import StagnationError
from .mesh import Mesh


@dataclass
class RunResult:
    mesh: Mesh
    state: lag.CellState
    materials: object
    partitions: dict
    log: list
    t: float
    steps: int
    boundary_work: float
    out_dir: str | None = None
    spec: object = None
    extras: dict = field(default_factory=dict)


def _node_min_edge(mesh: Mesh) -> np.ndarray:
    X = mesh.nodes
    e = X[mesh.corner_next] - X[mesh.corner_node]
    lengths = np.hypot(e[:, 0], e[:, 1])
    out = np.full(mesh.n_nodes, np.inf)
    np.minimum.at(out, mesh.corner_node, lengths)
    np.minimum.at(out, mesh.corner_next, lengths)
    return out


def _cap_displacement(mesh: Mesh, X_lag, X_new, frac=0.45):
    """Keep rezoned displacements within the one-ring remap stencil."""
    delta = X_new - X_lag
    norm = np.hypot(delta[:, 0], delta[:, 1])
    cap = frac * _node_min_edge(mesh)
    over = norm > cap
    if np.any(over):
        scale = cap[over] / norm[over]
        delta[over] *= scale[:, None]
    return X_lag + delta


def reconstruct_interfaces(mesh, materials, mode="axi", seeds=None):
    """Partition every multi-material cell; warm-starts the angle search
    with the previous cycle's interface angles.

    Run-loop reconstructions use a reduced seed scan and a looser angle
    tolerance than the static suite: volumes are conserved exactly either
    way, and warm starts keep the search local.
    """
    seeds = seeds or {}
    partitions = {}
    for c in materials.mixed_cells():
        c = int(c)
        warm = seeds.get(c)
        partitions[c] = mof.reconstruct_cell(
            mesh, materials, c, mode=mode, seeds=warm,
            n_seeds=4 if warm else 8, xatol=1.0e-7,
            n_polish=1 if warm else 2)
    return partitions


def _partition_seeds(partitions):
    return {c: {k: [th for th, _ in [part.lines[k]]]
                for k in part.lines}
            for c, part in partitions.items()}


def run(cfg: RunConfig, progress=None) -> RunResult:
    """Execute a configured run; raises solver errors with phase context."""
    cfg.validate()
    spec = cases.CASES[cfg.case](scale=cfg.scale, **cfg.case_kwargs)
    t_end = cfg.t_end if cfg.t_end is not None else spec.t_end
    mesh = spec.mesh
    materials = spec.materials
    state = lag.state_from_materials(mesh, materials, spec.U0)
    multimat = materials.n_materials > 1

    out_dir = Path(cfg.out_dir) if cfg.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
        from .config import echo_config
        echo_config(cfg, out_dir / "polyale.ini")

    rezone_cfg = rz.RezoneConfig(sweeps=cfg.rezone_sweeps,
                                 boundary_smoothing=cfg.boundary_smoothing,
                                 omega_mode=cfg.omega_mode, omega=cfg.omega,
                                 mu=cfg.mu)
    t = 0.0
    steps = 0
    dt_prev = None
    sol = None
    partitions = {}
    seeds = {}
    log = []
    boundary_work = 0.0
    next_output = cfg.cadence if cfg.cadence else np.inf
    snap_index = 0

    if out_dir:
        partitions = reconstruct_interfaces(mesh, materials,
                                            cfg.centroid_mode) if multimat else {}
        _emit(out_dir, snap_index, mesh, state, materials, partitions, cfg, t)
        snap_index += 1

    while t < t_end * (1.0 - 1e-12):
        dt = lag.compute_dt(mesh, state, cfl=cfg.cfl,
                            max_growth=cfg.max_growth, dt_prev=dt_prev,
                            U_nodes=None if sol is None else sol.U)
        dt = min(dt, t_end - t)
        if dt < 1.0e-14 * t_end:
            raise StagnationError(f"time step collapsed to {dt} at t={t}")
        mesh_old = mesh
        mesh, state, sol, sdiag = lag.step(mesh, state, materials, dt,
                                           rules=spec.rules, t=t)
        mof.update_centroids_lagrangian(materials, mesh_old, mesh)
        t += dt
        dt_prev = dt
        steps += 1
        boundary_work += sdiag["boundary_work"]

        rdiag = {}
        if cfg.mode in ("ale", "eulerian"):
            partitions = (reconstruct_interfaces(mesh, materials,
                                                 cfg.centroid_mode, seeds)
                          if multimat else {})
            seeds = _partition_seeds(partitions)
            if cfg.mode == "eulerian":
                X_new = mesh.initial_nodes.copy()
            else:
                X_rez = rz.rezone(mesh, rezone_cfg)
                if cfg.omega_mode == "adaptive":
                    omega = rz.adaptive_omega(mesh, mesh_old.nodes,
                                              mesh.nodes, mu=cfg.mu)
                    omega[mesh.fixed] = 0.0
                else:
                    omega = np.full(mesh.n_nodes, cfg.omega)
                X_new = rz.relax(mesh.nodes, X_rez, omega)
                X_new = _cap_displacement(mesh, mesh.nodes, X_new)
            if np.any(X_new != mesh.nodes):
                state, materials, rdiag = remap.hybrid_remap(
                    mesh, state, materials, partitions, X_new,
                    limiter=cfg.limiter, hybrid=cfg.hybrid)
                mesh = mesh.with_positions(X_new)

        gcl = np.max(np.abs(lag.divergence(mesh, sol.U, V=state.V)
                            - lag.gcl_divergence(mesh, sol.U, V=state.V)))
        mass, mom, energy = lag.totals(state)
        log.append({
            "step": steps, "t": t, "dt": dt, "mass": mass,
            "mom_x": float(mom[0]), "mom_y": float(mom[1]), "energy": energy,
            "boundary_work": boundary_work,
            "min_volume": float(state.V.min()), "max_gcl_disc": float(gcl),
            "remap_d_mass": rdiag.get("d_mass", 0.0),
            "remap_d_energy": rdiag.get("d_energy", 0.0),
            "remap_d_mom": float(np.abs(rdiag.get("d_momentum", 0.0)).max()
                                 if "d_momentum" in rdiag else 0.0),
        })
        if progress and steps % progress == 0:
            print(f"  step {steps:6d}  t={t:.6g}  dt={dt:.3g}")

        if out_dir and t >= next_output * (1.0 - 1e-12):
            if multimat and cfg.mode == "lagrangian":
                partitions = reconstruct_interfaces(mesh, materials,
                                                    cfg.centroid_mode, seeds)
            _emit(out_dir, snap_index, mesh, state, materials, partitions,
                  cfg, t, U_nodes=sol.U)
            snap_index += 1
            next_output += cfg.cadence

    if out_dir:
        if multimat and cfg.mode == "lagrangian":
            partitions = reconstruct_interfaces(mesh, materials,
                                                cfg.centroid_mode, seeds)
        _emit(out_dir, snap_index, mesh, state, materials, partitions, cfg, t,
              final=True, U_nodes=None if sol is None else sol.U)
        output.write_log_csv(out_dir / "conservation_log.csv", log)
    return RunResult(mesh=mesh, state=state, materials=materials,
                     partitions=partitions, log=log, t=t, steps=steps,
                     boundary_work=boundary_work,
                     out_dir=str(out_dir) if out_dir else None, spec=spec)


def _emit(out_dir, index, mesh, state, materials, partitions, cfg, t,
          final=False, U_nodes=None):
    tag = f"{index:04d}"
    speed = np.hypot(state.U[:, 0], state.U[:, 1])
    shade = cases.schlieren(mesh, state.rho)
    cell_data = {"rho": state.rho, "P": state.P, "E": state.E,
                 "speed": speed}
    for k in range(materials.n_materials):
        cell_data[f"alpha_{k}"] = materials.alpha[k]
    cell_data["schlieren"] = shade
    point_data = {"velocity": U_nodes} if U_nodes is not None else None
    output.write_vtk(out_dir / f"snapshot_{tag}.vtk", mesh,
                     cell_data=cell_data,
                     point_data=point_data,
                     title=f"{cfg.case} t={t:.8g}")
    r, rho = cases.radial_profile(mesh, state.rho)
    output.write_profile_csv(out_dir / f"profile_{tag}.csv", r, rho)
    if partitions:
        output.write_interfaces_csv(out_dir / f"interfaces_{tag}.csv",
                                    partitions)
    if cfg.figures:
        figures.field_map(out_dir / f"density_{tag}.png", mesh, state.rho,
                          "density")
        ref = None
        if cfg.case == "sedov" and t > 0:
            rr = np.linspace(1e-3, r.max(), 400)
            ref = (rr, cases.sedov_analytic(rr, t)[0])
        figures.radial_profile_plot(out_dir / f"profile_{tag}.png", r, rho,
                                    reference=ref)
        figures.schlieren_map(out_dir / f"schlieren_{tag}.png", mesh, shade)
        if partitions:
            figures.interface_plot(out_dir / f"interfaces_{tag}.png", mesh,
                                   partitions)
        if final:
            figures.mesh_plot(out_dir / f"mesh_{tag}.png", mesh,
                              title=f"{cfg.case} mesh t={t:.6g}")
