"""Run configuration: plain key = value files with [section] headers.

The full effective configuration is echoed into the output directory so a
run is reproducible from its artifacts alone.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

MODES = ("lagrangian", "eulerian", "ale")


@dataclass
class RunConfig:
    case: str = "sedov"
    mode: str = "ale"
    scale: float = 1.0
    t_end: float | None = None
    cfl: float = 0.25
    max_growth: float = 0.1
    out_dir: str | None = None
    cadence: float | None = None
    figures: bool = True
    # rezoning
    rezone_sweeps: int = 1
    omega_mode: str = "adaptive"      # 'fixed' | 'adaptive'
    omega: float = 1.0
    mu: float = 1.0
    boundary_smoothing: str = "auto"  # 'off' | 'auto' | 'bezier' 
    # remap
    limiter: bool = True
    hybrid: bool = True
    # reconstruction
    centroid_mode: str = "axi"        # 'axi' | 'planar'
    case_kwargs: dict = field(default_factory=dict)

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode}")
        if self.omega_mode not in ("fixed", "adaptive"):
            raise ConfigError(f"bad omega mode {self.omega_mode}")
        if not (0.0 <= self.omega <= 1.0):
            raise ConfigError("omega must lie in [0, 1]")
        if self.cadence is not None and self.cadence <= 0.0:
            raise ConfigError("output cadence must be positive")
        if self.centroid_mode not in ("axi", "planar"):
            raise ConfigError(f"bad centroid mode {self.centroid_mode}")
        if self.boundary_smoothing not in ("off", "auto", "bezier"):
            raise ConfigError(
                f"bad boundary smoothing {self.boundary_smoothing}")
        return self


_BOOL = {"true": True, "1": True, "yes": True, "on": True,
         "false": False, "0": False, "no": False, "off": False}


def _parse_value(s: str):
    s = s.strip()
    if s.lower() in _BOOL:
        return _BOOL[s.lower()]
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    return s


def load_config(path) -> RunConfig:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    cfg = RunConfig()
    run = cp["run"] if cp.has_section("run") else {}
    for key, attr in (("case", "case"), ("mode", "mode"), ("scale", "scale"),
                      ("t_end", "t_end"), ("cfl", "cfl"),
                      ("max_growth", "max_growth"), ("out", "out_dir"),
                      ("cadence", "cadence"), ("figures", "figures")):
        if key in run:
            setattr(cfg, attr, _parse_value(run[key]))
    if cp.has_section("rezone"):
        rz = cp["rezone"]
        if "sweeps" in rz:
            cfg.rezone_sweeps = int(rz["sweeps"])
        if "omega" in rz:
            val = _parse_value(rz["omega"])
            if val == "adaptive":
                cfg.omega_mode = "adaptive"
            else:
                cfg.omega_mode = "fixed"
                cfg.omega = float(val)
        if "mu" in rz:
            cfg.mu = float(rz["mu"])
        if "boundary" in rz:
            val = rz["boundary"].strip()
            if val not in ("off", "auto", "bezier", "fixed"):
                raise ConfigError(f"bad boundary smoothing '{val}'")
            cfg.boundary_smoothing = "off" if val == "fixed" else val
    if cp.has_section("remap"):
        rm = cp["remap"]
        if "limiter" in rm:
            cfg.limiter = _BOOL[rm["limiter"].strip().lower()]
        if "hybrid" in rm:
            cfg.hybrid = _BOOL[rm["hybrid"].strip().lower()]
    if cp.has_section("mof") and "centroids" in cp["mof"]:
        cfg.centroid_mode = cp["mof"]["centroids"].strip()
    if cp.has_section("case"):
        cfg.case_kwargs = {k: _parse_value(v) for k, v in cp["case"].items()}
    return cfg.validate()


def echo_config(cfg: RunConfig, path):
    """Write the effective configuration back out for provenance."""
    cp = configparser.ConfigParser()
    cp["run"] = {
        "case": cfg.case, "mode": cfg.mode, "scale": repr(cfg.scale),
        "t_end": "" if cfg.t_end is None else repr(cfg.t_end),
        "cfl": repr(cfg.cfl), "max_growth": repr(cfg.max_growth),
        "out": cfg.out_dir or "", "cadence":
            "" if cfg.cadence is None else repr(cfg.cadence),
        "figures": str(cfg.figures).lower(),
    }
    cp["rezone"] = {
        "sweeps": str(cfg.rezone_sweeps),
        "omega": ("adaptive" if cfg.omega_mode == "adaptive"
                  else repr(cfg.omega)),
        "mu": repr(cfg.mu),
        "boundary": cfg.boundary_smoothing,
    }
    cp["remap"] = {"limiter": str(cfg.limiter).lower(),
                   "hybrid": str(cfg.hybrid).lower()}
    cp["mof"] = {"centroids": cfg.centroid_mode}
    if cfg.case_kwargs:
        cp["case"] = {k: str(v) for k, v in cfg.case_kwargs.items()}
    with open(Path(path), "w") as f:
        cp.write(f)
