"""Perfect-gas thermodynamics and the mixed-cell equal-strain closure.

Mixed cells share one velocity and total energy; only the thermodynamic
state is per material.  Under the equal-strain assumption every material
sub-volume scales with the cell volume, so volume fractions are constant
through the Lagrangian phase and only densities and internal energies need
updating.  The cell internal-energy increment is split between materials in
proportion to their alpha*P share (a pdV partition), which preserves the
single-material limit and the cell energy budget exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PositivityError

PRESENT_TOL = 1.0e-12


@dataclass(frozen=True)
class GasEos:
    """Polytropic gas: P = rho * eps * (gamma - 1).

    molar_mass is carried as configuration metadata only; the dynamics use
    (gamma, rho, eps) exclusively.
    """
    gamma: float
    molar_mass: float | None = None

    def __post_init__(self):
        if self.gamma <= 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")


def pressure(eos: GasEos, rho, eps):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise PositivityError("non-positive density in pressure()")
    return rho * np.asarray(eps, dtype=float) * (eos.gamma - 1.0)


def sound_speed(eos: GasEos, rho, P):
    """Isentropic sound speed and acoustic impedance Z = rho * a."""
    rho = np.asarray(rho, dtype=float)
    P = np.asarray(P, dtype=float)
    if np.any(rho <= 0.0):
        raise PositivityError("non-positive density in sound_speed()")
    if np.any(P < 0.0):
        raise PositivityError("negative pressure in sound_speed()")
    a = np.sqrt(eos.gamma * P / rho)
    return a, rho * a


class MaterialState:
    """Dense per-material, per-cell state for K materials on n cells.

    alpha[k, c] is the volume fraction, m the partial mass, rho/eps/P the
    partial density, specific internal energy and pressure, cax/cpl the
    material centroids in the axisymmetric and planar measures.  Cells where
    alpha[k, c] <= PRESENT_TOL do not contain material k.
    """

    def __init__(self, eos_list, alpha, m, rho, eps, cax, cpl):
        self.eos = list(eos_list)
        self.alpha = np.asarray(alpha, dtype=float)
        self.m = np.asarray(m, dtype=float)
        self.rho = np.asarray(rho, dtype=float)
        self.eps = np.asarray(eps, dtype=float)
        self.cax = np.asarray(cax, dtype=float)
        self.cpl = np.asarray(cpl, dtype=float)
        self.P = np.zeros_like(self.rho)
        for k, e in enumerate(self.eos):
            mask = self.present(k)
            self.P[k, mask] = pressure(e, self.rho[k, mask], self.eps[k, mask])

    @property
    def n_materials(self):
        return len(self.eos)

    def present(self, k=None):
        if k is None:
            return self.alpha > PRESENT_TOL
        return self.alpha[k] > PRESENT_TOL

    def mixed_cells(self) -> np.ndarray:
        return np.nonzero(self.present().sum(axis=0) > 1)[0]

    def gammas(self) -> np.ndarray:
        return np.array([e.gamma for e in self.eos])

    def copy(self) -> "MaterialState":
        out = MaterialState.__new__(MaterialState)
        out.eos = self.eos
        for attr in ("alpha", "m", "rho", "eps", "P", "cax", "cpl"):
            setattr(out, attr, getattr(self, attr).copy())
        return out


def single_material(eos: GasEos, rho, eps, cax, cpl) -> MaterialState:
    """Whole-domain single-material state (alpha = 1 everywhere)."""
    nc = len(np.asarray(rho))
    alpha = np.ones((1, nc))
    rho = np.asarray(rho, dtype=float)[None, :]
    eps = np.asarray(eps, dtype=float)[None, :]
    m = np.zeros_like(rho)  # caller fills with rho*V once volumes are known
    return MaterialState([eos], alpha, m, rho, eps, cax[None], cpl[None])


def equal_strain_update(materials: MaterialState, V_old, V_new, eps_cell_new):
    """Advance the material thermodynamics through a volume change.

    Volume fractions are untouched; each partial density rescales with the
    cell volume and the cell internal-energy increment (from the hydro
    update, eps_cell_new per unit mass) is distributed over the materials in
    proportion to alpha*P, falling back to mass fractions when the cell is
    pressureless.  Returns the mixture (rho_c, P_c, a_c) arrays.
    """
    V_old = np.asarray(V_old, dtype=float)
    V_new = np.asarray(V_new, dtype=float)
    if np.any(V_new <= 0.0) or np.any(V_old <= 0.0):
        raise PositivityError("non-positive cell volume in equal-strain update")
    pres = materials.present()
    alpha = materials.alpha
    m = materials.m
    m_cell = m.sum(axis=0)

    with np.errstate(divide="ignore", invalid="ignore"):
        rho_new = np.where(pres, m / (alpha * V_new[None, :]), materials.rho)
    if np.any(rho_new[pres] <= 0.0):
        raise PositivityError("non-positive partial density in equal-strain update")

    weight = np.where(pres, alpha * materials.P, 0.0)
    wsum = weight.sum(axis=0)
    frac = np.where(wsum[None, :] > 0.0, weight / np.where(wsum > 0, wsum, 1.0),
                    np.where(pres, m / m_cell[None, :], 0.0))
    delta = m_cell * np.asarray(eps_cell_new, dtype=float) - (m * materials.eps).sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        eps_new = np.where(pres, materials.eps + frac * delta[None, :] / np.where(m > 0, m, 1.0),
                           materials.eps)

    materials.rho = rho_new
    materials.eps = eps_new
    P_new = np.zeros_like(rho_new)
    a_new = np.zeros_like(rho_new)
    for k, e in enumerate(materials.eos):
        mask = pres[k]
        P_new[k, mask] = pressure(e, rho_new[k, mask], eps_new[k, mask])
        a_new[k, mask], _ = sound_speed(e, rho_new[k, mask], P_new[k, mask])
    materials.P = P_new

    rho_c = (alpha * rho_new).sum(axis=0)
    P_c = (alpha * P_new).sum(axis=0)
    a_c = np.where(pres, a_new, 0.0).max(axis=0)
    return rho_c, P_c, a_c
