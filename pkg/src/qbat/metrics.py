"""Stored energy, level populations, ergotropy and average charging power.

``ergotropy`` here is the energy held above the ground level,
``Tr(H0 rho) - eps1``.  For the pure states reached by unitary charging
from the ground state this is the quantity plotted against protocol
duration; no passive-state decomposition is attempted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BatterySpectrum, DomainError
from .dynamics import Trajectory, as_matrix


def populations(rho) -> np.ndarray:
    """Diagonal of ``rho`` (works on stacks of matrices too)."""
    return np.real(np.diagonal(as_matrix(rho), axis1=-2, axis2=-1))


def energy(rho, spectrum: BatterySpectrum):
    """``Tr(H0 rho)``."""
    e = populations(rho) @ spectrum.levels
    return float(e) if np.ndim(e) == 0 else e


def ergotropy(rho, spectrum: BatterySpectrum):
    return energy(rho, spectrum) - spectrum.eps1


def average_power(ergotropy_at_tau, tau):
    """``C(tau) / tau``; raises ``DomainError`` for non-positive ``tau``."""
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(~(tau_arr > 0)):
        raise DomainError(f"tau must be positive, got {tau}")
    p = np.asarray(ergotropy_at_tau, dtype=float) / tau_arr
    return float(p) if p.ndim == 0 else p


def purity(rho):
    m = as_matrix(rho)
    return np.real(np.einsum("...ij,...ji->...", m, m))


@dataclass(frozen=True)
class ChargingReport:
    tau: float
    final_energy: float
    ergotropy: float
    avg_power: float
    populations_final: tuple

    @classmethod
    def from_state(cls, rho, tau: float, spectrum: BatterySpectrum) -> "ChargingReport":
        c = ergotropy(rho, spectrum)
        return cls(
            tau=float(tau),
            final_energy=energy(rho, spectrum),
            ergotropy=c,
            avg_power=average_power(c, tau),
            populations_final=tuple(float(p) for p in populations(rho)),
        )

    @classmethod
    def from_trajectory(cls, traj: Trajectory, spectrum: BatterySpectrum) -> "ChargingReport":
        return cls.from_state(traj.final, traj.tau, spectrum)


def trajectory_table(traj: Trajectory, spectrum: BatterySpectrum) -> np.ndarray:
    """Columns ``t, P1, P2, P3, energy, ergotropy`` for every sample."""
    p = traj.populations
    e = p @ spectrum.levels
    return np.column_stack([traj.times, p, e, e - spectrum.eps1])
