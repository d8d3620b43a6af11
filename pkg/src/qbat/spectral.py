"""Instantaneous eigensystem of ``H_int`` at ``phi = pi/2`` and the dark-state ergotropy.

At ``phi = pi/2`` the eigenvalues are ``-Omega, 0, +Omega`` with
``Omega**2 = O12**2 + O23**2 + O13**2``.  The zero-energy (dark) state
``(O23, i O13, -O12) / Omega`` starts on |e1> and ends on |e3> for the
counterintuitive ramp ordering, which is what makes adiabatic charging work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BatterySpectrum, PulseSchedule, eval_pulses, interaction_hamiltonian_from_amplitudes
from .linalg import fix_phase, jacobi_eigh

HALF_PI = math.pi / 2
# below this Omega_0 * tau the charging run is reported as non-adiabatic
ADIABATIC_ADVISORY = 10.0


class SingularFormulaError(ArithmeticError):
    """Closed-form eigenvectors are 0/0 at the requested amplitudes."""


class ContractViolation(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Energies ``(E-, E0, E+)`` and matching eigenvectors as columns."""

    energies: np.ndarray
    states: np.ndarray

    @property
    def dark(self) -> np.ndarray:
        return self.states[:, 1]


def eigensystem_phi_half(omega12: float, omega23: float, omega13: float) -> EigenSystem:
    """Analytic eigenpairs of ``H_int`` at ``phi = pi/2``.

    Raises
    ------
    SingularFormulaError
        If ``Omega`` vanishes or ``O13 = O23 = 0`` (the bright-state
        formulas divide by ``sqrt(O13**2 + O23**2)``).
    """
    a, b, c = float(omega12), float(omega23), float(omega13)
    om = math.sqrt(a * a + b * b + c * c)
    om1 = math.sqrt(c * c + b * b)
    if om == 0.0 or om1 == 0.0:
        raise SingularFormulaError(f"closed form undefined for amplitudes ({a}, {b}, {c})")
    r2 = 1.0 / math.sqrt(2.0)
    e_minus = np.array(
        [
            r2 * (a * b / (om * om1) - 1j * c / om1),
            -r2 * (b / om1 - 1j * a * c / (om * om1)),
            r2 * om1 / om,
        ]
    )
    e_zero = np.array([b / om, 1j * c / om, -a / om])
    e_plus = np.array(
        [
            r2 * (a * b / (om * om1) + 1j * c / om1),
            r2 * (b / om1 + 1j * a * c / (om * om1)),
            r2 * om1 / om,
        ]
    )
    return EigenSystem(np.array([-om, 0.0, om]), np.column_stack([e_minus, e_zero, e_plus]))


def numeric_eigensystem(omega12: float, omega23: float, omega13: float, phi: float = HALF_PI) -> EigenSystem:
    """Jacobi eigensystem with each column's largest entry made real-positive."""
    h = interaction_hamiltonian_from_amplitudes(omega12, omega23, omega13, phi)
    w, v = jacobi_eigh(h)
    return EigenSystem(w, fix_phase(v))


def eigensystem(omega12: float, omega23: float, omega13: float) -> EigenSystem:
    """Closed form where defined, otherwise the numeric fallback."""
    try:
        return eigensystem_phi_half(omega12, omega23, omega13)
    except SingularFormulaError:
        return numeric_eigensystem(omega12, omega23, omega13)


def track_eigensystem(schedule: PulseSchedule, times) -> list[EigenSystem]:
    """Eigensystems along ``times`` with eigenvector phases continuous in ``t``.

    Each state after the first is rotated to have a real, positive overlap
    with its predecessor, so closed-form and numeric points join smoothly.
    """
    out: list[EigenSystem] = []
    prev = None
    for t in np.asarray(times, dtype=float):
        es = eigensystem(*eval_pulses(schedule, t))
        states = es.states
        if prev is not None:
            ov = np.sum(np.conj(prev) * states, axis=0)
            states = states * np.where(np.abs(ov) > 0, np.conj(ov) / np.abs(ov), 1.0)
        out.append(EigenSystem(es.energies, states))
        prev = states
    return out


def dark_state_weights(omega12, omega23, omega13):
    """Level populations ``(O23**2, O13**2, O12**2) / Omega**2`` of the dark state."""
    a, b, c = (np.asarray(x, dtype=float) for x in (omega12, omega23, omega13))
    om2 = a * a + b * b + c * c
    return b * b / om2, c * c / om2, a * a / om2


def adiabatic_ergotropy(schedule: PulseSchedule, spectrum: BatterySpectrum, t) -> float:
    """Ergotropy of the instantaneous dark state at time ``t``.

    Only defined at ``phi = pi/2``; raises ``ContractViolation`` otherwise.
    """
    d = math.remainder(schedule.phi - HALF_PI, 2.0 * math.pi)
    if abs(d) > 1e-12:
        raise ContractViolation(f"dark-state ergotropy requires phi = pi/2, got {schedule.phi}")
    w1, w2, w3 = dark_state_weights(*eval_pulses(schedule, t))
    c = w1 * spectrum.eps1 + w2 * spectrum.eps2 + w3 * spectrum.eps3 - spectrum.eps1
    return float(c) if np.ndim(c) == 0 else c


def rabi_frequency(schedule: PulseSchedule, t):
    o12, o23, o13 = eval_pulses(schedule, t)
    return np.sqrt(np.square(o12) + np.square(o23) + np.square(o13))


def min_gap(schedule: PulseSchedule, grid_points: int = 20001) -> float:
    """Smallest gap ``Omega(t)`` between the dark state and the bright states on a dense grid."""
    t = np.linspace(0.0, schedule.tau, grid_points)
    return float(np.min(rabi_frequency(schedule, t)))


def is_adiabatic(schedule: PulseSchedule) -> bool:
    """Advisory flag only: ``Omega_0 tau >= 10``."""
    return schedule.omega0_tau >= ADIABATIC_ADVISORY
