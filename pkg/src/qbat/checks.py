"""Quick invariant suite run by ``qbat validate``."""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from .core import (
    BatterySpectrum,
    LabFrameDrive,
    PulseSchedule,
    PulseShape,
    build_interaction_hamiltonian,
    interaction_hamiltonian_from_amplitudes,
)
from .dynamics import (
    DensityState,
    evolve,
    evolve_lab_frame_equivalence,
    evolve_propagator_oracle,
    evolve_schedule,
    evolve_schedule_oracle,
    oracle_unitarity_error,
)
from .linalg import hermiticity_error
from .metrics import ergotropy, purity
from .spectral import adiabatic_ergotropy, dark_state_weights, eigensystem_phi_half


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _hermitian_hamiltonians():
    worst = 0.0
    for shape in (PulseShape.zero(), PulseShape.sin_pi(), PulseShape.one_minus_cos(2)):
        for phi in (0.0, 1.0, math.pi / 2, 4.0):
            s = PulseSchedule(shape13=shape, tau=3.0, phi=phi)
            worst = max(worst, hermiticity_error(build_interaction_hamiltonian(s, np.linspace(0, 3.0, 31))))
    return worst < 1e-12, f"max |H - H^+| = {worst:.2e}"


def _eigensystem():
    rng = np.random.default_rng(7)
    worst = 0.0
    for a, b, c in rng.uniform(0.01, 4.0, size=(200, 3)):
        es = eigensystem_phi_half(a, b, c)
        h = interaction_hamiltonian_from_amplitudes(a, b, c, math.pi / 2)
        worst = max(worst, float(np.max(np.abs(h @ es.states - es.states * es.energies))))
    return worst < 1e-10, f"max eigen-residual = {worst:.2e}"


def _rabi():
    h = np.zeros((3, 3), complex)
    h[0, 1] = h[1, 0] = 1.0
    tr = evolve(lambda t: h, DensityState.ground(), 10.0)
    err = float(np.max(np.abs(tr.populations[:, 1] - np.sin(tr.times) ** 2)))
    orc = evolve_propagator_oracle(lambda t: h, DensityState.ground(), 10.0, 2000)
    diff = float(np.max(np.abs(orc.populations[-1] - tr.populations[-1])))
    return err < 1e-6 and diff < 1e-6, f"Rabi error {err:.2e}, oracle diff {diff:.2e}"


def _adiabatic_charge():
    sp = BatterySpectrum()
    s = PulseSchedule(shape13=PulseShape.sin_pi(), tau=50.0)
    tr = evolve_schedule(s)
    c = ergotropy(tr.final, sp)
    drift = float(np.max(np.abs(np.real(np.trace(tr.rhos, axis1=1, axis2=2)) - 1)))
    pur = abs(float(purity(tr.final)) - 1.0)
    herm = hermiticity_error(tr.rhos)
    orc = evolve_schedule_oracle(s)
    diff = float(np.max(np.abs(orc.populations[-1] - tr.populations[-1])))
    ok = c >= 0.95 * sp.c_max() and drift < 1e-8 and pur < 1e-6 and herm < 1e-10 and diff < 1e-6
    return ok, f"C={c:.6f}, trace drift {drift:.1e}, purity drift {pur:.1e}, herm {herm:.1e}, oracle diff {diff:.1e}"


def _pictures():
    sp = BatterySpectrum()
    s = PulseSchedule(shape13=PulseShape.sin_pi(), tau=10.0)
    lab, inter = evolve_lab_frame_equivalence(sp, LabFrameDrive.resonant(s, sp))
    diff = float(np.max(np.abs(lab.populations - inter.populations)))
    return diff < 1e-6, f"max population difference {diff:.2e}"


def _dark_state():
    sp = BatterySpectrum()
    s = PulseSchedule(shape13=PulseShape.sin_pi(), tau=1.0)
    w = dark_state_weights(0.3, 0.7, 1.1)
    c0 = adiabatic_ergotropy(s, sp, 0.0)
    c1 = adiabatic_ergotropy(s, sp, 1.0)
    ok = abs(sum(w) - 1.0) < 1e-15 and abs(c0) < 1e-15 and abs(c1 - sp.c_max()) < 1e-12
    return ok, f"weights sum {float(sum(w))!r}, C_ad(0)={c0:.3g}, C_ad(tau)={c1:.6f}"


def _unitarity():
    s = PulseSchedule(shape13=PulseShape.one_minus_cos(2), tau=2.0, phi=0.7)
    err = oracle_unitarity_error(lambda t: build_interaction_hamiltonian(s, t), 2.0, 500)
    return err < 1e-12, f"max |U^+U - I| = {err:.2e}"


CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
    ("hamiltonian-hermitian", _hermitian_hamiltonians),
    ("analytic-eigensystem", _eigensystem),
    ("rabi-and-oracle", _rabi),
    ("oracle-unitarity", _unitarity),
    ("adiabatic-full-charge", _adiabatic_charge),
    ("picture-equivalence", _pictures),
    ("dark-state-weights", _dark_state),
]


def run_checks() -> list[CheckResult]:
    out = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out
