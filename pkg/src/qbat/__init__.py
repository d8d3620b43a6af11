"""Charging simulations of a closed-loop three-level quantum battery."""

from .core import (
    BatterySpectrum,
    DomainError,
    LabFrameDrive,
    PulseSchedule,
    PulseShape,
    ShapeKind,
    build_interaction_hamiltonian,
    build_lab_hamiltonian,
    eval_pulses,
    switch,
    to_interaction_picture,
)
from .dynamics import (
    DensityState,
    IntegrationDiverged,
    IntegratorConfig,
    Trajectory,
    evolve,
    evolve_lab_frame_equivalence,
    evolve_propagator_oracle,
    evolve_schedule,
    evolve_schedule_oracle,
    final_states,
)
from .metrics import ChargingReport, average_power, energy, ergotropy, populations
from .spectral import adiabatic_ergotropy, eigensystem_phi_half, min_gap
from .sweeps import (
    MaxPowerResult,
    TauSearch,
    baseline_ratio,
    contour,
    max_power_over_tau,
    sweep_phi,
    sweep_tau,
)

__version__ = "0.1.0"
