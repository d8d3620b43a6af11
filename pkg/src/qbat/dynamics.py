"""Liouville-von Neumann time evolution of the 3x3 density matrix.

Two independent routes are provided:

* :func:`evolve` -- classical fixed-step RK4 on ``drho/dt = -i [H, rho]``.
* :func:`evolve_propagator_oracle` -- piecewise-constant propagation
  ``rho <- U rho U^dagger`` with ``U = exp(-i H(t_mid) dt)`` from an exact
  Hermitian eigen-decomposition.

:func:`final_states` is the batched RK4 kernel used by the sweep engine;
every batch element is integrated with its own step count so the result
for a given ``(tau, phi)`` does not depend on what else is in the batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    BatterySpectrum,
    DomainError,
    LabFrameDrive,
    PulseSchedule,
    build_interaction_hamiltonian,
    build_lab_hamiltonian,
    interaction_hamiltonian_from_amplitudes,
    to_interaction_picture,
)
from .linalg import dagger, hermiticity_error, jacobi_eigh

Hamiltonian = Callable[[float], np.ndarray]


class IntegrationDiverged(ArithmeticError):
    """Trace drift exceeded the configured tolerance."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t={time!r}")
        self.time = time


class InvalidState(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DensityState:
    """A 3x3 density matrix: Hermitian, unit trace, positive semidefinite."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (3, 3):
            raise InvalidState(f"density matrix must be 3x3, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        self.validate()

    def validate(self, herm_tol: float = 1e-10, trace_tol: float = 1e-8, pos_tol: float = 1e-8) -> None:
        m = self.matrix
        if not np.all(np.isfinite(m)):
            raise InvalidState("density matrix has non-finite entries")
        if hermiticity_error(m) > herm_tol:
            raise InvalidState("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > trace_tol:
            raise InvalidState(f"trace is {np.trace(m).real!r}, expected 1")
        w, _ = jacobi_eigh(m)
        if w[0] < -pos_tol:
            raise InvalidState(f"negative eigenvalue {w[0]!r}")

    @classmethod
    def basis(cls, k: int) -> "DensityState":
        m = np.zeros((3, 3), dtype=complex)
        m[k, k] = 1.0
        return cls(m)

    @classmethod
    def ground(cls) -> "DensityState":
        return cls.basis(0)

    @classmethod
    def pure(cls, psi) -> "DensityState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def mixed(cls) -> "DensityState":
        return cls(np.eye(3, dtype=complex) / 3.0)


def as_matrix(rho) -> np.ndarray:
    return np.asarray(rho.matrix if isinstance(rho, DensityState) else rho, dtype=complex)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-ordered samples ``(t, rho)`` from ``t = 0`` to ``t = tau``."""

    times: np.ndarray
    rhos: np.ndarray
    sample_stride: int = 1
    n_steps: int = 0

    @property
    def tau(self) -> float:
        return float(self.times[-1])

    @property
    def final(self) -> np.ndarray:
        return self.rhos[-1]

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diagonal(self.rhos, axis1=-2, axis2=-1))

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class IntegratorConfig:
    """Step and tolerance settings.

    ``max_step_scaled`` bounds ``max_t ||H(t)||_2 * dt``; ``min_samples``
    is the least number of stored trajectory samples.
    """

    max_step_scaled: float = 0.01
    trace_drift_tol: float = 1e-8
    picture: str = "interaction"
    min_samples: int = 1000

    def __post_init__(self):
        if not (self.max_step_scaled > 0 and math.isfinite(self.max_step_scaled)):
            raise DomainError("max_step_scaled must be positive")
        if not (self.trace_drift_tol > 0):
            raise DomainError("trace_drift_tol must be positive")
        if self.picture not in ("interaction", "lab"):
            raise DomainError(f"picture must be 'interaction' or 'lab', got {self.picture!r}")
        if self.min_samples < 2:
            raise DomainError("min_samples must be at least 2")

    def n_steps(self, tau: float, h_bound: float) -> int:
        # short runs take extra steps so the trajectory still has min_samples points
        return max(self.min_samples - 1, math.ceil(tau * h_bound / self.max_step_scaled))


def _rhs(h: np.ndarray, rho: np.ndarray) -> np.ndarray:
    # -i[H, rho] with rho H = (H rho)^dagger; keeps the result exactly Hermitian
    x = h @ rho
    return -1j * (x - dagger(x))


def _estimate_bound(hamiltonian_at: Hamiltonian, tau: float, points: int = 1025) -> float:
    # Frobenius norm dominates the spectral norm; pad for peaks between grid points
    ts = np.linspace(0.0, tau, points)
    return 1.1 * max(float(np.linalg.norm(hamiltonian_at(float(t)))) for t in ts)


def evolve(
    hamiltonian_at: Hamiltonian,
    rho0,
    tau: float,
    config: IntegratorConfig | None = None,
    h_bound: float | None = None,
    n_steps: int | None = None,
) -> Trajectory:
    """Integrate ``drho/dt = -i [H(t), rho]`` on ``[0, tau]`` with fixed-step RK4.

    Parameters
    ----------
    hamiltonian_at : callable
        ``t -> H(t)``, a Hermitian 3x3 array.
    rho0 : DensityState or array_like
        Initial state.
    tau : float
        Final time, ``> 0``.
    config : IntegratorConfig, optional
    h_bound : float, optional
        Upper bound on ``||H(t)||_2``; estimated on a grid when omitted.
    n_steps : int, optional
        Overrides the step count derived from ``config`` and ``h_bound``.

    Returns
    -------
    Trajectory
        Samples every ``stride`` steps, always including ``t = 0`` and ``t = tau``.

    Raises
    ------
    IntegrationDiverged
        When ``|Tr rho - 1|`` exceeds ``config.trace_drift_tol``.
    """
    config = config or IntegratorConfig()
    if not (tau > 0 and math.isfinite(tau)):
        raise DomainError(f"tau must be positive, got {tau}")
    rho = as_matrix(rho0).copy()
    if n_steps is None:
        if h_bound is None:
            h_bound = _estimate_bound(hamiltonian_at, tau)
        n_steps = config.n_steps(tau, h_bound)
    n = int(n_steps)
    if n < 1:
        raise DomainError("n_steps must be >= 1")
    stride = max(1, n // (config.min_samples - 1))
    dt = tau / n

    times = [0.0]
    rhos = [rho.copy()]
    h_next = np.asarray(hamiltonian_at(0.0), dtype=complex)
    tol = config.trace_drift_tol
    for k in range(n):
        t = k * dt
        h_a = h_next
        h_b = np.asarray(hamiltonian_at(t + 0.5 * dt), dtype=complex)
        t_end = tau if k == n - 1 else (k + 1) * dt
        h_next = np.asarray(hamiltonian_at(t_end), dtype=complex)
        k1 = _rhs(h_a, rho)
        k2 = _rhs(h_b, rho + (0.5 * dt) * k1)
        k3 = _rhs(h_b, rho + (0.5 * dt) * k2)
        k4 = _rhs(h_next, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        drift = abs(rho[0, 0].real + rho[1, 1].real + rho[2, 2].real - 1.0)
        if not drift <= tol:
            raise IntegrationDiverged(f"trace drift {drift:.3e} exceeds {tol:.1e}", t_end)
        if (k + 1) % stride == 0 or k == n - 1:
            times.append(t_end)
            rhos.append(rho.copy())
    return Trajectory(np.array(times), np.array(rhos), stride, n)


def evolve_propagator_oracle(
    hamiltonian_at: Hamiltonian,
    rho0,
    tau: float,
    n_steps: int,
    record_every: int | None = None,
) -> Trajectory:
    """Piecewise-constant exact propagation with midpoint Hamiltonians.

    All midpoint Hamiltonians are diagonalized together by the Jacobi
    solver; the state is then advanced as ``U rho U^dagger``.
    """
    if n_steps < 1:
        raise DomainError("n_steps must be >= 1")
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")
    dt = tau / n_steps
    mids = (np.arange(n_steps) + 0.5) * dt
    hs = np.array([hamiltonian_at(float(t)) for t in mids], dtype=complex)
    return _propagate(hs, rho0, tau, record_every)


def _propagate(hs: np.ndarray, rho0, tau: float, record_every: int | None) -> Trajectory:
    n_steps = len(hs)
    dt = tau / n_steps
    w, v = jacobi_eigh(hs)
    us = (v * np.exp(-1j * w * dt)[:, None, :]) @ dagger(v)
    record_every = record_every or n_steps
    rho = as_matrix(rho0).copy()
    times, rhos = [0.0], [rho.copy()]
    for k in range(n_steps):
        u = us[k]
        rho = u @ rho @ u.conj().T
        if (k + 1) % record_every == 0 or k == n_steps - 1:
            times.append(tau if k == n_steps - 1 else (k + 1) * dt)
            rhos.append(rho.copy())
    return Trajectory(np.array(times), np.array(rhos), record_every, n_steps)


def oracle_unitarity_error(hamiltonian_at: Hamiltonian, tau: float, n_steps: int) -> float:
    """Largest ``|U^dagger U - I|`` over the oracle's step propagators."""
    dt = tau / n_steps
    hs = np.array([hamiltonian_at(float(t)) for t in (np.arange(n_steps) + 0.5) * dt], dtype=complex)
    w, v = jacobi_eigh(hs)
    us = (v * np.exp(-1j * w * dt)[:, None, :]) @ dagger(v)
    return float(np.max(np.abs(dagger(us) @ us - np.eye(3))))


def oracle_steps(schedule: PulseSchedule, max_step_scaled: float = 0.002) -> int:
    """Oracle step count; midpoint propagation is second order so it needs a finer grid."""
    return max(200, math.ceil(schedule.tau * schedule.rabi_bound() / max_step_scaled))


def interaction_hamiltonian_fn(schedule: PulseSchedule) -> Hamiltonian:
    return lambda t: build_interaction_hamiltonian(schedule, min(max(t, 0.0), schedule.tau))


def evolve_schedule(schedule: PulseSchedule, rho0=None, config: IntegratorConfig | None = None) -> Trajectory:
    """Interaction-picture evolution of a schedule from ``rho0`` (ground state by default)."""
    rho0 = DensityState.ground() if rho0 is None else rho0
    return evolve(interaction_hamiltonian_fn(schedule), rho0, schedule.tau, config, h_bound=schedule.rabi_bound())


def evolve_schedule_oracle(schedule: PulseSchedule, rho0=None, n_steps: int | None = None) -> Trajectory:
    rho0 = DensityState.ground() if rho0 is None else rho0
    n_steps = n_steps or oracle_steps(schedule)
    if n_steps < 1:
        raise DomainError("n_steps must be >= 1")
    mids = (np.arange(n_steps) + 0.5) * (schedule.tau / n_steps)
    return _propagate(build_interaction_hamiltonian(schedule, mids), rho0, schedule.tau, None)


def evolve_lab_frame_equivalence(
    spectrum: BatterySpectrum,
    drive: LabFrameDrive,
    rho0=None,
    config: IntegratorConfig | None = None,
) -> tuple[Trajectory, Trajectory]:
    """Lab-frame and interaction-picture trajectories on a shared time grid.

    Both runs use the same step count (set by the larger lab-frame norm),
    so their samples coincide in time and can be compared directly.  The
    interaction run starts from ``rho0`` expressed in the ``H_int`` frame
    (``D^dagger rho0 D``), which is ``rho0`` itself for diagonal states.
    """
    drive.check(spectrum)
    config = config or IntegratorConfig()
    sched = drive.schedule
    rho0 = DensityState.ground() if rho0 is None else rho0
    lab_bound = float(np.max(np.abs(spectrum.levels))) + sched.rabi_bound()
    n = config.n_steps(sched.tau, lab_bound)
    lab = evolve(lambda t: build_lab_hamiltonian(spectrum, drive, t), rho0, sched.tau, config, n_steps=n)
    rho0_int = lab_to_interaction(as_matrix(rho0), 0.0, spectrum, drive)
    inter = evolve(interaction_hamiltonian_fn(sched), rho0_int, sched.tau, config, n_steps=n)
    return lab, inter


def lab_to_interaction(rho_lab: np.ndarray, t: float, spectrum: BatterySpectrum, drive: LabFrameDrive) -> np.ndarray:
    """Map a lab-frame state onto the frame in which the Hamiltonian is ``H_int``."""
    d = drive.gauge()
    r = to_interaction_picture(rho_lab, t, spectrum)
    return np.conj(d)[:, None] * r * d[None, :]


@dataclass(frozen=True, eq=False)
class BatchResult:
    """Final states of a batch of runs plus their step counts."""

    rhos: np.ndarray
    n_steps: np.ndarray
    max_trace_drift: float = field(default=0.0)
    max_hermiticity_error: float = field(default=0.0)


def final_states(
    schedule: PulseSchedule,
    taus,
    phis,
    config: IntegratorConfig | None = None,
) -> BatchResult:
    """Batched RK4 from the ground state for many ``(tau, phi)`` pairs.

    ``schedule`` supplies the envelopes and ``omega0``; its own ``tau`` and
    ``phi`` are ignored.  Each element takes
    ``ceil(tau * rabi_bound / max_step_scaled)`` steps in normalized time,
    independent of the other elements.
    """
    config = config or IntegratorConfig()
    taus, phis = np.broadcast_arrays(np.asarray(taus, float), np.asarray(phis, float))
    shape = taus.shape
    taus = taus.ravel()
    phis = phis.ravel()
    if taus.size == 0:
        return BatchResult(np.zeros(shape + (3, 3), complex), np.zeros(shape, int))
    if np.any(~np.isfinite(taus)) or np.any(taus <= 0):
        bad = taus[~(np.isfinite(taus) & (taus > 0))][0]
        raise DomainError(f"tau must be positive, got {bad}")
    bound = schedule.rabi_bound()
    n = np.maximum(1, np.ceil(taus * bound / config.max_step_scaled)).astype(np.int64)
    order = np.argsort(n, kind="stable")
    n_sorted = n[order]
    tau_s = taus[order]
    phi_s = phis[order]
    dt = tau_s / n_sorted
    rho = np.zeros((taus.size, 3, 3), dtype=complex)
    rho[:, 0, 0] = 1.0

    # elements finish in ascending n; `start` indexes the first still-active one
    start = 0
    n_max = int(n_sorted[-1])
    h_next = None
    for k in range(n_max):
        while n_sorted[start] <= k:
            start += 1
            h_next = None if h_next is None else h_next[1:]
        nn = n_sorted[start:]
        sl = slice(start, None)
        if h_next is None:
            h_next = _batch_h(schedule, k / nn, phi_s[sl])
        h_a = h_next
        h_b = _batch_h(schedule, (k + 0.5) / nn, phi_s[sl])
        h_next = _batch_h(schedule, np.minimum((k + 1) / nn, 1.0), phi_s[sl])
        d = dt[sl][:, None, None]
        r = rho[sl]
        k1 = _rhs(h_a, r)
        k2 = _rhs(h_b, r + (0.5 * d) * k1)
        k3 = _rhs(h_b, r + (0.5 * d) * k2)
        k4 = _rhs(h_next, r + d * k3)
        rho[sl] = r + (d / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    drift = np.abs(np.real(np.trace(rho, axis1=1, axis2=2)) - 1.0)
    worst = int(np.argmax(drift))
    if not drift[worst] <= config.trace_drift_tol:
        raise IntegrationDiverged(
            f"trace drift {drift[worst]:.3e} exceeds {config.trace_drift_tol:.1e} (phi={phi_s[worst]!r})",
            float(tau_s[worst]),
        )
    out = np.empty_like(rho)
    out[order] = rho
    return BatchResult(
        out.reshape(shape + (3, 3)),
        n.reshape(shape),
        float(np.max(drift)),
        hermiticity_error(out),
    )


def _batch_h(schedule: PulseSchedule, s: np.ndarray, phis: np.ndarray) -> np.ndarray:
    o12, o23, o13 = schedule.amplitudes_at_s(s)
    return interaction_hamiltonian_from_amplitudes(o12, o23, o13, phis)
