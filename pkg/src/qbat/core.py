"""Battery spectrum, pulse schedules and the driving Hamiltonians.

Units throughout: hbar = 1 and the drive scale ``omega0`` sets the unit of
frequency, so times are in ``1/omega0`` and energies in ``hbar*omega0``.
Levels are indexed 0, 1, 2 for |e1>, |e2>, |e3>.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


@dataclass(frozen=True)
class BatterySpectrum:
    """Bare levels ``eps1 < eps2 < eps3`` of the battery Hamiltonian."""

    eps1: float = 0.0
    eps2: float = 1.0
    eps3: float = 1.95

    def __post_init__(self):
        levels = (self.eps1, self.eps2, self.eps3)
        if not all(math.isfinite(e) for e in levels):
            raise DomainError(f"levels must be finite, got {levels}")
        if not self.eps1 < self.eps2 < self.eps3:
            raise DomainError(f"levels must satisfy eps1 < eps2 < eps3, got {levels}")

    @property
    def levels(self) -> np.ndarray:
        return np.array([self.eps1, self.eps2, self.eps3])

    def c_max(self) -> float:
        """Largest storable ergotropy, ``eps3 - eps1``."""
        return self.eps3 - self.eps1

    def h0(self) -> np.ndarray:
        return np.diag(self.levels).astype(complex)


class ShapeKind(enum.Enum):
    ZERO = "zero"
    LINEAR_UP = "linear_up"
    LINEAR_DOWN = "linear_down"
    SIN_PI = "sin"
    ONE_MINUS_COS_POW = "one_minus_cos_pow"


@dataclass(frozen=True)
class PulseShape:
    """Dimensionless envelope evaluated on normalized time ``s = t/tau``.

    ``n`` is only meaningful for ``ONE_MINUS_COS_POW`` where the envelope
    is ``(1 - cos(2 pi s))**n`` and peaks at ``2**n``.
    """

    kind: ShapeKind
    n: int = 1

    def __post_init__(self):
        if not isinstance(self.kind, ShapeKind):
            object.__setattr__(self, "kind", ShapeKind(self.kind))
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise DomainError(f"exponent n must be a positive integer, got {self.n!r}")
        if self.kind is not ShapeKind.ONE_MINUS_COS_POW and self.n != 1:
            object.__setattr__(self, "n", 1)

    @classmethod
    def zero(cls):
        return cls(ShapeKind.ZERO)

    @classmethod
    def ramp_up(cls):
        return cls(ShapeKind.LINEAR_UP)

    @classmethod
    def ramp_down(cls):
        return cls(ShapeKind.LINEAR_DOWN)

    @classmethod
    def sin_pi(cls):
        return cls(ShapeKind.SIN_PI)

    @classmethod
    def one_minus_cos(cls, n: int = 1):
        return cls(ShapeKind.ONE_MINUS_COS_POW, n)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        k = self.kind
        if k is ShapeKind.ZERO:
            return np.zeros_like(s)
        if k is ShapeKind.LINEAR_UP:
            return s.copy()
        if k is ShapeKind.LINEAR_DOWN:
            return 1.0 - s
        if k is ShapeKind.SIN_PI:
            # sin(pi) is 1.2e-16, not 0; clamp so the envelope stays nonnegative
            return np.maximum(np.sin(np.pi * s), 0.0)
        return (1.0 - np.cos(TWO_PI * s)) ** self.n

    def peak(self) -> float:
        """Upper bound of the envelope on [0, 1]."""
        if self.kind is ShapeKind.ZERO:
            return 0.0
        if self.kind is ShapeKind.ONE_MINUS_COS_POW:
            return float(2**self.n)
        return 1.0

    @property
    def label(self) -> str:
        if self.kind is ShapeKind.ONE_MINUS_COS_POW:
            return f"{self.kind.value}({self.n})"
        return self.kind.value


@dataclass(frozen=True)
class PulseSchedule:
    """Three drive envelopes, their common scale, the duration and global phase.

    The default is the open-loop STIRAP ramp pair (``shape13`` switched
    off) at ``phi = pi/2``.
    """

    shape12: PulseShape = field(default_factory=PulseShape.ramp_up)
    shape23: PulseShape = field(default_factory=PulseShape.ramp_down)
    shape13: PulseShape = field(default_factory=PulseShape.zero)
    omega0: float = 1.0
    tau: float = 1.0
    phi: float = math.pi / 2

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise DomainError(f"tau must be positive and finite, got {self.tau}")
        if not (math.isfinite(self.omega0) and self.omega0 > 0):
            raise DomainError(f"omega0 must be positive and finite, got {self.omega0}")
        if not math.isfinite(self.phi):
            raise DomainError(f"phi must be finite, got {self.phi}")

    def with_(self, **changes) -> "PulseSchedule":
        from dataclasses import replace

        return replace(self, **changes)

    @property
    def omega0_tau(self) -> float:
        return self.omega0 * self.tau

    def amplitudes_at_s(self, s):
        """Amplitudes ``(O12, O23, O13)`` on normalized time; no domain check."""
        w = self.omega0
        return w * self.shape12(s), w * self.shape23(s), w * self.shape13(s)

    def rabi_bound(self) -> float:
        """Phase-independent upper bound on ``||H_int(t)||_2`` over the window.

        A traceless Hermitian 3x3 matrix has ``lambda_max**2 <= (2/3)||H||_F**2``
        and ``||H_int||_F**2 = 2 Omega**2``; ``Omega`` is bounded by the
        envelope peaks.
        """
        peaks = (self.shape12.peak(), self.shape23.peak(), self.shape13.peak())
        return 2.0 / math.sqrt(3.0) * self.omega0 * math.sqrt(sum(p * p for p in peaks))


def eval_pulses(schedule: PulseSchedule, t):
    """Drive amplitudes ``(O12, O23, O13)`` at time ``t`` in ``[0, tau]``.

    Raises
    ------
    DomainError
        If any ``t`` lies outside the protocol window.
    """
    t_arr = np.asarray(t, dtype=float)
    tol = 1e-12 * schedule.tau
    if np.any(~np.isfinite(t_arr)) or np.any(t_arr < -tol) or np.any(t_arr > schedule.tau + tol):
        raise DomainError(f"t must lie in [0, {schedule.tau}], got {t}")
    s = np.clip(t_arr / schedule.tau, 0.0, 1.0)
    o12, o23, o13 = schedule.amplitudes_at_s(s)
    if np.ndim(t) == 0:
        return float(o12), float(o23), float(o13)
    return o12, o23, o13


def phase_factor(phi):
    """``exp(i phi)`` with ``phi`` first reduced to ``[0, 2 pi)``."""
    return np.exp(1j * np.remainder(phi, TWO_PI))


def interaction_hamiltonian_from_amplitudes(o12, o23, o13, phi) -> np.ndarray:
    """Resonant interaction-picture Hamiltonian for given amplitudes.

    Broadcasts over array arguments, returning shape ``(..., 3, 3)``.
    """
    o12, o23, o13, ph = np.broadcast_arrays(
        np.asarray(o12, float), np.asarray(o23, float), np.asarray(o13, float), phase_factor(phi)
    )
    h = np.zeros(o12.shape + (3, 3), dtype=complex)
    h[..., 0, 1] = o12
    h[..., 1, 0] = o12
    h[..., 1, 2] = o23
    h[..., 2, 1] = o23
    h[..., 0, 2] = o13 * ph
    h[..., 2, 0] = o13 * np.conj(ph)
    return h


def build_interaction_hamiltonian(schedule: PulseSchedule, t) -> np.ndarray:
    """``H_int(t)`` with real 1-2 and 2-3 couplings and ``O13 exp(i phi)`` on 1-3."""
    o12, o23, o13 = eval_pulses(schedule, t)
    return interaction_hamiltonian_from_amplitudes(o12, o23, o13, schedule.phi)


def switch(t, tau: float):
    """Charger switch: 1 on the closed window ``[0, tau]``, 0 elsewhere.

    The endpoints are included so fixed-step integrators sampling the
    Hamiltonian exactly at ``t = 0`` and ``t = tau`` see the drive.
    """
    t = np.asarray(t, dtype=float)
    out = ((t >= 0.0) & (t <= tau)).astype(float)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LabFrameDrive:
    """Carrier frequencies and individual phases of the three fields.

    ``resonant`` builds the drive used throughout: carriers equal to the
    level splittings and the global phase carried by ``phi1`` alone.
    """

    schedule: PulseSchedule
    omega12: float
    omega23: float
    omega13: float
    phi1: float
    phi2: float = 0.0
    phi3: float = 0.0

    @classmethod
    def resonant(cls, schedule: PulseSchedule, spectrum: BatterySpectrum, phi1=None, phi2=0.0, phi3=None):
        if phi1 is None and phi3 is None:
            phi1, phi3 = schedule.phi, 0.0
        elif phi1 is None:
            phi1 = schedule.phi - phi2 + phi3
        elif phi3 is None:
            phi3 = phi1 + phi2 - schedule.phi
        return cls(
            schedule,
            spectrum.eps2 - spectrum.eps1,
            spectrum.eps3 - spectrum.eps2,
            spectrum.eps3 - spectrum.eps1,
            phi1,
            phi2,
            phi3,
        )

    def global_phase(self) -> float:
        return self.phi1 + self.phi2 - self.phi3

    def check(self, spectrum: BatterySpectrum, tol: float = 1e-12) -> None:
        """Raise ``DomainError`` unless the drive is resonant with a consistent phase."""
        want = (spectrum.eps2 - spectrum.eps1, spectrum.eps3 - spectrum.eps2, spectrum.eps3 - spectrum.eps1)
        got = (self.omega12, self.omega23, self.omega13)
        if any(abs(a - b) > tol * max(1.0, abs(b)) for a, b in zip(got, want)):
            raise DomainError(f"drive is not resonant: carriers {got}, splittings {want}")
        d = np.remainder(self.global_phase() - self.schedule.phi + math.pi, TWO_PI) - math.pi
        if abs(d) > 1e-10:
            raise DomainError("phi1 + phi2 - phi3 does not match the schedule phase")

    def gauge(self) -> np.ndarray:
        """Diagonal phases taking the rotated lab Hamiltonian to ``H_int``.

        With ``D = diag(1, e^{i phi1}, e^{i(phi1+phi2)})`` one has
        ``D^dagger (e^{i H0 t} H1 e^{-i H0 t}) D = H_int``.
        """
        return np.exp(1j * np.array([0.0, self.phi1, self.phi1 + self.phi2]))


def build_lab_hamiltonian(spectrum: BatterySpectrum, drive: LabFrameDrive, t: float) -> np.ndarray:
    """``H0 + lambda(t) H1(t)`` in the lab frame.

    Each upper-triangle coupling is ``O_jk(t) exp(i(w_jk t - phi_jk))`` so
    that the carriers co-rotate with ``exp(i H0 t)`` and cancel exactly in
    the interaction picture.
    """
    h = spectrum.h0()
    sched = drive.schedule
    lam = switch(t, sched.tau)
    if lam == 0.0:
        return h
    o12, o23, o13 = eval_pulses(sched, t)
    c12 = o12 * np.exp(1j * (drive.omega12 * t - drive.phi1))
    c23 = o23 * np.exp(1j * (drive.omega23 * t - drive.phi2))
    c13 = o13 * np.exp(1j * (drive.omega13 * t - drive.phi3))
    h1 = np.array(
        [[0.0, c12, c13], [np.conj(c12), 0.0, c23], [np.conj(c13), np.conj(c23), 0.0]],
        dtype=complex,
    )
    return h + lam * h1


def rotating_frame(t: float, spectrum: BatterySpectrum) -> np.ndarray:
    """Diagonal of ``exp(i H0 t)``."""
    return np.exp(1j * spectrum.levels * t)


def to_interaction_picture(rho: np.ndarray, t: float, spectrum: BatterySpectrum) -> np.ndarray:
    """``exp(i H0 t) rho exp(-i H0 t)``; populations are untouched."""
    u = rotating_frame(t, spectrum)
    return u[:, None] * np.asarray(rho) * np.conj(u)[None, :]
