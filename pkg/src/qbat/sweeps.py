"""Sweeps over protocol duration and global phase, and the max-power search.

All grids are given in the dimensionless product ``omega0 * tau``.  Every
grid cell is an independent evolution from the ground state; cells are
evaluated in batches (optionally on several threads) and reassembled by
index, so results never depend on scheduling.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import BatterySpectrum, DomainError, PulseSchedule, PulseShape, ShapeKind, TWO_PI
from .dynamics import IntegratorConfig, final_states
from .linalg import hermiticity_error
from .metrics import ergotropy, purity

INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
# ergotropy can exceed eps3 - eps1 only by integration error
_C_SLACK = 1e-8


def worker_count() -> int:
    env = os.environ.get("QBAT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"QBAT_THREADS must be an integer, got {env!r}") from None
    return max(1, min(8, os.cpu_count() or 1))


@dataclass
class RunStats:
    """Worst invariant deviations seen across evaluated cells."""

    cells: int = 0
    trace_drift: float = 0.0
    purity_drift: float = 0.0
    hermiticity: float = 0.0

    def update(self, rhos: np.ndarray, trace_drift: float) -> None:
        self.cells += int(np.prod(rhos.shape[:-2]))
        self.trace_drift = max(self.trace_drift, trace_drift)
        if rhos.size:
            self.purity_drift = max(self.purity_drift, float(np.max(np.abs(purity(rhos) - 1.0))))
            self.hermiticity = max(self.hermiticity, hermiticity_error(rhos))


def evaluate_ergotropy(
    schedule: PulseSchedule,
    spectrum: BatterySpectrum,
    omega0_tau,
    phi,
    config: IntegratorConfig | None = None,
    stats: RunStats | None = None,
    workers: int | None = None,
) -> np.ndarray:
    """Final ergotropy ``C(tau)`` for each broadcast ``(omega0_tau, phi)`` pair."""
    x, ph = np.broadcast_arrays(np.asarray(omega0_tau, float), np.asarray(phi, float))
    shape = x.shape
    x = x.ravel()
    ph = ph.ravel()
    taus = x / schedule.omega0
    workers = workers or worker_count()
    out = np.empty(x.size)
    if x.size == 0:
        return out.reshape(shape)
    n_chunks = min(workers, max(1, x.size // 16))
    bounds = np.linspace(0, x.size, n_chunks + 1).astype(int)

    def run(i):
        sl = slice(bounds[i], bounds[i + 1])
        return sl, final_states(schedule, taus[sl], ph[sl], config)

    if n_chunks == 1:
        results = [run(0)]
    else:
        with ThreadPoolExecutor(max_workers=n_chunks) as pool:
            results = list(pool.map(run, range(n_chunks)))
    for sl, res in results:
        out[sl] = ergotropy(res.rhos, spectrum)
        if stats is not None:
            stats.update(res.rhos, res.max_trace_drift)
    return out.reshape(shape)


@dataclass(frozen=True, eq=False)
class TauSweepResult:
    omega0_tau: np.ndarray
    ergotropy: np.ndarray
    power: np.ndarray
    phi: float = math.pi / 2

    def rows(self):
        return np.column_stack([self.omega0_tau, self.ergotropy, self.power])

    def __len__(self):
        return len(self.omega0_tau)


@dataclass(frozen=True)
class MaxPowerResult:
    tau_star: float
    p_max: float
    c_at_max: float
    coarse_p_max: float = float("nan")


@dataclass(frozen=True, eq=False)
class PhiSweepResult:
    phi: np.ndarray
    results: list

    @property
    def p_max(self) -> np.ndarray:
        return np.array([r.p_max for r in self.results])

    @property
    def tau_star(self) -> np.ndarray:
        return np.array([r.tau_star for r in self.results])

    @property
    def c_at_max(self) -> np.ndarray:
        return np.array([r.c_at_max for r in self.results])

    def rows(self):
        return np.column_stack([self.phi, self.p_max, self.tau_star, self.c_at_max])

    def __iter__(self):
        return iter(zip(self.phi, self.results))

    def __len__(self):
        return len(self.results)


@dataclass(frozen=True, eq=False)
class ContourResult:
    """Charging energy ``C`` and power ``C/tau`` on a ``(phi, omega0_tau)`` grid.

    Matrices are indexed ``[i_phi, i_tau]``.
    """

    phi_grid: np.ndarray
    tau_grid: np.ndarray
    energy_matrix: np.ndarray
    power_matrix: np.ndarray

    def rows(self):
        ph, x = np.meshgrid(self.phi_grid, self.tau_grid, indexing="ij")
        return np.column_stack([ph.ravel(), x.ravel(), self.energy_matrix.ravel(), self.power_matrix.ravel()])


@dataclass(frozen=True)
class TauSearch:
    """Coarse scan of ``omega0_tau`` on ``[lo, hi]`` with spacing ``step``, then
    golden-section refinement to ``tol`` around the best grid point."""

    lo: float = 0.02
    hi: float = 200.0
    step: float = 0.02
    tol: float = 1e-4
    chunk: int = 32

    def __post_init__(self):
        if not (0 < self.lo < self.hi <= 200.0):
            raise DomainError(f"search range must satisfy 0 < lo < hi <= 200, got [{self.lo}, {self.hi}]")
        if not (self.step > 0 and self.tol > 0):
            raise DomainError("step and tol must be positive")

    def grid(self) -> np.ndarray:
        n = int(math.floor((self.hi - self.lo) / self.step + 1e-9)) + 1
        return self.lo + self.step * np.arange(n)


def _check_grid(grid, name):
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional")
    if np.any(~np.isfinite(g)):
        raise DomainError(f"{name} must be finite")
    if g.size > 1 and np.any(np.diff(g) <= 0):
        raise DomainError(f"{name} must be strictly ascending")
    return g


def default_tau_grid(points: int = 500) -> np.ndarray:
    return np.linspace(0.1, 50.0, points)


def default_phi_grid(points: int = 201) -> np.ndarray:
    return np.linspace(0.0, TWO_PI, points)


def sweep_tau(
    schedule: PulseSchedule,
    spectrum: BatterySpectrum,
    grid=None,
    config: IntegratorConfig | None = None,
    stats: RunStats | None = None,
) -> TauSweepResult:
    """``C(tau)`` and ``P(tau) = C/tau`` at ``schedule.phi`` for each ``omega0_tau`` in ``grid``."""
    x = _check_grid(default_tau_grid() if grid is None else grid, "tau grid")
    if np.any(x <= 0):
        raise DomainError("tau grid values must be positive")
    c = evaluate_ergotropy(schedule, spectrum, x, schedule.phi, config, stats)
    return TauSweepResult(x, c, c / (x / schedule.omega0), schedule.phi)


def max_power_over_tau(
    schedule: PulseSchedule,
    spectrum: BatterySpectrum,
    search: TauSearch | None = None,
    config: IntegratorConfig | None = None,
    stats: RunStats | None = None,
) -> MaxPowerResult:
    """Maximum of ``P(tau)`` over ``omega0_tau`` at ``schedule.phi``."""
    return max_power_batch(schedule, spectrum, [schedule.phi], search, config, stats)[0]


def max_power_batch(
    schedule: PulseSchedule,
    spectrum: BatterySpectrum,
    phis,
    search: TauSearch | None = None,
    config: IntegratorConfig | None = None,
    stats: RunStats | None = None,
) -> list[MaxPowerResult]:
    """Max-power search run in lockstep for several phases.

    The coarse scan stops once ``omega0_tau`` exceeds ``C_max / P_best``:
    beyond that point ``P = C/tau <= C_max/tau`` cannot beat the current
    best.  Ties go to the smaller ``tau``.
    """
    search = search or TauSearch()
    phis = np.asarray(phis, dtype=float).ravel()
    m = phis.size
    w0 = schedule.omega0
    cmax = spectrum.c_max() + _C_SLACK
    grid = search.grid()

    best_p = np.full(m, -np.inf)
    best_x = np.full(m, np.nan)
    best_c = np.full(m, np.nan)
    i = 0
    while i < grid.size:
        chunk = grid[i : i + search.chunk]
        cap = np.where(best_p > 0, cmax * w0 / np.where(best_p > 0, best_p, 1.0), np.inf)
        active = np.nonzero(cap >= chunk[0])[0]
        if active.size == 0:
            break
        xx, jj = np.meshgrid(chunk, active, indexing="ij")
        c = evaluate_ergotropy(schedule, spectrum, xx, phis[jj], config, stats)
        p = c / (xx / w0)
        if not np.all(np.isfinite(p)):
            raise ArithmeticError("non-finite power encountered during the coarse scan")
        for col, j in enumerate(active):
            k = int(np.argmax(p[:, col]))
            if p[k, col] > best_p[j]:
                best_p[j], best_x[j], best_c[j] = p[k, col], chunk[k], c[k, col]
        i += search.chunk

    coarse_p = best_p.copy()
    a = np.maximum(best_x - search.step, search.lo)
    b = np.minimum(best_x + search.step, search.hi)

    def power(x):
        cc = evaluate_ergotropy(schedule, spectrum, x, phis, config, stats)
        pp = cc / (x / w0)
        if not np.all(np.isfinite(pp)):
            raise ArithmeticError("non-finite power encountered during refinement")
        return cc, pp

    def keep(x, cc, pp):
        better = (pp > best_p) | ((pp == best_p) & (x < best_x))
        best_p[better] = pp[better]
        best_x[better] = x[better]
        best_c[better] = cc[better]

    h = b - a
    n_iter = max(1, int(math.ceil(math.log(search.tol / (2.0 * search.step)) / math.log(INV_GOLDEN))))
    xc = a + (1 - INV_GOLDEN) * h
    xd = a + INV_GOLDEN * h
    cc_c, pc = power(xc)
    cc_d, pd = power(xd)
    keep(xc, cc_c, pc)
    keep(xd, cc_d, pd)
    for _ in range(n_iter):
        left = pc >= pd  # maximum bracketed by [a, xd]
        a, b = np.where(left, a, xc), np.where(left, xd, b)
        h = b - a
        new_x = np.where(left, a + (1 - INV_GOLDEN) * h, a + INV_GOLDEN * h)
        cn, pn = power(new_x)
        keep(new_x, cn, pn)
        xc, xd, pc, pd = (
            np.where(left, new_x, xd),
            np.where(left, xc, new_x),
            np.where(left, pn, pd),
            np.where(left, pc, pn),
        )
    return [
        MaxPowerResult(float(best_x[j]), float(best_c[j] / (best_x[j] / w0)), float(best_c[j]), float(coarse_p[j]))
        for j in range(m)
    ]


def sweep_phi(
    schedule: PulseSchedule,
    spectrum: BatterySpectrum,
    phi_grid=None,
    search: TauSearch | None = None,
    config: IntegratorConfig | None = None,
    stats: RunStats | None = None,
) -> PhiSweepResult:
    """Maximum power and the ergotropy at the optimum for each phase in ``phi_grid``."""
    phis = _check_grid(default_phi_grid() if phi_grid is None else phi_grid, "phi grid")
    return PhiSweepResult(phis, max_power_batch(schedule, spectrum, phis, search, config, stats))


def contour(
    schedule: PulseSchedule,
    spectrum: BatterySpectrum,
    phi_grid=None,
    tau_grid=None,
    config: IntegratorConfig | None = None,
    stats: RunStats | None = None,
) -> ContourResult:
    """Charging energy and power for every ``(phi, omega0_tau)`` cell."""
    phis = _check_grid(default_phi_grid(61) if phi_grid is None else phi_grid, "phi grid")
    x = _check_grid(default_tau_grid(100) if tau_grid is None else tau_grid, "tau grid")
    if phis.size == 0 or x.size == 0:
        raise DomainError("contour grids must be nonempty")
    if np.any(x <= 0):
        raise DomainError("tau grid values must be positive")
    ph, xx = np.meshgrid(phis, x, indexing="ij")
    c = evaluate_ergotropy(schedule, spectrum, xx, ph, config, stats)
    return ContourResult(phis, x, c, c / (xx / schedule.omega0))


@dataclass(frozen=True)
class RatioResult:
    ratio: float
    closed: MaxPowerResult
    open: MaxPowerResult


def open_loop(schedule: PulseSchedule) -> PulseSchedule:
    return schedule.with_(shape13=PulseShape.zero())


def baseline_ratio(
    shape13: PulseShape,
    spectrum: BatterySpectrum,
    schedule: PulseSchedule | None = None,
    search: TauSearch | None = None,
    config: IntegratorConfig | None = None,
    stats: RunStats | None = None,
) -> RatioResult:
    """Closed-loop maximum power over the open-loop (``shape13 = zero``) maximum.

    Both searches use identical settings; the closed loop runs at
    ``schedule.phi`` (``pi/2`` by default).
    """
    if shape13.kind is ShapeKind.ZERO:
        raise DomainError("baseline ratio needs a nonzero shape13")
    schedule = schedule or PulseSchedule()
    closed = max_power_over_tau(schedule.with_(shape13=shape13), spectrum, search, config, stats)
    base = max_power_over_tau(open_loop(schedule), spectrum, search, config, stats)
    return RatioResult(closed.p_max / base.p_max, closed, base)
