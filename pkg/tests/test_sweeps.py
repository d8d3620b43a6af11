import math

import numpy as np
import pytest

from qbat import DomainError, PulseSchedule, PulseShape
from qbat.dynamics import evolve_schedule
from qbat.metrics import ergotropy
from qbat.sweeps import (
    RunStats,
    TauSearch,
    baseline_ratio,
    contour,
    evaluate_ergotropy,
    max_power_over_tau,
    sweep_phi,
    sweep_tau,
    worker_count,
)

FAST = TauSearch(lo=0.05, hi=20.0, step=0.1, tol=1e-3)


class TestTauSweep:
    def test_power_times_tau(self, spectrum):
        s = PulseSchedule(shape13=PulseShape.sin_pi())
        res = sweep_tau(s, spectrum, np.linspace(0.1, 12.0, 40))
        rows = res.rows()
        assert rows.shape == (40, 3)
        assert np.max(np.abs(rows[:, 2] * rows[:, 0] - rows[:, 1])) < 1e-10

    def test_omega0_scaling(self, spectrum):
        # the grid is in omega0*tau, so power is reported in units of omega0
        s = PulseSchedule(shape13=PulseShape.sin_pi(), omega0=2.0)
        res = sweep_tau(s, spectrum, [1.0, 3.0])
        assert np.allclose(res.power, res.ergotropy / (res.omega0_tau / 2.0))

    def test_short_protocol_does_not_charge(self, spectrum):
        res = sweep_tau(PulseSchedule(shape13=PulseShape.sin_pi()), spectrum, [1e-3])
        assert res.ergotropy[0] < 1e-5

    def test_open_loop_plateau(self, spectrum):
        res = sweep_tau(PulseSchedule(), spectrum, [40.0, 50.0])
        assert np.all(res.ergotropy > 0.95 * spectrum.c_max())

    def test_matches_trajectory_endpoint(self, spectrum):
        s = PulseSchedule(shape13=PulseShape.one_minus_cos(2), phi=1.1, tau=3.7)
        c = sweep_tau(s, spectrum, [3.7]).ergotropy[0]
        assert c == pytest.approx(ergotropy(evolve_schedule(s).final, spectrum), abs=1e-9)

    @pytest.mark.parametrize("grid", [[2.0, 1.0], [0.0, 1.0], [[1.0, 2.0]], [1.0, math.inf]])
    def test_rejects_bad_grid(self, spectrum, grid):
        with pytest.raises(DomainError):
            sweep_tau(PulseSchedule(), spectrum, grid)

    def test_stats_collected(self, spectrum):
        stats = RunStats()
        sweep_tau(PulseSchedule(shape13=PulseShape.sin_pi()), spectrum, np.linspace(0.5, 10, 20), stats=stats)
        assert stats.cells == 20
        assert stats.trace_drift < 1e-8
        assert stats.purity_drift < 1e-6
        assert stats.hermiticity < 1e-10


class TestMaxPower:
    def test_refinement_never_worse(self, spectrum):
        for shape in (PulseShape.zero(), PulseShape.sin_pi(), PulseShape.one_minus_cos(1)):
            r = max_power_over_tau(PulseSchedule(shape13=shape), spectrum, FAST)
            assert r.p_max >= r.coarse_p_max
            assert r.p_max * r.tau_star == pytest.approx(r.c_at_max, abs=1e-12)

    def test_matches_dense_scan(self, spectrum):
        s = PulseSchedule(shape13=PulseShape.sin_pi())
        r = max_power_over_tau(s, spectrum, FAST)
        x = np.linspace(r.tau_star - 0.05, r.tau_star + 0.05, 41)
        dense = sweep_tau(s, spectrum, x).power
        assert r.p_max >= np.max(dense) - 1e-6

    def test_deterministic(self, spectrum):
        s = PulseSchedule(shape13=PulseShape.one_minus_cos(2))
        assert max_power_over_tau(s, spectrum, FAST) == max_power_over_tau(s, spectrum, FAST)

    def test_thread_count_invariance(self, spectrum, monkeypatch):
        s = PulseSchedule(shape13=PulseShape.sin_pi())
        x = np.linspace(0.1, 8.0, 64)
        phis = np.linspace(0, 2 * math.pi, 64)
        monkeypatch.setenv("QBAT_THREADS", "1")
        one = evaluate_ergotropy(s, spectrum, x, phis)
        monkeypatch.setenv("QBAT_THREADS", "4")
        four = evaluate_ergotropy(s, spectrum, x, phis)
        assert np.array_equal(one, four)

    def test_bad_thread_env(self, monkeypatch):
        monkeypatch.setenv("QBAT_THREADS", "many")
        with pytest.raises(DomainError):
            worker_count()

    @pytest.mark.parametrize("kw", [{"lo": 0.0}, {"hi": 201.0}, {"lo": 5.0, "hi": 1.0}, {"step": 0.0}, {"tol": -1.0}])
    def test_search_validation(self, kw):
        with pytest.raises(DomainError):
            TauSearch(**kw)


class TestPhiAndContour:
    def test_phi_sweep_periodic(self, spectrum):
        s = PulseSchedule(shape13=PulseShape.sin_pi())
        res = sweep_phi(s, spectrum, np.linspace(0, 2 * math.pi, 9), FAST)
        assert len(res) == 9
        assert res.p_max[0] == res.p_max[-1]
        assert np.argmax(res.p_max) == 2  # pi/2
        assert res.rows().shape == (9, 4)

    def test_phi_batch_matches_single(self, spectrum):
        s = PulseSchedule(shape13=PulseShape.one_minus_cos(1))
        phis = np.array([0.3, 1.2, 2.5])
        res = sweep_phi(s, spectrum, phis, FAST)
        single = max_power_over_tau(s.with_(phi=1.2), spectrum, FAST)
        assert res.results[1] == single

    def test_contour(self, spectrum):
        s = PulseSchedule(shape13=PulseShape.sin_pi())
        phis = np.linspace(0, 2 * math.pi, 5)
        x = np.linspace(0.5, 6.0, 7)
        res = contour(s, spectrum, phis, x)
        assert res.energy_matrix.shape == (5, 7)
        assert np.array_equal(res.energy_matrix[0], res.energy_matrix[-1])
        assert np.array_equal(res.energy_matrix[1], sweep_tau(s, spectrum, x).ergotropy)
        rows = res.rows()
        assert rows.shape == (35, 4)
        assert np.max(np.abs(rows[:, 3] * rows[:, 1] - rows[:, 2])) < 1e-10

    def test_contour_rejects_empty(self, spectrum):
        with pytest.raises(DomainError):
            contour(PulseSchedule(), spectrum, [], [1.0])


class TestRatio:
    def test_rejects_open_loop(self, spectrum):
        with pytest.raises(DomainError):
            baseline_ratio(PulseShape.zero(), spectrum)

    def test_ratio_consistent(self, spectrum):
        r = baseline_ratio(PulseShape.sin_pi(), spectrum, search=FAST)
        assert r.ratio == pytest.approx(r.closed.p_max / r.open.p_max)
        assert r.ratio > 1.0
