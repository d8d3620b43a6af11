import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbat import BatterySpectrum, DensityState, DomainError, PulseSchedule, PulseShape
from qbat.dynamics import as_matrix, evolve_schedule
from qbat.metrics import (
    ChargingReport,
    average_power,
    energy,
    ergotropy,
    populations,
    purity,
    trajectory_table,
)

from conftest import random_density


class TestEnergy:
    @pytest.mark.parametrize("k, e", [(0, 0.0), (1, 1.0), (2, 1.95)])
    def test_basis_states(self, spectrum, k, e):
        rho = DensityState.basis(k)
        assert energy(rho, spectrum) == pytest.approx(e)
        assert ergotropy(rho, spectrum) == pytest.approx(e)

    def test_shifted_ground(self):
        sp = BatterySpectrum(0.5, 1.0, 2.0)
        assert energy(DensityState.ground(), sp) == pytest.approx(0.5)
        assert ergotropy(DensityState.ground(), sp) == pytest.approx(0.0)
        assert ergotropy(DensityState.basis(2), sp) == pytest.approx(sp.c_max())

    def test_coherences_do_not_count(self, spectrum):
        rho = DensityState.pure([1 / math.sqrt(2), 0, 1j / math.sqrt(2)])
        assert ergotropy(rho, spectrum) == pytest.approx(0.975)

    @given(st.floats(0, 1), st.integers(0, 2**31))
    @settings(max_examples=100, deadline=None)
    def test_linear_in_rho(self, w, seed):
        sp = BatterySpectrum()
        rng = np.random.default_rng(seed)
        a, b = random_density(rng), random_density(rng)
        mix = w * a + (1 - w) * b
        assert energy(mix, sp) == pytest.approx(w * energy(a, sp) + (1 - w) * energy(b, sp), abs=1e-12)

    @given(st.integers(0, 2**31), st.integers(1, 3))
    @settings(max_examples=100, deadline=None)
    def test_bounds(self, seed, rank):
        sp = BatterySpectrum()
        rho = random_density(np.random.default_rng(seed), rank)
        c = ergotropy(rho, sp)
        assert -1e-12 <= c <= sp.c_max() + 1e-12
        assert purity(rho) <= 1 + 1e-12
        assert np.sum(populations(rho)) == pytest.approx(1.0)

    def test_stacks(self, spectrum):
        rhos = np.stack([as_matrix(DensityState.basis(k)) for k in range(3)])
        assert np.allclose(energy(rhos, spectrum), [0, 1, 1.95])
        assert np.allclose(purity(rhos), 1.0)


class TestPower:
    def test_ratio(self):
        assert average_power(1.95, 2.0) == pytest.approx(0.975)
        assert np.allclose(average_power([1.0, 2.0], [2.0, 4.0]), 0.5)

    @pytest.mark.parametrize("tau", [0.0, -1.0, math.nan])
    def test_rejects_bad_tau(self, tau):
        with pytest.raises(DomainError):
            average_power(1.0, tau)


class TestReport:
    def test_from_trajectory(self, spectrum):
        s = PulseSchedule(shape13=PulseShape.sin_pi(), tau=3.0)
        tr = evolve_schedule(s)
        rep = ChargingReport.from_trajectory(tr, spectrum)
        assert rep.tau == 3.0
        assert rep.avg_power * rep.tau == pytest.approx(rep.ergotropy, abs=1e-12)
        assert sum(rep.populations_final) == pytest.approx(1.0, abs=1e-9)
        assert rep.final_energy == pytest.approx(rep.ergotropy)

    def test_table_columns(self, spectrum):
        tr = evolve_schedule(PulseSchedule(shape13=PulseShape.sin_pi(), tau=2.0))
        tab = trajectory_table(tr, spectrum)
        assert tab.shape == (len(tr), 6)
        assert np.array_equal(tab[:, 0], tr.times)
        assert np.allclose(tab[:, 1:4].sum(axis=1), 1.0, atol=1e-9)
        assert np.allclose(tab[:, 4], tab[:, 1:4] @ spectrum.levels)
        assert tab[0, 5] == pytest.approx(0.0, abs=1e-15)
