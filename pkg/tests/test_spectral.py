import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from qbat import PulseSchedule, PulseShape
from qbat.core import interaction_hamiltonian_from_amplitudes
from qbat.dynamics import final_states
from qbat.metrics import ergotropy
from qbat.spectral import (
    ContractViolation,
    SingularFormulaError,
    adiabatic_ergotropy,
    dark_state_weights,
    eigensystem,
    eigensystem_phi_half,
    is_adiabatic,
    min_gap,
    numeric_eigensystem,
    rabi_frequency,
    track_eigensystem,
)

amp = st.floats(0.0, 5.0, allow_nan=False)


def _residual(a, b, c, es):
    h = interaction_hamiltonian_from_amplitudes(a, b, c, math.pi / 2)
    return np.max(np.abs(h @ es.states - es.states * es.energies))


class TestClosedForm:
    def test_random_triples(self):
        rng = np.random.default_rng(11)
        for a, b, c in rng.uniform(0.0, 3.0, size=(1000, 3)):
            es = eigensystem_phi_half(a, b, c)
            om = math.sqrt(a * a + b * b + c * c)
            assert _residual(a, b, c, es) < 1e-10
            assert np.allclose(es.energies, [-om, 0.0, om], atol=1e-12)
            assert np.allclose(es.states.conj().T @ es.states, np.eye(3), atol=1e-12)

    def test_matches_numpy_spectrum(self):
        es = eigensystem_phi_half(0.4, 1.3, 0.8)
        h = interaction_hamiltonian_from_amplitudes(0.4, 1.3, 0.8, math.pi / 2)
        assert np.allclose(es.energies, np.linalg.eigvalsh(h), atol=1e-12)

    def test_dark_state_endpoints(self):
        # counterintuitive ordering: ground at the start, top level at the end
        start = eigensystem_phi_half(0.0, 1.0, 0.0).dark
        end = eigensystem(1.0, 0.0, 0.0).dark
        assert np.allclose(np.abs(start) ** 2, [1, 0, 0])
        assert np.allclose(np.abs(end) ** 2, [0, 0, 1])

    @pytest.mark.parametrize("amps", [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (2.5, 0.0, 0.0)])
    def test_singular_points(self, amps):
        with pytest.raises(SingularFormulaError):
            eigensystem_phi_half(*amps)

    def test_fallback_is_an_eigensystem(self):
        es = eigensystem(1.0, 0.0, 0.0)
        assert _residual(1.0, 0.0, 0.0, es) < 1e-10
        assert np.allclose(es.energies, [-1, 0, 1], atol=1e-12)

    @given(amp, amp, amp)
    @settings(max_examples=200, deadline=None)
    def test_numeric_agrees_up_to_phase(self, a, b, c):
        if a * a + b * b + c * c < 1e-6:
            return
        num = numeric_eigensystem(a, b, c)
        assert _residual(a, b, c, num) < 1e-9
        ana = eigensystem(a, b, c)
        assert np.allclose(num.energies, ana.energies, atol=1e-9)
        # the dark state is nondegenerate, so overlaps have unit modulus
        assert abs(np.vdot(num.dark, ana.dark)) == pytest.approx(1.0, abs=1e-9)


class TestTracking:
    def test_phases_continuous(self):
        s = PulseSchedule(shape13=PulseShape.sin_pi(), tau=1.0)
        systems = track_eigensystem(s, np.linspace(0.0, 1.0, 401))
        for prev, cur in zip(systems, systems[1:]):
            ov = np.sum(np.conj(prev.states) * cur.states, axis=0)
            assert np.all(np.abs(ov - 1.0) < 0.05)

    def test_passes_through_singular_endpoint(self):
        # zero shape13 ends at O13 = O23 = 0, where the closed form breaks down
        s = PulseSchedule(tau=2.0)
        systems = track_eigensystem(s, np.linspace(0.0, 2.0, 51))
        es = systems[-1]
        assert _residual(1.0, 0.0, 0.0, es) < 1e-10
        assert abs(es.dark[2]) == pytest.approx(1.0)


class TestDarkStateErgotropy:
    def test_weights_normalised(self):
        rng = np.random.default_rng(3)
        a, b, c = rng.uniform(0.01, 5.0, size=(3, 1000))
        w = dark_state_weights(a, b, c)
        assert np.max(np.abs(w[0] + w[1] + w[2] - 1.0)) < 1e-15

    def test_known_values(self, spectrum):
        s = PulseSchedule(shape13=PulseShape.sin_pi(), tau=8.0)
        assert adiabatic_ergotropy(s, spectrum, 0.0) == pytest.approx(0.0, abs=1e-15)
        assert adiabatic_ergotropy(s, spectrum, 8.0) == pytest.approx(1.95, abs=1e-12)
        assert adiabatic_ergotropy(s, spectrum, 4.0) == pytest.approx((1 + 0.25 * 1.95) / 1.5, abs=1e-12)

    def test_vectorised(self, spectrum):
        s = PulseSchedule(shape13=PulseShape.sin_pi(), tau=1.0)
        t = np.linspace(0, 1, 11)
        c = adiabatic_ergotropy(s, spectrum, t)
        assert c.shape == (11,)
        assert c[0] == pytest.approx(0.0) and c[-1] == pytest.approx(1.95)

    @pytest.mark.parametrize("phi", [0.0, 1.0, math.pi, -math.pi / 2])
    def test_requires_half_pi(self, spectrum, phi):
        s = PulseSchedule(shape13=PulseShape.sin_pi(), tau=1.0, phi=phi)
        with pytest.raises(ContractViolation):
            adiabatic_ergotropy(s, spectrum, 0.5)

    def test_half_pi_modulo_two_pi(self, spectrum):
        s = PulseSchedule(shape13=PulseShape.sin_pi(), tau=1.0, phi=math.pi / 2 + 2 * math.pi)
        assert adiabatic_ergotropy(s, spectrum, 1.0) == pytest.approx(1.95)

    @pytest.mark.parametrize("omega0_tau, frac", [(50.0, 0.05), (200.0, 0.01)])
    def test_dynamics_follow_dark_state(self, spectrum, omega0_tau, frac):
        s = PulseSchedule(shape13=PulseShape.sin_pi(), tau=omega0_tau)
        c_num = ergotropy(final_states(s, [omega0_tau], [math.pi / 2]).rhos[0], spectrum)
        c_ad = adiabatic_ergotropy(s, spectrum, omega0_tau)
        assert abs(c_num - c_ad) < frac * spectrum.c_max()


class TestGap:
    def test_open_loop_gap(self):
        assert min_gap(PulseSchedule(tau=3.0)) == pytest.approx(1 / math.sqrt(2), abs=1e-9)

    def test_sin_gap_against_minimiser(self):
        s = PulseSchedule(shape13=PulseShape.sin_pi(), tau=1.0)
        ref = minimize_scalar(lambda t: float(rabi_frequency(s, t)), bounds=(0.0, 0.5), method="bounded",
                              options={"xatol": 1e-12})
        assert ref.fun == pytest.approx(0.9560285946, abs=1e-9)
        assert min_gap(s) == pytest.approx(ref.fun, abs=1e-8)

    @pytest.mark.parametrize("shape", [PulseShape.zero(), PulseShape.sin_pi(), PulseShape.one_minus_cos(2)])
    def test_gap_below_endpoint_value(self, shape):
        s = PulseSchedule(shape13=shape, tau=2.0)
        assert min_gap(s) <= float(rabi_frequency(s, 0.0)) + 1e-15

    def test_adiabatic_flag(self):
        assert is_adiabatic(PulseSchedule(tau=10.0))
        assert not is_adiabatic(PulseSchedule(tau=9.99))
