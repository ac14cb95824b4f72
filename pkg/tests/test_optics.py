import math

import numpy as np
import pytest

from noongen import optics
from noongen.errors import ContractViolation
from noongen.fock import StateVector, inner_product, normalize

from conftest import random_state


def test_hong_ou_mandel(backend):
    out = optics.beam_splitter(StateVector.fock(1, 1), math.pi / 4)
    assert out.amplitude((0, 2)) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert out.amplitude((2, 0)) == pytest.approx(-1 / math.sqrt(2), abs=1e-15)
    assert abs(out.amplitude((1, 1))) < 1e-15


def test_single_photon_rotation(backend):
    gamma, chi = 0.4, 1.1
    out = optics.beam_splitter(StateVector.fock(1, 0), gamma, chi)
    assert out.amplitude((1, 0)) == pytest.approx(math.cos(gamma))
    assert out.amplitude((0, 1)) == pytest.approx(np.exp(1j * chi) * math.sin(gamma))


def test_beam_splitter_unitary_on_random_states(backend, rng):
    for _ in range(20):
        a = random_state(rng, 4, 4, 25)
        b = random_state(rng, 4, 4, 25)
        p = optics.BeamSplitterParams(rng.uniform(0, math.pi / 2), rng.uniform(-3, 3), (1, 3))
        ua, ub = optics.apply_beam_splitter(a, p), optics.apply_beam_splitter(b, p)
        assert abs(inner_product(ua, ub) - inner_product(a, b)) < 1e-12
        assert abs(ua.norm_squared() - 1) < 1e-12


def test_composition_and_inverse(backend, rng):
    s = random_state(rng, 2, 6, 10)
    g1, g2 = 0.3, 0.5
    two = optics.beam_splitter(optics.beam_splitter(s, g1), g2)
    one = optics.beam_splitter(s, g1 + g2)
    assert abs(inner_product(two, one) - 1) < 1e-12
    # U(gamma, chi)^-1 = U(gamma, chi + pi)
    back = optics.beam_splitter(optics.beam_splitter(s, 0.7, 0.2), 0.7, 0.2 + math.pi)
    assert abs(inner_product(back, s) - 1) < 1e-12


def test_mode_order_matters(backend):
    s = StateVector.fock(1, 0, 0)
    out = optics.beam_splitter(s, 0.3, 0.0, (2, 0))
    # mode 2 plays the first role, so the photon in mode 0 picks up a minus sign
    assert out.amplitude((0, 0, 1)) == pytest.approx(-math.sin(0.3))


def test_photon_number_preserved(backend, rng):
    s = random_state(rng, 3, 5, 15)
    out = optics.beam_splitter(s, 1.0, 0.3, (0, 2))
    assert sorted(set(out.totals())) == sorted(set(s.totals()))


def test_variable_splitter_decomposition(backend, rng):
    for _ in range(50):
        s = random_state(rng, 3, 4, 12)
        gamma = rng.uniform(0, math.pi / 2)
        a = optics.variable_beam_splitter(s, gamma, (1, 2))
        b = optics.beam_splitter(s, gamma, 0.0, (1, 2))
        assert np.abs(inner_product(a, b) - 1) < 1e-12


def test_angle_validation():
    with pytest.raises(ContractViolation):
        optics.BeamSplitterParams(2.0)
    with pytest.raises(ContractViolation):
        optics.BeamSplitterParams(0.1, 0.0, (1, 1))
    assert optics.BeamSplitterParams(math.pi / 2 + 1e-13).gamma == math.pi / 2
    assert optics.BeamSplitterParams.from_transmittance(0.25).transmittance == pytest.approx(0.25)


def test_phase_shift():
    s = StateVector([[2, 0], [0, 1]], [0.6, 0.8])
    out = optics.phase_shift(s, 0.5, 0)
    assert out.amplitude((2, 0)) == pytest.approx(0.6 * np.exp(1j))
    assert out.amplitude((0, 1)) == pytest.approx(0.8)


def test_kraus_completeness(rng):
    # L^dag L + R^dag R = a^dag a + b^dag b
    for _ in range(20):
        s = random_state(rng, 2, 6, 10)
        total = optics.apply_kraus_L(s).norm_squared() + optics.apply_kraus_R(s).norm_squared()
        n = s.mean_occupation(0) + s.mean_occupation(1)
        assert total == pytest.approx(n, abs=1e-12)


def test_kraus_on_vacuum_is_zero():
    assert len(optics.apply_kraus_R(StateVector.fock(0, 0))) == 0
    with pytest.raises(ContractViolation):
        optics.apply_kraus_R(StateVector.fock(1, 0, 0))


def test_kraus_matches_measurement_behind_mixer(backend):
    # one photon at the second mixer port of |N,N> taps equals L up to normalization
    s = StateVector.fock(2, 1)
    L = normalize(optics.apply_kraus_L(s))
    R = normalize(optics.apply_kraus_R(s))
    assert abs(inner_product(L, R)) < 1
    assert L.totals().tolist() == [2, 2]


def test_measure_number_probabilities(rng):
    s = random_state(rng, 3, 4, 20)
    outs = optics.measure_number(s, 1)
    assert sum(o.probability for o in outs) == pytest.approx(1.0, abs=1e-12)
    for o in outs:
        assert set(o.post_state.occupations[:, 1]) == {o.count}
        assert o.post_state.norm_squared() == pytest.approx(1.0)
    gone = optics.detect(s, 1)
    assert all(o.post_state.mode_count == 2 for o in gone)
    assert [o.count for o in gone] == [o.count for o in outs]


def test_project_is_unnormalized():
    s = StateVector([[1, 0], [0, 1]], [0.6, 0.8])
    assert optics.project(s, 0, 1).as_dict() == {(1, 0): 0.6}
