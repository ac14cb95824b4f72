import math

import numpy as np
import pytest
from scipy.special import gammaln

from noongen import analytics as An
from noongen import generator as G
from noongen import optics
from noongen.errors import ContractViolation, NormalizationError, OutOfModeledRange
from noongen.fock import StateVector, noon_fidelity, overlap


def coherent_projection(S, delta, alpha, points=2048):
    """Trapezoid rule over theta of e^{-i S theta} |a e^{i theta}>|a e^{i(theta + delta)}>."""
    nmax = S + 4
    n1, n2 = np.meshgrid(np.arange(nmax + 1), np.arange(nmax + 1), indexing="ij")
    logmag = (n1 + n2) * math.log(alpha) - 0.5 * (gammaln(n1 + 1) + gammaln(n2 + 1)) - alpha**2
    base = np.exp(logmag) * np.exp(1j * delta * n2)
    thetas = np.linspace(0.0, 2 * math.pi, points, endpoint=False)
    weight = np.exp(1j * np.multiply.outer(thetas, n1 + n2 - S)).mean(axis=0)
    amp = base * weight
    keep = np.abs(amp) > 0
    occ = np.stack([n1[keep], n2[keep]], axis=1)
    s = StateVector(occ, amp[keep], 2)
    return s * (1 / math.sqrt(s.norm_squared()))


@pytest.mark.parametrize("alpha", [0.5, 1.0, 3.0])
@pytest.mark.parametrize("S", [1, 2, 5, 8])
def test_psi_infinity_matches_coherent_quadrature(alpha, S):
    for delta in (0.0, 0.9, -2.2):
        numeric = coherent_projection(S, delta, alpha)
        assert overlap(numeric, An.build_psi_infinity(S, delta)) == pytest.approx(1.0, abs=1e-10)


def test_psi_infinity_zero_phase_is_split_fock_state():
    for S in (1, 4, 9):
        out = optics.beam_splitter(StateVector.fock(S, 0), math.pi / 4)
        assert overlap(out, An.build_psi_infinity(S, 0.0)) == pytest.approx(1.0, abs=1e-10)


def test_psi_infinity_single_photon_antiphase():
    s = An.build_psi_infinity(1, math.pi)
    target = StateVector([[1, 0], [0, 1]], [1, -1]) * (1 / math.sqrt(2))
    assert overlap(s, target) == pytest.approx(1.0)


def test_overlap_law_random(rng):
    for _ in range(50):
        S = int(rng.integers(1, 21))
        d1, d2 = rng.uniform(-math.pi, math.pi, 2)
        got = overlap(An.build_psi_infinity(S, d1), An.build_psi_infinity(S, d2))
        assert got == pytest.approx(An.overlap_law(S, d1, d2), abs=1e-10)


def test_cat_construction():
    cat = An.build_cat(6, math.pi / 2, 0.0)
    assert cat.norm_squared() == pytest.approx(1.0)
    assert An.cat_component_overlap(6, math.pi / 2) == pytest.approx(0.0, abs=1e-15)
    shifted = An.build_cat(6, 0.8, 0.3 + 2 * math.pi)
    assert overlap(shifted, An.build_cat(6, 0.8, 0.3)) == pytest.approx(1.0)
    with pytest.raises(NormalizationError):
        An.build_cat(3, 0.0, math.pi)


def test_noon_builder():
    for S, phi in [(1, 0.0), (4, 1.0), (9, 3.0)]:
        rep = noon_fidelity(An.build_noon(S, phi))
        assert rep.fidelity == pytest.approx(1.0)
        assert rep.optimal_phase == pytest.approx(phi)
    assert noon_fidelity(StateVector.fock(3, 0)).fidelity == pytest.approx(0.5)
    assert noon_fidelity(StateVector.fock(1, 1)).fidelity == 0.0


def test_delta0_examples():
    assert An.delta0_of(1, 1) == pytest.approx(math.pi / 2)
    assert An.delta0_of(0, 4) == 0.0
    assert An.delta0_of(1, 3) == pytest.approx(math.pi / 3, abs=1e-15)
    with pytest.raises(ContractViolation):
        An.delta0_of(0, 0)


def test_q_distribution_examples():
    d = An.q_distribution(6, 1, math.pi / 2)
    assert d.probabilities[0] == pytest.approx(1.0)
    assert d.consistent
    near = An.q_distribution(6, 2, 1e-6)
    assert near.probabilities[-1] == pytest.approx(1.0, abs=1e-6)


def test_q_distribution_matches_simulation_example():
    # S=4 left after the record (2, 6), whose phase is pi/3
    l, r, S = 2, 6, 4
    cat = An.build_cat(S, An.delta0_of(l, r), l * math.pi)
    sim = np.zeros(S + 1)
    for b in G.circuit_II(cat, l, r):
        sim[b.outcome[0]] = b.probability
    d = An.q_distribution(S, l, math.pi / 3)
    assert d.consistent
    np.testing.assert_allclose(d.probabilities, sim, atol=1e-12)
    assert d.probabilities.tolist() == pytest.approx([1 / 17, 4 / 17, 6 / 17, 4 / 17, 2 / 17])


def test_q_distribution_flags_phases_beyond_half_pi():
    d = An.q_distribution(5, 1, 2.0)
    assert not d.consistent
    assert any("negative" in msg for msg in d.issues)


def test_p_cond_examples():
    assert An.p_cond(1, 0) == pytest.approx(0.5)
    assert An.p_cond(4, 2) == pytest.approx(G.condensation_probability_sim(4, 2), abs=1e-12)
    value = An.p_cond(500, 250)
    assert 0 < value < 1 and math.isfinite(value)
    with pytest.raises(ContractViolation):
        An.p_cond(3, 3)


def test_p_cond_matches_naive_formula_small_n():
    for N in range(1, 12):
        for r in range(N):
            S = 2 * N - r
            den = 2**S * sum(math.comb(r, k) ** 2 * math.comb(S, N - k) for k in range(r + 1))
            assert An.p_cond(N, r) == pytest.approx(math.comb(2 * N, N) ** 2 / den, rel=1e-12)


def test_asymptotic_fidelity():
    assert An.asymptotic_fidelity(2) == pytest.approx(0.9428, abs=1e-4)
    assert An.asymptotic_fidelity(3) == pytest.approx(0.9798, abs=1e-4)
    assert An.asymptotic_fidelity(1e9) == pytest.approx(1.0)
    with pytest.raises(ContractViolation):
        An.asymptotic_fidelity(1.0)


def test_naive_scaling():
    assert An.naive_fidelity_scaling(math.pi / 2, 17) == pytest.approx(1.0)
    assert An.naive_fidelity_scaling(math.pi / 3, 10) == pytest.approx(math.cos(math.pi / 12) ** 20)
    vals = [An.naive_fidelity_scaling(1.0, S) for S in range(1, 10)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_gaussian_localization():
    assert An.gaussian_localization(0.0, 3) == 1.0
    assert An.gaussian_localization(1.0, 4) == pytest.approx(math.exp(-1))
    x = 0.37
    assert An.gaussian_localization(x, 10) == pytest.approx(An.gaussian_localization(x, 5) ** 2)
    assert An.gaussian_localization(1.0, An.LocalizationParams(4, 10)) == pytest.approx(math.exp(-1))


def test_eq3_intensities():
    assert An.eq3_intensities(8, math.pi / 2)[:2] == pytest.approx((4, 4))
    assert An.eq3_intensities(8, math.pi / 2)[2] == 1
    assert An.eq3_intensities(8, -0.3)[2] == -1
    assert An.eq3_intensities(8, 0.0) == pytest.approx((0, 8, 0))
    i1, i2, _ = An.eq3_intensities(10, math.pi / 3)
    assert (i1, i2) == pytest.approx((2.5, 7.5))
    out = optics.beam_splitter(An.build_psi_infinity(10, math.pi / 3), math.pi / 4)
    assert out.mean_occupation(0) == pytest.approx(i1, abs=1e-9)
    assert out.mean_occupation(1) == pytest.approx(i2, abs=1e-9)
    with pytest.raises(OutOfModeledRange):
        An.eq3_intensities(4, 2.0)


def test_fidelity_integral_converges_to_asymptote():
    assert An.fidelity_integral(50, 50) == pytest.approx(An.asymptotic_fidelity(2), abs=0.005)
