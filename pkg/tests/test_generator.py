import math

import numpy as np
import pytest

from noongen import analytics as An
from noongen import generator as G
from noongen.errors import ContractViolation
from noongen.fock import noon_fidelity, overlap


def cat_fidelity(N, l, r, f=0.5):
    for b in G.circuit_I(G.GeneratorConfig(N, f)):
        if b.outcome == (l, r):
            cat = An.build_cat(2 * N - l - r, An.delta0_of(l, r), l * math.pi)
            return overlap(b.state, cat) ** 2
    raise AssertionError(f"no branch {(l, r)}")


def test_config_defaults_and_validation():
    cfg = G.GeneratorConfig(10, 0.5)
    assert cfg.min_output_photons == 5
    assert G.GeneratorConfig(3, 0.5).min_output_photons == 2
    with pytest.raises(ContractViolation):
        G.GeneratorConfig(3, 1.0)
    with pytest.raises(ContractViolation):
        G.GeneratorConfig(3, 0.5, min_output_photons=7)
    with pytest.raises(ContractViolation):
        G.GeneratorConfig(0, 0.5)


def test_measurement_record_derived_fields():
    rec = G.MeasurementRecord(5, 2, 3, 1)
    assert (rec.D, rec.S, rec.P) == (5, 5, 4)
    with pytest.raises(ContractViolation):
        G.MeasurementRecord(2, 3, 2)
    with pytest.raises(ContractViolation):
        G.MeasurementRecord(2, 1, 1, 3)


def test_condensation_examples():
    assert G.condensation_probability_sim(1, 0) == pytest.approx(0.5, abs=1e-12)
    vals = [G.condensation_probability_sim(8, r) for r in range(1, 8)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ContractViolation):
        G.condensation_probability_sim(3, 3)


@pytest.mark.parametrize("N", range(1, 9))
def test_condensation_matches_closed_form(N):
    for r in range(N):
        assert G.condensation_probability_sim(N, r) == pytest.approx(An.p_cond(N, r), abs=1e-10)


def test_circuit_I_branches():
    for f in (1 / 3, 0.5, 2 / 3):
        branches = G.circuit_I(G.GeneratorConfig(4, f))
        assert math.fsum(b.probability for b in branches) == pytest.approx(1.0, abs=1e-12)
        for b in branches:
            l, r = b.outcome
            assert set(b.state.totals()) == {8 - l - r}
            assert b.state.mode_count == 2


def test_circuit_I_cat_fidelities_small():
    assert cat_fidelity(3, 1, 1) == pytest.approx(1.0, abs=1e-12)
    assert cat_fidelity(3, 1, 2) == pytest.approx(0.94, abs=0.005)
    assert cat_fidelity(3, 2, 1) == pytest.approx(0.94, abs=0.005)


def test_circuit_I_independent_of_tap_fraction():
    # the conditional state depends only on the record, not on f
    a = [b for b in G.circuit_I(G.GeneratorConfig(3, 0.3)) if b.outcome == (2, 1)][0]
    b = [b for b in G.circuit_I(G.GeneratorConfig(3, 0.7)) if b.outcome == (2, 1)][0]
    assert overlap(a.state, b.state) == pytest.approx(1.0, abs=1e-12)


def test_circuit_II_on_ideal_balanced_cat():
    cat = An.build_cat(6, math.pi / 2, 0.0)
    (branch,) = G.circuit_II(cat, 1, 1)
    assert branch.outcome == (0,)
    assert branch.probability == pytest.approx(1.0)


def test_circuit_II_probabilities_and_flip():
    cat = An.build_cat(8, An.delta0_of(3, 1), 3 * math.pi)
    branches = G.circuit_II(cat, 3, 1)
    assert math.fsum(b.probability for b in branches) == pytest.approx(1.0, abs=1e-12)
    assert branches[0].info["flipped"]
    assert branches[0].info["parity"] == 1


def test_circuit_II_output_is_balanced_cat():
    l, r, S = 1, 3, 8
    cat = An.build_cat(S, An.delta0_of(l, r), l * math.pi)
    for b in G.circuit_II(cat, l, r):
        (Q,) = b.outcome
        if Q == S:
            continue
        P = S - Q
        target = An.build_cat(P, math.pi / 2, l * math.pi + P * math.pi / 2)
        assert overlap(b.state, target) == pytest.approx(1.0, abs=1e-10)


def test_balancing_angle():
    assert G.balancing_angle(l=2, r=2) == 0.0
    assert G.balancing_angle(delta0=math.pi / 3) == pytest.approx(math.acos(math.tan(math.pi / 6)))
    with pytest.raises(ContractViolation):
        G.balancing_angle(delta0=2.5)


def test_decomposed_and_direct_circuit_II_agree():
    cat = An.build_cat(7, An.delta0_of(2, 3), 2 * math.pi)
    a = G.circuit_II(cat, 2, 3, decomposed=True)
    b = G.circuit_II(cat, 2, 3, decomposed=False)
    assert [x.outcome for x in a] == [x.outcome for x in b]
    for x, y in zip(a, b):
        assert x.probability == pytest.approx(y.probability, abs=1e-12)
        assert overlap(x.state, y.state) == pytest.approx(1.0, abs=1e-12)


def test_circuit_III_unitary_not_involutive():
    s = An.build_cat(5, 1.0, 0.4)
    once = G.circuit_III(s)
    twice = G.circuit_III(once)
    assert twice.norm_squared() == pytest.approx(1.0, abs=1e-12)
    assert overlap(twice, s) < 0.999


def test_circuit_III_parity():
    for P in (3, 4):
        even = noon_fidelity(G.circuit_III(An.build_cat(P, math.pi / 2, P * math.pi / 2)), P)
        odd = noon_fidelity(G.circuit_III(An.build_cat(P, math.pi / 2, math.pi + P * math.pi / 2)), P)
        assert even.fidelity == pytest.approx(1.0, abs=1e-10)
        assert odd.fidelity == pytest.approx(1.0, abs=1e-10)
        assert abs(abs(even.optimal_phase - odd.optimal_phase) - math.pi) < 1e-9


@pytest.mark.parametrize("N", range(1, 9))
@pytest.mark.parametrize("f", [1 / 3, 1 / 2, 2 / 3])
def test_pipeline_completeness_and_bookkeeping(N, f):
    outcomes = G.enumerate_outcomes(G.GeneratorConfig(N, f))
    assert math.fsum(o.branch_probability for o in outcomes) == pytest.approx(1.0, abs=1e-9)
    for o in outcomes:
        rec = o.record
        if o.status is G.Status.DISCARD_SINGLE_PORT:
            assert rec.l == 0 or rec.r == 0
        elif o.status is G.Status.ABORT_TOO_FEW_PHOTONS:
            assert rec.P < G.GeneratorConfig(N, f).min_output_photons
        else:
            assert set(o.output_state.totals()) == {2 * N - rec.l - rec.r - rec.Q}
            assert o.fidelity.total_photons == rec.P


@pytest.mark.parametrize("N", [3, 5])
def test_mirror_symmetry(N):
    outs = {o.record.key(): o for o in G.enumerate_outcomes(G.GeneratorConfig(N, 0.5))}
    for (l, r, q), o in outs.items():
        m = outs[(r, l, q)]
        assert m.branch_probability == pytest.approx(o.branch_probability, abs=1e-12)
        if o.fidelity is not None:
            assert m.fidelity.fidelity == pytest.approx(o.fidelity.fidelity, abs=1e-12)


def test_exchanging_input_labels():
    # U_swap |N,N,0,0> is the same input; swapped taps swap the detectors
    cfg = G.GeneratorConfig(3, 0.5)
    probs = {b.outcome: b.probability for b in G.circuit_I(cfg)}
    for (l, r), p in probs.items():
        assert probs[(r, l)] == pytest.approx(p, abs=1e-12)


def test_monte_carlo_reproducible():
    cfg = G.GeneratorConfig(4, 0.5, mode="monte_carlo", seed=7, shots=500)
    a = [o.record.key() for o in G.run_generator(cfg)]
    b = [o.record.key() for o in G.run_generator(cfg)]
    c = [o.record.key() for o in G.sample_outcomes(cfg, seed=8)]
    assert a == b
    assert a != c


def _tv(exact, keys, shots):
    counts = {}
    for k in keys:
        counts[k] = counts.get(k, 0) + 1
    support = set(exact) | set(counts)
    return 0.5 * sum(abs(exact.get(k, 0.0) - counts.get(k, 0) / shots) for k in support)


def test_monte_carlo_matches_enumeration():
    shots = 100_000
    exact = G.enumerate_outcomes(G.GeneratorConfig(5, 0.5))
    sampled = G.sample_outcomes(G.GeneratorConfig(5, 0.5, mode="monte_carlo", seed=1, shots=shots))
    # stage-one branches (l, r)
    stage = {}
    for o in exact:
        k = (o.record.l, o.record.r)
        stage[k] = stage.get(k, 0.0) + o.branch_probability
    assert _tv(stage, [(o.record.l, o.record.r) for o in sampled], shots) < 0.01
    # full records: compare with the multinomial noise floor of a perfect sampler
    full = {o.record.key(): o.branch_probability for o in exact}
    p = np.array(list(full.values()))
    floor = 0.5 * np.sum(np.sqrt(2 * p * (1 - p) / (math.pi * shots)))
    assert _tv(full, [o.record.key() for o in sampled], shots) < 1.5 * floor
    summary = G.summarize(sampled)
    assert summary.total_probability == pytest.approx(1.0)
    assert summary.mean_fidelity == pytest.approx(G.summarize(exact).mean_fidelity, abs=0.01)


def test_summary_statistics():
    outs = G.enumerate_outcomes(G.GeneratorConfig(4, 0.5))
    s = G.summarize(outs)
    total = s.success_probability + s.discard_probability + s.abort_probability
    assert total == pytest.approx(1.0, abs=1e-12)
    assert 0 < s.mean_fidelity <= 1
    rows = G.fidelity_by_probability(outs)
    assert sum(r[2] for r in rows) >= sum(o.status is G.Status.SUCCESS for o in outs)


def test_figure3_properties():
    rows = G.figure3_table(8)
    by_n = {}
    for r in rows:
        by_n.setdefault(r.N, []).append(r)
    for N in range(3, 9):
        f13, f12, f23 = sorted(by_n[N], key=lambda r: r.D_over_2N)
        assert f23.mean_fidelity >= f13.mean_fidelity
    # heights grow with N wherever 2N * fraction is an integer
    halves = [r.mean_P for r in rows if r.D_over_2N == 0.5 and r.N >= 2]
    assert all(a < b for a, b in zip(halves, halves[1:]))
    for frac in (1 / 3, 2 / 3):
        picked = [r.mean_P for r in rows if r.N in (3, 6) and abs(r.D_over_2N - frac) < 1e-12]
        assert picked[0] < picked[1]
    again = G.figure3_table(3, N_min=3)
    assert [r for r in rows if r.N == 3] == again


def test_figure3_mean_p_near_intensity_estimate():
    # mean P tracks S - S cos(delta0); the gap is the cat interference term
    gaps = []
    for N in (6, 9, 12):
        D = N
        S = 2 * N - D
        pts = G.figure3_points(N, D, 0.5)
        w = sum(p[2] for p in pts)
        mean_p = sum(p[2] * p[3] for p in pts) / w
        estimate = sum(p[2] * (S - S * math.cos(An.delta0_of(*sorted(p[:2])))) for p in pts) / w
        gaps.append(mean_p / estimate - 1)
    assert all(0 < g < 0.07 for g in gaps)
    assert gaps == sorted(gaps, reverse=True)
