"""Condensation experiment and the three-stage feed-forward N00N generator.

Mode layout (0-based): principal modes 0 and 1, tap ancillae 2 and 3 (read by
the left and right detectors), balancing ancilla appended as mode 2 during
the second stage.  Measured modes are removed right away, so no more than four
modes are ever live.
"""

import bisect
import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import optics
from .errors import ContractViolation, OutOfModeledRange
from .fock import FidelityReport, StateVector, noon_fidelity, normalize, attach_vacuum

HALF_PI = math.pi / 2
QUARTER_PI = math.pi / 4


class Status(str, enum.Enum):
    SUCCESS = "success"
    DISCARD_SINGLE_PORT = "discard_single_port"
    ABORT_TOO_FEW_PHOTONS = "abort_too_few_photons"


def round_half_up(x):
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class GeneratorConfig:
    N: int
    f: float
    min_output_photons: int = None
    mode: str = "exhaustive"
    seed: int = 0
    shots: int = 10_000

    def __post_init__(self):
        if self.N < 1:
            raise ContractViolation("N must be >= 1")
        if not 0.0 < self.f < 1.0:
            raise ContractViolation(f"tap reflectance f must lie in (0, 1), got {self.f}")
        if self.mode not in ("exhaustive", "monte_carlo"):
            raise ContractViolation(f"unknown mode {self.mode!r}")
        if self.min_output_photons is None:
            object.__setattr__(
                self, "min_output_photons", max(1, round_half_up(self.N * (1 - self.f)))
            )
        if self.min_output_photons < 1:
            raise ContractViolation("min_output_photons must be >= 1")
        if self.min_output_photons > 2 * self.N:
            raise ContractViolation(
                f"min_output_photons={self.min_output_photons} exceeds 2N={2 * self.N}"
            )
        if self.mode == "monte_carlo" and self.shots < 1:
            raise ContractViolation("shots must be >= 1")


@dataclass(frozen=True)
class MeasurementRecord:
    N: int
    l: int
    r: int
    Q: int = None

    def __post_init__(self):
        if min(self.l, self.r) < 0 or self.l + self.r > 2 * self.N:
            raise ContractViolation(f"invalid detection record ({self.l}, {self.r})")
        if self.Q is not None and not 0 <= self.Q <= self.S:
            raise ContractViolation(f"Q={self.Q} outside [0, {self.S}]")

    @property
    def D(self):
        return self.l + self.r

    @property
    def S(self):
        return 2 * self.N - self.l - self.r

    @property
    def P(self):
        return None if self.Q is None else self.S - self.Q

    def key(self):
        return (self.l, self.r, -1 if self.Q is None else self.Q)

    def to_json_dict(self):
        return {"N": self.N, "l": self.l, "r": self.r, "Q": self.Q, "D": self.D, "S": self.S, "P": self.P}


@dataclass(frozen=True)
class RunOutcome:
    status: Status
    record: MeasurementRecord
    branch_probability: float
    output_state: StateVector = None
    fidelity: FidelityReport = None

    def to_json_dict(self, include_state=False):
        out = {
            "status": self.status.value,
            "record": self.record.to_json_dict(),
            "branch_probability": self.branch_probability,
            "fidelity": None if self.fidelity is None else self.fidelity.to_json_dict(),
        }
        if include_state:
            out["output_state"] = None if self.output_state is None else self.output_state.to_json_dict()
        return out


@dataclass(frozen=True)
class Branch:
    """One measurement branch of a stage: outcome label, probability, state."""

    outcome: tuple
    probability: float
    state: StateVector
    info: dict = field(default_factory=dict, compare=False)


# -- condensation thought experiment ------------------------------------------


def condensation_probability_sim(N, r):
    """Exact probability that every photon left after ``r`` R-detections exits at R.

    Builds ``R^r |N,N>`` normalized, then evaluates ``|R^S psi|^2 / S!``.
    """
    if not 0 <= r < N:
        raise ContractViolation(f"need 0 <= r < N, got N={N}, r={r}")
    psi = StateVector.fock(N, N)
    for _ in range(r):
        psi = normalize(optics.apply_kraus_R(psi))
    S = 2 * N - r
    out = psi
    log_scale = 0.0
    for k in range(S):
        out = optics.apply_kraus_R(out)
        # rescale as we go; the divisions by k+1 accumulate S!
        n2 = out.norm_squared()
        log_scale += math.log(n2 / (k + 1))
        out = out * (1.0 / math.sqrt(n2))
    return math.exp(log_scale)


# -- circuit I -------------------------------------------------------------------


def dual_fock_input(N):
    return StateVector.fock(N, N, 0, 0)


def circuit_I(config):
    """Tap both principal modes, mix the taps 50:50 and count both ports.

    Returns branches with ``outcome == (l, r)`` in ascending order; each state
    lives on modes 0 and 1 and holds ``2N - l - r`` photons.
    """
    return list(_circuit_I_cached(config.N, float(config.f)))


@lru_cache(maxsize=64)
def _circuit_I_cached(N, f):
    tap = math.asin(math.sqrt(f))
    s = dual_fock_input(N)
    s = optics.beam_splitter(s, tap, 0.0, (0, 2))
    s = optics.beam_splitter(s, tap, 0.0, (1, 3))
    s = optics.beam_splitter(s, QUARTER_PI, 0.0, (2, 3))
    branches = []
    for left in optics.detect(s, 2):
        for right in optics.detect(left.post_state, 2):
            branches.append(
                Branch((left.count, right.count), left.probability * right.probability, right.post_state)
            )
    branches.sort(key=lambda b: b.outcome)
    return tuple(branches)


# -- circuit II -----------------------------------------------------------------


def balancing_angle(delta0=None, l=None, r=None):
    """Angle of the variable splitter: ``arccos(tan(delta0 / 2))``.

    Given a record instead, uses ``tan(delta0(l, r) / 2) = sqrt(l / r)``, which
    is exact at ``l == r`` where the splitter must be the identity.
    """
    t = math.sqrt(l / r) if delta0 is None else math.tan(delta0 / 2)
    if t > 1.0 + 1e-12 or t < 0.0:
        raise OutOfModeledRange(
            f"tan(delta0/2) = {t} outside [0, 1]; feed-forward flip was not applied"
        )
    return math.acos(min(t, 1.0))


def circuit_II(state, l, r, decomposed=True):
    """Feed-forward correction of a cat with record ``(l, r)``.

    If ``l > r`` the localized phase exceeds pi/2, so a pi phase shift first
    maps the cat onto the one labelled ``(r, l)``.  Then a 50:50 splitter on the
    principal modes, the variable splitter ``arccos(tan(delta0/2))`` against
    a vacuum ancilla, and a count ``Q`` on that ancilla.

    Branch ``info`` carries ``flipped`` and ``parity`` (the superposition-phase
    label, ``l`` or ``r`` after a flip).
    """
    if state.mode_count != 2:
        raise ContractViolation("circuit II acts on a two-mode state")
    if l < 1 or r < 1:
        raise ContractViolation("circuit II needs l, r >= 1")
    flipped = l > r
    if flipped:
        state = optics.phase_shift(state, math.pi, 0)
        l, r = r, l
    gamma = balancing_angle(l=l, r=r)
    s = optics.beam_splitter(state, QUARTER_PI, 0.0, (0, 1))
    s = attach_vacuum(s, 1)
    if decomposed:
        s = optics.variable_beam_splitter(s, gamma, (1, 2))
    else:
        s = optics.beam_splitter(s, gamma, 0.0, (1, 2))
    info = {"flipped": flipped, "parity": l}
    return [Branch((o.count,), o.probability, o.post_state, info) for o in optics.detect(s, 2)]


def circuit_III(state):
    """``U_bs(pi/4, pi) U_ps(pi/2)`` on the principal modes."""
    if state.mode_count != 2:
        raise ContractViolation("circuit III acts on a two-mode state")
    s = optics.phase_shift(state, HALF_PI, 1)
    return optics.beam_splitter(s, QUARTER_PI, math.pi, (0, 1))


# -- full pipeline --------------------------------------------------------------


def _stage_two_outcomes(N, l, r, prob_lr, state, p_min):
    outcomes = []
    for branch in circuit_II(state, l, r):
        (Q,) = branch.outcome
        record = MeasurementRecord(N, l, r, Q)
        prob = prob_lr * branch.probability
        if record.P < p_min:
            outcomes.append(RunOutcome(Status.ABORT_TOO_FEW_PHOTONS, record, prob))
            continue
        out = circuit_III(branch.state)
        outcomes.append(RunOutcome(Status.SUCCESS, record, prob, out, noon_fidelity(out, record.P)))
    return outcomes


def _branch_outcomes(config, branch):
    l, r = branch.outcome
    if l == 0 or r == 0:
        return [RunOutcome(Status.DISCARD_SINGLE_PORT, MeasurementRecord(config.N, l, r), branch.probability)]
    return _stage_two_outcomes(config.N, l, r, branch.probability, branch.state, config.min_output_photons)


def enumerate_outcomes(config):
    """Every terminal branch with its exact probability, sorted by ``(l, r, Q)``."""
    outcomes = []
    for branch in circuit_I(config):
        outcomes.extend(_branch_outcomes(config, branch))
    outcomes.sort(key=lambda o: o.record.key())
    return outcomes


def sample_outcomes(config, shots=None, seed=None):
    """Monte Carlo over the exact branch tree.

    Shot ``i`` consumes row ``i`` of one ``(shots, 2)`` uniform draw from
    ``default_rng(seed)``, so results do not depend on evaluation order.
    Second-stage branch sets are computed lazily per ``(l, r)``.
    """
    shots = config.shots if shots is None else shots
    seed = config.seed if seed is None else seed
    stage_one = circuit_I(config)
    cdf_one = np.cumsum([b.probability for b in stage_one])
    cdf_one /= cdf_one[-1]
    draws = np.random.default_rng(seed).random((shots, 2))
    cache = {}
    picked = []
    for u1, u2 in draws:
        idx = min(int(np.searchsorted(cdf_one, u1, side="right")), len(stage_one) - 1)
        if idx not in cache:
            outs = _branch_outcomes(config, stage_one[idx])
            probs = np.array([o.branch_probability for o in outs])
            cum = np.cumsum(probs)
            cache[idx] = (outs, list(cum / cum[-1]))
        outs, cum = cache[idx]
        j = min(bisect.bisect_right(cum, u2), len(outs) - 1)
        picked.append(outs[j])
    return picked


def run_generator(config):
    if config.mode == "exhaustive":
        return enumerate_outcomes(config)
    return sample_outcomes(config)


@dataclass(frozen=True)
class RunSummary:
    success_probability: float
    discard_probability: float
    abort_probability: float
    mean_fidelity: float
    mean_output_photons: float
    total_probability: float
    branches: int


def summarize(outcomes):
    """Probability-weighted statistics; Monte Carlo lists weigh each shot equally."""
    sampled = _looks_sampled(outcomes)
    weights = np.array(
        [1.0 / len(outcomes) if sampled else o.branch_probability for o in outcomes]
    )
    status = [o.status for o in outcomes]
    ok = np.array([s is Status.SUCCESS for s in status], dtype=bool)
    discarded = np.array([s is Status.DISCARD_SINGLE_PORT for s in status], dtype=bool)
    aborted = np.array([s is Status.ABORT_TOO_FEW_PHOTONS for s in status], dtype=bool)
    p_ok = float(weights[ok].sum())
    fid = np.array([o.fidelity.fidelity if o.fidelity else 0.0 for o in outcomes])
    photons = np.array([o.record.P if o.record.P is not None else 0 for o in outcomes], dtype=float)
    return RunSummary(
        success_probability=p_ok,
        discard_probability=float(weights[discarded].sum()),
        abort_probability=float(weights[aborted].sum()),
        mean_fidelity=float(np.dot(weights[ok], fid[ok]) / p_ok) if p_ok > 0 else float("nan"),
        mean_output_photons=float(np.dot(weights[ok], photons[ok]) / p_ok) if p_ok > 0 else float("nan"),
        total_probability=float(math.fsum(weights)),
        branches=len(outcomes),
    )


def _looks_sampled(outcomes):
    keys = [o.record.key() for o in outcomes]
    return len(set(keys)) != len(keys)


def fidelity_by_probability(outcomes, quantiles=(0.1, 0.25, 0.5, 0.75, 0.9)):
    """Diagnostic: mean success fidelity within branch-probability quantile bins.

    Returns rows ``(lower_prob, upper_prob, branches, mean_fidelity)``; unweighted
    inside each bin so improbable branches are visible.
    """
    ok = [o for o in outcomes if o.status == Status.SUCCESS]
    if not ok:
        return []
    probs = np.array([o.branch_probability for o in ok])
    fids = np.array([o.fidelity.fidelity for o in ok])
    edges = np.quantile(probs, [0.0, *quantiles, 1.0])
    rows = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (probs >= lo) & (probs <= hi)
        if sel.any():
            rows.append((float(lo), float(hi), int(sel.sum()), float(fids[sel].mean())))
    return rows


# -- figure 3 -------------------------------------------------------------------


@dataclass(frozen=True)
class Figure3Row:
    N: int
    D: int
    D_over_2N: float
    mean_P: float
    mean_fidelity: float
    weight: float


def figure3_points(N, D, f=0.5):
    """Per-(l, r) averages over the balancing count ``Q`` for ``l + r = D``.

    Rows are ``(l, r, probability_lr, mean_P, mean_fidelity)``.  The ``Q = S``
    branch leaves no photons and is excluded from the fidelity mean (it does
    count towards ``mean_P``).  ``f`` only sets the Circuit I branch weights.
    """
    points = []
    for branch in circuit_I(GeneratorConfig(N, f)):
        l, r = branch.outcome
        if l + r != D or l == 0 or r == 0:
            continue
        mean_p = 0.0
        fid_w = 0.0
        fid_sum = 0.0
        for b2 in circuit_II(branch.state, l, r):
            (Q,) = b2.outcome
            P = 2 * N - D - Q
            mean_p += b2.probability * P
            if P >= 1:
                report = noon_fidelity(circuit_III(b2.state), P)
                fid_w += b2.probability
                fid_sum += b2.probability * report.fidelity
        points.append((l, r, branch.probability, mean_p, fid_sum / fid_w if fid_w else float("nan")))
    return points


def figure3_table(N_max, fractions=(1 / 3, 1 / 2, 2 / 3), weighted=True, f=None, N_min=1):
    """Rows ``{N, D_over_2N, mean_P, mean_fidelity}`` for each ``N`` and fraction.

    ``D = round(2N * fraction)``; the reported ``D_over_2N`` is the realised
    ratio.  Branches with ``l + r = D`` are averaged with their Circuit I
    probability (``weighted``) or uniformly.  The tap reflectance defaults to
    the fraction itself, i.e. the detections expected on average.
    """
    rows = []
    for N in range(N_min, N_max + 1):
        for frac in fractions:
            D = round_half_up(2 * N * frac)
            tap = frac if f is None else f
            pts = figure3_points(N, D, tap) if 2 <= D < 2 * N else []
            pts = [p for p in pts if not math.isnan(p[4])]
            if pts:
                w = np.array([p[2] if weighted else 1.0 for p in pts])
                w = w / w.sum()
                mean_p = float(np.dot(w, [p[3] for p in pts]))
                mean_f = float(np.dot(w, [p[4] for p in pts]))
                weight = float(sum(p[2] for p in pts))
            else:
                mean_p = mean_f = float("nan")
                weight = 0.0
            rows.append(Figure3Row(N, D, D / (2 * N), mean_p, mean_f, weight))
    return rows
