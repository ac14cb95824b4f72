"""Beam splitters, phase shifters, Kraus detections and number measurement.

All operations are pure: they take a :class:`~noongen.fock.StateVector` and
return a new one.  See :mod:`noongen.kernels` for the beam-splitter sign
convention; with it, ``U_bs(pi/4)`` maps ``|1,1>`` to ``(|0,2> - |2,0>)/sqrt 2``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ContractViolation
from .fock import StateVector, normalize, remove_mode, unique_rows

ANGLE_TOL = 1e-12
# outcomes below this probability are numerical residue of exact cancellations
MIN_OUTCOME_PROBABILITY = 1e-24


@dataclass(frozen=True)
class BeamSplitterParams:
    gamma: float
    chi: float = 0.0
    modes: tuple = (0, 1)

    def __post_init__(self):
        gamma = float(self.gamma)
        if not -ANGLE_TOL <= gamma <= math.pi / 2 + ANGLE_TOL:
            raise ContractViolation(f"beam-splitter angle {gamma} outside [0, pi/2]")
        object.__setattr__(self, "gamma", min(max(gamma, 0.0), math.pi / 2))
        object.__setattr__(self, "chi", float(self.chi))
        modes = tuple(int(m) for m in self.modes)
        if len(modes) != 2 or modes[0] == modes[1]:
            raise ContractViolation(f"beam splitter needs two distinct modes, got {self.modes}")
        object.__setattr__(self, "modes", modes)

    @property
    def transmittance(self):
        return math.cos(self.gamma) ** 2

    @classmethod
    def from_transmittance(cls, tau, chi=0.0, modes=(0, 1)):
        return cls(math.acos(math.sqrt(tau)), chi, modes)


@dataclass(frozen=True)
class PhaseShiftParams:
    chi: float
    mode: int = 0

    def __post_init__(self):
        if not math.isfinite(self.chi):
            raise ContractViolation("phase must be finite")


@dataclass(frozen=True)
class DetectionOutcome:
    count: int
    probability: float
    post_state: StateVector


def _check_mode(s, mode):
    if not 0 <= mode < s.mode_count:
        raise ContractViolation(f"mode {mode} out of range for {s.mode_count} modes")


def apply_beam_splitter(s, p):
    """Apply ``U_bs(gamma, chi)`` to the ordered mode pair ``p.modes``."""
    i, j = p.modes
    _check_mode(s, i)
    _check_mode(s, j)
    if not len(s):
        return s
    occ = s.occupations
    n_i = occ[:, i]
    total = n_i + occ[:, j]
    rest = np.delete(occ, [i, j], axis=1)
    keys, entry_group = unique_rows(np.hstack([rest, total[:, None]]))
    group_s = np.ascontiguousarray(keys[:, -1])
    widths = group_s + 1
    group_offset = np.concatenate(([0], np.cumsum(widths)[:-1]))
    size = int(widths.sum())
    stack = kernels.sector_stack(int(group_s.max()), p.gamma, p.chi)
    out_amp = kernels.scatter_blocks(
        entry_group, np.ascontiguousarray(n_i), s.amplitudes, group_offset, group_s, stack, size
    )
    owner = np.repeat(np.arange(len(keys)), widths)
    p_out = np.arange(size) - group_offset[owner]
    out_rest = keys[owner, :-1]
    out_occ = np.empty((size, s.mode_count), dtype=np.int64)
    others = [m for m in range(s.mode_count) if m not in (i, j)]
    out_occ[:, others] = out_rest
    out_occ[:, i] = p_out
    out_occ[:, j] = group_s[owner] - p_out
    return StateVector(out_occ, out_amp, s.mode_count)


def beam_splitter(s, gamma, chi=0.0, modes=(0, 1)):
    return apply_beam_splitter(s, BeamSplitterParams(gamma, chi, modes))


def apply_phase_shift(s, p):
    """Multiply each term by ``exp(i n chi)`` with ``n`` its count in ``p.mode``."""
    _check_mode(s, p.mode)
    phases = np.exp(1j * p.chi * s.occupations[:, p.mode])
    return StateVector(s.occupations, s.amplitudes * phases, s.mode_count)


def phase_shift(s, chi, mode=0):
    return apply_phase_shift(s, PhaseShiftParams(chi, mode))


def variable_beam_splitter(s, gamma, modes=(0, 1)):
    """``U_bs(gamma)`` built from two fixed symmetric splitters and phase shifts.

    ``U_bs(pi/4, pi/2) U_ps(gamma)_b U_ps(-gamma)_a U_bs(pi/4, -pi/2)`` on the
    pair ``(a, b)``; exactly equal to ``U_bs(gamma, 0)``.
    """
    a, b = modes
    s = beam_splitter(s, math.pi / 4, -math.pi / 2, modes)
    s = phase_shift(s, -gamma, a)
    s = phase_shift(s, gamma, b)
    return beam_splitter(s, math.pi / 4, math.pi / 2, modes)


def _lower(s, mode):
    """Annihilation operator on ``mode`` (unnormalized)."""
    occ = s.occupations
    keep = occ[:, mode] > 0
    out = occ[keep].copy()
    amp = s.amplitudes[keep] * np.sqrt(out[:, mode])
    out[:, mode] -= 1
    return out, amp


def _kraus(s, sign, modes):
    if s.mode_count != 2 and modes == (0, 1):
        raise ContractViolation("Kraus detections act on a two-mode state")
    a, b = modes
    _check_mode(s, a)
    _check_mode(s, b)
    occ_a, amp_a = _lower(s, a)
    occ_b, amp_b = _lower(s, b)
    occ = np.concatenate([occ_a, occ_b]).reshape(-1, s.mode_count)
    amp = np.concatenate([amp_a, sign * amp_b]) / math.sqrt(2.0)
    return StateVector(occ, amp, s.mode_count)


def apply_kraus_L(s, modes=(0, 1)):
    """``(a - b)/sqrt 2``; unnormalized, may return the zero vector."""
    return _kraus(s, -1.0, tuple(modes))


def apply_kraus_R(s, modes=(0, 1)):
    """``(a + b)/sqrt 2``; unnormalized, may return the zero vector."""
    return _kraus(s, 1.0, tuple(modes))


def measure_number(s, mode, min_probability=MIN_OUTCOME_PROBABILITY):
    """Projective photon counting on ``mode``.

    Returns one outcome per count with non-negligible probability, sorted by
    count.  Post-states are normalized and keep the measured mode, now holding
    exactly ``count`` photons.
    """
    _check_mode(s, mode)
    s = normalize(s)
    counts = s.occupations[:, mode]
    probs = np.abs(s.amplitudes) ** 2
    outcomes = []
    for count in np.unique(counts):
        sel = counts == count
        prob = float(probs[sel].sum())
        if prob < min_probability:
            continue
        post = StateVector(s.occupations[sel], s.amplitudes[sel] / math.sqrt(prob), s.mode_count)
        outcomes.append(DetectionOutcome(int(count), prob, post))
    return outcomes


def detect(s, mode, min_probability=MIN_OUTCOME_PROBABILITY):
    """Destructive counting: like :func:`measure_number` but the mode is removed."""
    return [
        DetectionOutcome(o.count, o.probability, remove_mode(o.post_state, mode))
        for o in measure_number(s, mode, min_probability)
    ]


def project(s, mode, count):
    """Unnormalized projection onto ``count`` photons in ``mode``."""
    _check_mode(s, mode)
    sel = s.occupations[:, mode] == count
    return StateVector(s.occupations[sel], s.amplitudes[sel], s.mode_count)
