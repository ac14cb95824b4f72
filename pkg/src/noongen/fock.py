"""Pure bosonic states over a fixed set of modes in the photon-number basis."""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, NormalizationError

NORMALIZATION_TOL = 1e-12


def row_keys(occ):
    """Encode occupation rows as int64 keys that sort lexicographically.

    Returns None when the mixed-radix code would overflow.
    """
    if occ.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    base = int(occ.max()) + 1
    if base ** occ.shape[1] >= 2**62:
        return None
    keys = np.zeros(occ.shape[0], dtype=np.int64)
    for col in range(occ.shape[1]):
        keys = keys * base + occ[:, col]
    return keys


def unique_rows(occ):
    """``np.unique(occ, axis=0, return_inverse=True)`` with a fast integer path."""
    keys = row_keys(occ)
    if keys is None:
        uniq, inverse = np.unique(occ, axis=0, return_inverse=True)
        return uniq, inverse.reshape(-1)
    _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    return occ[first], inverse.reshape(-1)


class StateVector:
    """Sparse ket ``sum_k c_k |n_k>`` keyed by occupation vectors.

    Instances are immutable: the backing arrays are sorted lexicographically by
    occupation, free of duplicate keys and exact zeros, and flagged read-only.
    Global phase is kept as-is.
    """

    __slots__ = ("_occ", "_amp", "_index")

    def __init__(self, occupations, amplitudes, mode_count=None):
        occ = np.asarray(occupations, dtype=np.int64)
        amp = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if occ.ndim == 1 and occ.size == 0:
            if mode_count is None:
                raise ContractViolation("mode_count is required for an empty state")
            occ = occ.reshape(0, mode_count)
        if occ.ndim != 2 or occ.shape[0] != amp.shape[0]:
            raise ContractViolation("occupations must be (terms, modes) matching amplitudes")
        if mode_count is not None and occ.shape[1] != mode_count:
            raise ContractViolation(f"expected {mode_count} modes, got {occ.shape[1]}")
        if occ.shape[1] < 1:
            raise ContractViolation("a state needs at least one mode")
        if (occ < 0).any():
            raise ContractViolation("photon counts must be non-negative")
        if occ.shape[0]:
            keys, inverse = unique_rows(occ)
            summed = np.zeros(keys.shape[0], dtype=np.complex128)
            np.add.at(summed, inverse, amp)
            keep = summed != 0
            occ, amp = keys[keep], summed[keep]
        occ = np.ascontiguousarray(occ)
        amp = np.ascontiguousarray(amp)
        occ.setflags(write=False)
        amp.setflags(write=False)
        self._occ = occ
        self._amp = amp
        self._index = None

    # -- constructors --------------------------------------------------------

    @classmethod
    def fock(cls, *occupation):
        """Single basis ket, e.g. ``StateVector.fock(3, 3, 0, 0)``."""
        return cls([occupation], [1.0])

    @classmethod
    def zero(cls, mode_count):
        return cls(np.zeros((0, mode_count), dtype=np.int64), [], mode_count=mode_count)

    @classmethod
    def from_dict(cls, terms, mode_count=None):
        if not terms:
            if mode_count is None:
                raise ContractViolation("mode_count is required for an empty state")
            return cls.zero(mode_count)
        keys = list(terms)
        return cls([list(k) for k in keys], [terms[k] for k in keys], mode_count=mode_count)

    # -- accessors -----------------------------------------------------------

    @property
    def mode_count(self):
        return self._occ.shape[1]

    @property
    def occupations(self):
        return self._occ

    @property
    def amplitudes(self):
        return self._amp

    def __len__(self):
        return self._amp.shape[0]

    def items(self):
        for row, a in zip(self._occ, self._amp):
            yield tuple(int(x) for x in row), complex(a)

    def as_dict(self):
        return dict(self.items())

    def amplitude(self, occupation):
        if self._index is None:
            self._index = {tuple(int(x) for x in row): i for i, row in enumerate(self._occ)}
        i = self._index.get(tuple(occupation))
        return 0j if i is None else complex(self._amp[i])

    def totals(self):
        """Total photon number of every stored term."""
        return self._occ.sum(axis=1)

    def norm_squared(self):
        return float(np.vdot(self._amp, self._amp).real)

    def sector_weights(self):
        """Map total photon number to the squared norm it carries."""
        weights = {}
        probs = np.abs(self._amp) ** 2
        for total, w in zip(self.totals(), probs):
            weights[int(total)] = weights.get(int(total), 0.0) + float(w)
        return dict(sorted(weights.items()))

    def mean_occupation(self, mode):
        """Expected photon number in ``mode`` (state assumed normalized)."""
        return float(np.sum(np.abs(self._amp) ** 2 * self._occ[:, mode]))

    # -- linear structure ----------------------------------------------------

    def _check_same_modes(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        if other.mode_count != self.mode_count:
            raise ContractViolation(
                f"mode-count mismatch: {self.mode_count} vs {other.mode_count}"
            )
        return None

    def __add__(self, other):
        bad = self._check_same_modes(other)
        if bad is NotImplemented:
            return bad
        return StateVector(
            np.concatenate([self._occ, other._occ]),
            np.concatenate([self._amp, other._amp]),
            mode_count=self.mode_count,
        )

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        if isinstance(scalar, StateVector):
            return NotImplemented
        return StateVector(self._occ, self._amp * complex(scalar), mode_count=self.mode_count)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / complex(scalar))

    def __neg__(self):
        return self * -1.0

    def __eq__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return (
            self._occ.shape == other._occ.shape
            and np.array_equal(self._occ, other._occ)
            and np.array_equal(self._amp, other._amp)
        )

    __hash__ = None

    def __repr__(self):
        shown = [f"{a:.6g}|{','.join(map(str, k))}>" for k, a in list(self.items())[:6]]
        more = " + ..." if len(self) > 6 else ""
        return f"StateVector(modes={self.mode_count}, {' + '.join(shown) or '0'}{more})"

    # -- serialization -------------------------------------------------------

    def to_json_dict(self):
        return {
            "modes": self.mode_count,
            "terms": [
                {"occ": list(k), "re": a.real, "im": a.imag} for k, a in self.items()
            ],
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), separators=(",", ":"))

    @classmethod
    def from_json_dict(cls, data):
        modes = int(data["modes"])
        terms = data.get("terms", [])
        if not terms:
            return cls.zero(modes)
        occ = [t["occ"] for t in terms]
        amp = [complex(t["re"], t.get("im", 0.0)) for t in terms]
        return cls(occ, amp, mode_count=modes)

    @classmethod
    def from_json(cls, text):
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class FidelityReport:
    fidelity: float
    optimal_phase: float
    total_photons: int
    sector_weight: float = 1.0

    def to_json_dict(self):
        return {
            "fidelity": self.fidelity,
            "optimal_phase": self.optimal_phase,
            "total_photons": self.total_photons,
            "sector_weight": self.sector_weight,
        }


def inner_product(a, b):
    """<a|b>, conjugate-linear in ``a``."""
    if a.mode_count != b.mode_count:
        raise ContractViolation(f"mode-count mismatch: {a.mode_count} vs {b.mode_count}")
    if not len(a) or not len(b):
        return 0j
    # both key arrays are sorted and unique, so a merge finds the shared keys
    stacked = np.concatenate([a.occupations, b.occupations])
    _, inverse = unique_rows(stacked)
    ia, ib = inverse[: len(a)], inverse[len(a):]
    common, pos_a, pos_b = np.intersect1d(ia, ib, assume_unique=True, return_indices=True)
    if not common.size:
        return 0j
    return complex(np.vdot(a.amplitudes[pos_a], b.amplitudes[pos_b]))


def overlap(a, b):
    """|<a|b>| for normalized inputs; the phase-insensitive comparison."""
    return abs(inner_product(a, b))


def normalize(s):
    norm2 = s.norm_squared()
    if norm2 <= 0.0:
        raise NormalizationError("cannot normalize the zero vector")
    return s * (1.0 / math.sqrt(norm2))


def prune(s, threshold):
    """Drop terms with ``|amplitude| < threshold``.

    Refuses (raises) if the discarded probability reaches 1e-14 of the total.
    """
    if threshold <= 0:
        return s
    mags = np.abs(s.amplitudes)
    drop = mags < threshold
    lost = float(np.sum(mags[drop] ** 2))
    if lost >= 1e-14 * max(s.norm_squared(), np.finfo(float).tiny):
        raise ContractViolation(f"pruning would discard probability {lost:.3e}")
    return StateVector(s.occupations[~drop], s.amplitudes[~drop], mode_count=s.mode_count)


def attach_vacuum(s, extra_modes):
    if extra_modes < 1:
        raise ContractViolation("extra_modes must be >= 1")
    pad = np.zeros((len(s), extra_modes), dtype=np.int64)
    return StateVector(np.hstack([s.occupations, pad]), s.amplitudes, s.mode_count + extra_modes)


def _check_mode(s, mode):
    if not 0 <= mode < s.mode_count:
        raise ContractViolation(f"mode {mode} out of range for {s.mode_count} modes")


def drop_mode(s, mode):
    """Remove a mode that is empty in every stored term."""
    _check_mode(s, mode)
    if s.mode_count == 1:
        raise ContractViolation("cannot drop the only mode")
    if len(s) and s.occupations[:, mode].any():
        raise ContractViolation(f"mode {mode} is populated; measure it before dropping")
    occ = np.delete(s.occupations, mode, axis=1)
    return StateVector(occ, s.amplitudes, s.mode_count - 1)


def remove_mode(s, mode):
    """Delete a mode's column regardless of its occupation.

    Only meaningful after a projective measurement left the mode with one
    definite count, which is then simply forgotten (detector absorbs it).
    """
    _check_mode(s, mode)
    if s.mode_count == 1:
        raise ContractViolation("cannot remove the only mode")
    if len(s) and np.unique(s.occupations[:, mode]).size > 1:
        raise ContractViolation(f"mode {mode} has no definite photon number")
    return StateVector(np.delete(s.occupations, mode, axis=1), s.amplitudes, s.mode_count - 1)


def noon_fidelity(s, total_photons=None):
    """Fidelity with the closest ``(|S,0> + e^{i phi}|0,S>)/sqrt(2)``.

    The maximum over phi is attained analytically at
    ``phi = arg c_{0S} - arg c_{S0}`` with value ``(|c_S0| + |c_0S|)^2 / 2``.
    When ``s`` spans several photon-number sectors and ``total_photons`` is not
    given, the sector with the largest weight is used and reported.
    """
    if s.mode_count != 2:
        raise ContractViolation("noon_fidelity needs a two-mode state")
    s = normalize(s)
    weights = s.sector_weights()
    if total_photons is None:
        total_photons = max(weights, key=lambda k: (weights[k], -k))
    total = int(total_photons)
    if total <= 0:
        raise ContractViolation("N00N fidelity needs a positive photon number")
    c_s0 = s.amplitude((total, 0))
    c_0s = s.amplitude((0, total))
    fidelity = min(1.0, (abs(c_s0) + abs(c_0s)) ** 2 / 2.0)
    if c_s0 == 0 or c_0s == 0:
        phase = 0.0
    else:
        phase = (np.angle(c_0s) - np.angle(c_s0)) % (2 * math.pi)
        if math.isclose(phase, 2 * math.pi):
            phase = 0.0
    return FidelityReport(float(fidelity), float(phase), total, weights.get(total, 0.0))
