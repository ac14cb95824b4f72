"""Reference states and closed-form expressions used as oracles.

Phase-reference states are stored as their exact binomial Fock expansion::

    psi_inf(S, d) = 2^{-S/2} sum_k sqrt(C(S, k)) e^{i (k - S/2) d} |S - k, k>

which is the fixed-total projection of ``|alpha>|alpha e^{i d}>`` (independent
of ``|alpha|``) with the symmetric phase factor ``e^{-i S d / 2}`` folded in.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import gammaln, logsumexp

from .errors import ContractViolation, NormalizationError, OutOfModeledRange
from .fock import StateVector


@dataclass(frozen=True)
class PhaseRefParams:
    total_photons: int
    delta0: float

    def __post_init__(self):
        if self.total_photons < 1:
            raise ContractViolation("phase reference needs S >= 1")


@dataclass(frozen=True)
class CatStateParams:
    total_photons: int
    delta0: float
    lam: float = 0.0

    def __post_init__(self):
        if self.total_photons < 1:
            raise ContractViolation("cat state needs S >= 1")


@dataclass(frozen=True)
class LocalizationParams:
    detections: int
    N: int = 0

    def __post_init__(self):
        if self.detections < 1:
            raise ContractViolation("localization needs at least one detection")


def log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def _two_mode_sector(S, amplitudes):
    k = np.arange(S + 1)
    occ = np.stack([S - k, k], axis=1)
    return StateVector(occ, amplitudes, 2)


def psi_infinity_amplitudes(S, delta0):
    k = np.arange(S + 1)
    mags = np.exp(0.5 * log_binom(S, k) - 0.5 * S * math.log(2.0))
    return mags * np.exp(1j * (k - S / 2.0) * delta0)


def build_psi_infinity(p_or_S, delta0=None):
    """Phase reference with ``S`` photons and relative phase ``delta0``."""
    p = p_or_S if isinstance(p_or_S, PhaseRefParams) else PhaseRefParams(int(p_or_S), float(delta0))
    return _two_mode_sector(p.total_photons, psi_infinity_amplitudes(p.total_photons, p.delta0))


def build_cat(p_or_S, delta0=None, lam=0.0):
    """Normalized ``psi_inf(delta0) + e^{i lam} psi_inf(-delta0)``."""
    if isinstance(p_or_S, CatStateParams):
        p = p_or_S
    else:
        p = CatStateParams(int(p_or_S), float(delta0), float(lam))
    S = p.total_photons
    amps = psi_infinity_amplitudes(S, p.delta0) + np.exp(1j * p.lam) * psi_infinity_amplitudes(
        S, -p.delta0
    )
    norm2 = float(np.vdot(amps, amps).real)
    if norm2 < 1e-24:
        raise NormalizationError(
            f"cat components cancel (S={S}, delta0={p.delta0}, lam={p.lam})"
        )
    return _two_mode_sector(S, amps / math.sqrt(norm2))


def build_noon(S, phi=0.0):
    if S < 1:
        raise ContractViolation("N00N state needs S >= 1")
    return StateVector([[S, 0], [0, S]], np.array([1.0, np.exp(1j * phi)]) / math.sqrt(2.0), 2)


def delta0_of(l, r):
    """Localized relative phase ``2 arccos sqrt(r / (l + r))`` in ``[0, pi]``."""
    if l < 0 or r < 0 or l + r < 1:
        raise ContractViolation(f"delta0 needs l, r >= 0 and l + r >= 1, got ({l}, {r})")
    return 2.0 * math.acos(math.sqrt(r / (l + r)))


@dataclass(frozen=True)
class QDistribution:
    """Closed-form detection statistics of the intensity-balancing stage.

    ``consistent`` is False when any entry is negative or the entries do not
    sum to one within ``1e-10``; ``issues`` then says why.  Values are never
    renormalized.
    """

    total_photons: int
    parity: int
    delta0: float
    probabilities: np.ndarray
    mean: float
    expected_mean: float
    consistent: bool
    issues: tuple = field(default=())


def q_distribution(S, l, delta0):
    """Probability of ``Q = 0..S`` photons at the balancing detector.

    ``l`` enters only through the parity of the cat's superposition phase
    ``l pi``; ``delta0`` is the cat's relative phase.
    """
    if S < 1:
        raise ContractViolation("q_distribution needs S >= 1")
    c = math.cos(delta0)
    sign = -1.0 if l % 2 else 1.0
    denom = 1.0 + sign * c**S
    issues = []
    if abs(denom) < 1e-300:
        raise OutOfModeledRange(f"normalization 1 + (-1)^l cos^S vanishes (S={S}, l={l})")
    q = np.arange(S + 1)
    probs = np.zeros(S + 1)
    one_minus = 1.0 - c
    with np.errstate(divide="ignore", invalid="ignore"):
        binom = np.exp(log_binom(S, q[:-1]))
        probs[:-1] = binom * one_minus ** (S - q[:-1]) * c ** q[:-1] / denom
    probs[-1] = (1.0 + sign) ** 2 / 2.0 * c**S / denom
    if np.any(probs < -1e-15):
        issues.append("negative entries (cos(delta0) < 0: phase outside [-pi/2, pi/2])")
    total = float(math.fsum(probs))
    if abs(total - 1.0) > 1e-10:
        issues.append(f"entries sum to {total:.12g}")
    mean = float(np.dot(q, probs))
    return QDistribution(
        total_photons=S,
        parity=l % 2,
        delta0=float(delta0),
        probabilities=probs,
        mean=mean,
        expected_mean=S * c,
        consistent=not issues,
        issues=tuple(issues),
    )


def log_p_cond(N, r):
    if not 0 <= r < N:
        raise ContractViolation(f"p_cond needs 0 <= r < N, got N={N}, r={r}")
    S = 2 * N - r
    k = np.arange(r + 1)
    terms = 2 * log_binom(r, k) + log_binom(S, N - k)
    return float(2 * log_binom(2 * N, N) - S * math.log(2.0) - logsumexp(terms))


def p_cond(N, r):
    """Probability that all photons left after ``r`` one-port detections exit that port."""
    return math.exp(log_p_cond(N, r))


def naive_fidelity_scaling(delta0, S):
    if S < 1:
        raise ContractViolation("S must be >= 1")
    return math.cos((delta0 - math.pi / 2) / 2) ** (2 * S)


def asymptotic_fidelity(ratio):
    """Large-number cat fidelity as a function of ``2N / S``."""
    if ratio <= 1:
        raise ContractViolation(f"ratio 2N/S must exceed 1, got {ratio}")
    return math.sqrt(1.0 - 1.0 / (2.0 * ratio - 1.0) ** 2)


def gaussian_localization(x, p):
    detections = p.detections if isinstance(p, LocalizationParams) else int(p)
    if detections < 1:
        raise ContractViolation("localization needs at least one detection")
    return math.exp(-detections * x * x / 4.0)


def eq3_intensities(S, delta0):
    """Mean photon numbers after a 50:50 splitter acting on ``psi_inf(delta0)``.

    Returns ``(S (1 - cos d)/2, S (1 + cos d)/2, sign)``; ``sign`` is the sign
    of the outgoing ``+-pi/2`` relative phase and is 0 at ``d == 0``, where
    mode one is empty.
    """
    if S < 1:
        raise ContractViolation("S must be >= 1")
    if not -math.pi / 2 <= delta0 <= math.pi / 2:
        raise OutOfModeledRange(f"relative phase {delta0} outside [-pi/2, pi/2]")
    c = math.cos(delta0)
    sign = 1 if delta0 > 0 else (-1 if delta0 < 0 else 0)
    return S * (1 - c) / 2, S * (1 + c) / 2, sign


def fidelity_integral(N, D):
    """Gaussian-localization estimate of one cat component's fidelity.

    Ratio of ``[int cos^S(x/2) G(x) dx]^2`` to the double integral of
    ``cos^S((x - y)/2) G(x) G(y)`` over ``[-pi/2, pi/2]^2``, where
    ``G(x) = exp(-D x^2 / 4)`` and ``S = 2N - D``.
    """
    S = 2 * N - D
    if S < 1 or D < 1:
        raise ContractViolation("fidelity_integral needs 1 <= D < 2N")
    half = math.pi / 2
    num, _ = integrate.quad(lambda x: math.cos(x / 2) ** S * math.exp(-D * x * x / 4), -half, half)
    den, _ = integrate.dblquad(
        lambda y, x: math.cos((x - y) / 2) ** S * math.exp(-D * (x * x + y * y) / 4),
        -half,
        half,
        -half,
        half,
        epsabs=1e-12,
        epsrel=1e-10,
    )
    return num**2 / den


def cat_component_overlap(S, delta0):
    """``<psi_inf(d)|psi_inf(-d)> = cos^S(d)``."""
    return math.cos(delta0) ** S


def overlap_law(S, delta1, delta2):
    return abs(math.cos((delta2 - delta1) / 2)) ** S


__all__ = [
    "PhaseRefParams",
    "CatStateParams",
    "LocalizationParams",
    "QDistribution",
    "build_psi_infinity",
    "build_cat",
    "build_noon",
    "delta0_of",
    "q_distribution",
    "p_cond",
    "log_p_cond",
    "naive_fidelity_scaling",
    "asymptotic_fidelity",
    "gaussian_localization",
    "eq3_intensities",
    "fidelity_integral",
    "overlap_law",
]
