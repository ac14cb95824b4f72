"""Exact Fock-space simulation of a feed-forward N00N-state generator."""

from .errors import ContractViolation, NoonGenError, NormalizationError, OutOfModeledRange
from .fock import FidelityReport, StateVector, inner_product, noon_fidelity, normalize, overlap

__version__ = "0.1.0"

__all__ = [
    "ContractViolation",
    "FidelityReport",
    "NoonGenError",
    "NormalizationError",
    "OutOfModeledRange",
    "StateVector",
    "__version__",
    "inner_product",
    "noon_fidelity",
    "normalize",
    "overlap",
]
