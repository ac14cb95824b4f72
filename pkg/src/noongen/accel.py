"""Backend selection for the numeric kernels.

Numba is used when importable unless ``NOONGEN_DISABLE_NUMBA`` is set to a
truthy value, in which case every dispatcher in :mod:`noongen.kernels` routes
to the vectorised numpy implementation instead.
"""

import contextlib
import os

_TRUTHY = {"1", "true", "yes", "on"}

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

NUMBA_AVAILABLE = _numba is not None
_enabled = NUMBA_AVAILABLE and os.environ.get("NOONGEN_DISABLE_NUMBA", "").strip().lower() not in _TRUTHY


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if NUMBA_AVAILABLE:
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func


def numba_enabled():
    return _enabled


def set_numba_enabled(flag):
    """Switch backends at runtime. Returns the previous setting."""
    global _enabled
    previous = _enabled
    if flag and not NUMBA_AVAILABLE:
        raise RuntimeError("numba is not installed")
    _enabled = bool(flag)
    return previous


@contextlib.contextmanager
def backend(use_numba):
    previous = set_numba_enabled(use_numba)
    try:
        yield
    finally:
        set_numba_enabled(previous)
