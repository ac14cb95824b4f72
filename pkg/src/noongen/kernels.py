"""Hot numeric kernels for two-mode linear-optical transformations.

Each kernel has a loop-based ``@njit`` implementation and a vectorised numpy
implementation with identical semantics.  The public dispatchers pick one
according to :func:`noongen.accel.numba_enabled`.

Beam-splitter convention (used everywhere in the package)::

    U(gamma, chi) = exp(gamma e^{i chi} a1 a2^dag - gamma e^{-i chi} a1^dag a2)

which acts on creation operators as::

    U a1^dag U^dag = cos(gamma) a1^dag + e^{i chi} sin(gamma) a2^dag
    U a2^dag U^dag = cos(gamma) a2^dag - e^{-i chi} sin(gamma) a1^dag

Inside the fixed-total sector ``s`` the basis is ``|p, s - p>`` indexed by the
mode-1 occupation ``p``; ``matrix[p_out, p_in]`` is the amplitude.

Small sectors use the explicit binomial expansion, which keeps exact zeros
(e.g. Hong-Ou-Mandel suppression).  Its alternating sums lose accuracy as the
sector grows, so above ``EXPANSION_MAX`` the matrix is built from the
eigenvectors of the real symmetric tridiagonal generator instead, which stays
unitary to rounding at any size.
"""

import functools
import math

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .accel import njit, numba_enabled

EXPANSION_MAX = 20


@njit(cache=True)
def _log_factorials(n):
    out = np.zeros(n + 1)
    for k in range(2, n + 1):
        out[k] = out[k - 1] + math.log(k)
    return out


@njit(cache=True)
def _expansion_nb(s, gamma, chi):
    c = math.cos(gamma)
    sn = math.sin(gamma)
    e_plus = complex(math.cos(chi), math.sin(chi))
    e_minus = complex(math.cos(chi), -math.sin(chi))
    lf = _log_factorials(s)
    out = np.zeros((s + 1, s + 1), dtype=np.complex128)
    for n in range(s + 1):
        m = s - n
        for j in range(n + 1):
            # j photons of mode 1 stay; n - j hop to mode 2
            bj = math.exp(lf[n] - lf[j] - lf[n - j])
            head = bj * c**j * sn ** (n - j) * e_plus ** (n - j)
            for k in range(m + 1):
                # k photons of mode 2 stay; m - k hop to mode 1
                p = j + m - k
                q = s - p
                bk = math.exp(lf[m] - lf[k] - lf[m - k])
                sign = -1.0 if (m - k) % 2 else 1.0
                tail = bk * c**k * sn ** (m - k) * e_minus ** (m - k) * sign
                scale = math.exp(0.5 * (lf[p] + lf[q] - lf[n] - lf[m]))
                out[p, n] += head * tail * scale
    return out


def _expansion_np(s, gamma, chi):
    c, sn = math.cos(gamma), math.sin(gamma)
    lf = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, s + 1, dtype=float)))))
    out = np.zeros((s + 1, s + 1), dtype=np.complex128)
    for n in range(s + 1):
        m = s - n
        j = np.arange(n + 1)
        # coefficient of a1^dag^j in (c a1^dag + e^{i chi} s a2^dag)^n
        head = np.exp(lf[n] - lf[j] - lf[n - j]) * c**j * (np.exp(1j * chi) * sn) ** (n - j)
        # coefficient of a1^dag^i in (c a2^dag - e^{-i chi} s a1^dag)^m
        i = np.arange(m + 1)
        tail = np.exp(lf[m] - lf[i] - lf[m - i]) * c ** (m - i) * (-np.exp(-1j * chi) * sn) ** i
        poly = np.convolve(head, tail)
        p = np.arange(s + 1)
        out[:, n] = poly * np.exp(0.5 * (lf[p] + lf[s - p] - lf[n] - lf[m]))
    return out


@njit(cache=True)
def _spectral_nb(s, gamma, chi):
    # U = W V exp(i gamma w) V^T W^dag with W = diag(e^{-i chi p} i^p)
    h = np.zeros((s + 1, s + 1))
    for p in range(s):
        h[p, p + 1] = h[p + 1, p] = math.sqrt((p + 1) * (s - p))
    w, v = np.linalg.eigh(h)
    vc = v.astype(np.complex128)
    for k in range(s + 1):
        vc[:, k] *= complex(math.cos(gamma * w[k]), math.sin(gamma * w[k]))
    u = vc @ v.T.astype(np.complex128)
    out = np.empty((s + 1, s + 1), dtype=np.complex128)
    for a in range(s + 1):
        for b in range(s + 1):
            ang = -chi * (a - b) + 0.5 * math.pi * (a - b)
            out[a, b] = u[a, b] * complex(math.cos(ang), math.sin(ang))
    return out


@njit(cache=True)
def _sector_matrix_nb(s, gamma, chi):
    if s <= EXPANSION_MAX:
        return _expansion_nb(s, gamma, chi)
    return _spectral_nb(s, gamma, chi)


def _spectral_np(s, gamma, chi):
    p = np.arange(s)
    w, v = eigh_tridiagonal(np.zeros(s + 1), np.sqrt((p + 1.0) * (s - p)))
    u = (v * np.exp(1j * gamma * w)) @ v.T
    d = np.arange(s + 1)
    phase = np.exp(1j * (0.5 * math.pi - chi) * (d[:, None] - d[None, :]))
    return u * phase


def _sector_matrix_np(s, gamma, chi):
    if s <= EXPANSION_MAX:
        return _expansion_np(s, gamma, chi)
    return _spectral_np(s, gamma, chi)


@njit(cache=True)
def _sector_stack_nb(smax, gamma, chi):
    stack = np.zeros((smax + 1, smax + 1, smax + 1), dtype=np.complex128)
    for s in range(smax + 1):
        stack[s, : s + 1, : s + 1] = _sector_matrix_nb(s, gamma, chi)
    return stack


def _sector_stack_np(smax, gamma, chi):
    stack = np.zeros((smax + 1, smax + 1, smax + 1), dtype=np.complex128)
    for s in range(smax + 1):
        stack[s, : s + 1, : s + 1] = _sector_matrix_np(s, gamma, chi)
    return stack


@njit(cache=True)
def _scatter_nb(entry_group, entry_n, amp, group_offset, group_s, stack, out):
    for e in range(amp.shape[0]):
        g = entry_group[e]
        s = group_s[g]
        n = entry_n[e]
        a = amp[e]
        base = group_offset[g]
        for p in range(s + 1):
            out[base + p] += stack[s, p, n] * a


def _scatter_np(entry_group, entry_n, amp, group_offset, group_s, stack, out):
    entry_s = group_s[entry_group]
    for s in np.unique(entry_s):
        sel = entry_s == s
        contrib = stack[s, : s + 1][:, entry_n[sel]] * amp[sel]
        idx = group_offset[entry_group[sel]][None, :] + np.arange(s + 1)[:, None]
        np.add.at(out, idx.ravel(), contrib.ravel())


def sector_matrix(s, gamma, chi=0.0):
    """Beam-splitter matrix on the two-mode sector with ``s`` photons."""
    if numba_enabled():
        return _sector_matrix_nb(int(s), float(gamma), float(chi))
    return _sector_matrix_np(int(s), float(gamma), float(chi))


@functools.lru_cache(maxsize=256)
def _cached_stack(smax, gamma, chi, use_numba):
    stack = (_sector_stack_nb if use_numba else _sector_stack_np)(smax, gamma, chi)
    stack.setflags(write=False)
    return stack


def sector_stack(smax, gamma, chi=0.0):
    """All sector matrices up to ``smax`` packed as ``stack[s, p_out, p_in]``."""
    return _cached_stack(int(smax), float(gamma), float(chi), numba_enabled())


def scatter_blocks(entry_group, entry_n, amp, group_offset, group_s, stack, size):
    """Apply per-group sector matrices and accumulate into a flat output.

    Entry ``e`` belongs to group ``entry_group[e]`` (a fixed configuration of
    the spectator modes plus total ``s`` in the acted-on pair) and has mode-1
    occupation ``entry_n[e]``.  Group ``g`` owns the output slice
    ``group_offset[g] : group_offset[g] + group_s[g] + 1``.
    """
    out = np.zeros(size, dtype=np.complex128)
    if numba_enabled():
        _scatter_nb(entry_group, entry_n, amp, group_offset, group_s, stack, out)
    else:
        _scatter_np(entry_group, entry_n, amp, group_offset, group_s, stack, out)
    return out
