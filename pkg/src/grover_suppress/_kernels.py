"""Numba kernels acting on dense density matrices ``rho[i, j]``.

Qubit ``q`` is bit ``q`` of the row and column index. Superoperators act on
row-major vectorised local blocks: for one qubit the block index is
``2 * row_bit + col_bit``; for two qubits ``(a, b)`` with ``a`` as the more
significant local bit it is ``4 * (2 * ra + rb) + (2 * ca + cb)``.
"""

from __future__ import annotations

import numba as nb
import numpy as np


@nb.njit(cache=True, inline="always")
def _insert_zero(x, bit):
    low = x & ((1 << bit) - 1)
    return ((x >> bit) << (bit + 1)) | low


@nb.njit(cache=True)
def apply_superop1(rho, q, s):
    dim = rho.shape[0]
    m = 1 << q
    half = dim >> 1
    v = np.empty(4, dtype=np.complex128)
    for ii in range(half):
        i0 = _insert_zero(ii, q)
        i1 = i0 | m
        for jj in range(half):
            j0 = _insert_zero(jj, q)
            j1 = j0 | m
            v[0] = rho[i0, j0]
            v[1] = rho[i0, j1]
            v[2] = rho[i1, j0]
            v[3] = rho[i1, j1]
            rho[i0, j0] = s[0, 0] * v[0] + s[0, 1] * v[1] + s[0, 2] * v[2] + s[0, 3] * v[3]
            rho[i0, j1] = s[1, 0] * v[0] + s[1, 1] * v[1] + s[1, 2] * v[2] + s[1, 3] * v[3]
            rho[i1, j0] = s[2, 0] * v[0] + s[2, 1] * v[1] + s[2, 2] * v[2] + s[2, 3] * v[3]
            rho[i1, j1] = s[3, 0] * v[0] + s[3, 1] * v[1] + s[3, 2] * v[2] + s[3, 3] * v[3]


@nb.njit(cache=True)
def apply_superop2(rho, a, b, s):
    dim = rho.shape[0]
    lo, hi = (a, b) if a < b else (b, a)
    ma = 1 << a
    mb = 1 << b
    quarter = dim >> 2
    offs = np.array([0, mb, ma, ma | mb])
    v = np.empty(16, dtype=np.complex128)
    for ii in range(quarter):
        i0 = _insert_zero(_insert_zero(ii, lo), hi)
        for jj in range(quarter):
            j0 = _insert_zero(_insert_zero(jj, lo), hi)
            for r in range(4):
                for c in range(4):
                    v[4 * r + c] = rho[i0 | offs[r], j0 | offs[c]]
            for r in range(4):
                for c in range(4):
                    k = 4 * r + c
                    acc = 0j
                    for t in range(16):
                        acc += s[k, t] * v[t]
                    rho[i0 | offs[r], j0 | offs[c]] = acc


# --- batched statevectors, shape (2^n, K) -------------------------------------
@nb.njit(cache=True)
def sv_apply1(state, q, u):
    dim, k = state.shape
    m = 1 << q
    for ii in range(dim >> 1):
        i0 = _insert_zero(ii, q)
        i1 = i0 | m
        for c in range(k):
            x0 = state[i0, c]
            x1 = state[i1, c]
            state[i0, c] = u[0, 0] * x0 + u[0, 1] * x1
            state[i1, c] = u[1, 0] * x0 + u[1, 1] * x1


@nb.njit(cache=True)
def sv_apply2(state, a, b, u):
    dim, k = state.shape
    lo, hi = (a, b) if a < b else (b, a)
    ma = 1 << a
    mb = 1 << b
    offs = np.array([0, mb, ma, ma | mb])
    x = np.empty(4, dtype=np.complex128)
    for ii in range(dim >> 2):
        i0 = _insert_zero(_insert_zero(ii, lo), hi)
        for c in range(k):
            for r in range(4):
                x[r] = state[i0 | offs[r], c]
            for r in range(4):
                state[i0 | offs[r], c] = u[r, 0] * x[0] + u[r, 1] * x[1] + u[r, 2] * x[2] + u[r, 3] * x[3]


@nb.njit(cache=True)
def sv_scale_one(state, q, s):
    """Multiply every amplitude with qubit ``q`` set by ``s``."""
    dim, k = state.shape
    m = 1 << q
    for ii in range(dim >> 1):
        i1 = _insert_zero(ii, q) | m
        for c in range(k):
            state[i1, c] *= s


@nb.njit(cache=True)
def sv_one_prob(state, q, cols):
    """Normalised probability of qubit ``q`` being 1, for the listed columns."""
    dim = state.shape[0]
    m = 1 << q
    out = np.zeros(cols.size)
    for t in range(cols.size):
        c = cols[t]
        tot = 0.0
        one = 0.0
        for i in range(dim):
            v = state[i, c]
            p = v.real * v.real + v.imag * v.imag
            tot += p
            if i & m:
                one += p
        out[t] = one / tot
    return out
