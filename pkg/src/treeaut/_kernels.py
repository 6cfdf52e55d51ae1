"""Compiled inner loops shared by the analysis modules."""
from __future__ import annotations

from functools import lru_cache
from types import SimpleNamespace

import numpy as np
from numba import njit


@njit(cache=True)
def cycle_labels(perm):
    """Label the cycles of a permutation table.

    Returns (cycle_of, lengths, leaders) where cycle ids are assigned in order
    of the smallest vertex of each cycle, so leaders[c] is that smallest vertex.
    """
    size = perm.shape[0]
    cycle_of = np.full(size, -1, dtype=np.int64)
    lengths = np.empty(size, dtype=np.int64)
    leaders = np.empty(size, dtype=np.int64)
    count = 0
    for start in range(size):
        if cycle_of[start] >= 0:
            continue
        length = 0
        x = start
        while cycle_of[x] < 0:
            cycle_of[x] = count
            length += 1
            x = perm[x]
        lengths[count] = length
        leaders[count] = start
        count += 1
    return cycle_of, lengths[:count], leaders[:count]


@njit(cache=True)
def orbit_order(perm, start):
    """Return the orbit of start as an array [start, p(start), p(p(start)), ...]."""
    out = np.empty(perm.shape[0], dtype=np.int64)
    x = start
    n = 0
    while True:
        out[n] = x
        n += 1
        x = perm[x]
        if x == start:
            break
    return out[:n]


@njit(cache=True)
def _affine_step(x, m, k, size, inv):
    # (m + k*x) mod size via a floating reciprocal; y < 2^53 keeps the estimate within one.
    y = m + k * x
    q = np.int64(y * inv)
    y -= q * size
    if y < 0:
        y += size
    elif y >= size:
        y -= size
    return y


@lru_cache(maxsize=None)
def affine_kernels(d):
    """Kernels for the affine sweep, compiled with d as a constant.

    Division by a compile-time constant becomes a multiply and shift, which makes
    the per-vertex valuations several times cheaper than with a runtime d.
    """

    @njit
    def val(x):
        v = 0
        while x % d == 0:
            x //= d
            v += 1
        return v

    @njit
    def params(m, k, n):
        pw = np.empty(n + 1, dtype=np.int64)
        pw[0] = 1
        for e in range(1, n + 1):
            pw[e] = pw[e - 1] * d
        j = val(m)
        return pw, j, m // pw[j], (k - 1) // d

    @njit
    def predict_one(v, n, pw, j, q, s):
        if v == 0:
            return pw[n - j]
        i = val(s * v)
        if i < j - 1:
            return pw[n - 1 - i]
        if i > j - 1:
            return pw[n - j]
        t = val(q + s * v // pw[j - 1])
        return pw[n - j - t] if t < n - j else 1

    @njit
    def predicted_lengths(m, k, n):
        pw, j, q, s = params(m, k, n)
        out = np.empty(pw[n], dtype=np.int64)
        for v in range(pw[n]):
            out[v] = predict_one(v, n, pw, j, q, s)
        return out

    @njit
    def orbit_lengths(m, k, n):
        size = d ** n
        inv = 1.0 / size
        out = np.zeros(size, dtype=np.int64)
        stack = np.empty(size, dtype=np.int64)
        for start in range(size):
            if out[start]:
                continue
            length = 0
            x = start
            while True:
                stack[length] = x
                length += 1
                x = _affine_step(x, m, k, size, inv)
                if x == start:
                    break
            for i in range(length):
                out[stack[i]] = length
        return out

    return SimpleNamespace(params=params, predict_one=predict_one,
                           predicted_lengths=predicted_lengths, orbit_lengths=orbit_lengths)


# Levels at least this large get a sweep kernel with the level size baked in too.
_SPECIALIZE_FROM = 1 << 16


def affine_sweep_kernel(d, size):
    """Compare walked orbit lengths with predictions on Z/size, size = d^n.

    The walk itself uses no formula: it marks residues in a bitset and counts
    steps until the orbit closes.
    """
    return _sweep_kernel(d, size if size >= _SPECIALIZE_FROM else 0)


@lru_cache(maxsize=None)
def _sweep_kernel(d, size):
    base = affine_kernels(d)
    params = base.params
    predict_one = base.predict_one
    if size:
        @njit
        def step(x, m, k, size_, inv):
            return (m + k * x) % size
    else:
        step = _affine_step

    @njit
    def sweep_cell(m, k, n, seen, stack):
        """seen (uint64, size/64 + 1 words) and stack (int32, size) are scratch."""
        pw, j, q, s = params(m, k, n)
        size_ = pw[n]
        inv = 1.0 / size_
        mm = m % size_
        kk = k % size_
        seen[: (size_ >> 6) + 1] = 0
        one = np.uint64(1)
        mismatches = 0
        first = -1
        fixed = 0
        cycles = 0
        for start in range(size_):
            if (seen[start >> 6] >> np.uint64(start & 63)) & one:
                continue
            length = 0
            x = start
            while True:
                seen[x >> 6] |= one << np.uint64(x & 63)
                stack[length] = x
                length += 1
                x = step(x, mm, kk, size_, inv)
                if x == start:
                    break
            cycles += 1
            if length == 1:
                fixed += 1
            for i in range(length):
                v = np.int64(stack[i])
                if predict_one(v, n, pw, j, q, s) != length:
                    mismatches += 1
                    if first < 0 or v < first:
                        first = v
        return mismatches, first, fixed, cycles

    return sweep_cell
