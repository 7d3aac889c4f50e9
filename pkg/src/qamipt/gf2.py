"""Bit-packed linear algebra over GF(2).

Vectors are rows of ``uint64`` words, bit ``i`` living in word ``i // 64``
at position ``i % 64``.  Rank is computed by incremental insertion into an
echelon basis indexed by lowest set bit, which also gives the ranks of all
prefixes of a row sequence in one pass.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_DEBRUIJN = np.uint64(0x03F79D71B4CB0A89)
_DEBRUIJN_TABLE = np.array(
    [
        0, 1, 48, 2, 57, 49, 28, 3, 61, 58, 50, 42, 38, 29, 17, 4,
        62, 55, 59, 36, 53, 51, 43, 22, 45, 39, 33, 30, 24, 18, 12, 5,
        63, 47, 56, 27, 60, 41, 37, 16, 54, 35, 52, 21, 44, 32, 23, 11,
        46, 26, 40, 15, 34, 20, 31, 10, 25, 14, 19, 9, 13, 8, 7, 6,
    ],
    dtype=np.int64,
)


@njit(cache=True, inline="always")
def ctz(w):
    """Index of the lowest set bit of a nonzero ``uint64``."""
    lowest = w & (~w + np.uint64(1))
    return _DEBRUIJN_TABLE[(lowest * _DEBRUIJN) >> np.uint64(58)]


@njit(cache=True)
def lowest_bit(v):
    for k in range(v.shape[0]):
        if v[k] != 0:
            return k * 64 + ctz(v[k])
    return -1


@njit(cache=True)
def basis_insert(basis, pivot_of, rank, v):
    """Reduce ``v`` (modified in place) against ``basis[:rank]``; append it if
    independent.  Returns the new rank."""
    while True:
        b = lowest_bit(v)
        if b < 0:
            return rank
        r = pivot_of[b]
        if r < 0:
            basis[rank, :] = v
            pivot_of[b] = rank
            return rank + 1
        for k in range(b // 64, v.shape[0]):
            v[k] ^= basis[r, k]


@njit(cache=True)
def prefix_ranks(rows):
    """``out[i]`` is the GF(2) rank of ``rows[:i + 1]``."""
    n_rows, n_words = rows.shape
    basis = np.zeros((min(n_rows, n_words * 64), n_words), dtype=np.uint64)
    pivot_of = np.full(n_words * 64, -1, dtype=np.int64)
    out = np.zeros(n_rows, dtype=np.int64)
    v = np.empty(n_words, dtype=np.uint64)
    rank = 0
    for i in range(n_rows):
        v[:] = rows[i]
        rank = basis_insert(basis, pivot_of, rank, v)
        out[i] = rank
    return out


@njit(cache=True)
def rank(rows):
    if rows.shape[0] == 0:
        return 0
    return prefix_ranks(rows)[-1]


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack a ``(rows, cols)`` 0/1 array into ``(rows, ceil(cols / 64))`` words."""
    bits = np.asarray(bits, dtype=np.uint8)
    rows, cols = bits.shape
    n_words = max((cols + 63) // 64, 1)
    padded = np.zeros((rows, n_words * 64), dtype=np.uint8)
    padded[:, :cols] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64)


def unpack_rows(words: np.ndarray, cols: int) -> np.ndarray:
    words = np.ascontiguousarray(words, dtype=np.uint64)
    rows, n_words = words.shape
    as_bytes = words.astype("<u8").view(np.uint8).reshape(rows, n_words * 8)
    bits = np.unpackbits(as_bytes, axis=1, bitorder="little")
    return bits[:, :cols]


def rank_dense(bits: np.ndarray) -> int:
    """Rank of a 0/1 matrix (unpacked convenience wrapper)."""
    bits = np.asarray(bits)
    if bits.size == 0:
        return 0
    return int(rank(pack_rows(bits)))
