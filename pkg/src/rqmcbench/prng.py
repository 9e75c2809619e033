"""Pseudorandom baselines: MT19937, XORWOW and the counter-based
Philox-4x32-10 generator, plus the word -> (0,1) uniform mapping.

MT19937 and XORWOW are classic recursive generators (state evolves as
s_n = F(s_{n-1})); Philox computes its output block purely from a
(counter, key) pair, which is what makes stride partitioning and
key-per-replication stream splitting trivial.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint32

from .seeding import derive_words

_M32 = 0xFFFFFFFF

PHILOX_M0 = 0xD2511F53
PHILOX_M1 = 0xCD9E8D57
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85
PHILOX_ROUNDS = 10


def word_to_uniform(w):
    """Map 32-bit words to (w + 0.5) / 2**32, strictly inside (0, 1).

    The half-integer offset keeps both endpoints unreachable, so the
    inverse-normal transform downstream is always finite.
    """
    return (np.asarray(w, dtype=np.float64) + 0.5) * 2.0**-32


# ---------------------------------------------------------------------------
# MT19937
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _mt_fill(state, pos, out):
    n = 624
    cursor = pos
    for i in range(out.size):
        if cursor >= n:
            for j in range(n):
                y = (state[j] & uint32(0x80000000)) | (state[(j + 1) % n] & uint32(0x7FFFFFFF))
                val = state[(j + 397) % n] ^ (y >> uint32(1))
                if y & uint32(1):
                    val ^= uint32(0x9908B0DF)
                state[j] = val
            cursor = 0
        y = state[cursor]
        cursor += 1
        y ^= y >> uint32(11)
        y ^= (y << uint32(7)) & uint32(0x9D2C5680)
        y ^= (y << uint32(15)) & uint32(0xEFC60000)
        y ^= y >> uint32(18)
        out[i] = y
    return cursor


class MT19937:
    """Standard 624-word Mersenne twister with the classic 32-bit seeding."""

    def __init__(self, seed: int):
        state = np.empty(624, dtype=np.uint32)
        state[0] = seed & _M32
        for i in range(1, 624):
            prev = int(state[i - 1])
            state[i] = (1812433253 * (prev ^ (prev >> 30)) + i) & _M32
        self.state = state
        self.cursor = 624

    def next_word(self) -> int:
        """Next tempered 32-bit output."""
        out = np.empty(1, dtype=np.uint32)
        self.cursor = _mt_fill(self.state, self.cursor, out)
        return int(out[0])

    def fill_words(self, out: np.ndarray) -> None:
        self.cursor = _mt_fill(self.state, self.cursor, out.reshape(-1))


# ---------------------------------------------------------------------------
# XORWOW
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _xorwow_fill(st, out):
    # all arithmetic explicitly masked to 32 bits (numba promotes uint32
    # additions to int64, so wraparound must be spelled out)
    mask = np.uint64(0xFFFFFFFF)
    x = np.uint64(st[0])
    y = np.uint64(st[1])
    z = np.uint64(st[2])
    w = np.uint64(st[3])
    v = np.uint64(st[4])
    d = np.uint64(st[5])
    for i in range(out.size):
        t = (x ^ (x >> np.uint64(2))) & mask
        x = y
        y = z
        z = w
        w = v
        v = ((v ^ ((v << np.uint64(4)) & mask)) ^ (t ^ ((t << np.uint64(1)) & mask))) & mask
        d = (d + np.uint64(362437)) & mask
        out[i] = uint32((d + v) & mask)
    st[0] = uint32(x)
    st[1] = uint32(y)
    st[2] = uint32(z)
    st[3] = uint32(w)
    st[4] = uint32(v)
    st[5] = uint32(d)


class Xorwow:
    """Marsaglia's xorwow: five-word xorshift plus a Weyl counter.

    Seeding expands the 64-bit seed through the splitmix mixer into the
    five xorshift words (rejecting the all-zero state, which would lock
    the xorshift part at zero) and the initial Weyl value.
    """

    def __init__(self, seed: int):
        words = derive_words(seed, 6)
        while not any(words[:5]):
            seed = seed + 1
            words = derive_words(seed, 6)
        self.state = np.array(words, dtype=np.uint32)

    @classmethod
    def from_words(cls, words) -> "Xorwow":
        if len(words) != 6:
            raise ValueError("need five xorshift words plus the Weyl counter")
        if not any(int(w) & _M32 for w in words[:5]):
            raise ValueError("all-zero xorshift state is invalid")
        obj = cls.__new__(cls)
        obj.state = np.array([int(w) & _M32 for w in words], dtype=np.uint32)
        return obj

    def next_word(self) -> int:
        out = np.empty(1, dtype=np.uint32)
        _xorwow_fill(self.state, out)
        return int(out[0])

    def fill_words(self, out: np.ndarray) -> None:
        _xorwow_fill(self.state, out.reshape(-1))


# ---------------------------------------------------------------------------
# Philox-4x32-10
# ---------------------------------------------------------------------------


def philox_block(counter, key):
    """One Philox-4x32 block: four words from (counter, key), 10 rounds.

    Pure function; any (counter, key) is valid input.
    """
    c = [int(x) & _M32 for x in counter]
    k = [int(x) & _M32 for x in key]
    if len(c) != 4 or len(k) != 2:
        raise ValueError("counter must have 4 words, key 2")
    for _ in range(PHILOX_ROUNDS):
        p0 = c[0] * PHILOX_M0
        p1 = c[2] * PHILOX_M1
        c = [
            ((p1 >> 32) ^ c[1] ^ k[0]) & _M32,
            p1 & _M32,
            ((p0 >> 32) ^ c[3] ^ k[1]) & _M32,
            p0 & _M32,
        ]
        k[0] = (k[0] + PHILOX_W0) & _M32
        k[1] = (k[1] + PHILOX_W1) & _M32
    return tuple(c)


@njit(cache=True, nogil=True, inline="always")
def _philox_store_block(out, p, b, plo, phi, key0, key1):
    """Run 10 rounds on counter (b, path_lo, path_hi, 0) and store up to
    four words in row p. Everything in masked uint64 arithmetic."""
    mask = np.uint64(0xFFFFFFFF)
    m0 = np.uint64(0xD2511F53)
    m1 = np.uint64(0xCD9E8D57)
    w0 = np.uint64(0x9E3779B9)
    w1 = np.uint64(0xBB67AE85)
    c0 = np.uint64(b)
    c1 = plo
    c2 = phi
    c3 = np.uint64(0)
    k0 = key0
    k1 = key1
    for _ in range(10):
        p0 = c0 * m0
        p1 = c2 * m1
        c0 = ((p1 >> np.uint64(32)) ^ c1 ^ k0) & mask
        c1 = p1 & mask
        c2 = ((p0 >> np.uint64(32)) ^ c3 ^ k1) & mask
        c3 = p0 & mask
        k0 = (k0 + w0) & mask
        k1 = (k1 + w1) & mask
    nwords = out.shape[1]
    base = 4 * b
    out[p, base] = uint32(c0)
    if base + 1 < nwords:
        out[p, base + 1] = uint32(c1)
    if base + 2 < nwords:
        out[p, base + 2] = uint32(c2)
    if base + 3 < nwords:
        out[p, base + 3] = uint32(c3)


@njit(cache=True, nogil=True)
def _philox_fill_paths(first_path, key0, key1, out):
    """Words for consecutive paths: counter = (block, path_lo, path_hi, 0).

    out has one row per path; row p gets the first `out.shape[1]` words of
    the blocks keyed to path `first_path + p`.
    """
    npaths, nwords = out.shape
    nblocks = (nwords + 3) // 4
    k0 = np.uint64(key0)
    k1 = np.uint64(key1)
    for p in range(npaths):
        path = np.uint64(first_path + p)
        plo = path & np.uint64(0xFFFFFFFF)
        phi = path >> np.uint64(32)
        for b in range(nblocks):
            _philox_store_block(out, p, b, plo, phi, k0, k1)


@njit(cache=True, nogil=True)
def _philox_fill_indexed(paths, key0, key1, out):
    """Same block layout as _philox_fill_paths for arbitrary path indices."""
    npaths, nwords = out.shape
    nblocks = (nwords + 3) // 4
    k0 = np.uint64(key0)
    k1 = np.uint64(key1)
    for p in range(npaths):
        path = np.uint64(paths[p])
        plo = path & np.uint64(0xFFFFFFFF)
        phi = path >> np.uint64(32)
        for b in range(nblocks):
            _philox_store_block(out, p, b, plo, phi, k0, k1)


class PhiloxPaths:
    """Per-path Philox words under one key: path i, word j is a pure
    function of (key, i, j), so disjoint keys give disjoint streams."""

    def __init__(self, key: int):
        self.key0 = np.uint32(key & _M32)
        self.key1 = np.uint32((key >> 32) & _M32)

    def words_for(self, first_path: int, npaths: int, nwords: int) -> np.ndarray:
        out = np.empty((npaths, nwords), dtype=np.uint32)
        _philox_fill_paths(first_path, self.key0, self.key1, out)
        return out

    def words_at(self, paths: np.ndarray, nwords: int) -> np.ndarray:
        out = np.empty((paths.size, nwords), dtype=np.uint32)
        _philox_fill_indexed(
            np.ascontiguousarray(paths, dtype=np.int64), self.key0, self.key1, out
        )
        return out
