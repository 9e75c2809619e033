"""Sobol' sequence from Joe-Kuo primitive polynomials and direction
numbers, in counter-based and Gray-code recursive forms, with linear
digit scrambling for independent randomizations.

Fixed-point convention: direction numbers are held as 32-bit integers
v_k = m_k * 2**(32-k); a point coordinate is the XOR of selected v's,
mapped to [0, 1) as y / 2**32. Dimension 1 is the degenerate m_k = 1
case (van der Corput in base 2); dimensions >= 2 come from a vendored
direction-number file in the standard published layout.

Scrambling composes a random unit-diagonal lower-triangular bit matrix L
(in digit space, most significant digit first) with a random digital
shift e: z = L y xor e, per dimension. Because L is linear over GF(2),
scrambled points can also be generated by pre-scrambling the direction
numbers once and XOR-ing the shift at the end; `sobol_randomize` does
this so that generation cost is unchanged.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from numba import njit

from .seeding import derive_rng

BITS = 32
_SCALE = 2.0**-32

_DATA_FILE = "joe-kuo-d6-421.txt"


@dataclass(frozen=True)
class PrimitivePolynomial:
    """x**s + a_1 x**(s-1) + ... + a_{s-1} x + 1 over GF(2)."""

    degree: int
    coeffs: tuple[int, ...]  # a_1 .. a_{s-1}

    def __post_init__(self):
        if self.degree < 1 or len(self.coeffs) != max(self.degree - 1, 0):
            raise ValueError("need degree-1 inner coefficients")
        if any(c not in (0, 1) for c in self.coeffs):
            raise ValueError("coefficients must be bits")


@dataclass(frozen=True)
class DirectionSet:
    """One dimension's direction numbers, integer and fixed-point forms."""

    dimension: int
    poly: PrimitivePolynomial | None  # None for the degenerate dimension 1
    m: np.ndarray  # odd integers m_k, k = 1..BITS
    v: np.ndarray  # uint32, v_k = m_k << (BITS - k)


def _extend_m(poly: PrimitivePolynomial, m_init: list[int]) -> np.ndarray:
    """Apply the m-recursion to get BITS direction integers."""
    s = poly.degree
    m = list(m_init)
    for k in range(s, BITS):
        acc = (m[k - s] << s) ^ m[k - s]
        for i, a in enumerate(poly.coeffs, start=1):
            if a:
                acc ^= m[k - i] << i
        m.append(acc)
    return np.array(m[:BITS], dtype=np.int64)


def _direction_set(dimension: int, poly, m_init) -> DirectionSet:
    if dimension == 1:
        m = np.ones(BITS, dtype=np.int64)
        v = (m << (BITS - np.arange(1, BITS + 1))).astype(np.uint32)
        return DirectionSet(1, None, m, v)
    m = _extend_m(poly, m_init)
    v = np.zeros(BITS, dtype=np.uint32)
    for k in range(1, BITS + 1):
        v[k - 1] = np.uint32(int(m[k - 1]) << (BITS - k))
    return DirectionSet(dimension, poly, m, v)


@dataclass(frozen=True)
class ScrambleSet:
    """Per-dimension linear scramble: column masks of L plus shift e.

    cols[d, c] is the c-th column of L_d as a 32-bit word in digit order
    (bit 31 = first/most significant digit); unit diagonal guarantees L
    is nonsingular, so scrambling is a bijection of 32-bit words.
    """

    cols: np.ndarray  # (dim, BITS) uint32
    shift: np.ndarray  # (dim,) uint32

    def __post_init__(self):
        for c in range(BITS):
            bit = np.uint32(1) << np.uint32(BITS - 1 - c)
            col = self.cols[:, c]
            if np.any((col & bit) != bit):
                raise ValueError("scramble matrix must have a unit diagonal")
            if np.any(col & ~(bit | (bit - np.uint32(1)))):
                raise ValueError("scramble matrix must be lower triangular in digit order")


class SobolTable:
    """Loaded direction numbers for `dimension` dimensions, optionally
    with a scramble attached (see `sobol_randomize`)."""

    def __init__(self, sets: list[DirectionSet], scramble: ScrambleSet | None = None):
        self.sets = sets
        self.dimension = len(sets)
        self.scramble = scramble
        # generation matrix: raw columns, pre-scrambled if a scramble is set
        self.v = np.stack([s.v for s in sets])  # (dim, BITS) uint32
        if scramble is None:
            self._gen_v = self.v
            self._gen_shift = np.zeros(self.dimension, dtype=np.uint32)
        else:
            self._gen_v = scramble_words_matrix(self.v, scramble.cols)
            self._gen_shift = scramble.shift


def load_direction_numbers(source, dimension: int) -> SobolTable:
    """Parse a Joe-Kuo layout stream: header, then `d s a m_1 ... m_s`.

    Dimension 1 is synthesized (m_k = 1); rows must supply dimensions
    2..dimension in order. Raises ValueError naming the offending line
    for malformed rows, even m values, or m_l >= 2**l.
    """
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    if isinstance(source, (str, Path)):
        with open(source) as f:
            return load_direction_numbers(f, dimension)
    sets = [_direction_set(1, None, None)]
    lines = iter(enumerate(source, start=1))
    next(lines, None)  # header
    for lineno, line in lines:
        if len(sets) >= dimension:
            break
        if not line.strip():
            continue
        parts = line.split()
        try:
            d, s, a = int(parts[0]), int(parts[1]), int(parts[2])
            m_init = [int(x) for x in parts[3:]]
        except (ValueError, IndexError):
            raise ValueError(f"line {lineno}: malformed direction-number row") from None
        if d != len(sets) + 1:
            raise ValueError(f"line {lineno}: expected dimension {len(sets) + 1}, got {d}")
        if len(m_init) != s:
            raise ValueError(f"line {lineno}: expected {s} initial m values, got {len(m_init)}")
        for l, m in enumerate(m_init, start=1):
            if m % 2 == 0:
                raise ValueError(f"line {lineno}: m_{l} = {m} is even")
            if m >= (1 << l):
                raise ValueError(f"line {lineno}: m_{l} = {m} must be < 2**{l}")
        coeffs = tuple((a >> (s - 2 - i)) & 1 for i in range(s - 1))
        sets.append(_direction_set(d, PrimitivePolynomial(s, coeffs), m_init))
    if len(sets) < dimension:
        raise ValueError(
            f"source provides {len(sets)} dimensions, {dimension} requested"
        )
    return SobolTable(sets)


def default_table(dimension: int) -> SobolTable:
    """Table from the vendored Joe-Kuo file (dimensions up to 421)."""
    text = resources.files("rqmcbench.data").joinpath(_DATA_FILE).read_text()
    return load_direction_numbers(io.StringIO(text), dimension)


# ---------------------------------------------------------------------------
# Point generation
# ---------------------------------------------------------------------------


def sobol_counter_words(index: int, table: SobolTable) -> np.ndarray:
    """Raw 32-bit words of the point at `index` (scramble applied if set)."""
    if not 0 <= index < 2**32:
        raise ValueError("index must be in [0, 2**32)")
    x = np.zeros(table.dimension, dtype=np.uint32)
    i = index
    k = 0
    while i:
        if i & 1:
            x ^= table._gen_v[:, k]
        i >>= 1
        k += 1
    return x ^ table._gen_shift


def sobol_counter(index: int, table: SobolTable) -> np.ndarray:
    """Point at `index`: XOR of direction numbers over the set bits of
    the index, mapped to [0, 1). Pure function, concurrency-safe."""
    return sobol_counter_words(index, table) * _SCALE


class SobolGrayState:
    """Gray-code walk state: points emitted so far and current words."""

    def __init__(self, table: SobolTable):
        self.table = table
        self.index = 0
        self.x = np.zeros(table.dimension, dtype=np.uint32)


def sobol_gray_next(state: SobolGrayState, table: SobolTable | None = None) -> np.ndarray:
    """Emit the next point in Gray-code order, starting at index 0.

    Each step past the first flips the single direction number picked by
    the lowest zero bit of the previous index (Antonov-Saleev update).
    """
    table = state.table if table is None else table
    i = state.index
    if i >= 2**32:
        raise OverflowError("Gray-code index would exceed 2**32")
    if i > 0:
        prev = i - 1
        c = 0
        while (prev >> c) & 1:
            c += 1
        state.x ^= table._gen_v[:, c]
    state.index = i + 1
    return (state.x ^ table._gen_shift) * _SCALE


# ---------------------------------------------------------------------------
# Scrambling
# ---------------------------------------------------------------------------


def scramble_words_matrix(y: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Apply z = L y over GF(2) to words; y shape (dim,) or (dim, n)."""
    y = np.asarray(y, dtype=np.uint32)
    out = np.zeros_like(y)
    for c in range(BITS):
        bit = np.uint32(1) << np.uint32(BITS - 1 - c)
        if y.ndim == 1:
            mask = (y & bit) != 0
            out[mask] ^= cols[mask, c]
        else:
            mask = (y & bit) != 0
            out ^= np.where(mask, cols[:, c][:, None], np.uint32(0))
    return out


def scramble_point(y: np.ndarray, scr: ScrambleSet) -> np.ndarray:
    """z = (L y over GF(2)) xor e, per dimension. Bijective on words."""
    y = np.asarray(y, dtype=np.uint32)
    if y.shape != (scr.cols.shape[0],):
        raise ValueError("word vector length must match scramble dimension")
    return scramble_words_matrix(y, scr.cols) ^ scr.shift


def random_scramble(dimension: int, seed: int, replication: int) -> ScrambleSet:
    """Fresh scramble parameters, deterministic in (seed, replication)."""
    cols = np.zeros((dimension, BITS), dtype=np.uint32)
    shift = np.zeros(dimension, dtype=np.uint32)
    for d in range(dimension):
        rng = derive_rng(seed, replication, d)
        bits = rng.integers(0, 2**32, size=BITS, dtype=np.uint32)
        for c in range(BITS):
            diag = np.uint32(1) << np.uint32(BITS - 1 - c)
            cols[d, c] = diag | (bits[c] & (diag - np.uint32(1)))
        shift[d] = rng.integers(0, 2**32, dtype=np.uint32)
    return ScrambleSet(cols, shift)


def sobol_randomize(table: SobolTable, seed: int, replication: int) -> SobolTable:
    """Copy of `table` carrying a fresh ScrambleSet for this replication."""
    return SobolTable(table.sets, random_scramble(table.dimension, seed, replication))


# ---------------------------------------------------------------------------
# Block generation (harness fast paths)
# ---------------------------------------------------------------------------


def _lowest_zero_bit_positions(indices: np.ndarray) -> np.ndarray:
    """Position of the lowest zero bit, vectorized; exact via float log2."""
    i = indices.astype(np.uint64)
    isolated = (~i) & (i + np.uint64(1))
    return np.log2(isolated.astype(np.float64)).astype(np.int64)


def gray_block_words(table: SobolTable, start: int, count: int, x_prev: np.ndarray):
    """Words for Gray-order points start..start+count-1.

    x_prev are the (unshifted) words of point start-1 (zeros for start=0);
    returns (words including shift, new x_prev). Uses a cumulative XOR
    over the per-step flip rows, so cost is ~2 passes over the block.
    """
    if start == 0:
        rows = np.empty((count, table.dimension), dtype=np.uint32)
        rows[0] = 0
        if count > 1:
            c = _lowest_zero_bit_positions(np.arange(0, count - 1, dtype=np.uint64))
            rows[1:] = table._gen_v[:, c].T
    else:
        c = _lowest_zero_bit_positions(np.arange(start - 1, start + count - 1, dtype=np.uint64))
        rows = table._gen_v[:, c].T.copy()
    np.bitwise_xor.accumulate(rows, axis=0, out=rows)
    rows ^= x_prev
    new_prev = rows[-1].copy()
    rows ^= table._gen_shift
    return rows, new_prev


@njit(cache=True, nogil=True)
def _counter_fill_words(indices, gen_v, shift, out):
    npts, ndim = out.shape
    for p in range(npts):
        i = indices[p]
        for d in range(ndim):
            x = shift[d]
            ii = i
            k = 0
            while ii:
                if ii & 1:
                    x ^= gen_v[d, k]
                ii >>= 1
                k += 1
            out[p, d] = x


class SobolGray:
    """Harness-facing sampler: Gray-code Sobol' blocks from `table`."""

    counter_based = False

    def __init__(self, table: SobolTable):
        self.table = table
        self.dim = table.dimension
        self._x_prev = np.zeros(self.dim, dtype=np.uint32)
        self._next = 0

    def fill(self, out: np.ndarray) -> None:
        words, self._x_prev = gray_block_words(
            self.table, self._next, out.shape[0], self._x_prev
        )
        self._next += out.shape[0]
        np.multiply(words, _SCALE, out=out)


class SobolCounter:
    """Harness-facing sampler: counter-based Sobol' (pure per index)."""

    counter_based = True

    def __init__(self, table: SobolTable):
        self.table = table
        self.dim = table.dimension
        self._next = 0

    def at(self, indices: np.ndarray) -> np.ndarray:
        words = np.empty((indices.size, self.dim), dtype=np.uint32)
        _counter_fill_words(
            np.ascontiguousarray(indices, dtype=np.int64),
            self.table._gen_v,
            self.table._gen_shift,
            words,
        )
        return words * _SCALE

    def fill(self, out: np.ndarray) -> None:
        n = out.shape[0]
        out[:] = self.at(np.arange(self._next, self._next + n))
        self._next += n
