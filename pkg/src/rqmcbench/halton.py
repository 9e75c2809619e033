"""Van der Corput / Halton generation: direct, Kakutani-orbit and
fast digit-recursive forms, with random starts and random digit
permutations ("Rasrap" streams).

Three interchangeable ways to produce the same permuted van der Corput
sequence per dimension:

* ``vdc_permuted_direct`` / ``rasrap_counter`` -- counter-based, the n-th
  term straight from n (safe for unrestricted concurrent use);
* ``RasrapStream`` -- digit-recursive with cached partial sums, one carry
  per step on average (fast, single-owner mutable state);
* ``KakutaniState`` -- the von Neumann-Kakutani orbit form, kept mainly
  because its orbit from 0 is an independent check of the other two.

Digit convention: permutations are applied to a fixed window of K base-p
digits, K being the smallest integer with p**K >= 2**32 (so a random
start resolves ~32 bits in every base). Leading zeros inside the window
contribute sigma(0)/p**(i+1); the window widens automatically if an index
outgrows it. Both the recursive and the counter form use this same
expansion, which is what makes them agree term by term even when
sigma(0) != 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numba import njit

from .seeding import derive_rng

# Extra digit positions above the 32-bit start resolution; enough for any
# index reachable at benchmark scale (p**(K+8) >= 2**40 in every base).
_CAP_PAD = 8


def primes(count: int) -> list[int]:
    """First `count` primes, by a sieve grown on demand."""
    if count < 1:
        raise ValueError("count must be >= 1")
    # n-th prime < n (ln n + ln ln n) for n >= 6; sieve a safe upper bound
    n = max(count, 6)
    bound = int(n * (math.log(n) + math.log(math.log(n)))) + 10
    while True:
        sieve = np.ones(bound + 1, dtype=bool)
        sieve[:2] = False
        for p in range(2, int(bound**0.5) + 1):
            if sieve[p]:
                sieve[p * p :: p] = False
        found = np.flatnonzero(sieve)
        if found.size >= count:
            return [int(p) for p in found[:count]]
        bound *= 2


def digit_capacity(base: int) -> int:
    """Smallest K with base**K >= 2**32."""
    k = 1
    v = base
    while v < 2**32:
        v *= base
        k += 1
    return k


def vdc_direct(n: int, base: int) -> float:
    """n-th term of the van der Corput sequence in `base`.

    Mirrors the base-b digits of n about the radix point:
    n = sum a_i b**i  ->  sum a_i / b**(i+1).
    """
    if base < 2:
        raise ValueError(f"base must be >= 2, got {base}")
    if n < 0:
        raise ValueError("n must be non-negative")
    x = 0.0
    denom = 1.0
    while n > 0:
        n, d = divmod(n, base)
        denom *= base
        x += d / denom
    return x


@dataclass(frozen=True)
class DigitPermutation:
    """A bijection of the digit set {0, ..., base-1}."""

    base: int
    map: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.map, dtype=np.int64)
        object.__setattr__(self, "map", m)
        if m.shape != (self.base,) or not np.array_equal(np.sort(m), np.arange(self.base)):
            raise ValueError(f"map is not a permutation of 0..{self.base - 1}")

    @classmethod
    def identity(cls, base: int) -> "DigitPermutation":
        return cls(base, np.arange(base))

    @classmethod
    def random(cls, base: int, rng: np.random.Generator) -> "DigitPermutation":
        return cls(base, rng.permutation(base))


def vdc_permuted_direct(
    n: int, base: int, perm: DigitPermutation, digits: int | None = None
) -> float:
    """Permuted radical inverse: sum sigma(a_i) / base**(i+1).

    sigma is applied to a fixed window of `digits` base-p digits (default:
    the 32-bit capacity for `base`), including leading zeros, widened if n
    needs more digits. This exact convention is shared with RasrapStream.
    """
    if base < 2:
        raise ValueError(f"base must be >= 2, got {base}")
    if len(perm.map) != base:
        raise ValueError(f"permutation has {len(perm.map)} entries, base is {base}")
    if n < 0:
        raise ValueError("n must be non-negative")
    if digits is None:
        digits = digit_capacity(base)
    sigma = perm.map
    x = 0.0
    denom = 1.0
    i = 0
    while n > 0 or i < digits:
        n, d = divmod(n, base)
        denom *= base
        x += sigma[d] / denom
        i += 1
    return x


def invert_radical(omega: float, base: int, k_digits: int) -> int:
    """Index n whose radical inverse shares omega's first `k_digits` digits.

    Realizes the start inversion with epsilon = base**-k_digits:
    |vdc_direct(n, base) - omega| <= base**-k_digits. Digit extraction is
    done in exact arithmetic so no float rounding can shift a digit.
    """
    if not 0.0 <= omega < 1.0:
        raise ValueError(f"omega must be in [0, 1), got {omega}")
    if k_digits < 1:
        raise ValueError("k_digits must be >= 1")
    scaled = math.floor(Fraction(omega) * base**k_digits)
    n = 0
    for _ in range(k_digits):
        scaled, d = divmod(scaled, base)
        n = n * base + d
    return n


# ---------------------------------------------------------------------------
# Kakutani orbit form
# ---------------------------------------------------------------------------


@dataclass
class KakutaniState:
    """Orbit state of the von Neumann-Kakutani transformation T_p.

    The orbit of 0 is the van der Corput sequence in base p; the orbit of
    a random start is a random-start van der Corput sequence.
    """

    base: int
    x: float = 0.0
    b_table: np.ndarray = field(default=None, repr=False)
    _inv_pow: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.base < 2:
            raise ValueError("base must be >= 2")
        if not 0.0 <= self.x < 1.0:
            raise ValueError("x must be in [0, 1)")
        if self.b_table is None:
            self._grow_tables(64)

    def _grow_tables(self, size: int):
        # b_k = (p + 1 - p**k) / p**k as the correctly rounded value of the
        # exact rational: a cheaper float formula leaves a one-sided error
        # that accumulates into a visible drift along the orbit.
        p = self.base
        b = np.empty(size)
        inv_pow = np.empty(size)
        pk = 1
        for k in range(1, size + 1):
            pk *= p
            b[k - 1] = float(Fraction(p + 1 - pk, pk))
            inv_pow[k - 1] = float(Fraction(1, pk))
        self.b_table = b
        self._inv_pow = inv_pow


# Absolute slack for deciding which bracket 1-x falls in. Orbit values are
# p-adic rationals whose distance to a bracket edge, when nonzero, is at
# least ~1/n after n steps, while accumulated float noise on the orbit
# stays around 1e-13 at benchmark scale; 1e-11 separates the two cleanly
# for any orbit short of ~1e9 steps.
_BRACKET_TOL = 1e-11


def kakutani_next(state: KakutaniState) -> float:
    """Advance the orbit: x <- x + b_k with k from the log formula.

    The floor in k = floor(-ln(1-x)/ln p) + 1 misrounds whenever 1-x sits
    on a bracket edge (already after 3 steps from x=0), and the bare
    range check on x + b_k cannot catch every such miss. k is therefore
    validated against the bracket p**-k < 1-x <= p**-(k-1) with a small
    relative slack toward the upper edge and nudged until it holds, which
    also keeps x + b_k inside [0, 1).
    """
    p = state.base
    x = state.x
    one_minus = 1.0 - x
    k = int(-math.log(one_minus) / math.log(p)) + 1
    if k < 1:
        k = 1
    if k + 1 > state.b_table.size:
        state._grow_tables(2 * (k + 1))
    inv_pow = state._inv_pow
    # edge values belong to the deeper bracket (1-x == p**-(k-1) means
    # x has k-1 leading p-1 digits), hence the upper-inclusive slack
    while one_minus <= inv_pow[k - 1] + _BRACKET_TOL:
        k += 1
        if k + 1 > state.b_table.size:
            state._grow_tables(2 * (k + 1))
    while k > 1 and one_minus > inv_pow[k - 2] + _BRACKET_TOL:
        k -= 1
    x = x + state.b_table[k - 1]
    if x >= 1.0:  # float safety net; unreachable when k is right
        x -= 1.0
    state.x = x
    return x


# ---------------------------------------------------------------------------
# Rasrap: random-start randomly permuted van der Corput / Halton
# ---------------------------------------------------------------------------


class RasrapStream:
    """Digit-recursive permuted van der Corput stream for one dimension.

    Keeps the base-p digits a_0..a_{K-1} of the current index and the
    suffix partial sums S_j = sum_{i>=j} sigma(a_i)/p**(i+1), so one step
    costs a single carry plus the cascade of reset digits. Single-owner
    mutable state: never share one stream between threads.
    """

    def __init__(self, base: int, perm: DigitPermutation, start_index: int = 0):
        if perm.base != base:
            raise ValueError("permutation base mismatch")
        self.base = base
        self.perm = perm
        self.start_index = start_index
        self.index = start_index
        cap = digit_capacity(base) + _CAP_PAD
        self.digits = np.zeros(cap, dtype=np.int64)
        self.partial_sums = np.zeros(cap + 1, dtype=np.float64)
        self._active = digit_capacity(base)
        n = start_index
        for i in range(cap):
            n, self.digits[i] = divmod(n, base)
        if n:
            raise ValueError("start_index exceeds digit capacity")
        self._active = max(self._active, int(np.max(np.nonzero(self.digits)[0], initial=0)) + 1)
        sigma = perm.map
        inv_p = 1.0 / base
        scale = inv_p ** self._active
        for j in range(self._active - 1, -1, -1):
            self.partial_sums[j] = self.partial_sums[j + 1] + sigma[self.digits[j]] * scale
            scale *= base

    @property
    def current_value(self) -> float:
        return float(self.partial_sums[0])

    def next(self) -> float:
        """Increment the index and return the new sequence value."""
        base = self.base
        digits = self.digits
        sums = self.partial_sums
        sigma = self.perm.map
        m = 0
        while m < digits.size and digits[m] + 1 == base:
            m += 1
        if m >= self._active:
            if m + 1 >= digits.size:  # index outgrew the array: widen it
                self.digits = np.concatenate([digits, np.zeros(digits.size, dtype=np.int64)])
                self.partial_sums = np.concatenate([sums, np.zeros(sums.size - 1)])
                digits, sums = self.digits, self.partial_sums
            self._active = m + 1
        inv_p = 1.0 / base
        sums[m] = sums[m + 1] + sigma[digits[m] + 1] * inv_p ** (m + 1)
        digits[m] += 1
        s0 = sigma[0]
        for i in range(m - 1, -1, -1):
            digits[i] = 0
            sums[i] = sums[i + 1] + s0 * inv_p ** (i + 1)
        self.index += 1
        return float(sums[0])


@dataclass(frozen=True)
class HaltonConfig:
    """Per-dimension bases, random starts and digit permutations."""

    dimension: int
    bases: tuple[int, ...]
    starts: tuple[float, ...]
    perms: tuple[DigitPermutation, ...]
    start_indices: tuple[int, ...] = None

    def __post_init__(self):
        if self.dimension < 1 or len(self.bases) != self.dimension:
            raise ValueError("need one base per dimension")
        if len(self.starts) != self.dimension or len(self.perms) != self.dimension:
            raise ValueError("starts/perms length must equal dimension")
        for b in self.bases:
            if b < 2:
                raise ValueError("bases must be >= 2")
        for i in range(self.dimension):
            for j in range(i + 1, self.dimension):
                if math.gcd(self.bases[i], self.bases[j]) != 1:
                    raise ValueError(
                        f"bases {self.bases[i]} and {self.bases[j]} are not coprime"
                    )
        for w in self.starts:
            if not 0.0 <= w < 1.0:
                raise ValueError("starts must lie in [0, 1)")
        if self.start_indices is None:
            idx = tuple(
                invert_radical(w, b, digit_capacity(b))
                for w, b in zip(self.starts, self.bases)
            )
            object.__setattr__(self, "start_indices", idx)


def rasrap_config(dimension: int, seed: int) -> HaltonConfig:
    """Fresh random starts and digit permutations for every dimension.

    Base i is the i-th prime. All draws come from the per-dimension
    derived rng, so the config is a pure function of (dimension, seed).
    """
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    bases = tuple(primes(dimension))
    starts = []
    perms = []
    for i, b in enumerate(bases):
        rng = derive_rng(seed, i)
        starts.append(float(rng.random()))
        perms.append(DigitPermutation.random(b, rng))
    return HaltonConfig(dimension, bases, tuple(starts), tuple(perms))


def rasrap_init(dimension: int, seed: int) -> list[RasrapStream]:
    """Recursive-form streams for `dimension` dimensions (one per base)."""
    cfg = rasrap_config(dimension, seed)
    return [
        RasrapStream(b, p, n)
        for b, p, n in zip(cfg.bases, cfg.perms, cfg.start_indices)
    ]


def rasrap_counter(index: int, config: HaltonConfig) -> np.ndarray:
    """Counter form: the point at `index` offsets from the random starts.

    Pure function of (index, config); index 0 is the start point itself.
    """
    if index < 0:
        raise ValueError("index must be non-negative")
    return np.array(
        [
            vdc_permuted_direct(n0 + index, b, p)
            for n0, b, p in zip(config.start_indices, config.bases, config.perms)
        ]
    )


# ---------------------------------------------------------------------------
# Block kernels (used by the harness; agree with the scalar forms above)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _rasrap_fill_recursive(digits, sums, active, sigmas, bases, out):
    """Advance every dimension's recursive stream once per output row."""
    npts, ndim = out.shape
    for d in range(ndim):
        base = bases[d]
        inv_p = 1.0 / base
        dg = digits[d]
        sm = sums[d]
        sg = sigmas[d]
        s0 = sg[0]
        act = active[d]
        for i in range(npts):
            m = 0
            while dg[m] + 1 == base:
                m += 1
            if m >= act:
                act = m + 1
            sm[m] = sm[m + 1] + sg[dg[m] + 1] * inv_p ** (m + 1)
            dg[m] += 1
            for j in range(m - 1, -1, -1):
                dg[j] = 0
                sm[j] = sm[j + 1] + s0 * inv_p ** (j + 1)
            out[i, d] = sm[0]
        active[d] = act


@njit(cache=True, nogil=True)
def _rasrap_fill_counter(indices, start_indices, bases, sigmas, capacities, out):
    """Counter form for a batch of global indices (pure per index)."""
    npts = indices.size
    ndim = bases.size
    for d in range(ndim):
        base = np.int64(bases[d])
        cap = capacities[d]
        sg = sigmas[d]
        n0 = start_indices[d]
        inv_p = 1.0 / base
        for i in range(npts):
            n = n0 + indices[i]
            x = 0.0
            scale = 1.0
            j = 0
            while n > 0 or j < cap:
                scale *= inv_p
                x += sg[n % base] * scale
                n //= base
                j += 1
            out[i, d] = x


def _pack_sigmas(config: HaltonConfig) -> np.ndarray:
    width = max(config.bases)
    sig = np.zeros((config.dimension, width), dtype=np.int64)
    for d, p in enumerate(config.perms):
        sig[d, : config.bases[d]] = p.map
    return sig


class RasrapRecursive:
    """Harness-facing sampler: recursive Rasrap, block interface.

    Point 0 is the random start itself; `fill` then follows the stream.
    """

    counter_based = False

    def __init__(self, dim: int, seed: int):
        self.dim = dim
        self.config = rasrap_config(dim, seed)
        cap = max(digit_capacity(b) for b in self.config.bases) + _CAP_PAD
        self._digits = np.zeros((dim, cap), dtype=np.int64)
        self._sums = np.zeros((dim, cap + 1), dtype=np.float64)
        self._active = np.zeros(dim, dtype=np.int64)
        self._sigmas = _pack_sigmas(self.config)
        self._bases = np.array(self.config.bases, dtype=np.int64)
        self._first = np.empty(dim)
        for d, (b, perm, n0) in enumerate(
            zip(self.config.bases, self.config.perms, self.config.start_indices)
        ):
            st = RasrapStream(b, perm, n0)
            self._digits[d, : st.digits.size] = st.digits
            self._sums[d, : st.partial_sums.size] = st.partial_sums
            self._active[d] = st._active
            self._first[d] = st.current_value
        self._emitted_first = False

    def fill(self, out: np.ndarray) -> None:
        if not self._emitted_first:
            out[0] = self._first
            self._emitted_first = True
            if out.shape[0] > 1:
                _rasrap_fill_recursive(
                    self._digits, self._sums, self._active, self._sigmas, self._bases, out[1:]
                )
        else:
            _rasrap_fill_recursive(
                self._digits, self._sums, self._active, self._sigmas, self._bases, out
            )


class RasrapCounter:
    """Harness-facing sampler: counter-based Rasrap (pure per index)."""

    counter_based = True

    def __init__(self, dim: int, seed: int):
        self.dim = dim
        self.config = rasrap_config(dim, seed)
        self._sigmas = _pack_sigmas(self.config)
        self._bases = np.array(self.config.bases, dtype=np.int64)
        self._starts = np.array(self.config.start_indices, dtype=np.int64)
        self._caps = np.array([digit_capacity(b) for b in self.config.bases], dtype=np.int64)
        self._next = 0

    def at(self, indices: np.ndarray) -> np.ndarray:
        out = np.empty((indices.size, self.dim))
        _rasrap_fill_counter(
            np.ascontiguousarray(indices, dtype=np.int64),
            self._starts, self._bases, self._sigmas, self._caps, out,
        )
        return out

    def fill(self, out: np.ndarray) -> None:
        n = out.shape[0]
        out[:] = self.at(np.arange(self._next, self._next + n))
        self._next += n


class KakutaniSampler:
    """Random-start Halton via per-dimension Kakutani orbits (no perms)."""

    counter_based = False

    def __init__(self, dim: int, seed: int):
        self.dim = dim
        self.states = []
        for i, b in enumerate(primes(dim)):
            rng = derive_rng(seed, i)
            self.states.append(KakutaniState(b, float(rng.random())))
        self._emitted_first = False

    def fill(self, out: np.ndarray) -> None:
        start = 0
        if not self._emitted_first:
            out[0] = [s.x for s in self.states]
            self._emitted_first = True
            start = 1
        for i in range(start, out.shape[0]):
            for d, s in enumerate(self.states):
                out[i, d] = kakutani_next(s)
