"""Bit strings, the OneMinMax objective, dominance and standard bit mutation.

Positions are 1-indexed in every public API: position 1 is the leftmost
character of the textual form. Internally bits live in 0-indexed uint8 arrays.
"""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels

__all__ = [
    "BitString",
    "ObjectiveValue",
    "RandomSource",
    "derive_seed",
    "one_count",
    "one_min_max",
    "dominates",
    "hamming",
    "standard_bit_mutation",
    "mutation_probability",
]

_TWO_M53 = 2.0**-53


class BitString:
    """Immutable fixed-length binary genotype."""

    __slots__ = ("_bits", "_key")

    def __init__(self, bits: Sequence[int] | np.ndarray):
        arr = np.array(bits, dtype=np.uint8).reshape(-1)
        if arr.size == 0:
            raise ValueError("bit string must have length n >= 1")
        if np.any(arr > 1):
            raise ValueError("bits must be 0 or 1")
        arr.setflags(write=False)
        self._bits = arr
        self._key = arr.tobytes()

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        return cls([ch == "1" for ch in text])

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls(np.zeros(n, dtype=np.uint8))

    @property
    def bits(self) -> np.ndarray:
        """Read-only 0-indexed uint8 view."""
        return self._bits

    @property
    def n(self) -> int:
        return self._bits.size

    def bit(self, k: int) -> int:
        """Bit at 1-indexed position ``k``."""
        if not 1 <= k <= self.n:
            raise IndexError(k)
        return int(self._bits[k - 1])

    def flip(self, *positions: int) -> "BitString":
        """Copy with the given 1-indexed positions flipped."""
        arr = self._bits.copy()
        for k in positions:
            arr[k - 1] ^= 1
        return BitString(arr)

    def complement(self) -> "BitString":
        return BitString(1 - self._bits)

    def ones(self) -> list[int]:
        return [int(k) + 1 for k in np.flatnonzero(self._bits)]

    def zeros_at(self) -> list[int]:
        return [int(k) + 1 for k in np.flatnonzero(self._bits == 0)]

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self._bits)

    def __repr__(self) -> str:
        return f"BitString('{self}')"


class ObjectiveValue(NamedTuple):
    ones: int
    zeros: int


class RandomSource:
    """Seeded stream of uniforms in (0, 1].

    Draw order: the Philox4x64 bit generator (numpy) keyed by
    ``SeedSequence(seed, spawn_key=stream)`` emits raw 64-bit words ``w``;
    each word becomes ``u = ((w >> 11) + 1) / 2**53``. Uniforms are consumed
    strictly in order by parent selection and mutation, so a trial is fully
    determined by ``(seed, stream)`` on every platform.
    """

    CHUNK = 1 << 15

    def __init__(self, seed: int, stream: Sequence[int] = ()):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = int(seed)
        self.stream = tuple(int(s) for s in stream)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        self._bitgen = np.random.Philox(ss)
        self.buf = np.empty(0, dtype=np.float64)
        self.pos = 0

    def _draw(self, k: int) -> np.ndarray:
        raw = self._bitgen.random_raw(k)
        return ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_M53

    def reserve(self, k: int) -> None:
        """Make sure at least ``k`` unread uniforms sit in ``buf``."""
        left = self.buf.size - self.pos
        if left >= k:
            return
        fresh = self._draw(max(self.CHUNK, k - left))
        self.buf = np.concatenate([self.buf[self.pos:], fresh])
        self.pos = 0

    def uniform(self) -> float:
        self.reserve(1)
        u = float(self.buf[self.pos])
        self.pos += 1
        return u

    def below(self, m: int) -> int:
        """Uniform integer in ``[0, m)``."""
        return kernels.uniform_index(self.uniform(), m)


def derive_seed(master: int, *key: int) -> int:
    """Independent 63-bit trial seed for ``(master, *key)``."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def one_count(x: BitString) -> int:
    return int(x.bits.sum())


def one_min_max(x: BitString) -> ObjectiveValue:
    ones = one_count(x)
    return ObjectiveValue(ones, x.n - ones)


def dominates(a: Sequence[int], b: Sequence[int]) -> bool:
    """Weak-componentwise-greater with at least one strict component (maximization)."""
    if len(a) != len(b):
        raise ValueError("objective vectors differ in length")
    return all(ai >= bi for ai, bi in zip(a, b)) and any(ai > bi for ai, bi in zip(a, b))


def hamming(x: BitString, y: BitString) -> int:
    if x.n != y.n:
        raise ValueError(f"length mismatch: {x.n} vs {y.n}")
    return int(np.count_nonzero(x.bits != y.bits))


def standard_bit_mutation(x: BitString, rng: RandomSource) -> BitString:
    """Flip every bit independently with probability 1/n.

    Flip positions are found by geometric jumps, so the call consumes one
    uniform per flipped bit plus one.
    """
    n = x.n
    rng.reserve(n + 1)
    child = np.empty(n, dtype=np.uint8)
    rng.pos = kernels.mutate(x.bits, child, n, rng.buf, rng.pos)
    return BitString(child)


def mutation_probability(x: BitString, y: BitString) -> Fraction:
    """Exact probability that standard bit mutation turns ``x`` into ``y``."""
    n = x.n
    if n < 2:
        raise ValueError("n must be at least 2")
    d = hamming(x, y)
    return Fraction((n - 1) ** (n - d), n**n)


def mutation_probability_by_distance(n: int, d: int) -> Fraction:
    return Fraction((n - 1) ** (n - d), n**n)
