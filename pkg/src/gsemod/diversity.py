"""Total Hamming distance of a population through per-position one-counts."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .bitcore import BitString, hamming
from . import kernels


@dataclass
class ColumnCounts:
    """One-counts ``m_k`` per position (0-indexed array) of a population of size ``m``."""

    counts: np.ndarray
    m: int

    @property
    def n(self) -> int:
        return int(self.counts.size)

    def copy(self) -> "ColumnCounts":
        return ColumnCounts(self.counts.copy(), self.m)

    def add(self, x: BitString) -> None:
        self.counts += x.bits
        self.m += 1

    def remove(self, x: BitString) -> None:
        self.counts -= x.bits
        self.m -= 1

    def replace(self, old: BitString, new: BitString) -> None:
        self.counts += new.bits.astype(np.int64) - old.bits.astype(np.int64)


def column_counts(population: Sequence[BitString]) -> ColumnCounts:
    if len(population) == 0:
        raise ValueError("empty population")
    n = population[0].n
    if any(x.n != n for x in population):
        raise ValueError("individuals differ in length")
    mat = np.stack([x.bits for x in population]).astype(np.int64)
    return ColumnCounts(mat.sum(axis=0), len(population))


def total_hamming(c: ColumnCounts) -> int:
    """Sum over positions of ``m_k (m - m_k)``."""
    return int(np.sum(c.counts * (c.m - c.counts)))


def pairwise_total_hamming(population: Iterable[BitString]) -> int:
    """Brute-force sum of Hamming distances over all unordered pairs."""
    return sum(hamming(x, y) for x, y in combinations(list(population), 2))


def diversity_delta(c: ColumnCounts, old: BitString, new: BitString) -> int:
    """Diversity change of replacing member ``old`` by ``new``; ``c`` is not modified."""
    return int(kernels.replace_delta(c.counts, c.m, old.bits, new.bits, c.n))


def max_diversity(n: int, m: int) -> int:
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if m % 2 == 0:
        return m * m * n // 4
    return n * (m * m - 1) // 4
