"""GSEMO_D population with the diversity tie-break on equal fitness."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .bitcore import BitString, RandomSource, dominates, one_count
from .diversity import ColumnCounts, diversity_delta, max_diversity, total_hamming

REPLACED = "replaced-same-fitness"
INSERTED = "inserted-new-fitness"
REJECTED_DIVERSITY = "rejected-diversity"
REJECTED_DOMINATED = "rejected-dominated"
OUTCOME_KINDS = (REPLACED, INSERTED, REJECTED_DIVERSITY, REJECTED_DOMINATED)


@dataclass(frozen=True)
class AcceptanceOutcome:
    kind: str
    replaced_index: Optional[object]
    diversity_after: int

    @property
    def accepted(self) -> bool:
        return self.kind in (REPLACED, INSERTED)


class Archive:
    """One individual per objective value, with cached column counts and diversity.

    With ``objective=None`` the archive optimizes OneMinMax and its slots are
    keyed by the one-count ``i`` (the individual ``x_i``). Any other objective
    maps a bit string to a tuple to be maximized; slots are keyed by that
    tuple and the general dominance path of the algorithm applies.
    """

    def __init__(self, x: BitString,
                 objective: Optional[Callable[[BitString], Sequence[int]]] = None):
        self.n = x.n
        self.objective = objective
        self._slots: dict = {self.key(x): x}
        self.counts = ColumnCounts(x.bits.astype(np.int64), 1)
        self.diversity = 0

    # -- construction helpers --------------------------------------------
    @classmethod
    def from_individuals(cls, individuals: Iterable[BitString]) -> "Archive":
        """OneMinMax archive holding exactly the given individuals."""
        individuals = list(individuals)
        if not individuals:
            raise ValueError("empty population")
        arc = cls(individuals[0])
        for x in individuals[1:]:
            i = arc.key(x)
            if i in arc._slots:
                raise ValueError(f"two individuals with {i} one-bits")
            arc._slots[i] = x
            arc.counts.add(x)
        arc.diversity = total_hamming(arc.counts)
        return arc

    @classmethod
    def from_strings(cls, texts: Iterable[str]) -> "Archive":
        return cls.from_individuals(BitString.from_str(t) for t in texts)

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> "Archive":
        return cls.from_individuals(BitString(row) for row in mat)

    @classmethod
    def from_snapshot(cls, text: str) -> "Archive":
        return cls.from_strings(line for line in text.splitlines() if line.strip())

    def copy(self) -> "Archive":
        other = object.__new__(Archive)
        other.n = self.n
        other.objective = self.objective
        other._slots = dict(self._slots)
        other.counts = self.counts.copy()
        other.diversity = self.diversity
        return other

    # -- accessors -------------------------------------------------------
    def key(self, y: BitString):
        if self.objective is None:
            return one_count(y)
        return tuple(self.objective(y))

    def fitness(self, y: BitString) -> tuple:
        if self.objective is None:
            i = one_count(y)
            return (i, y.n - i)
        return tuple(self.objective(y))

    @property
    def slots(self) -> dict:
        return dict(sorted(self._slots.items()))

    @property
    def size(self) -> int:
        return len(self._slots)

    def __len__(self) -> int:
        return len(self._slots)

    def __contains__(self, key) -> bool:
        return key in self._slots

    def x(self, i) -> BitString:
        return self._slots[i]

    def individuals(self) -> list[BitString]:
        return [self._slots[k] for k in sorted(self._slots)]

    def matrix(self) -> np.ndarray:
        """``(n + 1, n)`` matrix with row ``i`` = ``x_i``; needs a covered front."""
        if not self.is_front_covered():
            raise ValueError("population does not cover the Pareto front")
        return np.stack([self._slots[i].bits for i in range(self.n + 1)])

    def snapshot(self) -> str:
        """One line per individual, ascending one-count."""
        return "".join(f"{x}\n" for x in self.individuals())

    # -- algorithm -------------------------------------------------------
    def select_parent(self, rng: RandomSource) -> BitString:
        keys = sorted(self._slots)
        return self._slots[keys[rng.below(len(keys))]]

    def offer(self, y: BitString) -> AcceptanceOutcome:
        if y.n != self.n:
            raise ValueError(f"offspring has length {y.n}, expected {self.n}")
        k = self.key(y)
        w = self._slots.get(k)
        if w is not None:
            delta = diversity_delta(self.counts, w, y)
            if delta < 0:
                return AcceptanceOutcome(REJECTED_DIVERSITY, None, self.diversity)
            if w != y:
                self.counts.replace(w, y)
                self._slots[k] = y
                self.diversity += delta
            return AcceptanceOutcome(REPLACED, k, self.diversity)

        fy = self.fitness(y)
        if any(dominates(self.fitness(z), fy) for z in self._slots.values()):
            return AcceptanceOutcome(REJECTED_DOMINATED, None, self.diversity)
        for kz, z in list(self._slots.items()):
            if dominates(fy, self.fitness(z)):
                del self._slots[kz]
                self.counts.remove(z)
        self._slots[k] = y
        self.counts.add(y)
        self.diversity = total_hamming(self.counts)
        return AcceptanceOutcome(INSERTED, None, self.diversity)

    def is_front_covered(self) -> bool:
        if self.objective is not None:
            raise TypeError("front coverage is defined for OneMinMax archives only")
        return len(self._slots) == self.n + 1

    def is_optimal(self) -> bool:
        return self.is_front_covered() and self.diversity == max_diversity(self.n, self.n + 1)

    def check_consistency(self) -> None:
        """Recompute counts and diversity from scratch and compare with the cache."""
        mat = np.stack([x.bits for x in self._slots.values()]).astype(np.int64)
        if not np.array_equal(mat.sum(axis=0), self.counts.counts) or self.counts.m != len(mat):
            raise AssertionError("column counts out of sync")
        if total_hamming(self.counts) != self.diversity:
            raise AssertionError("cached diversity out of sync")


def new_archive(x: BitString, objective=None) -> Archive:
    return Archive(x, objective)


def select_parent(a: Archive, rng: RandomSource) -> BitString:
    return a.select_parent(rng)


def offer(a: Archive, y: BitString) -> AcceptanceOutcome:
    return a.offer(y)


def is_front_covered(a: Archive) -> bool:
    return a.is_front_covered()


def is_optimal(a: Archive) -> bool:
    return a.is_optimal()
