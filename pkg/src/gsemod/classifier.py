"""Hot/cold bookkeeping of almost balanced populations (odd n, covered front).

The functions here follow the set definitions literally and are meant for
readability and cross-checking; runs use the array versions in ``kernels``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .archive import Archive
from .diversity import ColumnCounts
from .trace import TraceError, TraceRecord

BALANCED = "balanced"
ALMOST_BALANCED = "almost-balanced"
UNBALANCED = "unbalanced"

STATE1, STATE2, STATE3 = 1, 2, 3

END_OPTIMAL_FROM_STATE1 = "optimal-from-state1"
END_STATE2_JHOT_GREW = "state2-jhot-grew"
END_STATE2_I10_REPLACED = "state2-i10-replaced"
END_STATE3_CHANGED = "state3-changed"
END_TRUNCATED = "truncated"


@dataclass(frozen=True)
class PositionBalance:
    labels: tuple
    hot: Optional[int]
    cold: Optional[int]

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def almost_balanced_positions(self) -> list[int]:
        return [k + 1 for k, lab in enumerate(self.labels) if lab == ALMOST_BALANCED]

    @property
    def is_almost_balanced(self) -> bool:
        """Exactly two almost balanced positions, all others balanced."""
        return (self.hot is not None and self.cold is not None
                and self.labels.count(BALANCED) == self.n - 2)


@dataclass(frozen=True)
class Classification:
    hot: int
    cold: int
    I01: frozenset
    I00: frozenset
    I11: frozenset
    I10: frozenset
    J00: frozenset = field(default_factory=frozenset)
    J11: frozenset = field(default_factory=frozenset)
    J10: frozenset = field(default_factory=frozenset)
    Jhot: frozenset = field(default_factory=frozenset)
    state: Optional[int] = None

    def class_of(self, i: int) -> str:
        for name in ("01", "00", "11", "10"):
            if i in getattr(self, "I" + name):
                return name
        raise KeyError(i)

    @property
    def sizes(self) -> tuple:
        return (len(self.I10), len(self.Jhot), len(self.J00), len(self.J10))


@dataclass(frozen=True)
class Phase:
    start_iter: int
    end_iter: int
    end_reason: str
    ended_optimal: bool

    @property
    def length(self) -> int:
        return self.end_iter - self.start_iter + 1


def _require_odd_covering(n: int, m: int) -> None:
    if n % 2 == 0:
        raise ValueError("classification is defined for odd n only")
    if m != n + 1:
        raise ValueError(f"population of size {m} does not cover the front (need {n + 1})")


def classify_positions(c: ColumnCounts) -> PositionBalance:
    n = c.n
    _require_odd_covering(n, c.m)
    half = (n + 1) // 2
    labels = []
    for mk in c.counts:
        if mk == half:
            labels.append(BALANCED)
        elif abs(int(mk) - half) == 1:
            labels.append(ALMOST_BALANCED)
        else:
            labels.append(UNBALANCED)
    hot_at = [k + 1 for k, mk in enumerate(c.counts) if mk == half + 1]
    cold_at = [k + 1 for k, mk in enumerate(c.counts) if mk == half - 1]
    hot = hot_at[0] if len(hot_at) == 1 else None
    cold = cold_at[0] if len(cold_at) == 1 else None
    return PositionBalance(tuple(labels), hot, cold)


def classify_individuals(P: Archive, pb: PositionBalance) -> Classification:
    if pb.hot is None or pb.cold is None:
        raise ValueError("population has no hot/cold position")
    sets = {"01": set(), "00": set(), "11": set(), "10": set()}
    for i in range(P.n + 1):
        x = P.x(i)
        sets[f"{x.bit(pb.hot)}{x.bit(pb.cold)}"].add(i)
    return Classification(pb.hot, pb.cold,
                          frozenset(sets["01"]), frozenset(sets["00"]),
                          frozenset(sets["11"]), frozenset(sets["10"]))


def _differs_only_at(x, y, k: int) -> bool:
    diff = np.flatnonzero(x.bits != y.bits)
    return diff.size == 1 and diff[0] == k - 1


def tilde(x, hot: int, cold: int):
    """``x`` with the hot and cold bits flipped."""
    return x.flip(hot, cold)


def j_sets(P: Archive, pb: PositionBalance, cl: Optional[Classification] = None) -> Classification:
    """Extend the I-set classification with J00, J11, J10, Jhot and the state."""
    if cl is None:
        cl = classify_individuals(P, pb)
    n, hot, cold = P.n, pb.hot, pb.cold
    xs = [P.x(i) for i in range(n + 1)]
    jhot = {i for i in range(1, n + 1) if _differs_only_at(xs[i], xs[i - 1], hot)}
    j11 = {i for i in cl.I11 if i in jhot}
    j00 = {i for i in cl.I00 if i < n and _differs_only_at(xs[i], xs[i + 1], cold)}
    j10 = set()
    for i in cl.I10:
        t = tilde(xs[i], hot, cold).bits
        s1 = t == 1
        s0 = ~s1
        below = i >= 1 and int(np.sum(xs[i - 1].bits[s1] == 0)) == 1
        above = i < n and int(np.sum(xs[i + 1].bits[s0] == 1)) == 1
        if below or above:
            j10.add(i)
    st = state_from_sizes(len(cl.I10), len(jhot), len(j00), n)
    return Classification(hot, cold, cl.I01, cl.I00, cl.I11, cl.I10,
                          frozenset(j00), frozenset(j11), frozenset(j10), frozenset(jhot), st)


def classify(P: Archive) -> Classification:
    """Full classification of an almost balanced archive."""
    pb = classify_positions(P.counts)
    if not pb.is_almost_balanced:
        raise ValueError("population is not almost balanced")
    return j_sets(P, pb)


def state_from_sizes(i10: int, jhot: int, j00: int, n: int) -> int:
    # |I10| >= n/32 compared exactly
    if 32 * i10 >= n and jhot <= 19 and j00 <= 9:
        return STATE3
    if jhot <= 17:
        return STATE2
    return STATE1


def state_of(cl: Classification, n: int) -> int:
    return state_from_sizes(len(cl.I10), len(cl.Jhot), len(cl.J00), n)


def cold_candidates(P: Archive, pb: PositionBalance) -> set:
    """Balanced positions holding a one in at least n/16 individuals with a zero at cold."""
    if pb.hot is None or pb.cold is None:
        raise ValueError("population has no hot/cold position")
    mat = P.matrix()
    c0 = mat[:, pb.cold - 1] == 0
    ones = mat[c0].sum(axis=0)
    n = P.n
    return {k + 1 for k in range(n) if pb.labels[k] == BALANCED and 16 * int(ones[k]) >= n}


def hot_candidates(P: Archive, pb: PositionBalance) -> set:
    """Balanced positions holding a zero in at least n/16 individuals with a one at hot."""
    if pb.hot is None or pb.cold is None:
        raise ValueError("population has no hot/cold position")
    mat = P.matrix()
    h1 = mat[:, pb.hot - 1] == 1
    zeros = (1 - mat[h1]).sum(axis=0)
    n = P.n
    return {k + 1 for k in range(n) if pb.labels[k] == BALANCED and 16 * int(zeros[k]) >= n}


# -- array fast path -------------------------------------------------------

@dataclass
class FastClassification:
    """Sizes and codes from the compiled classifier, positions 1-indexed."""

    hot: int
    cold: int
    cls: np.ndarray
    flags: np.ndarray
    state: int

    def sizes(self) -> tuple:
        cls, flags = self.cls, self.flags
        return (int(np.sum(cls == kernels.C10)), int(np.sum(flags & kernels.F_JHOT > 0)),
                int(np.sum(flags & kernels.F_J00 > 0)), int(np.sum(flags & kernels.F_J10 > 0)))

    def class_of(self, i: int) -> str:
        c = int(self.cls[i])
        return f"{c >> 1}{c & 1}"

    def as_sets(self) -> dict:
        cls, flags = self.cls, self.flags
        idx = lambda mask: frozenset(int(i) for i in np.flatnonzero(mask))
        return {
            "I00": idx(cls == kernels.C00), "I01": idx(cls == kernels.C01),
            "I10": idx(cls == kernels.C10), "I11": idx(cls == kernels.C11),
            "J00": idx(flags & kernels.F_J00), "J11": idx(flags & kernels.F_J11),
            "J10": idx(flags & kernels.F_J10), "Jhot": idx(flags & kernels.F_JHOT),
        }


def fast_classify(pop: np.ndarray, counts: np.ndarray) -> Optional[FastClassification]:
    """Compiled classification of a covering population; ``None`` unless almost balanced."""
    m, n = pop.shape
    hot, cold, n_almost, n_unbal = kernels.position_profile(counts, n)
    if hot < 0 or cold < 0 or n_almost != 2 or n_unbal != 0:
        return None
    cls = np.empty(m, dtype=np.int8)
    flags = np.empty(m, dtype=np.int8)
    kernels.classify_arrays(pop, hot, cold, cls, flags)
    fc = FastClassification(hot + 1, cold + 1, cls, flags, 0)
    i10, jhot, j00, _ = fc.sizes()
    fc.state = state_from_sizes(i10, jhot, j00, n)
    return fc


# -- phases ----------------------------------------------------------------

def segment_phases(trace: Sequence[TraceRecord]) -> list[Phase]:
    """Split a trace at the phase-end iterations.

    Only iterations that change the population can end a phase, so traces
    holding just the change records give the same phases as full traces.
    """
    if not trace:
        raise TraceError("empty trace")
    if trace[0].iter != 0:
        raise TraceError("trace must start with the initial population (iter 0)")
    phases = []
    start = 0
    prev = trace[0]
    for rec in trace[1:]:
        if rec.iter < prev.iter or (rec.accepted and rec.iter == prev.iter):
            raise TraceError(f"iterations out of order at iter {rec.iter}")
        reason = None
        if rec.accepted:
            s = prev.state
            if s == STATE1 and rec.optimal:
                reason = END_OPTIMAL_FROM_STATE1
            elif s == STATE2 and rec.state != STATE3:
                if rec.replaced_class == "10":
                    reason = END_STATE2_I10_REPLACED
                elif rec.jhot is not None and prev.jhot is not None and rec.jhot > prev.jhot:
                    reason = END_STATE2_JHOT_GREW
            elif s == STATE3:
                reason = END_STATE3_CHANGED
        if reason is not None:
            end = rec.iter - 1
            phases.append(Phase(start, end, reason, rec.optimal))
            start = end + 1
        prev = rec
    last = trace[-1]
    if start <= last.iter - 1 or not phases:
        phases.append(Phase(start, last.iter - 1, END_TRUNCATED, False))
    return phases


def state_occupancy(trace: Sequence[TraceRecord]) -> dict:
    """Iterations spent in each state, counted from the trace's change records."""
    occ = {STATE1: 0, STATE2: 0, STATE3: 0}
    for rec, nxt in zip(trace, trace[1:]):
        if rec.state in occ:
            occ[rec.state] += nxt.iter - rec.iter
    return occ
