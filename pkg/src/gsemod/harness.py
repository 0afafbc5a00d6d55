"""Population constructors and seeded GSEMO_D trials on OneMinMax."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .archive import Archive, INSERTED, REJECTED_DIVERSITY, REJECTED_DOMINATED, REPLACED
from .bitcore import BitString, RandomSource
from .classifier import FastClassification, Phase, fast_classify, segment_phases, state_occupancy
from .diversity import max_diversity
from .trace import TraceRecord, TraceWriter

LAST_STAGE = "last-stage"
FULL_RUN = "full-run"
DEFAULT_MAX_ITERS = {LAST_STAGE: 10**7, FULL_RUN: 10**8}

SILENT = "silent"
STATES = "states"
FULL = "full"
TRACE_LEVELS = (SILENT, STATES, FULL)


def build_optimal_population(n: int) -> Archive:
    """``x_i = 1^i 0^(n-i)`` for the lower half, bitwise complements above."""
    if n % 2 == 0:
        raise ValueError("n must be odd")
    half = (n - 1) // 2
    rows = np.zeros((n + 1, n), dtype=np.uint8)
    for i in range(half + 1):
        rows[i, :i] = 1
    for i in range(half + 1, n + 1):
        rows[i] = 1 - rows[n - i]
    return Archive.from_matrix(rows)


def build_almost_balanced_population(n: int, rng: Optional[RandomSource] = None,
                                     choice: Optional[tuple] = None) -> Archive:
    """Second-best population: swap a one and a zero inside one ``x_i`` of the
    optimal construction. ``choice = (i, a, b)`` forces the index, the one-position
    ``a`` (becomes cold) and the zero-position ``b`` (becomes hot)."""
    if n % 2 == 0 or n < 3:
        raise ValueError("n must be odd and at least 3")
    arc = build_optimal_population(n)
    if choice is None:
        if rng is None:
            raise ValueError("need a random source or an explicit choice")
        i = 1 + rng.below(n - 1)
        x = arc.x(i)
        ones, zeros = x.ones(), x.zeros_at()
        a = ones[rng.below(len(ones))]
        b = zeros[rng.below(len(zeros))]
    else:
        i, a, b = choice
        x = arc.x(i)
        if x.bit(a) != 1 or x.bit(b) != 0:
            raise ValueError(f"x_{i} needs a one at {a} and a zero at {b}")
    rows = arc.matrix().copy()
    rows[i, a - 1] = 0
    rows[i, b - 1] = 1
    return Archive.from_matrix(rows)


def random_bitstring(n: int, rng: RandomSource) -> BitString:
    rng.reserve(n)
    u = rng.buf[rng.pos:rng.pos + n]
    rng.pos += n
    return BitString((u > 0.5).astype(np.uint8))


@dataclass
class RunResult:
    n: int
    seed: int
    mode: str
    iterations_to_cover: Optional[int]
    iterations_to_optimal: Optional[int]
    iterations: int
    diversity: int = 0
    phases: list = field(default_factory=list)
    acceptance_counts: dict = field(default_factory=dict)
    occupancy: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    wall_time: float = 0.0
    trace: Optional[list] = None

    @property
    def truncated(self) -> bool:
        return self.iterations_to_optimal is None

    def state_fractions(self) -> tuple:
        total = sum(self.occupancy.values())
        if not total:
            return (None, None, None)
        return tuple(self.occupancy.get(s, 0) / total for s in (1, 2, 3))

    def summary(self) -> dict:
        """Machine-readable summary (no wall time, so reruns are byte-identical)."""
        return {
            "n": self.n,
            "seed": self.seed,
            "mode": self.mode,
            "iterations": self.iterations,
            "diversity": self.diversity,
            "iterations_to_cover": self.iterations_to_cover,
            "iterations_to_optimal": self.iterations_to_optimal,
            "truncated": self.truncated,
            "acceptance_counts": self.acceptance_counts,
            "n_phases": len(self.phases),
            "phases_ended_optimal": sum(p.ended_optimal for p in self.phases),
            "occupancy": {str(k): v for k, v in self.occupancy.items()},
            "violations": self.violations,
        }


class GsemoRun:
    """Array state of one GSEMO_D trial on OneMinMax, driven chunk by chunk."""

    def __init__(self, n: int, rng: RandomSource, start: Archive | BitString):
        self.n = n
        self.rng = rng
        self.pop = np.zeros((n + 1, n), dtype=np.uint8)
        self.present = np.zeros(n + 1, dtype=np.bool_)
        self.members = np.zeros(n + 1, dtype=np.int64)
        self.counts = np.zeros(n, dtype=np.int64)
        self.st = np.zeros(kernels.ST_SIZE, dtype=np.int64)
        self.child = np.zeros(n, dtype=np.uint8)
        self.old_row = np.zeros(n, dtype=np.uint8)
        if isinstance(start, BitString):
            start = Archive(start)
        for m, x in enumerate(start.individuals()):
            i = int(x.bits.sum())
            self.pop[i] = x.bits
            self.present[i] = True
            self.members[m] = i
        self.counts[:] = start.counts.counts
        self.st[kernels.ST_M] = start.size
        self.st[kernels.ST_DIV] = start.diversity
        self.st[kernels.ST_COVER] = 0 if start.size == n + 1 else -1
        self.st[kernels.ST_TARGET] = max_diversity(n, n + 1)
        self.st[kernels.ST_LAST] = -1

    @property
    def iteration(self) -> int:
        return int(self.st[kernels.ST_ITER])

    @property
    def diversity(self) -> int:
        return int(self.st[kernels.ST_DIV])

    @property
    def covered(self) -> bool:
        return int(self.st[kernels.ST_M]) == self.n + 1

    @property
    def optimal(self) -> bool:
        return self.covered and self.diversity == int(self.st[kernels.ST_TARGET])

    def advance(self, max_iters: int, stop_on_change: bool) -> int:
        rng = self.rng
        while True:
            rng.reserve(self.n + 2)
            code, pos = kernels.gsemo_steps(self.pop, self.present, self.members, self.counts,
                                            self.st, rng.buf, rng.pos, self.child, self.old_row,
                                            max_iters, stop_on_change)
            rng.pos = pos
            if code != kernels.NEED_RANDOM:
                return code

    def archive(self) -> Archive:
        return Archive.from_individuals(BitString(self.pop[i]) for i in range(self.n + 1)
                                        if self.present[i])

    def acceptance_counts(self) -> dict:
        st = self.st
        return {REPLACED: int(st[kernels.ST_REPLACED]), INSERTED: int(st[kernels.ST_INSERTED]),
                REJECTED_DIVERSITY: int(st[kernels.ST_REJ_DIV]),
                REJECTED_DOMINATED: int(st[kernels.ST_REJ_DOM])}


class _Instrument:
    """Builds trace records at population changes and checks run invariants."""

    def __init__(self, run: GsemoRun, writer: TraceWriter, check_structure: bool, strict: bool):
        self.run = run
        self.strict = strict
        self.writer = writer
        self.check_structure = check_structure
        self.violations: list[str] = []
        self.cl: Optional[FastClassification] = None
        self.last_div = run.diversity
        self.n_classified = 0
        self._emit(accepted=False, replaced=None, replaced_class=None)

    def _flag(self, msg: str) -> None:
        if len(self.violations) < 50:
            self.violations.append(f"iter {self.run.iteration}: {msg}")

    def _classify(self) -> Optional[FastClassification]:
        run = self.run
        if not run.covered or run.n % 2 == 0:
            return None
        cl = fast_classify(run.pop, run.counts)
        if cl is not None:
            self.n_classified += 1
            if self.check_structure:
                for msg in structural_violations(run.pop, run.counts, cl):
                    self._flag(msg)
        return cl

    def _emit(self, accepted: bool, replaced, replaced_class) -> None:
        run = self.run
        if run.covered and not run.optimal:
            cl = self._classify()
            if cl is None and self.strict:
                self._flag("covering population is not almost balanced")
        else:
            cl = None
        self.cl = cl
        rec = TraceRecord(
            iter=run.iteration, accepted=accepted, replaced_index=replaced,
            diversity=run.diversity, state=None if cl is None else cl.state,
            sizes=None if cl is None else cl.sizes(),
            hot=None if cl is None else cl.hot, cold=None if cl is None else cl.cold,
            replaced_class=replaced_class, optimal=run.optimal, covered=run.covered)
        self.writer.append(rec)

    def on_change(self) -> None:
        run = self.run
        idx = int(run.st[kernels.ST_LAST])
        prev = self.cl
        rclass = None if prev is None else prev.class_of(idx)
        if run.covered and prev is not None:
            if run.diversity < self.last_div:
                self._flag(f"diversity decreased {self.last_div} -> {run.diversity}")
        if kernels.total_hamming_counts(run.counts, int(run.st[kernels.ST_M])) != run.diversity:
            self._flag("cached diversity differs from recomputation")
        if run.optimal and prev is not None:
            expected = run.old_row.copy()
            expected[prev.hot - 1] ^= 1
            expected[prev.cold - 1] ^= 1
            if rclass != "10" or not np.array_equal(run.pop[idx], expected):
                self._flag(f"optimum reached by replacing x_{idx} (class {rclass}) "
                           "with something other than its hot/cold flip")
        self.last_div = run.diversity
        self._emit(accepted=True, replaced=idx, replaced_class=rclass)

    def on_quiet(self) -> None:
        run = self.run
        cl = self.cl
        self.writer.append(TraceRecord(
            iter=run.iteration, accepted=False, replaced_index=None,
            diversity=run.diversity, state=None if cl is None else cl.state,
            sizes=None if cl is None else cl.sizes(),
            hot=None if cl is None else cl.hot, cold=None if cl is None else cl.cold,
            optimal=run.optimal, covered=run.covered))


def structural_violations(pop: np.ndarray, counts: np.ndarray, cl: FastClassification) -> list[str]:
    """Set-size relations, the Jhot sandwich and candidate counts for one population."""
    n = pop.shape[1]
    sets = cl.as_sets()
    out = []
    i00, i11, i10, i01 = (len(sets[k]) for k in ("I00", "I11", "I10", "I01"))
    if i00 != i11:
        out.append(f"|I00|={i00} != |I11|={i11}")
    if i10 != i01 + 2:
        out.append(f"|I10|={i10} != |I01|+2={i01 + 2}")
    if 2 * i00 > n - 1 or 2 * i11 > n - 1:
        out.append("|I00| or |I11| exceeds (n-1)/2")
    if not (2 <= i10 and 2 * i10 <= n + 3):
        out.append(f"|I10|={i10} outside [2, (n+3)/2]")
    if not (sets["J11"] <= sets["Jhot"] <= (sets["J11"] | sets["J10"])):
        out.append("Jhot sandwich violated")
    if n >= 5:
        c_cand, h_cand = kernels.candidate_counts(pop, counts, cl.hot - 1, cl.cold - 1, cl.cls)
        if 8 * c_cand < n:
            out.append(f"only {c_cand} cold-candidates")
        if 8 * h_cand < n:
            out.append(f"only {h_cand} hot-candidates")
    return out


def _drive(run: GsemoRun, max_iters: int, trace: str, trace_path, check: bool,
           keep_trace: bool, strict: bool):
    if trace == SILENT and not check:
        code = run.advance(max_iters, stop_on_change=False)
        return code, None, [], [], {}
    writer = TraceWriter(trace_path, keep=True)
    inst = _Instrument(run, writer, check_structure=check, strict=strict)
    try:
        code = kernels.MAX_ITERS
        if run.optimal:
            code = kernels.OPTIMAL
        while not run.optimal and run.iteration < max_iters:
            if trace == FULL:
                code = run.advance(run.iteration + 1, stop_on_change=True)
                if code == kernels.MAX_ITERS:
                    inst.on_quiet()
                    code = kernels.MAX_ITERS
                    continue
            else:
                code = run.advance(max_iters, stop_on_change=True)
                if code == kernels.MAX_ITERS:
                    break
            inst.on_change()
        if not run.optimal:
            code = kernels.MAX_ITERS
            if writer.records[-1].iter != run.iteration:
                inst.on_quiet()
    finally:
        writer.close()
    records = writer.records
    phases = segment_phases(records)
    return code, (records if keep_trace else None), phases, inst.violations, state_occupancy(records)


def _result(run: GsemoRun, mode: str, seed: int, driven, t0: float) -> RunResult:
    code, records, phases, violations, occupancy = driven
    cover = int(run.st[kernels.ST_COVER])
    return RunResult(
        n=run.n, seed=seed, mode=mode,
        iterations_to_cover=cover if cover >= 0 else None,
        iterations_to_optimal=run.iteration if run.optimal else None,
        iterations=run.iteration, diversity=run.diversity, phases=phases,
        acceptance_counts=run.acceptance_counts(), occupancy=occupancy,
        violations=violations, wall_time=time.perf_counter() - t0, trace=records)


def run_last_stage(n: int, seed: int, max_iters: int = DEFAULT_MAX_ITERS[LAST_STAGE],
                   trace: str = SILENT, trace_path=None, check: bool = False,
                   keep_trace: bool = False) -> RunResult:
    """GSEMO_D from a random almost balanced population until optimal diversity."""
    if n % 2 == 0:
        raise ValueError("n must be odd")
    t0 = time.perf_counter()
    rng = RandomSource(seed)
    start = build_almost_balanced_population(n, rng)
    run = GsemoRun(n, rng, start)
    return _result(run, LAST_STAGE, seed, _drive(run, max_iters, trace, trace_path, check, keep_trace, True), t0)


def run_full(n: int, seed: int, max_iters: int = DEFAULT_MAX_ITERS[FULL_RUN],
             trace: str = SILENT, trace_path=None, check: bool = False,
             keep_trace: bool = False) -> RunResult:
    """GSEMO_D from one uniform random bit string until optimal diversity."""
    t0 = time.perf_counter()
    rng = RandomSource(seed)
    run = GsemoRun(n, rng, random_bitstring(n, rng))
    return _result(run, FULL_RUN, seed, _drive(run, max_iters, trace, trace_path, check, keep_trace, False), t0)
