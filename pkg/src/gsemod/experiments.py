"""Batch studies: runtime scaling, exhaustive small-n structure checks, Monte Carlo."""

from __future__ import annotations

import csv
import json
import math
import statistics
import warnings
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels, oracle
from .archive import Archive
from .bitcore import RandomSource, derive_seed
from .diversity import max_diversity
from .classifier import classify, cold_candidates, classify_positions, fast_classify, hot_candidates
from .harness import (DEFAULT_MAX_ITERS, FULL_RUN, LAST_STAGE, SILENT, STATES, GsemoRun,
                      build_almost_balanced_population, run_full, run_last_stage,
                      structural_violations)

RESULT_COLUMNS = ("n", "seed", "iters_to_cover", "iters_to_optimal", "n_phases",
                  "frac_state1", "frac_state2", "frac_state3")


# -- scaling ---------------------------------------------------------------

@dataclass
class ExperimentConfig:
    """Scaling-study settings; ``trace`` is ``silent`` (hitting times only) or
    ``states`` (adds phase counts and state fractions to the results)."""

    n_list: list
    trials: int = 100
    seed: int = 1
    mode: str = LAST_STAGE
    max_iters: Optional[int] = None
    trace: str = STATES
    out_dir: Optional[str] = None
    jobs: int = 1

    def __post_init__(self):
        self.n_list = [int(n) for n in self.n_list]
        if self.mode not in (LAST_STAGE, FULL_RUN):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.trace not in (SILENT, STATES):
            raise ValueError(f"scaling traces must be {SILENT!r} or {STATES!r}")
        if self.max_iters is None:
            self.max_iters = DEFAULT_MAX_ITERS[self.mode]
        if self.trials < 1:
            raise ValueError("need at least one trial per n")
        if any(n < 1 for n in self.n_list):
            raise ValueError("n must be positive")
        if self.mode == LAST_STAGE and any(n % 2 == 0 or n < 3 for n in self.n_list):
            raise ValueError("last-stage runs need odd n >= 3")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class ScalingResult:
    config: ExperimentConfig
    rows: list
    per_n: list
    slope: Optional[float]
    intercept: Optional[float]
    truncated: int

    @property
    def truncated_fraction(self) -> float:
        return self.truncated / max(1, len(self.rows))

    def fit(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "model": "log(mean_T) = intercept + slope * log(n)",
                "ns": [p["n"] for p in self.per_n if p["mean"] is not None], "trials": self.config.trials,
                "seed": self.config.seed, "mode": self.config.mode,
                "truncated": self.truncated}


def _trial(args) -> dict:
    n, seed, mode, max_iters, fractions = args
    runner = run_last_stage if mode == LAST_STAGE else run_full
    r = runner(n, seed, max_iters=max_iters, trace=STATES if fractions else SILENT)
    f = r.state_fractions() if fractions else (None, None, None)
    return {"n": n, "seed": seed, "iters_to_cover": r.iterations_to_cover,
            "iters_to_optimal": r.iterations_to_optimal,
            "n_phases": len(r.phases) if fractions else None,
            "frac_state1": f[0], "frac_state2": f[1], "frac_state3": f[2]}


def _map(fn, jobs_args: list, jobs: int) -> list:
    if jobs <= 1:
        return [fn(a) for a in jobs_args]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, jobs_args, chunksize=max(1, len(jobs_args) // (4 * jobs))))


_STAT_KEYS = ("trials", "mean", "median", "sd", "ci95_low", "ci95_high", "min", "max")


def summarize(values: list) -> dict:
    k = len(values)
    mean = statistics.fmean(values)
    sd = statistics.stdev(values) if k > 1 else 0.0
    half = 1.96 * sd / math.sqrt(k)
    return {"trials": k, "mean": mean, "median": statistics.median(values), "sd": sd,
            "ci95_low": mean - half, "ci95_high": mean + half,
            "min": min(values), "max": max(values)}


def scaling_study(cfg: ExperimentConfig) -> ScalingResult:
    """Seeded trials per ``n`` and a least-squares fit of log mean runtime on log n."""
    ns = sorted(set(cfg.n_list))
    if len(ns) < 2:
        raise ValueError("scaling needs at least two distinct n values")
    tasks = [(n, derive_seed(cfg.seed, n, k), cfg.mode, cfg.max_iters, cfg.trace == STATES)
             for n in ns for k in range(cfg.trials)]
    rows = _map(_trial, tasks, cfg.jobs)
    truncated = sum(r["iters_to_optimal"] is None for r in rows)
    if truncated:
        warnings.warn(f"{truncated} trial(s) hit the iteration cap and are left out of the fit")
    per_n = []
    for n in ns:
        mine = [r for r in rows if r["n"] == n]
        hits = [r["iters_to_optimal"] for r in mine if r["iters_to_optimal"] is not None]
        stats = summarize(hits) if hits else dict.fromkeys(_STAT_KEYS)
        per_n.append({"n": n, **stats, "trials": len(hits), "truncated": len(mine) - len(hits)})
    fitted = [p for p in per_n if p["mean"] is not None]
    slope = intercept = None
    if len(fitted) >= 2:
        slope, intercept = (float(v) for v in np.polyfit(
            np.log([p["n"] for p in fitted]), np.log([p["mean"] for p in fitted]), 1))
    return ScalingResult(cfg, rows, per_n, slope, intercept, truncated)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(round(v, 12))
    return str(v)


def write_scaling_outputs(res: ScalingResult, out_dir) -> dict:
    """``results.csv``, ``summary.csv``, ``plot_data.csv`` and ``fit.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {k: out / f for k, f in (("results", "results.csv"), ("summary", "summary.csv"),
                                      ("plot", "plot_data.csv"), ("fit", "fit.json"))}
    with open(paths["results"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in res.rows:
            w.writerow([_fmt(r[c]) for c in RESULT_COLUMNS])
    cols = list(res.per_n[0])
    with open(paths["summary"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for p in res.per_n:
            w.writerow([_fmt(p[c]) for c in cols])
    with open(paths["plot"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "mean_T"])
        for p in res.per_n:
            if p["mean"] is not None:
                w.writerow([p["n"], _fmt(p["mean"])])
    paths["fit"].write_text(json.dumps(res.fit(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths


# -- small-n verification --------------------------------------------------

def random_optimal_population(n: int, rng: RandomSource) -> Archive:
    """Random lower half, complements above; every column is balanced."""
    half = (n - 1) // 2
    rows = np.zeros((n + 1, n), dtype=np.uint8)
    for i in range(half + 1):
        rng.reserve(n)
        order = np.argsort(rng.buf[rng.pos:rng.pos + n], kind="stable")
        rng.pos += n
        rows[i, order[:i]] = 1
        rows[n - i] = 1 - rows[i]
    return Archive.from_matrix(rows)


def perturbed_population(n: int, rng: RandomSource) -> Archive:
    """Swap one one-bit and one zero-bit inside an interior individual of a random optimum."""
    rows = random_optimal_population(n, rng).matrix().copy()
    i = 1 + rng.below(n - 1)
    ones = np.flatnonzero(rows[i] == 1)
    zeros = np.flatnonzero(rows[i] == 0)
    rows[i, ones[rng.below(ones.size)]] = 0
    rows[i, zeros[rng.below(zeros.size)]] = 1
    return Archive.from_matrix(rows)


def harvested_population(n: int, rng: RandomSource) -> Archive:
    """A uniformly chosen non-optimal population met by a last-stage trial."""
    run = GsemoRun(n, rng, build_almost_balanced_population(n, rng))
    seen = [run.pop.copy()]
    while run.advance(DEFAULT_MAX_ITERS[LAST_STAGE], stop_on_change=True) == kernels.CHANGED:
        seen.append(run.pop.copy())
    if not run.optimal:
        raise RuntimeError("harvest trial did not reach the optimum")
    return Archive.from_matrix(seen[rng.below(len(seen))])


def population_checks(P: Archive, slack=16) -> dict:
    """Hard and advisory checks for one almost balanced population."""
    n = P.n
    hard = []
    cl = classify(P)
    shapes = oracle.shape_mismatches(P, cl)
    hard += shapes
    mat = P.matrix()
    fc = fast_classify(mat, P.counts.counts)
    if fc is None:
        hard.append("compiled classifier rejected an almost balanced population")
    else:
        sets = fc.as_sets()
        if (fc.hot, fc.cold, fc.state) != (cl.hot, cl.cold, cl.state) or any(
                sets[k] != getattr(cl, k) for k in sets):
            hard.append("compiled and set-based classifications differ")
        hard += structural_violations(mat, P.counts.counts, fc)
        if n >= 5:
            pb = classify_positions(P.counts)
            got = kernels.candidate_counts(mat, P.counts.counts, cl.hot - 1, cl.cold - 1, fc.cls)
            want = (len(cold_candidates(P, pb)), len(hot_candidates(P, pb)))
            if tuple(int(g) for g in got) != want:
                hard.append(f"candidate counts {tuple(got)} != {want}")
    tildes = np.stack([P.x(i).flip(cl.hot, cl.cold).bits for i in sorted(cl.I10)])
    p_opt = oracle.exact_optimal_prob(P)
    if p_opt != oracle.production_prob(mat, tildes):
        hard.append("optimum probability differs from the sum over I10 hot/cold flips")
    bounds = oracle.check_probability_bounds(P, slack=slack, cl=cl)
    tally: dict = {}
    for b in bounds:
        t = tally.setdefault(f"{b.row} {b.bound}", [0, 0])
        t[0] += 1
        t[1] += not b.ok
    hard += [f"{b.row} index {b.index}: {b.bound} {b.value}" for b in bounds if b.hard and not b.ok]
    advisory = [b for b in bounds if not b.hard and not b.ok]
    return {"hot": cl.hot, "cold": cl.cold, "state": cl.state, "sizes": list(cl.sizes),
            "optimal_prob": str(p_opt), "shape_mismatches": len(shapes), "hard_failures": hard,
            "advisory_violations": [b.as_record() for b in advisory],
            "bound_tally": tally}


@dataclass
class VerificationReport:
    n: int
    samples: int
    seed: int
    records: list = field(default_factory=list)

    @property
    def hard_failures(self) -> int:
        return sum(len(r["hard_failures"]) for r in self.records)

    @property
    def advisory_violations(self) -> int:
        return sum(len(r["advisory_violations"]) for r in self.records)

    @property
    def passed(self) -> bool:
        return self.hard_failures == 0

    def advisory_by_row(self) -> dict:
        c = Counter(f"{v['class']} {v['bound']}" for r in self.records for v in r["advisory_violations"])
        return dict(sorted(c.items()))

    def bound_table(self) -> list:
        """``(row, bound, checked, violated)`` per bound kind, summed over samples."""
        tot: dict = {}
        for r in self.records:
            for key, (k, bad) in r["bound_tally"].items():
                t = tot.setdefault(key, [0, 0])
                t[0] += k
                t[1] += bad
        return [(*key.split(" ", 1), k, bad) for key, (k, bad) in sorted(tot.items())]

    def write_jsonl(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            for r in self.records:
                fh.write(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n")


def lemma_suite(n: int, samples: int, seed: int, slack=16) -> VerificationReport:
    """Exact checks on almost balanced populations: half random perturbations of
    optimal populations, half harvested from seeded trials."""
    if n % 2 == 0 or not 5 <= n <= oracle.MAX_ENUM_N:
        raise ValueError(f"n must be odd and in [5, {oracle.MAX_ENUM_N}]")
    if samples < 1:
        raise ValueError("need at least one sample")
    rep = VerificationReport(n, samples, seed)
    for k in range(samples):
        source = "synthetic" if k % 2 == 0 else "harvested"
        rng = RandomSource(derive_seed(seed, n, k))
        P = perturbed_population(n, rng) if source == "synthetic" else harvested_population(n, rng)
        rec = {"sample": k, "source": source, "population": P.snapshot().split()}
        rec.update(population_checks(P, slack=slack))
        rep.records.append(rec)
    return rep


# -- Monte Carlo -----------------------------------------------------------

@dataclass
class MonteCarloReport:
    iterations: int
    replaced: list
    replace_prob: list
    optimal: int
    optimal_prob: Fraction
    sigmas: float

    @staticmethod
    def z(count: int, p: Fraction, iters: int) -> float:
        p = float(p)
        if p == 0.0:
            return 0.0 if count == 0 else math.inf
        return (count - iters * p) / math.sqrt(iters * p * (1 - p))

    def z_scores(self) -> list:
        zs = [self.z(c, p, self.iterations) for c, p in zip(self.replaced, self.replace_prob)]
        return zs + [self.z(self.optimal, self.optimal_prob, self.iterations)]

    @property
    def passed(self) -> bool:
        return all(abs(z) <= self.sigmas for z in self.z_scores())


def monte_carlo_check(P: Archive, iterations: int, seed: int, sigmas: float = 4.0) -> MonteCarloReport:
    """Simulated one-iteration replacement and optimum frequencies against exact values."""
    mat = np.ascontiguousarray(P.matrix())
    counts = P.counts.counts.copy()
    n = P.n
    replaced = np.zeros(n + 1, dtype=np.int64)
    opt = np.zeros(1, dtype=np.int64)
    rng = RandomSource(seed)
    target = max_diversity(n, n + 1)
    done = 0
    while done < iterations:
        rng.reserve(n + 2)
        k, rng.pos = kernels.one_step_tally(mat, counts, rng.buf, rng.pos, iterations - done,
                                            target, replaced, opt)
        done += int(k)
    probs = [oracle.exact_replace_prob(P, i) for i in range(n + 1)]
    return MonteCarloReport(iterations, [int(c) for c in replaced], probs, int(opt[0]),
                            oracle.exact_optimal_prob(P), sigmas)
