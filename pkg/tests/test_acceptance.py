"""Acceptance suite: one PASS/FAIL line per criterion.

Run under pytest (lines are printed even with output capture on) or directly:
``python tests/test_acceptance.py``. Tolerances are fixed here and never tuned
per run. Criteria 8 and 9 are advisory: their line reads ``ADVISORY-FAIL``
instead of failing the test.
"""

from __future__ import annotations

import json
import sys
import tempfile
from functools import lru_cache
from pathlib import Path

import numpy as np

from gsemod import oracle
from gsemod.archive import Archive
from gsemod.bitcore import BitString, derive_seed
from gsemod.cli import main as cli_main
from gsemod.diversity import column_counts, max_diversity, pairwise_total_hamming, total_hamming
from gsemod.experiments import (ExperimentConfig, lemma_suite, monte_carlo_check, scaling_study)
from gsemod.harness import STATES, build_almost_balanced_population, run_full, run_last_stage

SEED = 1

# criterion 1
AC1_POPULATIONS, AC1_MAX_N, AC1_MAX_M = 1000, 16, 20
# criterion 3/4
AC3_NS, AC3_SAMPLES = (5, 7, 9, 11), 200
AC4_RUN_NS, AC4_RUNS = (5, 7, 9, 11, 13, 31, 63, 127), 20
# criterion 5
AC5_N, AC5_TRIALS = 31, 1000
# criterion 6
AC6_N, AC6_ITERS, AC6_SIGMAS = 7, 10**6, 4.0
AC6_CHOICE = (3, 1, 5)
# criterion 7
AC7_NS, AC7_TRIALS, AC7_MAX_ITERS, AC7_MAX_SLOPE, AC7_MAX_DOUBLING = (15, 31, 63, 127), 200, 10**7, 2.4, 6.0
# criterion 8
AC8_NS, AC8_TRIALS, AC8_MAX_SLOPE = (15, 31, 63), 100, 2.6
# criterion 9
AC9_NS, AC9_SAMPLES, AC9_SLACK = (9, 11, 13), 100, 16

RESULTS: dict = {}


def report(tag: str, ok: bool, title: str, detail: str, advisory: bool = False) -> str:
    word = "PASS" if ok else ("ADVISORY-FAIL" if advisory else "FAIL")
    line = f"[{word}] {tag} {title}: {detail}"
    RESULTS[tag] = line
    return line


def emit(capsys, line: str) -> None:
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)


@lru_cache(maxsize=None)
def suite(n: int, samples: int, seed: int, slack: float = 16):
    return lemma_suite(n, samples, seed, slack=slack)


# -- criteria ----------------------------------------------------------------

def ac1():
    rng = np.random.default_rng(derive_seed(SEED, 1))
    bad = 0
    for _ in range(AC1_POPULATIONS):
        n = int(rng.integers(1, AC1_MAX_N + 1))
        m = int(rng.integers(1, AC1_MAX_M + 1))
        pop = [BitString(row) for row in rng.integers(0, 2, size=(m, n))]
        bad += total_hamming(column_counts(pop)) != pairwise_total_hamming(pop)
    return report("AC1", bad == 0, "diversity oracle equivalence",
                  f"{AC1_POPULATIONS} random populations (n<={AC1_MAX_N}, m<={AC1_MAX_M}), {bad} mismatches")


def ac2():
    got = {n: oracle.brute_force_max_diversity(n) for n in (2, 3, 4, 5)}
    closed = {n: max_diversity(n, n + 1) for n in (2, 3, 4, 5)}
    want = {2: 4, 3: 12, 4: 24, 5: 45}
    return report("AC2", got == closed == want, "maximum diversity closed form",
                  f"brute force {got}, closed form {closed}")


def ac3():
    mism, total = 0, 0
    for n in AC3_NS:
        rep = suite(n, AC3_SAMPLES, SEED)
        for r in rep.records:
            total += 1
            mism += r["shape_mismatches"]
    return report("AC3", mism == 0 and total == len(AC3_NS) * AC3_SAMPLES,
                  "valid-replacement sets match the predicted shapes",
                  f"{total} populations over n={list(AC3_NS)}, {mism} mismatches")


def ac4():
    fails, pops = 0, 0
    for n in AC3_NS:
        rep = suite(n, AC3_SAMPLES, SEED)
        pops += len(rep.records)
        fails += rep.hard_failures
    for n in AC4_RUN_NS:
        for k in range(AC4_RUNS):
            r = run_last_stage(n, derive_seed(SEED, 4, n, k), trace=STATES, check=True, keep_trace=True)
            pops += sum(t.state is not None for t in r.trace)
            fails += len(r.violations)
    return report("AC4", fails == 0, "structural relations on sampled and run-harvested populations",
                  f"{pops} almost balanced populations checked, {fails} violations")


def ac5():
    viol, optimal, examples = 0, 0, []
    for k in range(AC5_TRIALS):
        r = run_last_stage(AC5_N, derive_seed(SEED, 5, k), trace=STATES, check=True)
        viol += len(r.violations)
        optimal += not r.truncated
        if r.violations and len(examples) < 3:
            examples.append(r.violations[0])
    ok = viol == 0 and optimal == AC5_TRIALS
    detail = f"{AC5_TRIALS} trials at n={AC5_N}, {optimal} optimal, {viol} violations"
    if examples:
        detail += f" (e.g. {examples})"
    return report("AC5", ok, "run invariants", detail)


def ac6():
    P = build_almost_balanced_population(AC6_N, choice=AC6_CHOICE)
    mc = monte_carlo_check(P, AC6_ITERS, derive_seed(SEED, 6), sigmas=AC6_SIGMAS)
    zs = mc.z_scores()
    worst = max(abs(z) for z in zs)
    return report("AC6", mc.passed, "Monte Carlo vs exact oracle",
                  f"{AC6_ITERS} iterations at n={AC6_N}, {len(zs)} frequencies, max |z| = {worst:.2f} "
                  f"(limit {AC6_SIGMAS})")


def ac7():
    cfg = ExperimentConfig(n_list=list(AC7_NS), trials=AC7_TRIALS, seed=SEED,
                           max_iters=AC7_MAX_ITERS, trace="silent")
    res = scaling_study(cfg)
    means = [p["mean"] for p in res.per_n]
    top_ratio = means[-1] / means[-2]
    ok = (res.truncated == 0 and res.slope is not None and res.slope <= AC7_MAX_SLOPE
          and top_ratio <= AC7_MAX_DOUBLING)
    table = ", ".join(f"n={p['n']}: {p['mean']:.0f}" for p in res.per_n)
    return report("AC7", ok, "last-stage scaling",
                  f"slope {res.slope:.3f} (limit {AC7_MAX_SLOPE}), top doubling x{top_ratio:.2f} "
                  f"(limit {AC7_MAX_DOUBLING}), truncated {res.truncated}; mean T {table}")


def ac8():
    means = []
    for n in AC8_NS:
        covers = [run_full(n, derive_seed(SEED, 8, n, k)).iterations_to_cover for k in range(AC8_TRIALS)]
        means.append(float(np.mean(covers)))
    slope = float(np.polyfit(np.log(AC8_NS), np.log(means), 1)[0])
    table = ", ".join(f"n={n}: {m:.0f}" for n, m in zip(AC8_NS, means))
    return report("AC8", slope <= AC8_MAX_SLOPE, "front-coverage scaling",
                  f"slope {slope:.3f} (limit {AC8_MAX_SLOPE}); mean cover time {table}", advisory=True)


def ac9(out_dir: Path | None = None):
    viol, checked, raw = 0, 0, 0
    offenders = []
    for n in AC9_NS:
        rep = suite(n, AC9_SAMPLES, SEED, AC9_SLACK)
        for row, bound, k, bad in rep.bound_table():
            if "==0" not in bound:
                checked += k
                viol += bad
        offenders += [r for r in rep.records if r["advisory_violations"]]
        # unslacked comparison, informational only
        for r in rep.records:
            P = Archive.from_strings(r["population"])
            raw += sum(1 for b in oracle.check_probability_bounds(P, slack=0) if not b.hard and not b.ok)
    if out_dir is not None and offenders:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "table_bound_violations.jsonl", "w") as fh:
            for r in offenders:
                fh.write(json.dumps(r, sort_keys=True) + "\n")
    return report("AC9", viol == 0, "probability bound rails",
                  f"{checked} bound checks at n={list(AC9_NS)} with slack {AC9_SLACK}, {viol} violations "
                  f"({len(offenders)} offending populations); {raw} violations with slack 0",
                  advisory=True)


def _tree(d: Path) -> dict:
    return {str(p.relative_to(d)): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def ac10():
    import contextlib
    import io

    cmds = [["run", "--n", "31", "--seed", "42", "--init", "almost-balanced"],
            ["run", "--n", "20", "--seed", "3", "--init", "random"],
            ["scale", "--n", "7,11,15", "--trials", "20", "--seed", "5"],
            ["verify", "--n", "7", "--samples", "20", "--seed", "1"]]
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        for rep, jobs in (("a", "1"), ("b", "2")):
            for i, cmd in enumerate(cmds):
                extra = ["--out", str(tmp / rep / str(i))]
                if cmd[0] == "run":
                    extra += ["--trace", str(tmp / rep / str(i) / "trace.jsonl")]
                if cmd[0] == "scale":
                    extra += ["--jobs", jobs]
                with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
                    cli_main(cmd + extra)
        a, b = _tree(tmp / "a"), _tree(tmp / "b")
    same = a == b and len(a) > 0
    return report("AC10", same, "determinism",
                  f"{len(a)} result files from {len(cmds)} commands, byte-identical on rerun: {same}")


# -- pytest wrappers ---------------------------------------------------------

def _check(capsys, line: str, hard: bool = True):
    emit(capsys, line)
    if hard:
        assert line.startswith("[PASS]"), line


def test_ac1_diversity_oracle(capsys):
    _check(capsys, ac1())


def test_ac2_max_diversity(capsys):
    _check(capsys, ac2())


def test_ac3_valid_replacement_shapes(capsys):
    _check(capsys, ac3())


def test_ac4_structural_relations(capsys):
    _check(capsys, ac4())


def test_ac5_run_invariants(capsys):
    _check(capsys, ac5())


def test_ac6_monte_carlo(capsys):
    _check(capsys, ac6())


def test_ac7_last_stage_scaling(capsys):
    _check(capsys, ac7())


def test_ac8_cover_scaling_advisory(capsys):
    _check(capsys, ac8(), hard=False)


def test_ac9_bound_rails_advisory(capsys, tmp_path):
    _check(capsys, ac9(tmp_path), hard=False)


def test_ac10_determinism(capsys):
    _check(capsys, ac10())


if __name__ == "__main__":
    lines = [fn() for fn in (ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8, ac9, ac10)]
    for line in lines:
        print(line)
    sys.exit(0 if all(not l.startswith("[FAIL]") for l in lines) else 1)
