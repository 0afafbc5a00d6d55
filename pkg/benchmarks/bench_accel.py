"""Compiled kernels vs the pure-numpy fallback.

Each backend runs in its own interpreter (the JIT switch is read at import
time). Workloads: last-stage trials, a one-step Monte Carlo tally and the
classifier at every population change of one run. Results are also compared,
so a speedup never comes from doing different work.

    python benchmarks/bench_accel.py [--quick]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from gsemod import backend_name, kernels
from gsemod.bitcore import RandomSource, derive_seed
from gsemod.classifier import fast_classify
from gsemod.harness import GsemoRun, build_almost_balanced_population, run_last_stage

quick = sys.argv[1] == "1"
out = {"backend": backend_name(), "times": {}, "check": {}}

# warm-up compiles everything once so the timings measure steady state
run_last_stage(7, 0)

def timed(name, fn):
    t0 = time.perf_counter()
    val = fn()
    out["times"][name] = time.perf_counter() - t0
    out["check"][name] = val

n_trials = 3 if quick else 10
n = 31 if quick else 63
timed(f"last-stage n={n} x{n_trials}",
      lambda: [run_last_stage(n, derive_seed(5, n, k)).iterations for k in range(n_trials)])

def tally():
    P = build_almost_balanced_population(7, choice=(3, 1, 5))
    mat = np.ascontiguousarray(P.matrix())
    counts = P.counts.counts.copy()
    rep = np.zeros(8, dtype=np.int64); opt = np.zeros(1, dtype=np.int64)
    rng = RandomSource(1)
    iters = 20000 if quick else 200000
    done = 0
    while done < iters:
        rng.reserve(9)
        k, rng.pos = kernels.one_step_tally(mat, counts, rng.buf, rng.pos, iters - done,
                                            80, rep, opt)
        done += k
    return rep.tolist() + opt.tolist()
timed("one-step tally n=7", tally)

def classify_run():
    m = 63 if quick else 127
    rng = RandomSource(2)
    run = GsemoRun(m, rng, build_almost_balanced_population(m, rng))
    states = []
    while run.advance(10**7, stop_on_change=True) == kernels.CHANGED:
        fc = fast_classify(run.pop, run.counts)
        states.append(fc.state)
    return states
timed("run + classify at changes", classify_run)
print(json.dumps(out))
"""


def run_backend(disable: bool, quick: bool) -> dict:
    env = dict(os.environ)
    env.pop("GSEMOD_DISABLE_JIT", None)
    if disable:
        env["GSEMOD_DISABLE_JIT"] = "1"
    res = subprocess.run([sys.executable, "-c", WORKER, "1" if quick else "0"],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args()

    jit = run_backend(False, args.quick)
    plain = run_backend(True, args.quick)
    if jit["backend"] != "numba":
        print("numba is not available; only the fallback was measured")

    print(f"{'workload':<30} {jit['backend']:>10} {plain['backend']:>10} {'speedup':>8}  same")
    ok = True
    for name, t_jit in jit["times"].items():
        t_plain = plain["times"][name]
        same = jit["check"][name] == plain["check"][name]
        ok &= same
        print(f"{name:<30} {t_jit:>9.3f}s {t_plain:>9.3f}s {t_plain / t_jit:>7.1f}x  {same}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
