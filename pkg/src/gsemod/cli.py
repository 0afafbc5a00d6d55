"""Command-line entry point: ``gsemod {run,scale,verify,phases}``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from collections import Counter
from pathlib import Path

from .classifier import END_TRUNCATED, segment_phases, state_occupancy
from .harness import FULL, FULL_RUN, LAST_STAGE, SILENT, STATES, run_full, run_last_stage
from .oracle import MAX_ENUM_N
from .trace import TraceError, read_trace

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_TRUNCATED = 2
EXIT_EXCESS_TRUNCATION = 3
EXIT_USAGE = 64
EXIT_DATA = 65

OUT_DIR_ENV = "GSEMOD_OUT_DIR"

EPILOG = f"""\
exit codes:
  {EXIT_OK}   success (run: optimal diversity reached)
  {EXIT_FAILED}   verify: an exact check failed; run --check: an invariant was violated
  {EXIT_TRUNCATED}   run: stopped at --max-iters before reaching optimal diversity
  {EXIT_EXCESS_TRUNCATION}   scale: more than 1% of trials truncated
  {EXIT_USAGE}  invalid flags or arguments
  {EXIT_DATA}  malformed or empty trace file

The output directory defaults to ${OUT_DIR_ENV} when set, else ./results.
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_jobs() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def _out_dir(args) -> Path:
    if args.out is not None:
        return Path(args.out)
    return Path(os.environ.get(OUT_DIR_ENV) or "results")


def _int_list(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from None


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    p = _Parser(prog="gsemod", description="GSEMO with diversity tie-breaking on OneMinMax.",
                epilog=EPILOG, formatter_class=fmt)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="one seeded trial", epilog=EPILOG, formatter_class=fmt)
    r.add_argument("--n", type=_positive, required=True)
    r.add_argument("--seed", type=_seed, default=1)
    r.add_argument("--init", choices=("almost-balanced", "random"), default="almost-balanced",
                   help="almost balanced start (last stage) or one random bit string (full run)")
    r.add_argument("--max-iters", type=_positive, default=None)
    r.add_argument("--trace", metavar="PATH", default=None, help="write a JSON-lines trace here")
    r.add_argument("--trace-level", choices=(STATES, FULL), default=STATES,
                   help="states: one record per population change; full: one per iteration")
    r.add_argument("--check", action="store_true", help="check structural invariants at every change")
    r.add_argument("--out", metavar="DIR", default=None)

    s = sub.add_parser("scale", help="hitting-time scaling study", epilog=EPILOG, formatter_class=fmt)
    s.add_argument("--config", metavar="JSON", default=None,
                   help="JSON with keys n_list, trials, seed, mode, max_iters, trace, out_dir; flags win")
    s.add_argument("--n", type=_int_list, default=None, help="comma-separated sizes, e.g. 15,31,63")
    s.add_argument("--trials", type=_positive, default=None)
    s.add_argument("--seed", type=_seed, default=None)
    s.add_argument("--mode", choices=(LAST_STAGE, FULL_RUN), default=None)
    s.add_argument("--max-iters", type=_positive, default=None)
    s.add_argument("--trace-level", choices=(SILENT, STATES), default=None)
    s.add_argument("--jobs", type=_positive, default=None)
    s.add_argument("--out", metavar="DIR", default=None)

    v = sub.add_parser("verify", help="exact small-n checks", epilog=EPILOG, formatter_class=fmt)
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--samples", type=_positive, default=200)
    v.add_argument("--seed", type=_seed, default=1)
    v.add_argument("--slack", type=float, default=16.0,
                   help="constant standing in for the O(1/n) terms of the probability bounds")
    v.add_argument("--out", metavar="DIR", default=None)

    ph = sub.add_parser("phases", help="phase statistics of a trace", epilog=EPILOG, formatter_class=fmt)
    ph.add_argument("trace", metavar="TRACE")
    return p


# -- commands --------------------------------------------------------------

def cmd_run(args) -> int:
    n = args.n
    if args.init == "almost-balanced" and (n % 2 == 0 or n < 3):
        raise UsageError("n must be odd (and at least 3) for --init almost-balanced")
    level = args.trace_level if args.trace else SILENT
    kw = dict(trace=level, trace_path=args.trace, check=args.check)
    if args.max_iters is not None:
        kw["max_iters"] = args.max_iters
    res = (run_last_stage if args.init == "almost-balanced" else run_full)(n, args.seed, **kw)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"run_n{n}_seed{args.seed}_{res.mode}.json"
    path.write_text(json.dumps(res.summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    print(f"n={n} seed={args.seed} mode={res.mode}")
    print(f"  iterations to cover:   {res.iterations_to_cover}")
    print(f"  iterations to optimal: {res.iterations_to_optimal}")
    print(f"  final diversity:       {res.diversity}")
    if res.phases:
        print(f"  phases: {len(res.phases)}")
    print(f"  summary: {path}")
    if args.trace:
        print(f"  trace:   {args.trace}")
    if res.violations:
        print(f"  {len(res.violations)} invariant violation(s):")
        for msg in res.violations[:10]:
            print(f"    {msg}")
        return EXIT_FAILED
    if res.truncated:
        print(f"  truncated after {res.iterations} iterations")
        return EXIT_TRUNCATED
    return EXIT_OK


def cmd_scale(args) -> int:
    from .experiments import ExperimentConfig, scaling_study, write_scaling_outputs

    base: dict = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        if not isinstance(base, dict):
            raise UsageError("config must be a JSON object")
    for key, val in (("n_list", args.n), ("trials", args.trials), ("seed", args.seed),
                     ("mode", args.mode), ("max_iters", args.max_iters),
                     ("trace", args.trace_level), ("jobs", args.jobs)):
        if val is not None:
            base[key] = val
    if args.out is not None:
        base["out_dir"] = args.out
    base.setdefault("jobs", _default_jobs())
    if "n_list" not in base:
        raise UsageError("--n (or n_list in --config) is required")
    if len(set(base["n_list"])) < 2:
        raise UsageError("scaling needs at least two distinct n values")
    try:
        cfg = ExperimentConfig.from_dict(base)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    out = Path(cfg.out_dir) if cfg.out_dir else _out_dir(args)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = scaling_study(cfg)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    paths = write_scaling_outputs(res, out)

    print(f"{'n':>6} {'hits':>6} {'mean T':>12} {'median T':>10} {'mean T/n^2':>10}")
    for p in res.per_n:
        if p["mean"] is None:
            print(f"{p['n']:>6} {0:>6} {'-':>12} {'-':>10} {'-':>10}")
            continue
        print(f"{p['n']:>6} {p['trials']:>6} {p['mean']:>12.1f} {p['median']:>10.1f} "
              f"{p['mean'] / p['n'] ** 2:>10.3f}")
    print("slope n/a (fewer than two sizes with completed trials)" if res.slope is None
          else f"slope {res.slope:.4f}")
    print(f"results in {paths['results'].parent}")
    if res.truncated_fraction > 0.01:
        return EXIT_EXCESS_TRUNCATION
    return EXIT_OK


def cmd_verify(args) -> int:
    from .experiments import lemma_suite

    n = args.n
    if n % 2 == 0 or not 5 <= n <= MAX_ENUM_N:
        raise UsageError(f"n must be odd and between 5 and {MAX_ENUM_N} (enumeration bound)")
    if args.slack < 0:
        raise UsageError("slack must be non-negative")
    rep = lemma_suite(n, args.samples, args.seed, slack=args.slack)
    out = _out_dir(args)
    path = out / f"verify_n{n}_seed{args.seed}.jsonl"
    rep.write_jsonl(path)

    print(f"n={n} samples={args.samples} seed={args.seed}")
    print(f"  exact checks: {'pass' if rep.passed else 'FAIL'} ({rep.hard_failures} failure(s))")
    print(f"  {'row':<10} {'bound':<12} {'checked':>8} {'violated':>9}  verdict")
    for row, bound, k, bad in rep.bound_table():
        hard = "==0" in bound
        verdict = "pass" if not bad else ("FAIL" if hard else "advisory")
        print(f"  {row:<10} {bound:<12} {k:>8} {bad:>9}  {verdict}")
    print(f"  report: {path}")
    return EXIT_OK if rep.passed else EXIT_FAILED


def _histogram(lengths: list) -> list:
    """Counts of phase lengths in power-of-two buckets ``[2^k, 2^(k+1))``."""
    c = Counter(int(math.log2(x)) for x in lengths if x > 0)
    return [(1 << k, (1 << (k + 1)) - 1, c[k]) for k in range(max(c) + 1)] if c else []


def cmd_phases(args) -> int:
    try:
        records = read_trace(args.trace)
        phases = segment_phases(records)
    except OSError as exc:
        print(f"gsemod: cannot read trace: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TraceError as exc:
        print(f"gsemod: malformed trace: {exc}", file=sys.stderr)
        return EXIT_DATA
    occ = state_occupancy(records)
    total = sum(occ.values())
    ended = [p for p in phases if p.end_reason != END_TRUNCATED]
    print(f"phases: {len(phases)} ({len(phases) - len(ended)} truncated)")
    print("end reasons:")
    for reason, k in sorted(Counter(p.end_reason for p in phases).items()):
        print(f"  {reason:<22} {k}")
    print("phase length histogram:")
    for lo, hi, k in _histogram([p.length for p in phases]):
        print(f"  {lo:>8}-{hi:<8} {k}")
    print("state occupancy:")
    for s in sorted(occ):
        frac = occ[s] / total if total else 0.0
        print(f"  state {s}: {occ[s]} iterations ({frac:.4f})")
    frac_opt = sum(p.ended_optimal for p in phases) / len(phases)
    print(f"fraction of phases ending optimal: {frac_opt:.4f}")
    print(f"final phase ended optimal: {str(phases[-1].ended_optimal).lower()}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "scale": cmd_scale, "verify": cmd_verify, "phases": cmd_phases}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.print_usage(sys.stderr)
        print(f"gsemod {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
