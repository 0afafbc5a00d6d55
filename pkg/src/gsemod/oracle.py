"""Exact small-n ground truth by enumeration.

Every probability is a ``Fraction``. One GSEMO_D iteration from a covering
population picks a parent uniformly among the ``n + 1`` individuals, so the
chance of producing ``y`` is ``sum_j (n-1)^(n-H(x_j, y)) / (n^n (n+1))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product

import numpy as np

from .archive import Archive
from .bitcore import BitString
from .classifier import Classification, classify
from .diversity import max_diversity

MAX_ENUM_N = 13
MAX_BRUTE_N = 5
# rational stand-in for e in the advisory bound checks
E = Fraction(math.e)


@dataclass(frozen=True)
class ReplacementReport:
    index: int
    valid_set: frozenset
    improving_set: frozenset
    replace_prob: Fraction
    improve_prob: Fraction


@lru_cache(maxsize=64)
def level_strings(n: int, i: int) -> np.ndarray:
    """All length-``n`` strings with exactly ``i`` ones, one per row."""
    rows = np.zeros((math.comb(n, i), n), dtype=np.uint8)
    for r, ones in enumerate(combinations(range(n), i)):
        rows[r, list(ones)] = 1
    rows.setflags(write=False)
    return rows


def _check_enumerable(P: Archive) -> None:
    if P.n > MAX_ENUM_N:
        raise ValueError(f"n = {P.n} is beyond the enumeration bound {MAX_ENUM_N}")
    if not P.is_front_covered():
        raise ValueError("population does not cover the Pareto front")


def production_prob(pop: np.ndarray, ys: np.ndarray) -> Fraction:
    """Probability that one iteration (uniform parent, standard bit mutation)
    produces any of the rows of ``ys``."""
    m, n = pop.shape
    if ys.shape[0] == 0:
        return Fraction(0)
    dist = (pop[:, None, :] != ys[None, :, :]).sum(axis=2)
    hist = np.bincount(dist.ravel(), minlength=n + 1)
    num = sum(int(c) * (n - 1) ** (n - d) for d, c in enumerate(hist) if c)
    return Fraction(num, n**n * m)


def _valid_mask(P: Archive, i: int, ys: np.ndarray):
    """Diversity change of swapping ``x_i`` for each row of ``ys``."""
    m = P.counts.m
    mk = P.counts.counts
    old = P.x(i).bits
    contrib = np.where(old == 1, 2 * mk - m - 1, m - 2 * mk - 1)
    diff = ys != old
    delta = diff.astype(np.int64) @ contrib
    changed = diff.any(axis=1)
    return delta, changed


def replacement_report(P: Archive, i: int) -> ReplacementReport:
    _check_enumerable(P)
    n = P.n
    ys = level_strings(n, i)
    delta, changed = _valid_mask(P, i, ys)
    valid = changed & (delta >= 0)
    improving = valid & (P.diversity + delta == max_diversity(n, n + 1))
    pop = P.matrix()
    return ReplacementReport(
        index=i,
        valid_set=frozenset(BitString(r) for r in ys[valid]),
        improving_set=frozenset(BitString(r) for r in ys[improving]),
        replace_prob=production_prob(pop, ys[valid]),
        improve_prob=production_prob(pop, ys[improving]),
    )


def valid_replacements(P: Archive, i: int) -> ReplacementReport:
    """Strings with ``i`` ones, other than ``x_i``, that do not lower the diversity."""
    return replacement_report(P, i)


def exact_replace_prob(P: Archive, i: int) -> Fraction:
    return replacement_report(P, i).replace_prob


def exact_optimal_prob(P: Archive) -> Fraction:
    """Probability that the next iteration yields a population of optimal diversity."""
    if P.is_optimal():
        return Fraction(0)
    return sum((replacement_report(P, i).improve_prob for i in range(P.n + 1)), Fraction(0))


def brute_force_max_diversity(n: int) -> int:
    """Largest pairwise total Hamming distance over all front-covering populations."""
    if not 1 <= n <= MAX_BRUTE_N:
        raise ValueError(f"brute force needs 1 <= n <= {MAX_BRUTE_N}")
    levels = [[sum(1 << k for k in ones) for ones in combinations(range(n), i)]
              for i in range(n + 1)]
    best = -1
    for pop in product(*levels):
        d = sum(bin(a ^ b).count("1") for a, b in combinations(pop, 2))
        best = max(best, d)
    return best


# -- predicted set shapes ------------------------------------------------

def predicted_valid_set(P: Archive, cl: Classification, i: int) -> tuple[set, set]:
    """Valid and improving sets as predicted from the hot/cold class of x_i."""
    x = P.x(i)
    hot, cold = cl.hot, cl.cold
    if i in cl.I01:
        return set(), set()
    if i in cl.I11:
        return {x.flip(hot, k) for k in x.zeros_at()}, set()
    if i in cl.I00:
        return {x.flip(cold, k) for k in x.ones()}, set()
    t = x.flip(hot, cold)
    s0, s1 = t.zeros_at(), t.ones()
    family = {t.flip(a, b) for a in s0 for b in s1} | {t}
    family.discard(x)
    return family, {t}


def shape_mismatches(P: Archive, cl: Classification | None = None) -> list[str]:
    """Compare enumerated valid/improving sets with the predicted shapes, per index."""
    if cl is None:
        cl = classify(P)
    out = []
    for i in range(P.n + 1):
        rep = replacement_report(P, i)
        valid, improving = predicted_valid_set(P, cl, i)
        name = cl.class_of(i)
        if rep.valid_set != valid:
            out.append(f"I{name} index {i}: valid set has {len(rep.valid_set)} strings, "
                       f"predicted {len(valid)}")
        if rep.improving_set != improving:
            out.append(f"I{name} index {i}: improving set mismatch")
        if name == "11" and len(rep.valid_set) != P.n - i:
            out.append(f"I11 index {i}: {len(rep.valid_set)} valid strings, expected n-i")
        if name == "00" and len(rep.valid_set) != i:
            out.append(f"I00 index {i}: {len(rep.valid_set)} valid strings, expected i")
        if name == "01" and rep.replace_prob != 0:
            out.append(f"I01 index {i}: replacement probability {rep.replace_prob} != 0")
    return out


# -- per-class probability bounds ---------------------------------------

@dataclass(frozen=True)
class BoundCheck:
    index: int
    row: str
    bound: str
    value: Fraction
    limit: Fraction
    hard: bool
    ok: bool

    def as_record(self) -> dict:
        return {"index": self.index, "class": self.row, "bound": self.bound,
                "value": float(self.value), "limit": float(self.limit),
                "value_exact": str(self.value), "hard": self.hard,
                "verdict": "pass" if self.ok else ("fail" if self.hard else "advisory-violation")}


def bound_row(cl: Classification, i: int) -> str:
    name = cl.class_of(i)
    if name == "01":
        return "I01"
    j = {"00": cl.J00, "11": cl.J11, "10": cl.J10}[name]
    return f"J{name}" if i in j else f"I{name}\\J{name}"


def check_probability_bounds(P: Archive, slack=16, cl: Classification | None = None) -> list[BoundCheck]:
    """Exact replacement/improvement probabilities against the per-class bounds.

    Asymptotic factors ``1 - O(1/n)`` and ``1 + O(1/n)`` become
    ``1 - slack/n`` and ``1 + slack/n``. Zero rows are exact (hard) checks,
    everything else is advisory.
    """
    if cl is None:
        cl = classify(P)
    n = P.n
    c = Fraction(slack)
    lo_f = 1 - c / n
    hi_f = 1 + c / n
    n2, n3 = Fraction(n * n), Fraction(n**3)
    out = []
    for i in range(n + 1):
        rep = replacement_report(P, i)
        row = bound_row(cl, i)
        r, imp = rep.replace_prob, rep.improve_prob

        def add(bound, value, limit, kind, hard=False):
            ok = value == limit if kind == "eq" else (value >= limit if kind == "ge" else value <= limit)
            out.append(BoundCheck(i, row, bound, value, limit, hard, ok))

        if row == "I01":
            add("replace==0", r, Fraction(0), "eq", hard=True)
            add("improve==0", imp, Fraction(0), "eq", hard=True)
            continue
        if row == "I00\\J00":
            add("replace>=", r, i / (E * n3) * lo_f, "ge")
            add("replace<=", r, 7 / (E * n2) * hi_f, "le")
        elif row == "J00":
            add("replace>=", r, i / (E * n2) * lo_f, "ge")
            add("replace<=", r, (i + 2) / (E * n2) * hi_f, "le")
        elif row == "I11\\J11":
            add("replace>=", r, (n - i) / (E * n3) * lo_f, "ge")
            add("replace<=", r, 7 / (E * n2) * hi_f, "le")
        elif row == "J11":
            add("replace>=", r, (n - i) / (E * n2) * lo_f, "ge")
            add("replace<=", r, (n - i + 2) / (E * n2) * hi_f, "le")
        elif row == "I10\\J10":
            add("replace>=", r, 1 / (2 * E * n2) * lo_f, "ge")
            add("replace<=", r, 13 / n2, "le")
            add("improve>=", imp, lo_f / (E * n3), "ge")
        else:
            add("replace>=", r, (min(n - i, i) + 1) / (E * n2) * lo_f, "ge")
            add("replace<=", r, 2 / Fraction(n) * hi_f, "le")
            add("improve>=", imp, lo_f / (E * n2), "ge")
        if not row.startswith(("I10", "J10")):
            add("improve==0", imp, Fraction(0), "eq", hard=True)
    return out
