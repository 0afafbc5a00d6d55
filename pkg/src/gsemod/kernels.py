"""Hot loops: mutation, the GSEMO_D main loop on OneMinMax, one-step tallies
and the hot/cold classification of an almost balanced population.

Everything here works on plain arrays so it can be compiled by numba. The
population of a OneMinMax run is a ``(n + 1, n)`` uint8 matrix whose row ``i``
holds the individual with ``i`` one-bits; ``present[i]`` marks filled rows.
Random numbers come from a float64 buffer of uniforms in (0, 1] and every
kernel returns the updated read position.
"""

import math

import numpy as np

from ._accel import jit

# return codes of gsemo_steps
NEED_RANDOM = 0
CHANGED = 1
OPTIMAL = 2
MAX_ITERS = 3

# layout of the int64 state vector shared by gsemo_steps and its callers
ST_ITER = 0
ST_M = 1
ST_DIV = 2
ST_COVER = 3
ST_REPLACED = 4
ST_INSERTED = 5
ST_REJ_DIV = 6
ST_REJ_DOM = 7
ST_LAST = 8
ST_TARGET = 9
ST_SIZE = 10

# class codes: 2 * (bit at hot) + (bit at cold)
C00 = 0
C01 = 1
C10 = 2
C11 = 3

# bit flags for J-set membership
F_J00 = 1
F_J11 = 2
F_J10 = 4
F_JHOT = 8


@jit
def uniform_index(u, m):
    """Map a uniform in (0, 1] to an integer in [0, m)."""
    j = int(math.ceil(u * m)) - 1
    if j < 0:
        j = 0
    if j >= m:
        j = m - 1
    return j


@jit
def mutate(parent, child, n, buf, pos):
    """Standard bit mutation by geometric jumps between flipped positions."""
    for k in range(n):
        child[k] = parent[k]
    if n == 1:
        child[0] ^= 1
        return pos
    log_q = math.log1p(-1.0 / n)
    k = -1
    while True:
        u = buf[pos]
        pos += 1
        k += 1 + int(math.floor(math.log(u) / log_q))
        if k >= n:
            break
        child[k] ^= 1
    return pos


@jit
def flip_tally(parent, buf, pos, draws, tally):
    """Add per-position flip counts of up to ``draws`` mutations to ``tally``."""
    n = parent.shape[0]
    child = np.empty(n, dtype=np.uint8)
    done = 0
    while done < draws and buf.shape[0] - pos >= n + 1:
        pos = mutate(parent, child, n, buf, pos)
        for k in range(n):
            if child[k] != parent[k]:
                tally[k] += 1
        done += 1
    return done, pos


@jit
def replace_delta(counts, m, old, new, n):
    """Change of the total Hamming distance when ``old`` is swapped for ``new``."""
    delta = 0
    for k in range(n):
        if old[k] != new[k]:
            mk = counts[k]
            if old[k] == 1:
                delta += 2 * mk - m - 1
            else:
                delta += m - 2 * mk - 1
    return delta


@jit
def total_hamming_counts(counts, m):
    d = 0
    for k in range(counts.shape[0]):
        d += counts[k] * (m - counts[k])
    return d


@jit
def gsemo_steps(pop, present, members, counts, st, buf, pos, child, old_row,
                max_iters, stop_on_change):
    """Run GSEMO_D iterations until something the caller must see happens.

    Returns ``(code, pos)``. ``code`` is OPTIMAL once the front is covered
    with maximal diversity, CHANGED after any population change when
    ``stop_on_change`` is set, MAX_ITERS at the budget and NEED_RANDOM when
    fewer than ``n + 2`` uniforms are left (one iteration never needs more).
    """
    n = pop.shape[1]
    while True:
        if st[ST_ITER] >= max_iters:
            return MAX_ITERS, pos
        if buf.shape[0] - pos < n + 2:
            return NEED_RANDOM, pos
        m = st[ST_M]
        j = members[uniform_index(buf[pos], m)]
        pos += 1
        pos = mutate(pop[j], child, n, buf, pos)
        ones = 0
        for k in range(n):
            ones += int(child[k])
        st[ST_ITER] += 1
        if present[ones]:
            delta = replace_delta(counts, m, pop[ones], child, n)
            if delta < 0:
                st[ST_REJ_DIV] += 1
                continue
            st[ST_REPLACED] += 1
            same = True
            for k in range(n):
                if pop[ones, k] != child[k]:
                    same = False
                    break
            if same:
                continue
            for k in range(n):
                old_row[k] = pop[ones, k]
                counts[k] += int(child[k]) - int(pop[ones, k])
                pop[ones, k] = child[k]
            st[ST_DIV] += delta
        else:
            # OneMinMax: distinct fitness values never dominate each other
            gain = 0
            for k in range(n):
                if child[k] == 1:
                    gain += m - counts[k]
                else:
                    gain += counts[k]
                counts[k] += child[k]
                pop[ones, k] = child[k]
                old_row[k] = 0
            present[ones] = True
            at = m
            while at > 0 and members[at - 1] > ones:
                members[at] = members[at - 1]
                at -= 1
            members[at] = ones
            m += 1
            st[ST_M] = m
            st[ST_DIV] += gain
            st[ST_INSERTED] += 1
            if m == n + 1:
                st[ST_COVER] = st[ST_ITER]
        st[ST_LAST] = ones
        if st[ST_M] == n + 1 and st[ST_DIV] == st[ST_TARGET]:
            return OPTIMAL, pos
        if stop_on_change:
            return CHANGED, pos


@jit
def one_step_tally(pop, counts, buf, pos, iters, target, replaced, optimal):
    """Simulate ``iters`` independent single iterations from a fixed covering
    population; count per-index replacements and optimum hits.

    Returns ``(done, pos)``; stops early when the buffer runs low.
    """
    m = pop.shape[0]
    n = pop.shape[1]
    child = np.empty(n, dtype=np.uint8)
    base = total_hamming_counts(counts, m)
    done = 0
    while done < iters:
        if buf.shape[0] - pos < n + 2:
            break
        j = uniform_index(buf[pos], m)
        pos += 1
        pos = mutate(pop[j], child, n, buf, pos)
        done += 1
        ones = 0
        for k in range(n):
            ones += int(child[k])
        delta = replace_delta(counts, m, pop[ones], child, n)
        if delta < 0:
            continue
        same = True
        for k in range(n):
            if pop[ones, k] != child[k]:
                same = False
                break
        if same:
            continue
        replaced[ones] += 1
        if base + delta == target:
            optimal[0] += 1
    return done, pos


@jit
def position_profile(counts, n):
    """Return ``(hot, cold, n_almost, n_unbalanced)`` for a covering population
    with odd ``n``. Positions are 0-indexed; -1 when absent or not unique."""
    half = (n + 1) // 2
    hot = -1
    cold = -1
    n_hot = 0
    n_cold = 0
    n_almost = 0
    n_unbal = 0
    for k in range(n):
        c = counts[k]
        if c == half:
            continue
        if c == half + 1:
            n_almost += 1
            n_hot += 1
            hot = k
        elif c == half - 1:
            n_almost += 1
            n_cold += 1
            cold = k
        else:
            n_unbal += 1
    if n_hot != 1:
        hot = -1
    if n_cold != 1:
        cold = -1
    return hot, cold, n_almost, n_unbal


@jit
def _only_diff_at(a, b, pos, n):
    if a[pos] == b[pos]:
        return False
    for k in range(n):
        if k != pos and a[k] != b[k]:
            return False
    return True


@jit
def classify_arrays(pop, hot, cold, cls, flags):
    """Fill ``cls[i]`` with the I-class code and ``flags[i]`` with J-set bits."""
    m = pop.shape[0]
    n = pop.shape[1]
    for i in range(m):
        cls[i] = 2 * pop[i, hot] + pop[i, cold]
        flags[i] = 0
    for i in range(m):
        c = cls[i]
        if i >= 1 and _only_diff_at(pop[i], pop[i - 1], hot, n):
            flags[i] |= F_JHOT
            if c == C11:
                flags[i] |= F_J11
        if c == C00 and i + 1 < m and _only_diff_at(pop[i], pop[i + 1], cold, n):
            flags[i] |= F_J00
        if c == C10:
            # S1/S0 are the one/zero positions of x_i with hot and cold flipped
            hit = False
            if i >= 1:
                zeros_in_s1 = 0
                for k in range(n):
                    t = int(pop[i, k])
                    if k == hot or k == cold:
                        t = 1 - t
                    if t == 1 and pop[i - 1, k] == 0:
                        zeros_in_s1 += 1
                hit = zeros_in_s1 == 1
            if not hit and i + 1 < m:
                ones_in_s0 = 0
                for k in range(n):
                    t = int(pop[i, k])
                    if k == hot or k == cold:
                        t = 1 - t
                    if t == 0 and pop[i + 1, k] == 1:
                        ones_in_s0 += 1
                hit = ones_in_s0 == 1
            if hit:
                flags[i] |= F_J10


@jit
def candidate_counts(pop, counts, hot, cold, cls):
    """Numbers of cold- and hot-candidate positions (thresholds n/16, exact)."""
    m = pop.shape[0]
    n = pop.shape[1]
    half = (n + 1) // 2
    n_cold_cand = 0
    n_hot_cand = 0
    for k in range(n):
        if counts[k] != half:
            continue
        ones_c0 = 0
        zeros_h1 = 0
        for i in range(m):
            c = cls[i]
            if (c & 1) == 0 and pop[i, k] == 1:
                ones_c0 += 1
            if (c >> 1) == 1 and pop[i, k] == 0:
                zeros_h1 += 1
        if 16 * ones_c0 >= n:
            n_cold_cand += 1
        if 16 * zeros_h1 >= n:
            n_hot_cand += 1
    return n_cold_cand, n_hot_cand
