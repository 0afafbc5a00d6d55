import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gsemod import kernels
from gsemod.bitcore import (BitString, RandomSource, derive_seed, dominates, hamming,
                            mutation_probability, mutation_probability_by_distance,
                            one_count, one_min_max, standard_bit_mutation)

from conftest import bs

bitstrings = st.integers(1, 12).flatmap(
    lambda n: st.lists(st.integers(0, 1), min_size=n, max_size=n)).map(BitString)


def test_one_count_examples():
    assert one_count(bs("00000")) == 0
    assert one_count(bs("10110")) == 3
    assert one_count(bs("11111")) == 5


def test_one_min_max_examples():
    assert one_min_max(bs("10110")) == (3, 2)
    assert one_min_max(bs("000")) == (0, 3)
    assert one_min_max(bs("111")) == (3, 0)


def test_dominates_examples():
    assert not dominates((3, 2), (3, 2))
    assert dominates((3, 2), (2, 1))
    assert not dominates((2, 1), (3, 2))


def test_no_onemaxmin_value_dominates_another():
    for n in range(1, 11):
        vals = [(i, n - i) for i in range(n + 1)]
        assert not any(dominates(a, b) for a in vals for b in vals)


def test_hamming_examples():
    assert hamming(bs("000"), bs("000")) == 0
    assert hamming(bs("000"), bs("111")) == 3
    assert hamming(bs("001"), bs("100")) == 2
    with pytest.raises(ValueError):
        hamming(bs("00"), bs("000"))


def test_positions_are_one_indexed():
    x = bs("1000")
    assert x.bit(1) == 1 and x.bit(4) == 0
    assert x.ones() == [1]
    assert str(x.flip(1, 4)) == "0001"
    with pytest.raises(IndexError):
        x.bit(0)


def test_bitstring_validation_and_immutability():
    with pytest.raises(ValueError):
        BitString.from_str("01a")
    with pytest.raises(ValueError):
        BitString([])
    with pytest.raises(ValueError):
        BitString([0, 2])
    x = bs("0101")
    with pytest.raises(ValueError):
        x.bits[0] = 1
    assert x == bs("0101") and hash(x) == hash(bs("0101")) and x != bs("0100")
    assert x.complement() == bs("1010")


def test_mutation_probability_examples():
    assert mutation_probability(bs("000"), bs("001")) == Fraction(4, 27)
    assert mutation_probability(bs("000"), bs("000")) == Fraction(8, 27)
    assert mutation_probability(bs("000"), bs("111")) == Fraction(1, 27)
    assert mutation_probability_by_distance(3, 2) == Fraction(2, 27)


def test_mutation_probability_needs_n_at_least_two():
    with pytest.raises(ValueError):
        mutation_probability(bs("0"), bs("1"))


@pytest.mark.parametrize("n", [2, 3, 5, 8, 12])
def test_mutation_probabilities_sum_to_one(n):
    x = BitString(np.arange(n) % 2)
    total = sum(mutation_probability(x, BitString(y)) for y in product((0, 1), repeat=n))
    assert total == 1


@given(bitstrings, st.data())
def test_mutation_probability_upper_bound(x, data):
    if x.n < 2:
        return
    y = BitString(data.draw(st.lists(st.integers(0, 1), min_size=x.n, max_size=x.n)))
    h = hamming(x, y)
    if h >= 1:
        # 1/(e (n-1)^H) with e replaced by a rational below e keeps the check exact and safe
        e_low = Fraction(271828, 100000)
        assert mutation_probability(x, y) <= 1 / (e_low * (x.n - 1) ** h)


def test_seeded_mutation_of_0101_is_pinned():
    rng = RandomSource(2024)
    x = bs("0101")
    out = [str(standard_bit_mutation(x, rng)) for _ in range(12)]
    assert out == ["0101", "0001", "0000", "0110", "0101", "1111",
                   "0011", "0001", "0001", "0101", "1100", "1011"]
    assert rng.pos == 28


def test_mutation_consumes_one_uniform_per_flip_plus_one():
    rng = RandomSource(9)
    x = BitString.zeros(20)
    for _ in range(200):
        before = rng.pos
        rng.reserve(21)
        before = rng.pos
        y = standard_bit_mutation(x, rng)
        assert rng.pos - before == one_count(y) + 1


def test_mutation_of_single_bit_always_flips():
    rng = RandomSource(3)
    assert all(standard_bit_mutation(bs("0"), rng) == bs("1") for _ in range(20))


def test_per_bit_flip_frequency_matches_one_over_n():
    n, draws = 10, 10**6
    rng = RandomSource(77)
    tally = np.zeros(n, dtype=np.int64)
    parent = np.zeros(n, dtype=np.uint8)
    done = 0
    while done < draws:
        rng.reserve(n + 1)
        k, rng.pos = kernels.flip_tally(parent, rng.buf, rng.pos, draws - done, tally)
        done += k
    p = 1 / n
    sd = math.sqrt(draws * p * (1 - p))
    assert np.all(np.abs(tally - draws * p) <= 4 * sd), tally


def test_empirical_no_flip_rate():
    n, draws = 5, 40000
    rng = RandomSource(5)
    x = bs("01010")
    same = sum(standard_bit_mutation(x, rng) == x for _ in range(draws))
    p = (1 - 1 / n) ** n
    assert abs(same - draws * p) <= 4 * math.sqrt(draws * p * (1 - p))


def test_random_source_is_chunk_independent():
    a, b = RandomSource(11, (1, 2)), RandomSource(11, (1, 2))
    b.CHUNK = 7
    xs = [a.uniform() for _ in range(100)]
    ys = [b.uniform() for _ in range(100)]
    assert xs == ys
    assert all(0.0 < u <= 1.0 for u in xs)
    assert RandomSource(11, (1, 3)).uniform() != xs[0]


def test_below_is_uniform_and_in_range():
    rng = RandomSource(4)
    counts = np.bincount([rng.below(6) for _ in range(60000)], minlength=6)
    assert counts.size == 6
    assert np.all(np.abs(counts - 10000) <= 4 * math.sqrt(60000 * (1 / 6) * (5 / 6)))


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(1, 15, 0) == 802088250904384911
    seeds = {derive_seed(1, n, k) for n in (15, 31) for k in range(100)}
    assert len(seeds) == 200
    assert all(0 <= s < 2**63 for s in seeds)


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        RandomSource(-1)
