import itertools
import math

import pytest

from fchaos.oracles import (
    catalan,
    count_noncrossing,
    free_poisson_moment,
    moment_from_free_cumulants,
    noncrossing_partitions,
    semicircle_moment,
)


def dyck_path_count(k):
    """Count +-1 paths of length 2k staying >= 0 and ending at 0."""

    def walk(pos, steps_left):
        if steps_left == 0:
            return 1 if pos == 0 else 0
        total = walk(pos + 1, steps_left - 1)
        if pos > 0:
            total += walk(pos - 1, steps_left - 1)
        return total

    return walk(0, 2 * k)


def all_set_partitions(n):
    """Every set partition of {0..n-1}, built element by element."""
    parts = [[]]
    for elem in range(n):
        new = []
        for p in parts:
            for i in range(len(p)):
                q = [list(b) for b in p]
                q[i].append(elem)
                new.append(q)
            new.append([list(b) for b in p] + [[elem]])
        parts = new
    return [tuple(tuple(b) for b in p) for p in parts]


def has_crossing(partition):
    blocks = [set(b) for b in partition]
    for b1, b2 in itertools.combinations(blocks, 2):
        for a, c in itertools.combinations(sorted(b1), 2):
            for b, d in itertools.combinations(sorted(b2), 2):
                if a < b < c < d or b < a < d < c:
                    return True
    return False


@pytest.mark.parametrize("k,expected", [(0, 1), (1, 1), (2, 2), (3, 5), (4, 14)])
def test_catalan_small_values(k, expected):
    assert catalan(k) == expected


def test_catalan_against_dyck_paths():
    assert catalan(5) == dyck_path_count(5) == 42


@pytest.mark.parametrize("n", [0, 1, 2, 3, 4])
def test_noncrossing_enumeration_matches_brute_force(n):
    got = {tuple(sorted(tuple(sorted(b)) for b in p)) for p in noncrossing_partitions(n)}
    want = {
        tuple(sorted(p))
        for p in all_set_partitions(n)
        if not has_crossing(p)
    }
    assert got == want
    assert count_noncrossing(n) == catalan(n)


def test_noncrossing_count_is_catalan_beyond_brute_force():
    assert count_noncrossing(7) == catalan(7) == 429


def test_noncrossing_cap():
    with pytest.raises(ValueError, match="cap"):
        list(noncrossing_partitions(15))


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_semicircle_moments(t):
    assert semicircle_moment(0, t) == 1.0
    assert semicircle_moment(1, t) == 0.0
    assert semicircle_moment(2, t) == pytest.approx(t)
    assert semicircle_moment(4, t) == pytest.approx(2 * t**2)
    assert semicircle_moment(6, t) == pytest.approx(5 * t**3)
    assert semicircle_moment(7, t) == 0.0


def test_semicircle_agrees_with_cumulant_machinery():
    t = 1.7
    for k in range(0, 9):
        via_nc = moment_from_free_cumulants(k, lambda b: t if b == 2 else 0.0)
        assert via_nc == pytest.approx(semicircle_moment(k, t), rel=1e-12)


def narayana(n, k):
    return math.comb(n, k) * math.comb(n, k - 1) // n


@pytest.mark.parametrize("rate", [0.5, 1.0, 2.0])
def test_free_poisson_uncentered_matches_narayana_polynomials(rate):
    # With all free cumulants equal to the rate, the n-th moment is the
    # Narayana polynomial sum_k N(n,k) rate^k.
    for n in range(1, 8):
        want = sum(narayana(n, k) * rate**k for k in range(1, n + 1))
        got = free_poisson_moment(n, rate, centered=False)
        assert got == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("rate", [0.5, 1.0, 2.0])
def test_free_poisson_centered_low_moments(rate):
    assert free_poisson_moment(0, rate) == 1.0
    assert free_poisson_moment(1, rate) == 0.0
    assert free_poisson_moment(2, rate) == pytest.approx(rate)
    assert free_poisson_moment(3, rate) == pytest.approx(rate)
    assert free_poisson_moment(4, rate) == pytest.approx(2 * rate**2 + rate)
    m4, m3 = free_poisson_moment(4, rate), free_poisson_moment(3, rate)
    assert m4 - 2 * m3 == pytest.approx(2 * rate**2 - rate)