"""Closed-form moment oracles from noncrossing-partition combinatorics.

Independent of the tensor engine: everything here is integer/rational
combinatorics plus powers of scalar parameters, used by the tests and the
experiments to cross-check moments the engine computes through kernel
calculus.
"""

from __future__ import annotations

import math

__all__ = [
    "catalan",
    "semicircle_moment",
    "noncrossing_partitions",
    "count_noncrossing",
    "moment_from_free_cumulants",
    "free_poisson_moment",
    "NC_ORDER_CAP",
]

NC_ORDER_CAP = 14


def catalan(k: int) -> int:
    """k-th Catalan number C_k = binom(2k, k)/(k+1)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return math.comb(2 * k, k) // (k + 1)


def semicircle_moment(k: int, variance: float = 1.0) -> float:
    """Moment of the centered semicircle law: C_{k/2} t^{k/2}, odd ones 0."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k % 2:
        return 0.0
    return catalan(k // 2) * variance ** (k // 2)


def noncrossing_partitions(n: int):
    """Yield every noncrossing partition of {0..n-1} as a tuple of blocks.

    Recursion on the block of the smallest element: a partition is
    noncrossing exactly when every other block sits entirely inside one
    gap between consecutive members of that block, with each gap again
    partitioned noncrossingly.  The enumeration touches Catalan(n)
    objects, so the cap keeps it to a few million at most.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > NC_ORDER_CAP:
        raise ValueError(
            f"refusing to enumerate NC({n}) = {catalan(n)} partitions; cap is {NC_ORDER_CAP}"
        )
    yield from _nc(tuple(range(n)))


def _nc(elems):
    if not elems:
        yield ()
        return
    first, rest = elems[0], elems[1:]
    k = len(rest)
    # choose which of the remaining elements join first's block
    for mask in range(1 << k):
        block = (first,) + tuple(rest[i] for i in range(k) if mask >> i & 1)
        gaps = []
        prev = 0
        for i in range(k):
            if mask >> i & 1:
                gaps.append(rest[prev:i])
                prev = i + 1
        gaps.append(rest[prev:])
        for gap_parts in _product_of_gaps(gaps):
            yield (block,) + gap_parts


def _product_of_gaps(gaps):
    if not gaps:
        yield ()
        return
    head, tail = gaps[0], gaps[1:]
    for head_parts in _nc(head):
        for tail_parts in _product_of_gaps(tail):
            yield head_parts + tail_parts


def count_noncrossing(n: int) -> int:
    return sum(1 for _ in noncrossing_partitions(n))


def moment_from_free_cumulants(n: int, kappa) -> float:
    """n-th moment from free cumulants: sum over NC(n) of prod kappa(|B|)."""
    if n == 0:
        return 1.0
    total = 0.0
    for part in noncrossing_partitions(n):
        term = 1.0
        for block in part:
            term *= kappa(len(block))
            if term == 0.0:
                break
        total += term
    return total


def free_poisson_moment(n: int, rate: float, centered: bool = True) -> float:
    """Moment of the free Poisson law with rate lambda.

    All free cumulants equal the rate; centering zeroes the first one.
    """
    if rate < 0:
        raise ValueError("rate must be non-negative")

    def kappa(b):
        if centered and b == 1:
            return 0.0
        return rate

    return moment_from_free_cumulants(n, kappa)
