import math

import numpy as np
import pytest

from fchaos.contractions import nested_contract, star_contract
from fchaos.kernels import (
    GridSpec,
    Kernel,
    adjoint,
    indicator_box,
    inner_product,
    is_zero,
    l2_norm,
    random_kernel,
    refine,
    sample_midpoint,
)


def brute_nested(f, g, p):
    """Loop-based reference for the nested contraction."""
    n, m = f.order, g.order
    N, h = f.grid.N, f.grid.h
    out = np.zeros((N,) * (n + m - 2 * p))
    for t in np.ndindex(*out.shape):
        acc = 0.0
        for s in np.ndindex(*(N,) * p):
            acc += f.values[t[: n - p] + s] * g.values[s[::-1] + t[n - p :]]
        out[t] = acc * h**p
    return out


def brute_star(f, g, p):
    """Loop-based reference for the star contraction."""
    n, m = f.order, g.order
    N, h = f.grid.N, f.grid.h
    out = np.zeros((N,) * (n + m - 2 * p + 1))
    for t in np.ndindex(*out.shape):
        u = (t[n - p],)
        acc = 0.0
        for s in np.ndindex(*(N,) * (p - 1)):
            acc += f.values[t[: n - p] + u + s] * g.values[s[::-1] + u + t[n - p + 1 :]]
        out[t] = acc * h ** (p - 1)
    return out


@pytest.mark.parametrize("n,m,p", [(1, 1, 1), (2, 1, 1), (2, 2, 1), (2, 2, 2), (3, 2, 2), (3, 3, 3)])
def test_nested_matches_brute_force(n, m, p):
    rng = np.random.default_rng(100 + 10 * n + m + p)
    g = GridSpec(1.5, 3)
    f = random_kernel(g, n, rng)
    k = random_kernel(g, m, rng)
    got = nested_contract(f, k, p)
    assert got.order == n + m - 2 * p
    assert np.allclose(got.values, brute_nested(f, k, p), atol=1e-13)


@pytest.mark.parametrize("n,m,p", [(1, 1, 1), (2, 1, 1), (2, 2, 1), (2, 2, 2), (3, 2, 2), (3, 3, 3)])
def test_star_matches_brute_force(n, m, p):
    rng = np.random.default_rng(200 + 10 * n + m + p)
    g = GridSpec(1.5, 3)
    f = random_kernel(g, n, rng)
    k = random_kernel(g, m, rng)
    got = star_contract(f, k, p)
    assert got.order == n + m - 2 * p + 1
    assert np.allclose(got.values, brute_star(f, k, p), atol=1e-13)


def test_contraction_orientation_pin():
    # 1 on the single off-diagonal cell [0,1]x[1,2]: pairing the last index
    # of f against the first index of f *reversed* gives exactly 0, while
    # the naive unreversed pairing would give 1.
    g = GridSpec(2.0, 2)
    f = indicator_box(g, [[(0, 1), (1, 2)]])
    full = nested_contract(f, f, 2)
    assert full.order == 0
    assert float(full.values) == 0.0
    naive = float(np.sum(f.values * f.values) * g.h**2)
    assert naive == 1.0

    once = nested_contract(f, f, 1)
    assert is_zero(once)
    cross = nested_contract(adjoint(f), f, 1)
    assert np.array_equal(cross.values, indicator_box(g, [[(1, 2), (1, 2)]]).values)


def test_depth_zero_is_tensor_product():
    g = GridSpec(1.0, 2)
    rng = np.random.default_rng(0)
    f = random_kernel(g, 2, rng)
    k = random_kernel(g, 1, rng)
    assert np.array_equal(
        nested_contract(f, k, 0).values, np.multiply.outer(f.values, k.values)
    )


def test_full_contraction_is_adjoint_pairing():
    g = GridSpec(2.0, 3)
    rng = np.random.default_rng(4)
    f = random_kernel(g, 2, rng)
    k = random_kernel(g, 2, rng)
    assert float(nested_contract(f, k, 2).values) == pytest.approx(
        inner_product(f, adjoint(k)), rel=1e-12
    )
    e1 = indicator_box(GridSpec(2.0, 4), [[(0, 1)]])
    assert float(nested_contract(e1, e1, 1).values) == pytest.approx(
        inner_product(e1, e1), rel=1e-15
    )


def test_disjoint_block_triple_contraction_vanishes():
    g = GridSpec(2.0, 2)
    f = indicator_box(g, [[(0, 1), (0, 2), (0, 1)]])
    k = indicator_box(g, [[(1, 2), (0, 2), (1, 2)]])
    assert is_zero(nested_contract(f, k, 1))
    # the freeness witness is exact, not approximate
    assert np.all(nested_contract(f, k, 1).values == 0.0)


def test_diagonal_blocks_second_contraction_constant_one():
    k = 3
    g = GridSpec(1.0, k)
    f = indicator_box(
        g, [[(i / k, (i + 1) / k)] * 2 for i in range(k)], coefficient=math.sqrt(k)
    )
    res = nested_contract(f, f, 2)
    assert res.order == 0
    assert float(res.values) == pytest.approx(1.0, abs=1e-14)
    assert l2_norm(nested_contract(f, f, 1)) ** 2 == pytest.approx(1 / k, rel=1e-12)


def test_cauchy_schwarz_bound():
    rng = np.random.default_rng(17)
    g = GridSpec(1.0, 3)
    for _ in range(10):
        f = random_kernel(g, 2, rng)
        k = random_kernel(g, 3, rng)
        for p in (0, 1, 2):
            assert l2_norm(nested_contract(f, k, p)) <= l2_norm(f) * l2_norm(k) * (
                1 + 1e-12
            )


def test_adjoint_covariance():
    rng = np.random.default_rng(23)
    g = GridSpec(1.0, 2)
    f = random_kernel(g, 3, rng)
    k = random_kernel(g, 2, rng)
    for p in (0, 1, 2):
        lhs = adjoint(nested_contract(f, k, p))
        rhs = nested_contract(adjoint(k), adjoint(f), p)
        assert np.allclose(lhs.values, rhs.values, atol=1e-13)


def test_fubini_norm_identity_for_symmetric_inputs():
    rng = np.random.default_rng(31)
    g = GridSpec(1.0, 3)
    for n, m in [(2, 2), (3, 2), (3, 3)]:
        f = random_kernel(g, n, rng, symmetric=True)
        k = random_kernel(g, m, rng, symmetric=True)
        for p in range(1, min(n, m) + 1):
            lhs = l2_norm(nested_contract(f, k, p)) ** 2
            rhs = inner_product(
                nested_contract(f, f, n - p), nested_contract(k, k, m - p)
            )
            assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


def test_star_depth_one_is_pointwise_product():
    g = GridSpec(1.0, 1)
    e = indicator_box(g, [[(0, 1)]])
    assert np.array_equal(star_contract(e, e, 1).values, e.values)

    g4 = GridSpec(1.0, 4)
    a = sample_midpoint(g4, lambda x: x)
    b = sample_midpoint(g4, lambda x: x * x - 0.75 * x)
    prod = star_contract(a, b, 1)
    assert np.allclose(prod.values, a.values * b.values)
    assert not is_zero(prod)

    lo = indicator_box(GridSpec(2.0, 2), [[(0, 1)]])
    hi = indicator_box(GridSpec(2.0, 2), [[(1, 2)]])
    assert np.all(star_contract(lo, hi, 1).values == 0.0)


def test_star_shared_slot_position():
    g = GridSpec(1.0, 2)
    rng = np.random.default_rng(8)
    f = random_kernel(g, 2, rng)
    k = random_kernel(g, 2, rng)
    out = star_contract(f, k, 1)
    assert out.order == 3
    for i, u, j in np.ndindex(2, 2, 2):
        assert out.values[i, u, j] == pytest.approx(f.values[i, u] * k.values[u, j])


def test_star_integrates_to_nested():
    # integrating the shared variable out of f *_p g recovers f c_p g
    rng = np.random.default_rng(12)
    g = GridSpec(1.5, 3)
    f = random_kernel(g, 3, rng)
    k = random_kernel(g, 2, rng)
    for p in (1, 2):
        st = star_contract(f, k, p)
        ne = nested_contract(f, k, p)
        collapsed = np.sum(st.values, axis=f.order - p) * g.h
        assert np.allclose(collapsed, ne.values, atol=1e-13)


def test_contraction_depth_validation():
    g = GridSpec(1.0, 2)
    rng = np.random.default_rng(1)
    f = random_kernel(g, 2, rng)
    k = random_kernel(g, 1, rng)
    with pytest.raises(ValueError):
        nested_contract(f, k, 2)
    with pytest.raises(ValueError):
        star_contract(f, k, 0)
    with pytest.raises(ValueError):
        star_contract(f, k, 2)
    other = random_kernel(GridSpec(1.0, 3), 1, rng)
    with pytest.raises(ValueError):
        nested_contract(f, other, 1)


def test_contractions_commute_with_refinement():
    rng = np.random.default_rng(77)
    g = GridSpec(2.0, 2)
    f = random_kernel(g, 2, rng)
    k = random_kernel(g, 2, rng)
    for p in (1, 2):
        coarse = nested_contract(f, k, p)
        fine = nested_contract(refine(f), refine(k), p)
        assert np.allclose(fine.values, refine(coarse).values, rtol=1e-12, atol=1e-15)
    for p in (1, 2):
        coarse = star_contract(f, k, p)
        fine = star_contract(refine(f), refine(k), p)
        assert np.allclose(fine.values, refine(coarse).values, rtol=1e-12, atol=1e-15)