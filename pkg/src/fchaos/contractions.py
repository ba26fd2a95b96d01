"""Nested and star contractions of step kernels.

The two bilinear operations that drive every product formula and freeness
criterion in the package.  For an order-n kernel f and order-m kernel g:

* ``nested_contract(f, g, p)`` integrates out p variables, pairing f's last
  p arguments with g's first p arguments *in reverse*:

      (f c_p g)(t_1..t_{n+m-2p})
          = integral f(t_1..t_{n-p}, s_1..s_p) g(s_p..s_1, t_{n-p+1}..) ds

  p = 0 is the plain tensor product, p = n = m the scalar pairing.

* ``star_contract(f, g, p)`` integrates out only p-1 variables and leaves
  one variable shared (identified, not integrated) between the two factors:

      (f *_p g)(t_1..t_{n+m-2p+1})
          = integral over s in R^{p-1} of
            f(t_1..t_{n-p+1}, s_1..s_{p-1}) g(s_{p-1}..s_1, t_{n-p+1}..)

  with t_{n-p+1} the shared slot.  p = 1 integrates nothing: it is the
  pointwise identification (f *_1 g)(x, u, y) = f(x, u) g(u, y).

The argument reversal on the g side matters: both operations are defined
with f's integrated block meeting g's integrated block in opposite order.
Tests pin this orientation with kernels that vanish under the correct
pairing and not under the naive one.

For step kernels each integral is h times a cell sum, so both operations
are exact on this class.
"""

from __future__ import annotations

import string

import numpy as np

from ._guard import check_entries
from .kernels import Kernel, _check_pair, tensor

__all__ = ["nested_contract", "star_contract"]


def nested_contract(f: Kernel, g: Kernel, p: int) -> Kernel:
    """Contract f's trailing p arguments against g's leading p, reversed.

    Returns the order n+m-2p kernel; order 0 comes back as a scalar kernel
    whose value is the full pairing <f, adjoint-aligned g>.
    """
    _check_pair(f, g, same_order=False)
    n, m = f.order, g.order
    if not 0 <= p <= min(n, m):
        raise ValueError(f"contraction depth {p} not in [0, {min(n, m)}]")
    if p == 0:
        return tensor(f, g)
    N, h = f.grid.N, f.grid.h
    check_entries(N ** (n + m - 2 * p), "nested_contract")
    axes_f = list(range(n - p, n))
    axes_g = list(range(p - 1, -1, -1))
    out = np.tensordot(f.values, g.values, axes=(axes_f, axes_g)) * h**p
    return Kernel(f.grid, out)


def star_contract(f: Kernel, g: Kernel, p: int) -> Kernel:
    """Star contraction with one shared (non-integrated) variable.

    Output order is n+m-2p+1; the shared variable lands at slot n-p+1 of
    the result, between f's surviving block and g's.
    """
    _check_pair(f, g, same_order=False)
    n, m = f.order, g.order
    if not 1 <= p <= min(n, m):
        raise ValueError(f"star depth {p} not in [1, {min(n, m)}]")
    N, h = f.grid.N, f.grid.h
    out_order = n + m - 2 * p + 1
    check_entries(N**out_order, "star_contract")

    letters = string.ascii_letters
    if n + m - p + 1 > len(letters):
        raise ValueError(f"orders {n}, {m} too large for einsum subscripts")
    A = letters[: n - p]
    u = letters[n - p]
    S = letters[n - p + 1 : n]
    B = letters[n : n + m - p]
    f_sub = A + u + S
    g_sub = S[::-1] + u + B
    out_sub = A + u + B
    out = np.einsum(f"{f_sub},{g_sub}->{out_sub}", f.values, g.values)
    if p > 1:
        out = out * h ** (p - 1)
    return Kernel(f.grid, out)
