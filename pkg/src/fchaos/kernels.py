"""Step kernels on a uniform grid over [0, T]^n.

An order-n kernel is a real function on [0, T]^n that is constant on every
cell of the uniform N^n grid, stored as a dense float64 tensor of cell
values.  This subspace of L^2([0,T]^n) is closed under every operation in
the package (inner products, contractions, products, gradients), so all
results are exact up to float rounding rather than quadrature-approximate.
Refining the grid N -> 2N must reproduce every scalar output to 1e-12
relative, which the test suite checks.

Conventions
-----------
* values are row-major with the first index slowest (numpy C order).
* order-0 kernels are scalars (shape () arrays).
* scalars are real throughout; the adjoint is a pure index reversal.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._guard import check_entries, note_entries

__all__ = [
    "GridSpec",
    "Kernel",
    "indicator_box",
    "constant_kernel",
    "sample_midpoint",
    "inner_product",
    "lp_norm",
    "l2_norm",
    "adjoint",
    "permute",
    "symmetrize",
    "is_symmetric",
    "is_mirror_symmetric",
    "is_zero",
    "tensor",
    "refine",
    "embed",
    "shift_in_time",
    "random_kernel",
    "kernel_to_json_dict",
    "kernel_from_json_dict",
    "save_kernel",
    "load_kernel",
    "SYMMETRIZE_ORDER_CAP",
]

SYMMETRIZE_ORDER_CAP = 8

_SPARSE_FILL = 0.05


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on [0, T] with N cells of width h = T/N."""

    T: float
    N: int

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"horizon T must be positive and finite, got {self.T}")
        if not (isinstance(self.N, int) and self.N >= 1):
            raise ValueError(f"cell count N must be a positive integer, got {self.N}")

    @property
    def h(self) -> float:
        return self.T / self.N

    def index_of(self, t: float) -> int:
        """Grid-line index of time coordinate ``t``, which must sit on a line.

        Snaps within 1e-9 relative tolerance and rejects anything farther
        off, naming the offending coordinate.
        """
        x = t / self.h
        k = round(x)
        if abs(x - k) > 1e-9 * max(1.0, abs(x)):
            raise ValueError(
                f"coordinate {t} is not on a grid line (h={self.h}, nearest line {k * self.h})"
            )
        if not 0 <= k <= self.N:
            raise ValueError(f"coordinate {t} lies outside [0, {self.T}]")
        return int(k)

    def refined(self) -> "GridSpec":
        return GridSpec(self.T, 2 * self.N)


@dataclass(frozen=True)
class Kernel:
    """Order-n step kernel: a dense tensor of cell values on ``grid``."""

    grid: GridSpec
    values: np.ndarray
    storage: str = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.N,) * v.ndim:
            raise ValueError(
                f"values shape {v.shape} does not match N={self.grid.N} at order {v.ndim}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("kernel values must be finite")
        v.setflags(write=False)
        note_entries(v.size)
        nnz = int(np.count_nonzero(v))
        object.__setattr__(self, "values", v)
        object.__setattr__(
            self, "storage", "sparse" if nnz <= _SPARSE_FILL * v.size else "dense"
        )

    @property
    def order(self) -> int:
        return self.values.ndim

    def __add__(self, other):
        _check_pair(self, other)
        return Kernel(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_pair(self, other)
        return Kernel(self.grid, self.values - other.values)

    def __mul__(self, c):
        return Kernel(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return Kernel(self.grid, -self.values)


def _check_pair(f: Kernel, g: Kernel, same_order=True):
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: {f.grid} vs {g.grid}")
    if same_order and f.order != g.order:
        raise ValueError(f"order mismatch: {f.order} vs {g.order}")


def indicator_box(grid, boxes, coefficient=1.0, order=None):
    """Kernel equal to ``coefficient`` on a union of axis-aligned boxes.

    Parameters
    ----------
    grid : GridSpec
    boxes : sequence of boxes, each a sequence of n (a, b) time intervals
        with endpoints on grid lines.
    coefficient : real value taken on the union (overlaps are not summed).
    order : required when ``boxes`` is empty, ignored otherwise.

    Returns
    -------
    Kernel of the common order of the boxes.
    """
    boxes = list(boxes)
    if not boxes:
        if order is None:
            raise ValueError("order is required for an empty box list")
        return constant_kernel(grid, order, 0.0)

    n = len(boxes[0])
    check_entries(grid.N**n, "indicator_box")
    values = np.zeros((grid.N,) * n)
    for box in boxes:
        if len(box) != n:
            raise ValueError(f"box {box} has {len(box)} intervals, expected {n}")
        slices = []
        for a, b in box:
            ia, ib = grid.index_of(a), grid.index_of(b)
            if ib < ia:
                raise ValueError(f"interval ({a}, {b}) is reversed")
            slices.append(slice(ia, ib))
        values[tuple(slices)] = coefficient
    return Kernel(grid, values)


def constant_kernel(grid, order, value):
    check_entries(grid.N**order, "constant_kernel")
    return Kernel(grid, np.full((grid.N,) * order, float(value)))


def sample_midpoint(grid, func):
    """Order-1 kernel with cell values func(midpoint).

    Midpoint sampling of a smooth function carries an O(h^2) quadrature
    error; callers comparing against continuous integrals must budget for
    that (the step-kernel calculus itself stays exact).
    """
    mids = (np.arange(grid.N) + 0.5) * grid.h
    return Kernel(grid, np.array([float(func(t)) for t in mids]))


def inner_product(f: Kernel, g: Kernel) -> float:
    """<f, g> = h^n * sum of elementwise products.

    np.sum uses pairwise summation, which keeps the reassociation error
    within the documented 1e-9 envelope even for large tensors.
    """
    _check_pair(f, g)
    return float(np.sum(f.values * g.values) * f.grid.h**f.order)


def lp_norm(f: Kernel, p) -> float:
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float((np.sum(np.abs(f.values) ** p) * f.grid.h**f.order) ** (1.0 / p))


def l2_norm(f: Kernel) -> float:
    return lp_norm(f, 2)


def adjoint(f: Kernel) -> Kernel:
    """Index reversal f*(t1..tn) = f(tn..t1); scalars are real, no conjugation."""
    if f.order <= 1:
        return f
    return Kernel(f.grid, np.transpose(f.values, axes=range(f.order - 1, -1, -1)))


def permute(f: Kernel, sigma) -> Kernel:
    """Kernel g(x1..xn) = f(x_{sigma(1)}, ..., x_{sigma(n)}).

    ``sigma`` is 1-based. Composing two permutes applies the maps
    left-to-right: permute(permute(f, sigma), tau) == permute(f, rho) with
    rho(k) = tau(sigma(k)).
    """
    s0 = [s - 1 for s in sigma]
    if sorted(s0) != list(range(f.order)):
        raise ValueError(f"{tuple(sigma)} is not a permutation of 1..{f.order}")
    if f.order <= 1:
        return f
    return Kernel(f.grid, np.transpose(f.values, axes=np.argsort(s0)))


def symmetrize(f: Kernel) -> Kernel:
    """Average of f over all argument permutations (order capped at 8)."""
    n = f.order
    if n > SYMMETRIZE_ORDER_CAP:
        raise ValueError(
            f"symmetrize at order {n} needs {math.factorial(n)} transposes; cap is {SYMMETRIZE_ORDER_CAP}"
        )
    if n <= 1:
        return f
    acc = np.zeros_like(f.values)
    for axes in itertools.permutations(range(n)):
        acc += np.transpose(f.values, axes)
    return Kernel(f.grid, acc / math.factorial(n))


def is_symmetric(f: Kernel, tol=1e-12) -> bool:
    """True when f is invariant under every argument permutation.

    Adjacent transpositions generate the symmetric group, so checking the
    n-1 swaps (k, k+1) suffices and avoids the factorial sweep.
    """
    scale = max(1.0, float(np.max(np.abs(f.values)))) if f.values.size else 1.0
    for k in range(f.order - 1):
        axes = list(range(f.order))
        axes[k], axes[k + 1] = axes[k + 1], axes[k]
        if np.max(np.abs(f.values - np.transpose(f.values, axes))) > tol * scale:
            return False
    return True


def is_mirror_symmetric(f: Kernel, tol=1e-12) -> bool:
    """True iff ||f - f*||_2 <= tol * max(1, ||f||_2)."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return l2_norm(f - adjoint(f)) <= tol * max(1.0, l2_norm(f))


def is_zero(f: Kernel, tol=1e-12) -> bool:
    m = float(np.max(np.abs(f.values))) if f.values.size else 0.0
    return m <= tol * max(1.0, m)


def tensor(f: Kernel, g: Kernel) -> Kernel:
    """Tensor product, order n+m."""
    _check_pair(f, g, same_order=False)
    check_entries(f.grid.N ** (f.order + g.order), "tensor")
    return Kernel(f.grid, np.multiply.outer(f.values, g.values))


def refine(f: Kernel) -> Kernel:
    """Same function represented on the grid with 2N cells."""
    check_entries((2 * f.grid.N) ** f.order, "refine")
    v = f.values
    for ax in range(f.order):
        v = np.repeat(v, 2, axis=ax)
    return Kernel(f.grid.refined(), v)


def embed(f: Kernel, grid: GridSpec) -> Kernel:
    """Represent f on a larger horizon with the same cell width h.

    The new grid must satisfy h' = h and N' >= N; values are placed in the
    leading block, zero elsewhere.
    """
    if grid.N < f.grid.N or abs(grid.h - f.grid.h) > 1e-12 * f.grid.h:
        raise ValueError(
            f"target grid must keep h={f.grid.h} and extend N>={f.grid.N}, got {grid}"
        )
    if grid.N == f.grid.N:
        return Kernel(grid, f.values)
    check_entries(grid.N**f.order, "embed")
    out = np.zeros((grid.N,) * f.order)
    out[(slice(0, f.grid.N),) * f.order] = f.values
    return Kernel(grid, out)


def shift_in_time(f: Kernel, cells: int) -> Kernel:
    """Translate f by an integer number of cells in every argument.

    Support must stay inside [0, T]; otherwise the error reports the
    minimal horizon that would hold the shifted kernel.  Order-0 kernels
    are unchanged.
    """
    if f.order == 0:
        return f
    k = int(cells)
    if k != cells:
        raise ValueError(f"cell offset must be an integer, got {cells}")
    if k == 0:
        return f
    nz = np.nonzero(f.values)
    if len(nz[0]) == 0:
        return f
    lo = min(int(idx.min()) for idx in nz)
    hi = max(int(idx.max()) for idx in nz)
    N = f.grid.N
    if k > 0 and hi + k >= N:
        raise ValueError(
            f"shift by {k} cells pushes support past T={f.grid.T}; "
            f"needs horizon >= {(hi + 1 + k) * f.grid.h}"
        )
    if k < 0 and lo + k < 0:
        raise ValueError(f"shift by {k} cells pushes support below 0")
    out = np.zeros_like(f.values)
    src = tuple(slice(max(0, -k), min(N, N - k)) for _ in range(f.order))
    dst = tuple(slice(max(0, k), min(N, N + k)) for _ in range(f.order))
    out[dst] = f.values[src]
    return Kernel(f.grid, out)


def random_kernel(grid, order, rng, symmetric=False, mirror_symmetric=False):
    """Standard-normal cell values, optionally (mirror-)symmetrized."""
    check_entries(grid.N**order, "random_kernel")
    f = Kernel(grid, rng.standard_normal((grid.N,) * order))
    if symmetric:
        f = symmetrize(f)
    elif mirror_symmetric:
        f = Kernel(grid, 0.5 * (f.values + adjoint(f).values))
    return f


def kernel_to_json_dict(f: Kernel) -> dict:
    """JSON form: {"T", "N", "order", "storage", "values"}.

    Dense values are a flat row-major list; sparse values are
    [[index-tuple, value], ...] pairs for the nonzero cells in row-major
    order.  Python float repr is shortest-round-trip, so the decimal form
    reproduces every bit on reload.
    """
    d = {"T": f.grid.T, "N": f.grid.N, "order": f.order, "storage": f.storage}
    if f.storage == "dense":
        d["values"] = f.values.ravel().tolist()
    else:
        idx = np.argwhere(f.values)
        d["values"] = [[list(map(int, i)), float(f.values[tuple(i)])] for i in idx]
    return d


def kernel_from_json_dict(d: dict) -> Kernel:
    grid = GridSpec(float(d["T"]), int(d["N"]))
    order = int(d["order"])
    check_entries(grid.N**order, "kernel_from_json_dict")
    if d["storage"] == "dense":
        values = np.array(d["values"], dtype=float).reshape((grid.N,) * order)
    elif d["storage"] == "sparse":
        values = np.zeros((grid.N,) * order)
        for idx, v in d["values"]:
            values[tuple(idx)] = v
    else:
        raise ValueError(f"unknown storage tag {d['storage']!r}")
    return Kernel(grid, values)


def save_kernel(f: Kernel, path):
    with open(path, "w") as fh:
        json.dump(kernel_to_json_dict(f), fh)


def load_kernel(path) -> Kernel:
    with open(path) as fh:
        return kernel_from_json_dict(json.load(fh))
