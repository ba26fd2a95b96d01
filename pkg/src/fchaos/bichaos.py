"""Wigner bi-integrals, the sharp product, and the free gradient pairing.

Elements here live in the algebra spanned by bi-integrals [I_n (x) I_m](f)
of split kernels f on N^(n+m) cells, multiplied with the sharp product

    (A (x) B) # (C (x) D) = (AC) (x) (DB),

whose expansion over bi-integrals is a double contraction sum:

    [I_{n1} (x) I_{m1}](f) # [I_{n2} (x) I_{m2}](g)
        = sum_{p=0}^{n1^n2} sum_{r=0}^{m1^m2} [I (x) I](f c_{p,r} g).

The (p, r)-bicontraction pairs f's trailing left-leg block against g's
leading left-leg block reversed (like the nested contraction) and f's
leading right-leg block against g's trailing right-leg block reversed
(the right legs multiply in opposite order under #).

The free gradient of a Wigner integral acts cell by cell,

    grad_s I_n(f) = sum_{k=1}^n [I_{k-1} (x) I_{n-k}](f with slot k fixed at s),

and the only quantity the freeness test needs is the pairing
<grad F, grad G> = integral of grad_s F # (grad_s G)* ds, available two
ways: assembled per cell from slices, or in closed form for fully
symmetric kernels as

    sum_{k=1}^n sum_{q=1}^m sum_{p=0}^{(k^q)-1} sum_{r=0}^{(n-k)^(m-q)}
        [I_{k+q-2-2p} (x) I_{n+m-k-q-2r}](f c_{p+r+1} g),

the same order-(n+m-2p-2r-2) value tensor re-declared at each split.  The
test suite holds the two paths equal.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from ._guard import check_entries
from .contractions import nested_contract
from .kernels import GridSpec, Kernel, is_symmetric, is_zero

__all__ = [
    "BiKernel",
    "BiChaosElement",
    "bi_integral",
    "bi_unit",
    "bi_tensor",
    "bicontract",
    "bi_adjoint_kernel",
    "bi_combine",
    "sharp_multiply",
    "bi_adjoint",
    "phi2",
    "phi2_norm_sq",
    "kernel_slice",
    "gradient_slice",
    "gradient_pairing",
    "gradient_pairing_assembled",
    "bikernel_to_json_dict",
    "bikernel_from_json_dict",
]


@dataclass(frozen=True)
class BiKernel:
    """Split kernel: left_order + right_order axes of cell values.

    The split point is part of the identity; two BiKernels are comparable
    only when both orders match.
    """

    grid: GridSpec
    left_order: int
    right_order: int
    values: np.ndarray

    def __post_init__(self):
        if self.left_order < 0 or self.right_order < 0:
            raise ValueError("orders must be non-negative")
        v = np.asarray(self.values, dtype=float)
        total = self.left_order + self.right_order
        if v.shape != (self.grid.N,) * total:
            raise ValueError(
                f"values shape {v.shape} does not match split "
                f"({self.left_order}|{self.right_order}) at N={self.grid.N}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("bikernel values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def split(self):
        return (self.left_order, self.right_order)


def bi_tensor(f: Kernel, g: Kernel) -> BiKernel:
    """BiKernel f (x) g with split (order f | order g)."""
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    check_entries(f.grid.N ** (f.order + g.order), "bi_tensor")
    return BiKernel(f.grid, f.order, g.order, np.multiply.outer(f.values, g.values))


def _as_bikernel(k: Kernel, left: int, right: int) -> BiKernel:
    if k.order != left + right:
        raise ValueError(f"kernel order {k.order} cannot split as ({left}|{right})")
    return BiKernel(k.grid, left, right, k.values)


def bicontract(f: BiKernel, g: BiKernel, p: int, r: int) -> BiKernel:
    """The (p, r)-bicontraction; output split (n1+n2-2p | m1+m2-2r).

    Output variable layout: [f left rest, g left rest, g right rest,
    f right rest] -- on simple tensors this is (a c_p c) (x) (d c_r b),
    matching the sharp product's reversed right leg.
    """
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    n1, m1 = f.split
    n2, m2 = g.split
    if not 0 <= p <= min(n1, n2):
        raise ValueError(f"left depth {p} not in [0, {min(n1, n2)}]")
    if not 0 <= r <= min(m1, m2):
        raise ValueError(f"right depth {r} not in [0, {min(m1, m2)}]")
    N, h = f.grid.N, f.grid.h
    out_left, out_right = n1 + n2 - 2 * p, m1 + m2 - 2 * r
    check_entries(N ** (out_left + out_right), "bicontract")

    letters = string.ascii_letters
    need = n1 + m1 + n2 + m2 - p - r
    if need > len(letters):
        raise ValueError("orders too large for einsum subscripts")
    pos = iter(letters)
    FL = "".join(next(pos) for _ in range(n1 - p))
    S = "".join(next(pos) for _ in range(p))
    Y = "".join(next(pos) for _ in range(r))
    FR = "".join(next(pos) for _ in range(m1 - r))
    GL = "".join(next(pos) for _ in range(n2 - p))
    GR = "".join(next(pos) for _ in range(m2 - r))
    f_sub = FL + S + Y + FR
    g_sub = S[::-1] + GL + GR + Y[::-1]
    out_sub = FL + GL + GR + FR
    out = np.einsum(f"{f_sub},{g_sub}->{out_sub}", f.values, g.values)
    if p + r:
        out = out * h ** (p + r)
    return BiKernel(f.grid, out_left, out_right, out)


def bi_adjoint_kernel(f: BiKernel) -> BiKernel:
    """Legwise index reversal: adjoint on each tensor leg, no leg swap."""
    n, m = f.split
    axes = list(range(n - 1, -1, -1)) + list(range(n + m - 1, n - 1, -1))
    return BiKernel(f.grid, n, m, np.transpose(f.values, axes))


@dataclass(frozen=True)
class BiChaosElement:
    """scalar * (1 (x) 1) + sum over splits (n,m) of [I_n (x) I_m](part)."""

    grid: GridSpec
    scalar: float
    parts: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (n, m), f in self.parts.items():
            if f.split != (n, m) or (n, m) == (0, 0):
                raise ValueError(f"part at {(n, m)} has split {f.split}")
            if f.grid != self.grid:
                raise ValueError("part grid mismatch")
            if float(np.max(np.abs(f.values))) > 1e-12:
                clean[(n, m)] = f
        object.__setattr__(self, "scalar", float(self.scalar))
        object.__setattr__(self, "parts", MappingProxyType(dict(sorted(clean.items()))))


def bi_integral(f: BiKernel) -> BiChaosElement:
    if f.split == (0, 0):
        return BiChaosElement(f.grid, float(f.values))
    return BiChaosElement(f.grid, 0.0, {f.split: f})


def bi_unit(grid: GridSpec) -> BiChaosElement:
    return BiChaosElement(grid, 1.0)


def bi_combine(a: float, A: BiChaosElement, b: float, B: BiChaosElement) -> BiChaosElement:
    if A.grid != B.grid:
        raise ValueError("grid mismatch")
    parts = {
        nm: BiKernel(A.grid, nm[0], nm[1], float(a) * f.values)
        for nm, f in A.parts.items()
    }
    for nm, g in B.parts.items():
        if nm in parts:
            parts[nm] = BiKernel(A.grid, nm[0], nm[1], parts[nm].values + float(b) * g.values)
        else:
            parts[nm] = BiKernel(A.grid, nm[0], nm[1], float(b) * g.values)
    return BiChaosElement(A.grid, a * A.scalar + b * B.scalar, parts)


def sharp_multiply(A: BiChaosElement, B: BiChaosElement) -> BiChaosElement:
    """The # product, expanded through the double contraction sum."""
    if A.grid != B.grid:
        raise ValueError("grid mismatch")
    scalar = A.scalar * B.scalar
    parts = {}

    def accumulate(k: BiKernel, weight=1.0):
        nonlocal scalar
        if k.split == (0, 0):
            scalar += weight * float(k.values)
            return
        if k.split in parts:
            parts[k.split] = BiKernel(
                A.grid, k.left_order, k.right_order, parts[k.split].values + weight * k.values
            )
        else:
            parts[k.split] = k if weight == 1.0 else BiKernel(
                A.grid, k.left_order, k.right_order, weight * k.values
            )

    for nm, f in A.parts.items():
        if B.scalar:
            accumulate(f, B.scalar)
    for nm, g in B.parts.items():
        if A.scalar:
            accumulate(g, A.scalar)
    for (n1, m1), f in A.parts.items():
        for (n2, m2), g in B.parts.items():
            for p in range(min(n1, n2) + 1):
                for r in range(min(m1, m2) + 1):
                    accumulate(bicontract(f, g, p, r))
    return BiChaosElement(A.grid, scalar, parts)


def bi_adjoint(A: BiChaosElement) -> BiChaosElement:
    """Involution of the # algebra: legwise kernel adjoints, real scalar."""
    return BiChaosElement(
        A.grid, A.scalar, {nm: bi_adjoint_kernel(f) for nm, f in A.parts.items()}
    )


def phi2(A: BiChaosElement) -> float:
    """phi (x) phi: bi-integrals of split other than (0,0) are centered."""
    return A.scalar


def phi2_norm_sq(A: BiChaosElement) -> float:
    """(phi (x) phi)(A # A*) via the bisometry.

    Parts at different splits are orthogonal and each contributes its
    squared L2 norm, so the result is scalar^2 plus a plain weighted
    sum of squares.
    """
    total = A.scalar**2
    for (n, m), f in A.parts.items():
        total += float(np.sum(f.values * f.values)) * A.grid.h ** (n + m)
    return total


def kernel_slice(f: Kernel, k: int, s: int) -> Kernel:
    """Fix f's k-th argument (1-based) at cell s; order drops by one."""
    if not 1 <= k <= f.order:
        raise ValueError(f"slot {k} not in 1..{f.order}")
    return Kernel(f.grid, np.take(f.values, s, axis=k - 1))


def gradient_slice(f: Kernel, s: int) -> BiChaosElement:
    """grad_s I_n(f): slice each slot and split the remaining axes there."""
    scalar = 0.0
    parts = {}
    for k in range(1, f.order + 1):
        sliced = kernel_slice(f, k, s)
        split = (k - 1, f.order - k)
        if split == (0, 0):
            scalar += float(sliced.values)
        else:
            parts[split] = BiKernel(f.grid, split[0], split[1], sliced.values)
    return BiChaosElement(f.grid, scalar, parts)


def gradient_pairing_assembled(f: Kernel, g: Kernel) -> BiChaosElement:
    """<grad I_n(f), grad I_m(g)> assembled cell by cell.

    Sums h * grad_s F # (grad_s G)* over the grid; the reference path for
    the two-path invariant, independent of any symmetry assumption on how
    the closed form regroups terms.
    """
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    out = BiChaosElement(f.grid, 0.0)
    for s in range(f.grid.N):
        term = sharp_multiply(gradient_slice(f, s), bi_adjoint(gradient_slice(g, s)))
        out = bi_combine(1.0, out, f.grid.h, term)
    return out


def gradient_pairing(f: Kernel, g: Kernel) -> BiChaosElement:
    """Closed form of <grad I_n(f), grad I_m(g)> for fully symmetric f, g.

    Each (k, q, p, r) term is the order n+m-2(p+r+1) tensor f c_{p+r+1} g
    declared as a BiKernel with split (k+q-2-2p | n+m-k-q-2r).  The term's
    left leg holds k-1-p surviving f-variables then q-1-p g-variables, its
    right leg m-q-r g-variables then n-k-r f-variables, so the contraction
    tensor (f-block then g-block) is transposed blockwise before the split
    is stamped on.  Full symmetry keeps the order inside each block
    immaterial, which is why the slices can all be taken at slot k = n and
    q = 1 in the first place.
    """
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    for name, k in (("f", f), ("g", g)):
        if not is_symmetric(k):
            raise ValueError(
                f"gradient pairing requires fully symmetric kernels; {name} is not"
            )
    n, m = f.order, g.order
    cache = {}
    parts = {}
    scalar = 0.0
    for k in range(1, n + 1):
        for q in range(1, m + 1):
            for p in range(min(k, q)):
                for r in range(min(n - k, m - q) + 1):
                    u = p + r + 1
                    if u not in cache:
                        cache[u] = nested_contract(f, g, u)
                    w = cache[u]
                    left = k + q - 2 - 2 * p
                    right = n + m - k - q - 2 * r
                    if left == 0 and right == 0:
                        scalar += float(w.values)
                        continue
                    nf, ng = n - u, m - u
                    a = k - 1 - p  # f-variables on the left leg
                    b = q - 1 - p  # g-variables on the left leg
                    axes = (
                        list(range(a))
                        + list(range(nf, nf + b))
                        + list(range(nf + b, nf + ng))
                        + list(range(a, nf))
                    )
                    values = np.transpose(w.values, axes)
                    key = (left, right)
                    if key in parts:
                        values = parts[key].values + values
                    parts[key] = BiKernel(f.grid, left, right, values)
    return BiChaosElement(f.grid, scalar, parts)


def bikernel_to_json_dict(f: BiKernel) -> dict:
    v = f.values
    nnz = int(np.count_nonzero(v))
    storage = "sparse" if nnz <= 0.05 * v.size else "dense"
    d = {
        "T": f.grid.T,
        "N": f.grid.N,
        "order": f.left_order + f.right_order,
        "left_order": f.left_order,
        "right_order": f.right_order,
        "storage": storage,
    }
    if storage == "dense":
        d["values"] = v.ravel().tolist()
    else:
        idx = np.argwhere(v)
        d["values"] = [[list(map(int, i)), float(v[tuple(i)])] for i in idx]
    return d


def bikernel_from_json_dict(d: dict) -> BiKernel:
    grid = GridSpec(float(d["T"]), int(d["N"]))
    left, right = int(d["left_order"]), int(d["right_order"])
    if int(d["order"]) != left + right:
        raise ValueError("order does not match left_order + right_order")
    total = left + right
    check_entries(grid.N**total, "bikernel_from_json_dict")
    if d["storage"] == "dense":
        values = np.array(d["values"], dtype=float).reshape((grid.N,) * total)
    else:
        values = np.zeros((grid.N,) * total)
        for idx, v in d["values"]:
            values[tuple(idx)] = v
    return BiKernel(grid, left, right, values)
