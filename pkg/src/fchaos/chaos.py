"""Finite chaos decompositions over a step-kernel grid.

A ChaosElement is x0 * 1 + sum_n I_n(f_n), with I_n either the multiple
Wigner integral (kind "wigner") or the multiple free Poisson integral
(kind "free_poisson").  The two kinds share the nested-contraction part of
the multiplication rule

    I_n(f) I_m(g) = sum_{p=0}^{n^m} I_{n+m-2p}(f c_p g)

and the free Poisson kind adds the star terms

    + sum_{p=1}^{n^m} I_{n+m-2p+1}(f *_p g).

The state phi reads off the scalar part; integrals of different orders are
orthogonal and phi(I_n(f) I_m(g)) = delta_{nm} <f, adjoint(g)>, which
phi_product exploits to pair two elements without forming their product.
That keeps the tensor order of any computation at the largest order
already present, the reason high moments are split as
phi(X^k) = phi_product(X^a, X^{k-a}) with a = k // 2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from types import MappingProxyType

from .contractions import nested_contract, star_contract
from .kernels import GridSpec, Kernel, adjoint, inner_product, is_mirror_symmetric, is_zero
from .kernels import kernel_from_json_dict, kernel_to_json_dict
from .kernels import shift_in_time as _shift_kernel

__all__ = [
    "KINDS",
    "ChaosElement",
    "integral",
    "unit",
    "combine",
    "multiply",
    "power",
    "adjoint_element",
    "phi",
    "phi_product",
    "moment",
    "centered",
    "is_self_adjoint",
    "shift_in_time",
    "elements_close",
    "element_to_json_dict",
    "element_from_json_dict",
    "save_element",
    "load_element",
]

KINDS = ("wigner", "free_poisson")

_PRUNE_TOL = 1e-12


@dataclass(frozen=True)
class ChaosElement:
    kind: str
    grid: GridSpec
    scalar: float
    parts: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        clean = {}
        for n, f in self.parts.items():
            if not isinstance(f, Kernel) or f.order != n or n < 1:
                raise ValueError(f"part at order {n} is not an order-{n} kernel")
            if f.grid != self.grid:
                raise ValueError(f"part at order {n} lives on {f.grid}, element on {self.grid}")
            if not is_zero(f, _PRUNE_TOL):
                clean[n] = f
        object.__setattr__(self, "scalar", float(self.scalar))
        object.__setattr__(self, "parts", MappingProxyType(dict(sorted(clean.items()))))

    @property
    def max_order(self) -> int:
        return max(self.parts, default=0)

    def __add__(self, other):
        return combine(1.0, self, 1.0, other)

    def __sub__(self, other):
        return combine(1.0, self, -1.0, other)

    def __mul__(self, c):
        c = float(c)
        return ChaosElement(
            self.kind, self.grid, c * self.scalar, {n: c * f for n, f in self.parts.items()}
        )

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def integral(kind: str, f: Kernel) -> ChaosElement:
    """The multiple integral I_n(f); an order-0 kernel is a pure scalar."""
    if f.order == 0:
        return ChaosElement(kind, f.grid, float(f.values))
    return ChaosElement(kind, f.grid, 0.0, {f.order: f})


def unit(kind: str, grid: GridSpec) -> ChaosElement:
    return ChaosElement(kind, grid, 1.0)


def _check_same_space(X: ChaosElement, Y: ChaosElement):
    if X.kind != Y.kind:
        raise ValueError(f"kind mismatch: {X.kind} vs {Y.kind}")
    if X.grid != Y.grid:
        raise ValueError(f"grid mismatch: {X.grid} vs {Y.grid}")


def combine(a: float, X: ChaosElement, b: float, Y: ChaosElement) -> ChaosElement:
    _check_same_space(X, Y)
    parts = {n: float(a) * f for n, f in X.parts.items()}
    for m, g in Y.parts.items():
        parts[m] = parts[m] + float(b) * g if m in parts else float(b) * g
    return ChaosElement(X.kind, X.grid, a * X.scalar + b * Y.scalar, parts)


def multiply(X: ChaosElement, Y: ChaosElement) -> ChaosElement:
    """Product of the algebra, expanded through the contraction formulas."""
    _check_same_space(X, Y)
    scalar = X.scalar * Y.scalar
    parts = {}

    def accumulate(kernel):
        if kernel.order in parts:
            parts[kernel.order] = parts[kernel.order] + kernel
        else:
            parts[kernel.order] = kernel

    for n, f in X.parts.items():
        if Y.scalar:
            accumulate(Y.scalar * f)
    for m, g in Y.parts.items():
        if X.scalar:
            accumulate(X.scalar * g)

    star = X.kind == "free_poisson"
    for n, f in X.parts.items():
        for m, g in Y.parts.items():
            for p in range(min(n, m) + 1):
                c = nested_contract(f, g, p)
                if c.order == 0:
                    scalar += float(c.values)
                else:
                    accumulate(c)
            if star:
                for p in range(1, min(n, m) + 1):
                    accumulate(star_contract(f, g, p))
    return ChaosElement(X.kind, X.grid, scalar, parts)


def power(X: ChaosElement, k: int) -> ChaosElement:
    """X^k by left-fold multiplication (X^0 is the unit)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    out = unit(X.kind, X.grid)
    for _ in range(k):
        out = multiply(out, X)
    return out


def adjoint_element(X: ChaosElement) -> ChaosElement:
    """I_n(f)* = I_n(adjoint f); real scalars are their own conjugates."""
    return ChaosElement(
        X.kind, X.grid, X.scalar, {n: adjoint(f) for n, f in X.parts.items()}
    )


def phi(X: ChaosElement) -> float:
    """The tracial state: integrals of order >= 1 are centered."""
    return X.scalar


def phi_product(X: ChaosElement, Y: ChaosElement) -> float:
    """phi(XY) without forming XY.

    Orthogonality kills cross-order terms and the isometry evaluates the
    diagonal ones: phi(I_n(f) I_n(g)) = <f, adjoint(g)>.
    """
    _check_same_space(X, Y)
    total = X.scalar * Y.scalar
    for n, f in X.parts.items():
        g = Y.parts.get(n)
        if g is not None:
            total += inner_product(f, adjoint(g))
    return total


def moment(X: ChaosElement, k: int) -> float:
    """phi(X^k), splitting the power so tensor order stays near k/2 * n."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return 1.0
    a = k // 2
    left = power(X, a)
    right = left if k == 2 * a else multiply(left, X)
    return phi_product(left, right)


def centered(X: ChaosElement) -> ChaosElement:
    return ChaosElement(X.kind, X.grid, 0.0, dict(X.parts))


def is_self_adjoint(X: ChaosElement, tol: float = 1e-12) -> bool:
    """Equivalent to every part being mirror-symmetric."""
    return all(is_mirror_symmetric(f, tol) for f in X.parts.values())


def shift_in_time(X: ChaosElement, cells: int) -> ChaosElement:
    """Translate every part by the same cell offset.

    Moments are translation-invariant, so the result has the law of X; with
    a support gap it is moreover free of X, which is how the package builds
    free copies.
    """
    return ChaosElement(
        X.kind, X.grid, X.scalar, {n: _shift_kernel(f, cells) for n, f in X.parts.items()}
    )


def elements_close(X: ChaosElement, Y: ChaosElement, tol: float = 1e-9) -> bool:
    _check_same_space(X, Y)
    diff = combine(1.0, X, -1.0, Y)
    if abs(diff.scalar) > tol:
        return False
    return all(is_zero(f, tol) for f in diff.parts.values())


def element_to_json_dict(X: ChaosElement) -> dict:
    return {
        "kind": X.kind,
        "scalar": X.scalar,
        "parts": [
            {"order": n, "kernel": kernel_to_json_dict(f)} for n, f in X.parts.items()
        ],
    }


def element_from_json_dict(d: dict, grid: GridSpec = None) -> ChaosElement:
    parts = {int(p["order"]): kernel_from_json_dict(p["kernel"]) for p in d["parts"]}
    if parts:
        grid = next(iter(parts.values())).grid
    elif grid is None:
        raise ValueError("grid is required to load a scalar-only element")
    return ChaosElement(d["kind"], grid, float(d["scalar"]), parts)


def save_element(X: ChaosElement, path):
    with open(path, "w") as fh:
        json.dump(element_to_json_dict(X), fh)


def load_element(path, grid: GridSpec = None) -> ChaosElement:
    with open(path) as fh:
        return element_from_json_dict(json.load(fh), grid)
