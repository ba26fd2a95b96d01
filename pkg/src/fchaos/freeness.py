"""Freeness tests for multiple integrals with step kernels.

For fully symmetric kernels the question "are I_n(f) and I_m(g) free?"
has exact answers: it is equivalent to the vanishing of the first
nested contraction (first star contraction on the free Poisson side),
to the vanishing of the covariance of the squares, and on the Wigner
side to the vanishing of the gradient pairing.  Each route gets its own
test function returning a :class:`FreenessVerdict`.

Mirror-symmetric kernels only admit a sufficient condition, obtained by
sweeping the contraction over all axis relabelings of both kernels; a
clean sweep guarantees freeness while a dirty one decides nothing.  The
alternating-moment battery works straight from the definition: it
evaluates centered alternating power words and a surviving word
disproves freeness outright, whereas an all-clear at finite depth is
evidence only.  Verdicts carry a ``conclusive`` flag with exactly these
semantics.

Everything here treats "zero almost everywhere" as an L2 norm at or
below the verdict tolerance, which for step kernels is the same thing
up to exact arithmetic.
"""

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence, Tuple

import numpy as np

from . import _guard
from .chaos import (
    ChaosElement,
    KINDS,
    centered,
    integral,
    is_self_adjoint,
    moment,
    multiply,
    phi,
    phi_product,
    power,
)
from .contractions import nested_contract, star_contract
from .kernels import Kernel, is_mirror_symmetric, is_symmetric, l2_norm, lp_norm
from .bichaos import gradient_pairing, phi2_norm_sq

__all__ = [
    "FreenessVerdict",
    "SequenceTrace",
    "METHODS",
    "PERMUTATION_ORDER_CAP",
    "contraction_test",
    "permuted_contraction_test",
    "covariance_of_squares",
    "covariance_test",
    "alternating_moment_test",
    "gradient_test",
    "analyze_sequence",
    "covariance",
    "vector_norm_fourth_moment",
    "vector_square_covariance_identity",
    "fourth_moment_identity",
    "alternating_patterns",
]

METHODS = (
    "contraction",
    "covariance",
    "gradient",
    "alternating_moments",
    "permuted_contraction",
)

PERMUTATION_ORDER_CAP = 6


@dataclass(frozen=True)
class FreenessVerdict:
    """Outcome of one freeness test.

    ``witness`` maps named scalars (norms or residuals) to their values;
    ``is_free`` holds exactly when every witness is at or below the
    tolerance.  ``conclusive`` records whether the verdict is backed by
    an exact characterization in the reported direction, and ``note``
    explains when it is not (or what was skipped).
    """

    method: str
    is_free: bool
    witness: Mapping[str, float]
    tolerance: float
    conclusive: bool = True
    note: str = ""

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        frozen = MappingProxyType(dict(self.witness))
        object.__setattr__(self, "witness", frozen)
        clean = all(v <= self.tolerance for v in frozen.values())
        if self.is_free != clean:
            raise ValueError(
                "inconsistent verdict: is_free must mirror the witness map"
            )

    def max_witness(self):
        return max(self.witness.values(), default=0.0)


@dataclass(frozen=True)
class SequenceTrace:
    """Per-index diagnostics for a pair of kernel sequences.

    ``contraction_norms[k][p]`` is the L2 norm of f_k contracted with
    g_k at depth p; ``star_norms`` is the analogous star family (empty
    maps for the Wigner kind).  Covariances are Cov(F_k^2, G_k^2)
    computed through the chaos algebra, and the moment columns carry
    phi(F_k^2), phi(G_k^2), phi(F_k^4), phi(G_k^4) and the cross moment
    phi(F_k G_k).  The trend flags mark columns that shrink monotonely
    toward zero over the recorded range; they describe the finite
    record, never a limit.
    """

    kind: str
    contraction_norms: Tuple[Mapping[int, float], ...]
    star_norms: Tuple[Mapping[int, float], ...]
    covariances: Tuple[float, ...]
    phi_f_sq: Tuple[float, ...]
    phi_g_sq: Tuple[float, ...]
    phi_f_fourth: Tuple[float, ...]
    phi_g_fourth: Tuple[float, ...]
    cross_moments: Tuple[float, ...]
    l4_norms_g: Tuple[float, ...]
    contraction_trending_to_zero: Mapping[int, bool] = field(default_factory=dict)
    star_trending_to_zero: Mapping[int, bool] = field(default_factory=dict)
    covariance_trending_to_zero: bool = False

    def __post_init__(self):
        n = len(self.contraction_norms)
        for name in (
            "star_norms",
            "covariances",
            "phi_f_sq",
            "phi_g_sq",
            "phi_f_fourth",
            "phi_g_fourth",
            "cross_moments",
            "l4_norms_g",
        ):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} does not match the sequence length")
        object.__setattr__(
            self, "contraction_norms", tuple(MappingProxyType(dict(m)) for m in self.contraction_norms)
        )
        object.__setattr__(
            self, "star_norms", tuple(MappingProxyType(dict(m)) for m in self.star_norms)
        )
        object.__setattr__(
            self,
            "contraction_trending_to_zero",
            MappingProxyType(dict(self.contraction_trending_to_zero)),
        )
        object.__setattr__(
            self,
            "star_trending_to_zero",
            MappingProxyType(dict(self.star_trending_to_zero)),
        )

    def __len__(self):
        return len(self.covariances)

    def columns(self):
        """Flat name -> list view of every recorded column, for CSV."""
        out = {"index": list(range(len(self)))}
        depths = sorted(self.contraction_norms[0]) if len(self) else []
        for p in depths:
            out[f"contraction_norm_p{p}"] = [m[p] for m in self.contraction_norms]
        star_depths = sorted(self.star_norms[0]) if len(self) and self.star_norms[0] else []
        for p in star_depths:
            out[f"star_norm_p{p}"] = [m[p] for m in self.star_norms]
        out["covariance_of_squares"] = list(self.covariances)
        out["phi_F_sq"] = list(self.phi_f_sq)
        out["phi_G_sq"] = list(self.phi_g_sq)
        out["phi_F_fourth"] = list(self.phi_f_fourth)
        out["phi_G_fourth"] = list(self.phi_g_fourth)
        out["phi_FG"] = list(self.cross_moments)
        out["l4_norm_g"] = list(self.l4_norms_g)
        return out


def _check_kind(kind):
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


def _check_testable_pair(f, g, require_symmetric, caller):
    if f.grid != g.grid:
        raise ValueError("kernels live on different grids")
    if f.order < 1 or g.order < 1:
        raise ValueError(f"{caller} needs kernels of order at least 1")
    if require_symmetric:
        for name, k in (("f", f), ("g", g)):
            if not is_symmetric(k):
                raise ValueError(
                    f"{caller} requires fully symmetric kernels and {name} is not; "
                    "use permuted_contraction_test for mirror-symmetric inputs"
                )


def contraction_test(kind, f: Kernel, g: Kernel, tol: float = 1e-9) -> FreenessVerdict:
    """Exact verdict for symmetric kernels from the first contraction.

    Wigner: free exactly when the first nested contraction vanishes.
    Free Poisson: free exactly when the first star contraction vanishes.
    """
    _check_kind(kind)
    _check_testable_pair(f, g, require_symmetric=True, caller="contraction_test")
    if kind == "wigner":
        witness = {"contraction_1_norm": l2_norm(nested_contract(f, g, 1))}
    else:
        witness = {"star_1_norm": l2_norm(star_contract(f, g, 1))}
    value = max(witness.values())
    return FreenessVerdict(
        method="contraction",
        is_free=value <= tol,
        witness=witness,
        tolerance=tol,
    )


def _axis_pair_contraction(kind, f, g, a, b):
    # Contract f's axis a against g's axis b (1-based).  Moving the two
    # axes into the canonical first/last slots only permutes the output
    # axes of the usual depth-1 contraction, which leaves the norm alone.
    fa = Kernel(f.grid, np.moveaxis(f.values, a - 1, f.order - 1))
    gb = Kernel(g.grid, np.moveaxis(g.values, b - 1, 0))
    if kind == "wigner":
        return nested_contract(fa, gb, 1)
    return star_contract(fa, gb, 1)


def permuted_contraction_test(
    kind, f: Kernel, g: Kernel, tol: float = 1e-9, order_cap: int = PERMUTATION_ORDER_CAP
) -> FreenessVerdict:
    """Sufficient condition for mirror-symmetric kernels.

    Sweeps the depth-1 contraction (star contraction for the free
    Poisson kind) over every relabeling of both kernels' arguments.  A
    relabeling only decides which axis of f meets which axis of g, so
    the sweep reduces to the order(f) * order(g) axis pairings; every
    permutation pair realizes one of them.  All pairings vanishing
    guarantees freeness.  Any surviving pairing decides nothing, and the
    verdict says so.
    """
    _check_kind(kind)
    if f.grid != g.grid:
        raise ValueError("kernels live on different grids")
    if f.order < 1 or g.order < 1:
        raise ValueError("permuted_contraction_test needs kernels of order at least 1")
    if f.order > order_cap or g.order > order_cap:
        raise ValueError(
            f"order above the permutation cap {order_cap}; "
            "the sweep grows with order factorials and is not worth it"
        )
    for name, k in (("f", f), ("g", g)):
        if not is_mirror_symmetric(k):
            raise ValueError(f"{name} is not mirror-symmetric")
    tag = "cont" if kind == "wigner" else "star"
    witness = {}
    for a in range(1, f.order + 1):
        for b in range(1, g.order + 1):
            witness[f"{tag}_f_axis{a}_g_axis{b}"] = l2_norm(
                _axis_pair_contraction(kind, f, g, a, b)
            )
    clean = all(v <= tol for v in witness.values())
    return FreenessVerdict(
        method="permuted_contraction",
        is_free=clean,
        witness=witness,
        tolerance=tol,
        conclusive=clean,
        note=(
            "all relabeled contractions vanish, which guarantees freeness"
            if clean
            else "some relabeled contraction survives; this test is sufficient "
            "only, so no conclusion about freeness follows"
        ),
    )


def covariance(X: ChaosElement, Y: ChaosElement) -> float:
    """Cov(X, Y) = phi(XY) - phi(X) phi(Y) through the chaos algebra."""
    return phi_product(X, Y) - phi(X) * phi(Y)


def covariance_of_squares(kind, f: Kernel, g: Kernel):
    """Both routes to Cov(F^2, G^2) for F = I_n(f), G = I_m(g).

    Returns ``(direct, expansion)`` where ``direct`` multiplies out the
    squares in the chaos algebra and ``expansion`` sums the squared
    contraction norms (plus the star family for the free Poisson kind).
    The two agree identically; returning both keeps the cross-check
    available to callers.
    """
    _check_kind(kind)
    _check_testable_pair(f, g, require_symmetric=True, caller="covariance_of_squares")
    F = integral(kind, f)
    G = integral(kind, g)
    F2 = multiply(F, F)
    G2 = multiply(G, G)
    direct = phi_product(F2, G2) - phi(F2) * phi(G2)
    expansion = 0.0
    for p in range(1, min(f.order, g.order) + 1):
        expansion += l2_norm(nested_contract(f, g, p)) ** 2
        if kind == "free_poisson":
            expansion += l2_norm(star_contract(f, g, p)) ** 2
    return direct, expansion


def covariance_test(kind, f: Kernel, g: Kernel, tol: float = 1e-9) -> FreenessVerdict:
    """Exact verdict for symmetric kernels from Cov(F^2, G^2).

    The covariance of the squares vanishes exactly when the integrals
    are free.  Both computation routes go into the witness map; they
    agree identically, so the verdict never hinges on which one a
    reader trusts.
    """
    direct, expansion = covariance_of_squares(kind, f, g)
    witness = {"covariance_abs": abs(direct), "contraction_expansion": expansion}
    clean = all(v <= tol for v in witness.values())
    return FreenessVerdict(
        method="covariance",
        is_free=clean,
        witness=witness,
        tolerance=tol,
    )


def alternating_patterns(depth: int):
    """Even-length power patterns (k_1, ..., k_2l) with sum <= depth.

    These index the centered alternating words
    phi([F^k1 - phi(F^k1)][G^k2 - phi(G^k2)] ...) that the definition of
    freeness requires to vanish.  Lexicographic order.
    """
    if depth < 2:
        raise ValueError("depth must be at least 2")
    out = []

    def grow(prefix, budget):
        if prefix and len(prefix) % 2 == 0:
            out.append(tuple(prefix))
        if budget == 0:
            return
        for k in range(1, budget + 1):
            prefix.append(k)
            grow(prefix, budget - k)
            prefix.pop()

    grow([], depth)
    return sorted(out)


def _pattern_cost(pattern, n, m, N):
    # Peak entry prediction for one centered word.  The word is split at
    # its midpoint and phi of the product of the halves is a cheap
    # order-diagonal pairing, so the peak tensor is the larger half.
    half = len(pattern) // 2
    orders = [k * (n if i % 2 == 0 else m) for i, k in enumerate(pattern)]
    return N ** max(sum(orders[:half]), sum(orders[half:]))


def alternating_moment_test(
    kind, f: Kernel, g: Kernel, depth: int, tol: float = 1e-9
) -> FreenessVerdict:
    """Evaluate centered alternating power words up to a total degree.

    Any word with absolute trace above the tolerance disproves freeness
    (conclusive).  All words passing is evidence, not proof, and the
    verdict is flagged inconclusive.  Words whose predicted peak tensor
    exceeds the entry budget are skipped and listed in the note, making
    the verdict partial.
    """
    _check_kind(kind)
    _check_testable_pair(f, g, require_symmetric=False, caller="alternating_moment_test")
    n, m, N = f.order, g.order, f.grid.N
    budget = _guard.current_budget()
    F = integral(kind, f)
    G = integral(kind, g)
    centered_f = {}
    centered_g = {}

    def centered_power(element, cache, k):
        if k not in cache:
            cache[k] = centered(power(element, k))
        return cache[k]

    def fold(indexed):
        word = None
        for i, k in indexed:
            term = (
                centered_power(F, centered_f, k)
                if i % 2 == 0
                else centered_power(G, centered_g, k)
            )
            word = term if word is None else multiply(word, term)
        return word

    witness = {}
    skipped = []
    for pattern in alternating_patterns(depth):
        name = "pattern_" + "_".join(str(k) for k in pattern)
        if _pattern_cost(pattern, n, m, N) > budget:
            skipped.append(name)
            continue
        try:
            # phi of the full word equals the order-diagonal pairing of
            # the two half-products, which never materializes the
            # highest-order tensors of the word itself.
            indexed = list(enumerate(pattern))
            half = len(indexed) // 2
            witness[name] = abs(phi_product(fold(indexed[:half]), fold(indexed[half:])))
        except _guard.TensorBudgetError:
            skipped.append(name)
    if not witness:
        raise _guard.TensorBudgetError(
            "every alternating pattern exceeded the tensor entry budget; "
            "raise FCHAOS_MAX_TENSOR_ENTRIES or lower the depth"
        )
    clean = all(v <= tol for v in witness.values())
    if skipped:
        shown = ", ".join(skipped[:20])
        more = f" and {len(skipped) - 20} more" if len(skipped) > 20 else ""
        coverage = f"evaluated {len(witness)} of {len(witness) + len(skipped)} patterns; skipped over budget: {shown}{more}"
    else:
        coverage = f"evaluated all {len(witness)} patterns with total degree <= {depth}"
    if clean:
        note = coverage + "; vanishing at finite depth is evidence, not proof"
    else:
        note = coverage + "; a surviving centered word disproves freeness"
    return FreenessVerdict(
        method="alternating_moments",
        is_free=clean,
        witness=witness,
        tolerance=tol,
        conclusive=not clean,
        note=note,
    )


def gradient_test(f: Kernel, g: Kernel, tol: float = 1e-9) -> FreenessVerdict:
    """Wigner-only verdict from the gradient pairing.

    The witness is the squared norm of <grad I_n(f), grad I_m(g)> under
    phi tensor phi, which vanishes exactly when the integrals are free.
    There is no free Poisson variant; the gradient machinery only exists
    on the Wigner side.
    """
    _check_testable_pair(f, g, require_symmetric=True, caller="gradient_test")
    value = phi2_norm_sq(gradient_pairing(f, g))
    return FreenessVerdict(
        method="gradient",
        is_free=value <= tol,
        witness={"gradient_pairing_norm_sq": value},
        tolerance=tol,
    )


def _trending_to_zero(values):
    # Monotone within slack and at least halved over the record (or flat
    # zero).  A statement about the recorded values, nothing more.
    if len(values) < 2:
        return False
    slack = 1e-12
    if any(values[i + 1] > values[i] + slack for i in range(len(values) - 1)):
        return False
    return values[-1] <= slack or values[-1] <= 0.5 * values[0]


def analyze_sequence(kind, fs: Sequence[Kernel], gs: Sequence[Kernel]) -> SequenceTrace:
    """Per-index contraction, covariance, and moment diagnostics.

    The two sequences must be nonempty, equal in length, and uniform in
    order and grid.  All entries are finite-index records; the trend
    flags summarize the record without claiming limits.
    """
    _check_kind(kind)
    if not fs or not gs:
        raise ValueError("analyze_sequence needs nonempty sequences")
    if len(fs) != len(gs):
        raise ValueError("sequences differ in length")
    n, m = fs[0].order, gs[0].order
    grid = fs[0].grid
    for name, seq, order in (("fs", fs, n), ("gs", gs, m)):
        for k in seq:
            if k.order != order:
                raise ValueError(f"{name} mixes kernel orders")
            if k.grid != grid:
                raise ValueError(f"{name} mixes grids")
    if n < 1 or m < 1:
        raise ValueError("analyze_sequence needs kernels of order at least 1")
    depths = range(1, min(n, m) + 1)
    cont_rows, star_rows = [], []
    covs, pf2, pg2, pf4, pg4, cross, l4g = [], [], [], [], [], [], []
    for f, g in zip(fs, gs):
        cont_rows.append({p: l2_norm(nested_contract(f, g, p)) for p in depths})
        if kind == "free_poisson":
            star_rows.append({p: l2_norm(star_contract(f, g, p)) for p in depths})
        else:
            star_rows.append({})
        F = integral(kind, f)
        G = integral(kind, g)
        F2 = multiply(F, F)
        G2 = multiply(G, G)
        covs.append(phi_product(F2, G2) - phi(F2) * phi(G2))
        pf2.append(phi(F2))
        pg2.append(phi(G2))
        pf4.append(moment(F, 4))
        pg4.append(moment(G, 4))
        cross.append(phi_product(F, G))
        l4g.append(lp_norm(g, 4))
    cont_flags = {p: _trending_to_zero([row[p] for row in cont_rows]) for p in depths}
    if kind == "free_poisson":
        star_flags = {p: _trending_to_zero([row[p] for row in star_rows]) for p in depths}
    else:
        star_flags = {}
    return SequenceTrace(
        kind=kind,
        contraction_norms=tuple(cont_rows),
        star_norms=tuple(star_rows),
        covariances=tuple(covs),
        phi_f_sq=tuple(pf2),
        phi_g_sq=tuple(pg2),
        phi_f_fourth=tuple(pf4),
        phi_g_fourth=tuple(pg4),
        cross_moments=tuple(cross),
        l4_norms_g=tuple(l4g),
        contraction_trending_to_zero=cont_flags,
        star_trending_to_zero=star_flags,
        covariance_trending_to_zero=_trending_to_zero(covs),
    )


def _check_vector(parts, caller, require_centered=False):
    if not parts:
        raise ValueError(f"{caller} needs at least one component")
    kind = parts[0].kind
    grid = parts[0].grid
    for i, X in enumerate(parts):
        if X.kind != kind or X.grid != grid:
            raise ValueError(f"{caller}: component {i} disagrees on kind or grid")
        if not is_self_adjoint(X):
            raise ValueError(f"{caller}: component {i} is not self-adjoint")
        if require_centered and abs(phi(X)) > 1e-9:
            raise ValueError(f"{caller}: component {i} is not centered")
    return kind, grid


def vector_norm_fourth_moment(kind, parts: Sequence[ChaosElement]) -> float:
    """phi of the fourth power of the Euclidean norm of a vector.

    With F = (F_1, ..., F_d) this is phi((sum_i F_i^2)^2), computed as
    the double sum of phi(F_i^2 F_j^2).
    """
    _check_kind(kind)
    got_kind, _ = _check_vector(parts, "vector_norm_fourth_moment")
    if got_kind != kind:
        raise ValueError(f"components carry kind {got_kind!r}, not {kind!r}")
    squares = [multiply(X, X) for X in parts]
    return float(
        sum(phi_product(a, b) for a in squares for b in squares)
    )


def vector_square_covariance_identity(
    parts_f: Sequence[ChaosElement], parts_g: Sequence[ChaosElement]
):
    """Both sides of the squared-norm covariance identity.

    With G a free copy of the centered vector F (here: supply G as
    time-shifted copies), one half of Cov(||F+G||^2, ||F-G||^2) equals
    phi(||F||^4) - phi(||F||^2)^2 - sum_ij Cov(F_i, F_j)^2.  Returns a
    dict with ``lhs``, ``rhs``, and their ``gap``.
    """
    kind, _ = _check_vector(
        parts_f, "vector_square_covariance_identity", require_centered=True
    )
    _check_vector(parts_g, "vector_square_covariance_identity", require_centered=True)
    if len(parts_f) != len(parts_g):
        raise ValueError("vectors differ in dimension")
    plus_sq = None
    minus_sq = None
    for F, G in zip(parts_f, parts_g):
        p = F + G
        q = F - G
        p2 = multiply(p, p)
        q2 = multiply(q, q)
        plus_sq = p2 if plus_sq is None else plus_sq + p2
        minus_sq = q2 if minus_sq is None else minus_sq + q2
    lhs = 0.5 * covariance(plus_sq, minus_sq)
    norm4 = vector_norm_fourth_moment(kind, parts_f)
    norm2 = sum(phi_product(F, F) for F in parts_f)
    cov_sq = sum(
        (phi_product(a, b) - phi(a) * phi(b)) ** 2
        for a in parts_f
        for b in parts_f
    )
    rhs = norm4 - norm2**2 - cov_sq
    return {"lhs": lhs, "rhs": rhs, "gap": lhs - rhs}


def fourth_moment_identity(F: ChaosElement, G: ChaosElement):
    """Covariance of (F+G)^2 and (F-G)^2 against 2(phi(F^4) - 2).

    Holds when G is a free copy of a centered, unit-variance,
    self-adjoint F; supply G as a time-shifted copy.  The unit-variance
    normalization is checked here because the constant 2 bakes it in.
    Returns a dict with the covariance, the fourth moment, the target,
    and the gap.
    """
    for name, X in (("F", F), ("G", G)):
        if abs(phi(X)) > 1e-9:
            raise ValueError(f"fourth_moment_identity expects centered elements; {name} is not")
        if abs(phi_product(X, X) - 1.0) > 1e-9:
            raise ValueError(f"fourth_moment_identity expects unit variance; {name} fails")
    plus = F + G
    minus = F - G
    cov = covariance(multiply(plus, plus), multiply(minus, minus))
    fourth = moment(F, 4)
    target = 2.0 * (fourth - 2.0)
    return {
        "covariance": cov,
        "phi_fourth": fourth,
        "target": target,
        "gap": cov - target,
    }
