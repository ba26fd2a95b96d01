"""Random-matrix estimates of chaos moments, for crosschecking.

Independent GUE matrices, one per grid cell, converge jointly to the
free semicircular family that generates the Wigner chaos.  A step
kernel turns into a matrix polynomial through the recursion

    M(w . j) = M(w) A_j - [last(w) = j] M(w minus last letter),

the matrix shadow of the rule that multiplying a basis integral by a
first-order one splits into an extension and a contraction.  Normalized
traces of powers of the resulting matrix then estimate moments computed
exactly by the chaos algebra.  Everything here is an asymptotic
(d to infinity) approximation; it exists to catch systematic errors in
the exact engine, not to replace it.

The ensemble is complex Hermitian on purpose.  Expected trace moments
of Hermitian Gaussian matrices admit a genus expansion in even powers
of 1/d, so the finite-d bias is O(1/d^2) and tight crosschecks against
exact moments stay within a few standard errors at moderate d.  A real
symmetric ensemble would contribute an O(1/d) term (already 22/d on the
sixth moment of a single matrix) that swamps such comparisons.  Only
the Wigner side is matrix-validated; free Poisson laws are checked
against the closed-form moment oracles instead.

The estimators are deterministic given a seed: trial t draws from
``np.random.default_rng((seed, t))``, so batching kernels together or
estimating them one at a time gives bit-identical numbers.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ._guard import check_entries
from .kernels import Kernel

__all__ = [
    "DEFAULT_MAX_MULTS",
    "MatrixEnsemble",
    "MomentEstimate",
    "sample_ensemble",
    "chaos_word_matrix",
    "word_matrices",
    "integral_matrix",
    "trace_moments",
    "estimate_moment",
    "estimate_alternating_trace",
    "batch_estimate",
]

DEFAULT_MAX_MULTS = 10_000


@dataclass(frozen=True)
class MatrixEnsemble:
    """One draw of independent GUE matrices, one per grid cell."""

    matrices: Tuple[np.ndarray, ...]
    d: int

    def __post_init__(self):
        object.__setattr__(self, "matrices", tuple(self.matrices))
        for A in self.matrices:
            if A.shape != (self.d, self.d):
                raise ValueError("ensemble matrices must be d x d")

    def __len__(self):
        return len(self.matrices)


def sample_ensemble(count: int, d: int, seed) -> MatrixEnsemble:
    """Draw ``count`` independent matrices A = (G + G*) / (2 sqrt(d)).

    G has independent standard complex Gaussian entries, so A is
    Hermitian with E|A_ij|^2 = 1/d everywhere and a real diagonal; the
    normalized trace of A^2 has mean exactly one and distinct draws
    become asymptotically free.  ``seed`` is anything
    ``np.random.default_rng`` accepts; equal seeds give bit-identical
    ensembles.
    """
    if count < 1:
        raise ValueError("count must be positive")
    if d < 2:
        raise ValueError("d must be at least 2")
    check_entries(2 * count * d * d, "sample_ensemble")
    rng = np.random.default_rng(seed)
    mats = []
    for _ in range(count):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        mats.append((g + g.conj().T) / (2.0 * np.sqrt(d)))
    return MatrixEnsemble(matrices=tuple(mats), d=d)


def _dfs_mults(N, order):
    return sum(N**k for k in range(2, order + 1))


def _check_mults(count, max_mults, context):
    if count > max_mults:
        raise ValueError(
            f"{context} needs {count} matrix multiplies, above the cap "
            f"{max_mults}; lower the order or grid resolution, or raise "
            "max_mults if the cost is intended"
        )


def chaos_word_matrix(word: Sequence[int], ensemble: MatrixEnsemble) -> np.ndarray:
    """Matrix model of the basis integral indexed by a cell word.

    Runs the extension-minus-contraction recursion along the word, which
    touches only the two most recent prefixes, so the cost is one
    multiply per letter past the first.
    """
    if not word:
        raise ValueError("word must have at least one letter")
    mats = ensemble.matrices
    for j in word:
        if not 0 <= j < len(mats):
            raise ValueError(f"letter {j} outside the family of {len(mats)} matrices")
    cur = mats[word[0]]
    prev = np.eye(ensemble.d)
    for i in range(1, len(word)):
        j = word[i]
        nxt = cur @ mats[j]
        if word[i - 1] == j:
            nxt = nxt - prev
        prev, cur = cur, nxt
    return cur


def word_matrices(ensemble: MatrixEnsemble, order: int, max_mults: int = DEFAULT_MAX_MULTS):
    """All word models up to a length, keyed by the word tuple.

    Breadth-first over prefixes so every entry is one multiply from its
    parent.  The table trades memory for reuse; the direct walk in
    ``integral_matrix`` is the low-memory alternative.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    mats = ensemble.matrices
    N = len(mats)
    d = ensemble.d
    _check_mults(_dfs_mults(N, order), max_mults, "word_matrices")
    count = sum(N**k for k in range(1, order + 1))
    check_entries(2 * count * d * d, "word_matrices")
    eye = np.eye(d)
    table = {(): eye}
    level = {(): eye}
    for _ in range(order):
        nxt_level = {}
        for w, Mw in level.items():
            for j in range(N):
                if not w:
                    Mwj = mats[j]
                else:
                    Mwj = Mw @ mats[j]
                    if w[-1] == j:
                        Mwj = Mwj - table[w[:-1]]
                nxt_level[w + (j,)] = Mwj
        table.update(nxt_level)
        level = nxt_level
    del table[()]
    return table


def integral_matrix(
    f: Kernel,
    ensemble: MatrixEnsemble,
    words=None,
    max_mults: int = DEFAULT_MAX_MULTS,
) -> np.ndarray:
    """Matrix model of the multiple integral of a step kernel.

    The kernel decomposes over cell boxes, each contributing its value
    times h^(n/2) times the word model.  With a ``words`` table the sum
    is a weighted accumulation; without one a depth-first walk carries
    just the current prefix chain, keeping memory at a handful of
    matrices.  Linear in f either way.
    """
    n = f.order
    if n < 1:
        raise ValueError("integral_matrix needs a kernel of order at least 1")
    N = f.grid.N
    if len(ensemble) != N:
        raise ValueError(f"kernel grid has {N} cells but {len(ensemble)} matrices given")
    mats = ensemble.matrices
    d = ensemble.d
    scale = f.grid.h ** (n / 2.0)
    values = f.values
    dtype = np.result_type(mats[0].dtype, values.dtype)
    if words is not None:
        acc = np.zeros((d, d), dtype=dtype)
        for idx in np.ndindex(*values.shape):
            c = values[idx]
            if c != 0.0:
                acc += (c * scale) * words[idx]
        return acc
    _check_mults(_dfs_mults(N, n), max_mults, "integral_matrix")
    acc = np.zeros((d, d), dtype=dtype)
    eye = np.eye(d)

    def walk(prefix, cur, prev):
        depth = len(prefix)
        if depth == n:
            c = values[prefix]
            if c != 0.0:
                np.add(acc, (c * scale) * cur, out=acc)
            return
        for j in range(N):
            if depth == 0:
                walk((j,), mats[j], eye)
            else:
                nxt = cur @ mats[j]
                if prefix[-1] == j:
                    nxt = nxt - prev
                walk(prefix + (j,), nxt, cur)

    walk((), None, None)
    return acc


def trace_moments(M: np.ndarray, k_max: int) -> Tuple[float, ...]:
    """Normalized traces of M^1 .. M^k_max.

    Powers are built only up to ceil(k_max / 2); the trace of a higher
    power is the elementwise pairing tr(A B) = sum(A * B^T) of two
    stored halves, so the whole ladder costs ceil(k_max / 2) - 1
    multiplies.  Reports the real part, which is the whole trace
    whenever M is Hermitian (every model of a mirror-symmetric kernel).
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    d = M.shape[0]
    half = (k_max + 1) // 2
    powers = {1: M}
    for j in range(2, half + 1):
        powers[j] = powers[j - 1] @ M
    out = []
    for k in range(1, k_max + 1):
        a = (k + 1) // 2
        b = k - a
        if b == 0:
            out.append(float(np.trace(powers[a]).real) / d)
        else:
            out.append(float(np.sum(powers[a] * powers[b].T).real) / d)
    return tuple(out)


@dataclass(frozen=True)
class MomentEstimate:
    """Monte Carlo moment estimates for one kernel.

    ``values[i]`` estimates the (i+1)-th moment of the integral;
    ``stderrs[i]`` is the sample standard error over trials.  The d to
    infinity bias is not included in the standard error, so comparisons
    against exact values should budget an O(1/d) allowance on top.
    """

    orders: Tuple[int, ...]
    values: Tuple[float, ...]
    stderrs: Tuple[float, ...]
    d: int
    trials: int

    def __post_init__(self):
        if not (len(self.orders) == len(self.values) == len(self.stderrs)):
            raise ValueError("misaligned estimate columns")


def _check_batch(fs, k_max, d, trials):
    if not fs:
        raise ValueError("at least one kernel is required")
    if trials < 2:
        raise ValueError("trials must be at least 2 to report a standard error")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    if d < 2:
        raise ValueError("d must be at least 2")
    grid = fs[0].grid
    max_order = 0
    for f in fs:
        if f.grid != grid:
            raise ValueError("all kernels must share one grid")
        if f.order < 1:
            raise ValueError("kernels must have order at least 1")
        max_order = max(max_order, f.order)
    return grid, max_order


def batch_estimate(
    fs: Sequence[Kernel],
    k_max: int,
    d: int,
    trials: int,
    seed: int,
    max_mults: int = DEFAULT_MAX_MULTS,
) -> list:
    """Estimate moments 1 .. k_max for several kernels on one grid.

    Each trial draws one ensemble, builds the word table once, and
    evaluates every kernel against it, so the per-trial cost is the
    table plus ceil(k_max/2) - 1 multiplies per kernel.  Returns one
    :class:`MomentEstimate` per kernel, in input order.
    """
    fs = list(fs)
    grid, max_order = _check_batch(fs, k_max, d, trials)
    half = (k_max + 1) // 2
    per_trial = _dfs_mults(grid.N, max_order) + len(fs) * (half - 1)
    _check_mults(per_trial, max_mults, "batch_estimate (per trial)")
    samples = np.empty((len(fs), k_max, trials))
    for t in range(trials):
        ensemble = sample_ensemble(grid.N, d, (seed, t))
        words = word_matrices(ensemble, max_order, max_mults=max_mults)
        for i, f in enumerate(fs):
            model = integral_matrix(f, ensemble, words=words)
            samples[i, :, t] = trace_moments(model, k_max)
    orders = tuple(range(1, k_max + 1))
    out = []
    for i in range(len(fs)):
        means = samples[i].mean(axis=1)
        errs = samples[i].std(axis=1, ddof=1) / np.sqrt(trials)
        out.append(
            MomentEstimate(
                orders=orders,
                values=tuple(float(v) for v in means),
                stderrs=tuple(float(e) for e in errs),
                d=d,
                trials=trials,
            )
        )
    return out


def estimate_moment(
    f: Kernel,
    k: int,
    d: int,
    trials: int,
    seed: int,
    max_mults: int = DEFAULT_MAX_MULTS,
) -> Tuple[float, float]:
    """Mean and standard error of the k-th moment estimate for one kernel."""
    est = batch_estimate([f], k, d, trials, seed, max_mults=max_mults)[0]
    return est.values[k - 1], est.stderrs[k - 1]


def estimate_alternating_trace(
    f: Kernel,
    g: Kernel,
    pattern: Sequence[int],
    d: int,
    trials: int,
    seed: int,
    max_mults: int = DEFAULT_MAX_MULTS,
) -> Tuple[float, float]:
    """Estimated trace of the centered alternating word F^k1 G^k2 ...

    Powers follow the pattern, letters alternate starting from f, and
    every power is centered by subtracting its normalized trace.  For
    time-disjoint kernels this converges to zero: independent draws are
    asymptotically free.  Returns the trial mean and standard error.
    """
    if not pattern or any(k < 1 for k in pattern):
        raise ValueError("pattern must be nonempty positive powers")
    grid, max_order = _check_batch([f, g], max(pattern), d, trials)
    per_trial = _dfs_mults(grid.N, max_order) + 2 * (max(pattern) - 1) + len(pattern)
    _check_mults(per_trial, max_mults, "estimate_alternating_trace (per trial)")
    vals = np.empty(trials)
    eye_scale = None
    for t in range(trials):
        ensemble = sample_ensemble(grid.N, d, (seed, t))
        words = word_matrices(ensemble, max_order, max_mults=max_mults)
        if eye_scale is None:
            eye_scale = np.eye(d)
        factors = {}
        for name, kernel in (("f", f), ("g", g)):
            base = integral_matrix(kernel, ensemble, words=words)
            powers = {1: base}
            for j in range(2, max(pattern) + 1):
                powers[j] = powers[j - 1] @ base
            factors[name] = {
                j: P - (np.trace(P) / d) * eye_scale for j, P in powers.items()
            }
        word = None
        for i, k in enumerate(pattern):
            term = factors["f" if i % 2 == 0 else "g"][k]
            word = term if word is None else word @ term
        vals[t] = float((np.trace(word) / d).real)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(trials))
    return mean, stderr
