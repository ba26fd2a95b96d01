"""Named experiments, each packaging one headline computation as a Report.

Every experiment is deterministic given its options: random inputs come
from seeded generators, and the report's values reproduce bit-for-bit on
rerun.  Options arrive as keyword arguments; each experiment accepts a
fixed set and rejects the rest with a field-level message, so a typo in
a flag fails loudly instead of being ignored.

The ``pass_`` keys inside ``Report.values`` are the machine-checkable
claims; ``all_pass`` over them decides the process exit status in the
CLI.  A failing flag is data, not an exception: the report still renders
so the numbers behind the failure can be inspected.
"""

import time

import numpy as np

from . import _guard
from .bichaos import gradient_pairing, gradient_pairing_assembled, phi2_norm_sq
from .chaos import integral, moment, phi_product, power, shift_in_time
from .contractions import nested_contract, star_contract
from .freeness import (
    FreenessVerdict,
    alternating_moment_test,
    analyze_sequence,
    contraction_test,
    covariance_test,
    fourth_moment_identity,
    gradient_test,
    permuted_contraction_test,
    vector_norm_fourth_moment,
    vector_square_covariance_identity,
)
from .kernels import (
    GridSpec,
    Kernel,
    indicator_box,
    inner_product,
    l2_norm,
    random_kernel,
    sample_midpoint,
)
from .matrix_oracle import batch_estimate
from .reports import Report, verdict_entry

__all__ = ["UnknownExperimentError", "experiment_names", "run_experiment"]

_DEFAULT_SEED = 20260816


class UnknownExperimentError(ValueError):
    pass


_REGISTRY = {}


def _register(name, **defaults):
    def deco(fn):
        _REGISTRY[name] = (fn, defaults)
        return fn

    return deco


def experiment_names():
    return sorted(_REGISTRY)


def run_experiment(name, **options) -> Report:
    """Run a registered experiment and return its Report.

    Unknown names list the registry; options outside the experiment's
    accepted set, or with rejected values, raise ValueError naming the
    field.  Options passed as None fall back to the defaults, which lets
    a CLI forward every flag unconditionally.
    """
    entry = _REGISTRY.get(name)
    if entry is None:
        raise UnknownExperimentError(
            f"unknown experiment {name!r}; registered experiments: "
            + ", ".join(experiment_names())
        )
    fn, defaults = entry
    opts = dict(defaults)
    for key, value in options.items():
        if value is None:
            continue
        if key not in defaults:
            raise ValueError(
                f"{key}: not an option of {name}; it accepts "
                + (", ".join(sorted(defaults)) if defaults else "no options")
            )
        opts[key] = value
    start = time.perf_counter()
    body = fn(opts)
    runtime_ms = int((time.perf_counter() - start) * 1000)
    return Report(
        experiment=name,
        inputs=body.get("inputs", opts),
        values=body["values"],
        verdicts=tuple(body.get("verdicts", ())),
        trace=body.get("trace"),
        runtime_ms=runtime_ms,
    )


def _masked_symmetric(grid, order, rng, cells):
    k = random_kernel(grid, order, rng, symmetric=True)
    mask = np.zeros((grid.N,) * order)
    mask[(slice(0, cells),) * order] = 1.0
    return Kernel(grid, k.values * mask)


def _staircase(grid, k):
    boxes = [[(i / k, (i + 1) / k)] * 2 for i in range(k)]
    return indicator_box(grid, boxes, coefficient=np.sqrt(k))


@_register("counterexample-3.1", tol=1e-9)
def _counterexample_31(opts):
    """Vanishing first contraction without freeness, order 3, two cells.

    The indicator kernels on mirrored interval-cubes kill the last-first
    contraction exactly, yet the centered alternating word of seventh
    powers evaluates to 32.  The whole computation fits in tensors of at
    most 2^21 entries.
    """
    tol = opts["tol"]
    _guard.reset_peak()
    grid = GridSpec(2.0, 2)
    f = indicator_box(grid, [[(0.0, 1.0), (0.0, 2.0), (0.0, 1.0)]])
    g = indicator_box(grid, [[(1.0, 2.0), (0.0, 2.0), (1.0, 2.0)]])
    cont1 = nested_contract(f, g, 1)
    norm1 = l2_norm(cont1)
    exactly_zero = bool(np.all(cont1.values == 0.0))
    F = integral("wigner", f)
    G = integral("wigner", g)
    phi_f7 = moment(F, 7)
    phi_g7 = moment(G, 7)
    phi_f7g7 = phi_product(power(F, 7), power(G, 7))
    word = phi_f7g7 - phi_f7 * phi_g7
    peak = _guard.peak_entries()
    permuted = permuted_contraction_test("wigner", f, g, tol)
    alternating = FreenessVerdict(
        method="alternating_moments",
        is_free=abs(word) <= tol,
        witness={"pattern_7_7": abs(word)},
        tolerance=tol,
        conclusive=abs(word) > tol,
        note="deepest centered alternating word, evaluated as a half-split pairing",
    )
    values = {
        "norm_f_cont1_g": norm1,
        "contraction_exactly_zero": exactly_zero,
        "phi_F7": phi_f7,
        "phi_G7": phi_g7,
        "phi_F7G7": phi_f7g7,
        "alternating_word_7_7": word,
        "peak_tensor_entries": peak,
        "pass_first_contraction_zero": exactly_zero and norm1 == 0.0,
        "pass_seventh_moments_vanish": abs(phi_f7) <= 1e-9 and abs(phi_g7) <= 1e-9,
        "pass_witness_at_least_32": phi_f7g7 >= 32.0 - 1e-6,
        "pass_not_free": (not alternating.is_free) and alternating.conclusive,
        "pass_peak_entries_within_budget": peak <= 2**21,
    }
    return {
        "inputs": {"T": 2.0, "N": 2, "tol": tol},
        "values": values,
        "verdicts": [
            verdict_entry("permuted_contraction", permuted),
            verdict_entry("alternating_word", alternating),
        ],
    }


@_register("freeness-battery", seed=_DEFAULT_SEED, tol=1e-9)
def _freeness_battery(opts):
    """Verdict agreement across four tests on a 50-pair corpus.

    Even pairs have disjoint supports (free), odd pairs overlap (not
    free, generically).  Contraction, covariance, gradient, and depth-8
    alternating tests must agree on every pair, and the two gradient
    pairing routes must match to 1e-9.
    """
    seed, tol = opts["seed"], opts["tol"]
    grid = GridSpec(1.0, 2)
    rng = np.random.default_rng(seed)
    order_cycle = [(1, 1), (2, 1), (2, 2), (1, 2)]
    pair_count = 50
    verdicts = []
    disagreeing = []
    free_pairs = tied_pairs = 0
    max_gap = 0.0
    for i in range(pair_count):
        n, m = order_cycle[i % len(order_cycle)]
        f = random_kernel(grid, n, rng, symmetric=True)
        g = random_kernel(grid, m, rng, symmetric=True)
        if i % 2 == 0:
            fmask = np.zeros((2,) * n)
            fmask[(slice(0, 1),) * n] = 1.0
            gmask = np.zeros((2,) * m)
            gmask[(slice(1, 2),) * m] = 1.0
            f = Kernel(grid, f.values * fmask)
            g = Kernel(grid, g.values * gmask)
        results = {
            "contraction": contraction_test("wigner", f, g, tol),
            "covariance": covariance_test("wigner", f, g, tol),
            "gradient": gradient_test(f, g, tol),
            "alternating": alternating_moment_test("wigner", f, g, depth=8, tol=tol),
        }
        if len({r.is_free for r in results.values()}) > 1:
            disagreeing.append(i)
        if results["contraction"].is_free:
            free_pairs += 1
        else:
            tied_pairs += 1
        gap = abs(
            phi2_norm_sq(gradient_pairing(f, g))
            - phi2_norm_sq(gradient_pairing_assembled(f, g))
        )
        max_gap = max(max_gap, gap)
        for method, verdict in results.items():
            verdicts.append(verdict_entry(f"pair{i:02d}_{method}", verdict))
    values = {
        "pair_count": pair_count,
        "free_pairs": free_pairs,
        "tied_pairs": tied_pairs,
        "disagreeing_pairs": disagreeing,
        "max_gradient_two_path_gap": max_gap,
        "pass_identical_verdicts": not disagreeing,
        "pass_gradient_two_path": max_gap <= 1e-9,
    }
    return {"values": values, "verdicts": verdicts}


_SEQUENCE_KS = (2, 4, 8, 16, 32)


@_register("sequence-4", N=32, tol=1e-9)
def _sequence_4(opts):
    """Diagonal staircase sequence: vanishing first contraction, unit full one.

    For k in {2, 4, 8, 16, 32} the squared first self-contraction norm
    is 1/k, the full self-contraction is 1 with zero discretization
    error (one ulp of sqrt(k) rounding at most, bit-identical across
    grid refinements), and the fourth moment of the order-2 integral is
    2 + 1/k.
    """
    N, tol = opts["N"], opts["tol"]
    if N < max(_SEQUENCE_KS) or N & (N - 1) or N % max(_SEQUENCE_KS):
        raise ValueError(f"N: must be a power of two multiple of 32, got {N}")
    grid = GridSpec(1.0, N)
    fs = [_staircase(grid, k) for k in _SEQUENCE_KS]
    trace = analyze_sequence("wigner", fs, fs)
    cont1_sq = [trace.contraction_norms[i][1] ** 2 for i in range(len(fs))]
    cont2 = [float(nested_contract(fk, fk, 2).values) for fk in fs]
    phi4 = list(trace.phi_f_fourth)
    fine_grid = GridSpec(1.0, 2 * N)
    cont2_fine = [
        float(nested_contract(fk, fk, 2).values)
        for fk in (_staircase(fine_grid, k) for k in _SEQUENCE_KS)
    ]
    ulp = 4 * np.finfo(float).eps
    values = {
        "ks": list(_SEQUENCE_KS),
        "first_contraction_norm_sq": cont1_sq,
        "full_contraction": cont2,
        "full_contraction_refined_grid": cont2_fine,
        "fourth_moments": phi4,
        "first_contraction_trending_to_zero": trace.contraction_trending_to_zero[1],
        "full_contraction_trending_to_zero": trace.contraction_trending_to_zero[2],
        "pass_first_contraction_rate": all(
            abs(v - 1.0 / k) <= 1e-12 for v, k in zip(cont1_sq, _SEQUENCE_KS)
        ),
        "pass_full_contraction_unit": all(abs(v - 1.0) <= ulp for v in cont2),
        "pass_full_contraction_grid_independent": cont2 == cont2_fine,
        "pass_fourth_moment_rate": all(
            abs(v - (2.0 + 1.0 / k)) <= tol for v, k in zip(phi4, _SEQUENCE_KS)
        ),
    }
    return {
        "inputs": {"T": 1.0, "N": N, "tol": tol, "ks": list(_SEQUENCE_KS)},
        "values": values,
        "trace": trace.columns(),
    }


_JOINT_KS = (2, 4, 8, 16)


@_register("joint-convergence-4.5", kind="wigner", N=32, tol=1e-9)
def _joint_convergence_45(opts):
    """Hypothesis diagnostics for joint convergence to a free pair.

    The staircase sequence on [0, 1] tends to a standard semicircle
    while a fixed unit indicator square on [1, 2] plays the
    mirror-symmetric partner.  Unit variances, exactly vanishing cross
    moments, conclusively free verdicts at every index, and (on the
    Wigner side) fourth moments 2 + 1/k are all recorded per index.
    """
    kind, N, tol = opts["kind"], opts["N"], opts["tol"]
    if kind not in ("wigner", "free_poisson"):
        raise ValueError(f"kind: expected wigner or free_poisson, got {kind!r}")
    half = N // 2
    if N % 2 or half < max(_JOINT_KS) or half & (half - 1):
        raise ValueError(f"N: needs N/2 a power of two multiple of 16, got {N}")
    grid = GridSpec(2.0, N)
    fs = [_staircase(grid, k) for k in _JOINT_KS]
    g = indicator_box(grid, [[(1.0, 2.0), (1.0, 2.0)]])
    trace = analyze_sequence(kind, fs, [g] * len(fs))
    self1 = [l2_norm(nested_contract(fk, fk, 1)) for fk in fs]
    verdicts = []
    all_free = True
    for k, fk in zip(_JOINT_KS, fs):
        v = permuted_contraction_test(kind, fk, g, tol)
        all_free = all_free and v.is_free and v.conclusive
        verdicts.append(verdict_entry(f"k{k:02d}_permuted_contraction", v))
    values = {
        "ks": list(_JOINT_KS),
        "phi_F_sq": list(trace.phi_f_sq),
        "phi_G_sq": list(trace.phi_g_sq),
        "cross_moments": list(trace.cross_moments),
        "square_covariances": list(trace.covariances),
        "phi_F_fourth": list(trace.phi_f_fourth),
        "l4_norm_g": list(trace.l4_norms_g),
        "self_contraction_p1": self1,
        "pass_unit_variances": all(
            abs(a - 1.0) <= tol and abs(b - 1.0) <= tol
            for a, b in zip(trace.phi_f_sq, trace.phi_g_sq)
        ),
        "pass_cross_moments_vanish": all(v == 0.0 for v in trace.cross_moments),
        "pass_square_covariances_vanish": all(v == 0.0 for v in trace.covariances),
        "pass_conclusively_free": all_free,
        "pass_l4_norms_bounded": max(trace.l4_norms_g) <= trace.l4_norms_g[0] + tol,
    }
    if kind == "wigner":
        values["pass_fourth_moments_approach_two"] = all(
            abs(v - (2.0 + 1.0 / k)) <= tol
            for v, k in zip(trace.phi_f_fourth, _JOINT_KS)
        )
    return {
        "inputs": {"T": 2.0, "N": N, "kind": kind, "tol": tol, "ks": list(_JOINT_KS)},
        "values": values,
        "verdicts": verdicts,
        "trace": trace.columns(),
    }


@_register("transfer-5.2", T=1.0, N=256, tol=1e-3)
def _transfer_52(opts):
    """Orthogonal polynomial pair: free on the Wigner side only.

    f(x) = x and g(x) = x^2 - (3T/4) x integrate to zero against each
    other, so the Wigner integrals are free; their pointwise product
    survives, so the free Poisson integrals are not.
    """
    T, N, tol = float(opts["T"]), opts["N"], opts["tol"]
    if T <= 0 or N < 2:
        raise ValueError(f"T, N: need T > 0 and N >= 2, got {T}, {N}")
    grid = GridSpec(T, N)
    f = sample_midpoint(grid, lambda x: x)
    g = sample_midpoint(grid, lambda x: x * x - 0.75 * T * x)
    ip = inner_product(f, g)
    star1 = l2_norm(star_contract(f, g, 1))
    wig = contraction_test("wigner", f, g, tol)
    poi = contraction_test("free_poisson", f, g, tol)
    values = {
        "inner_product": ip,
        "star1_norm": star1,
        "wigner_free": wig.is_free,
        "poisson_free": poi.is_free,
        "pass_wigner_free": wig.is_free,
        "pass_poisson_not_free": not poi.is_free,
        "pass_inner_product_small": abs(ip) <= 1e-3,
        "pass_product_survives": star1 >= 0.01,
    }
    return {
        "values": values,
        "verdicts": [
            verdict_entry("wigner_contraction", wig),
            verdict_entry("free_poisson_contraction", poi),
        ],
    }


@_register("transfer-battery", seed=_DEFAULT_SEED, N=16, tol=1e-9)
def _transfer_battery(opts):
    """One-way transfer of freeness between the two chaoses.

    Twenty disjoint-support pairs are free on both sides; twenty
    orthogonalized overlapping pairs are Wigner-free but generically not
    free Poisson free.  No pair may come out free Poisson free without
    also being Wigner free, and at least one pair must witness the
    strictness of the inclusion.
    """
    seed, N, tol = opts["seed"], opts["N"], opts["tol"]
    if N < 4:
        raise ValueError(f"N: need at least 4 cells, got {N}")
    grid = GridSpec(1.0, N)
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(20):
        f = random_kernel(grid, 1, rng)
        raw = random_kernel(grid, 1, rng)
        g = raw - f * (inner_product(f, raw) / inner_product(f, f))
        pairs.append(("orthogonalized", f, g))
    half = N // 2
    for _ in range(20):
        f = random_kernel(grid, 1, rng)
        g = random_kernel(grid, 1, rng)
        fvals = f.values.copy()
        fvals[half:] = 0.0
        gvals = g.values.copy()
        gvals[:half] = 0.0
        pairs.append(("disjoint", Kernel(grid, fvals), Kernel(grid, gvals)))
    both_free = wigner_only = poisson_only = neither = 0
    verdicts = []
    for i, (label, f, g) in enumerate(pairs):
        wig = contraction_test("wigner", f, g, tol)
        poi = contraction_test("free_poisson", f, g, tol)
        if wig.is_free and poi.is_free:
            both_free += 1
        elif wig.is_free:
            wigner_only += 1
        elif poi.is_free:
            poisson_only += 1
        else:
            neither += 1
        verdicts.append(verdict_entry(f"pair{i:02d}_{label}_wigner", wig))
        verdicts.append(verdict_entry(f"pair{i:02d}_{label}_free_poisson", poi))
    values = {
        "pair_count": len(pairs),
        "both_free": both_free,
        "wigner_only": wigner_only,
        "poisson_only": poisson_only,
        "neither_free": neither,
        "pass_poisson_free_implies_wigner_free": poisson_only == 0,
        "pass_strictness_witnessed": wigner_only > 0,
    }
    return {"values": values, "verdicts": verdicts}


@_register("fourth-moment-6.1", kind=None, order=None, seed=_DEFAULT_SEED, tol=1e-9)
def _fourth_moment_61(opts):
    """Covariance form of the fourth-moment identity.

    For unit-variance F and a time-shifted free copy G, the covariance
    of (F+G)^2 and (F-G)^2 equals 2(phi(F^4) - 2).  Runs orders 1 to 3
    for both kinds unless the options narrow the sweep.
    """
    tol, seed = opts["tol"], opts["seed"]
    kinds = ("wigner", "free_poisson") if opts["kind"] is None else (opts["kind"],)
    orders = (1, 2, 3) if opts["order"] is None else (int(opts["order"]),)
    for kind in kinds:
        if kind not in ("wigner", "free_poisson"):
            raise ValueError(f"kind: expected wigner or free_poisson, got {kind!r}")
    for order in orders:
        if not 1 <= order <= 3:
            raise ValueError(f"order: expected 1, 2, or 3, got {order}")
    grid = GridSpec(2.0, 4)
    rng = np.random.default_rng(seed)
    values = {}
    gaps = []
    for kind in kinds:
        for order in orders:
            f = _masked_symmetric(grid, order, rng, cells=2)
            f = f * (1.0 / l2_norm(f))
            F = integral(kind, f)
            G = shift_in_time(F, 2)
            out = fourth_moment_identity(F, G)
            stem = f"{kind}_order{order}"
            values[f"{stem}_covariance"] = out["covariance"]
            values[f"{stem}_phi_fourth"] = out["phi_fourth"]
            values[f"{stem}_gap"] = out["gap"]
            gaps.append(abs(out["gap"]))
    values["max_identity_gap"] = max(gaps)
    values["pass_identity"] = max(gaps) <= tol
    return {
        "inputs": {
            "T": 2.0,
            "N": 4,
            "kind": list(kinds),
            "order": list(orders),
            "seed": seed,
            "tol": tol,
        },
        "values": values,
    }


@_register("multivariate-6.4", d=2, seed=_DEFAULT_SEED, tol=1e-9)
def _multivariate_64(opts):
    """Vector fourth moments and the squared-norm covariance identity.

    A d-dimensional vector of disjoint standard semicirculars has
    phi(norm^4) = d^2 + d (6 at d = 2).  Separately, random self-adjoint
    vectors and their shifted free copies satisfy the squared-norm
    covariance identity on both sides of the calculus.
    """
    d, seed, tol = int(opts["d"]), opts["seed"], opts["tol"]
    if not 1 <= d <= 6:
        raise ValueError(f"d: expected between 1 and 6, got {d}")
    unit_grid = GridSpec(float(d), d)
    semis = [
        integral("wigner", indicator_box(unit_grid, [[(float(i), float(i + 1))]]))
        for i in range(d)
    ]
    norm4 = vector_norm_fourth_moment("wigner", semis)
    target = float(d * d + d)
    rng = np.random.default_rng(seed)
    grid = GridSpec(2.0, 4)
    values = {
        "d": d,
        "norm_fourth_moment": norm4,
        "norm_fourth_target": target,
        "pass_norm_fourth": abs(norm4 - target) <= tol,
    }
    for kind in ("wigner", "free_poisson"):
        parts_f = [
            integral(kind, _masked_symmetric(grid, 1 + (i % 2), rng, cells=2))
            for i in range(d)
        ]
        parts_g = [shift_in_time(X, 2) for X in parts_f]
        out = vector_square_covariance_identity(parts_f, parts_g)
        values[f"identity_lhs_{kind}"] = out["lhs"]
        values[f"identity_rhs_{kind}"] = out["rhs"]
        values[f"identity_gap_{kind}"] = out["gap"]
        values[f"pass_identity_{kind}"] = abs(out["gap"]) <= tol
    return {"values": values}


@_register("gue-crosscheck", d=1000, trials=20, k_max=6, seed=_DEFAULT_SEED)
def _gue_crosscheck(opts):
    """Random-matrix moments against the exact engine.

    Twenty unit-norm kernels of orders one and two are estimated through
    GOE ensembles; every moment up to k_max must land within three
    standard errors plus a 10/d bias allowance of the engine value.
    """
    d, trials, k_max, seed = opts["d"], opts["trials"], opts["k_max"], opts["seed"]
    if d < 2 or trials < 2 or k_max < 1:
        raise ValueError(
            f"d, trials, k_max: need d >= 2, trials >= 2, k_max >= 1, "
            f"got {d}, {trials}, {k_max}"
        )
    grid = GridSpec(1.0, 2)
    rng = np.random.default_rng(seed)
    fs = []
    for i in range(20):
        order = 1 if i % 2 == 0 else 2
        f = random_kernel(grid, order, rng, mirror_symmetric=(order == 2))
        fs.append(f * (1.0 / l2_norm(f)))
    estimates = batch_estimate(fs, k_max, d, trials, seed + 1)
    allowance = 10.0 / d
    failures = []
    max_delta = 0.0
    worst_ratio = 0.0
    for i, (f, est) in enumerate(zip(fs, estimates)):
        F = integral("wigner", f)
        for k in est.orders:
            exact = moment(F, k)
            delta = abs(est.values[k - 1] - exact)
            bound = 3.0 * est.stderrs[k - 1] + allowance
            max_delta = max(max_delta, delta)
            if bound > 0:
                worst_ratio = max(worst_ratio, delta / bound)
            if delta > bound:
                failures.append(f"kernel{i:02d}_moment{k}")
    values = {
        "kernel_count": len(fs),
        "d": d,
        "trials": trials,
        "k_max": k_max,
        "max_abs_delta": max_delta,
        "worst_bound_ratio": worst_ratio,
        "failures": failures,
        "pass_all_moments_within_bound": not failures,
    }
    return {"values": values}
