"""Empirical validation of the structure underlying the attack.

Each routine measures one supporting fact at desk scale: the combinatorial
fragility of matrix columns, affine orthogonalization of nearly-orthogonal
row families, per-column sigma_T profiles, operator-norm control of signed
Gaussian sums, the per-query gain a low-error responder leaks, the
response curve as a function of the estimator statistic, concentration of
the noise norm, and the transfer from norm-gap correctness to signal-gap
correctness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .estimator import OptimalEstimator, build_optimal
from .queries import QuerySpec, gap_label, signal_sample_array, FREE, MINUS, PLUS
from .responders import respond_batch
from .sketches import SketchMatrix
from .streams import stream


# ---------------------------------------------------------------------------
# Fragile columns
# ---------------------------------------------------------------------------


@dataclass
class ColumnFragility:
    h: int
    active_rows: np.ndarray
    b_counts: np.ndarray
    sorted_counts: np.ndarray
    is_fragile: bool


@dataclass
class FragilityReport:
    columns: list
    fragile_fraction: float
    threshold: float


def fragility_report(A) -> FragilityReport:
    """Classify every column of a k x m matrix as fragile or not.

    For column h, the active rows are those with a nonzero entry in h;
    row i's dominated count b_ih is the number of columns j with
    A_ij^2 >= A_ih^2 (a row dominates itself). Sorting the active rows'
    counts into c_1 <= c_2 <= ... , the column is fragile when
    c_i >= i * m / (10 k log2 k) for every i. Zero columns are fragile.
    """
    entries = np.asarray(A.entries if isinstance(A, SketchMatrix) else A, dtype=np.float64)
    if entries.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    if not np.isfinite(entries).all():
        raise ValueError("matrix entries must be finite")
    k, m = entries.shape
    if k < 2:
        raise ValueError(f"fragility threshold needs k >= 2, got k={k}")
    threshold = m / (10.0 * k * math.log2(k))

    squared = entries**2
    # b[i, h] = #{j : A_ij^2 >= A_ih^2}, computed per row via ranks.
    b = np.empty((k, m), dtype=np.int64)
    for i in range(k):
        row_sorted = np.sort(squared[i])
        b[i] = m - np.searchsorted(row_sorted, squared[i], side="left")

    columns = []
    fragile_count = 0
    for h in range(m):
        active = np.flatnonzero(entries[:, h] != 0.0)
        counts = b[active, h]
        order = np.sort(counts)
        ranks = np.arange(1, order.size + 1)
        fragile = bool(np.all(order >= ranks * threshold))
        fragile_count += fragile
        columns.append(
            ColumnFragility(
                h=h,
                active_rows=active,
                b_counts=counts,
                sorted_counts=order,
                is_fragile=fragile,
            )
        )
    return FragilityReport(
        columns=columns, fragile_fraction=fragile_count / m, threshold=threshold
    )


# ---------------------------------------------------------------------------
# Affine orthogonalization
# ---------------------------------------------------------------------------


def affine_orthogonalize(vectors, pair_tol: float = 1e-8) -> np.ndarray:
    """Orthogonalize vectors with pairwise inner product 1 via affine steps.

    Input rows must be linearly independent, satisfy <v_i, v_j> = 1 for
    i != j (within ``pair_tol``) and ||v_i||^2 > i * (2 + ln K) in the
    given order. Each output u_i subtracts the projections of v_i on the
    previous outputs and then rescales by 1/(1 - sum of coefficients), so
    u_i is an affine combination of v_1..v_i (coefficients summing to 1)
    and loses at most 1 of squared norm: ||u_i||^2 >= ||v_i||^2 - 1.
    """
    V = np.asarray(vectors, dtype=np.float64)
    if V.ndim != 2:
        raise ValueError("expected a 2-d array of row vectors")
    K = V.shape[0]
    gram = V @ V.T
    for i in range(K):
        for j in range(i):
            if abs(gram[i, j] - 1.0) > pair_tol:
                raise ValueError(
                    f"vectors {j} and {i} have inner product {gram[i, j]}, expected 1"
                )
    log_term = 2.0 + math.log(K)
    for i in range(K):
        if gram[i, i] <= (i + 1) * log_term:
            raise ValueError(
                f"vector {i} has squared norm {gram[i, i]}, "
                f"needs more than {(i + 1) * log_term}"
            )
    if np.linalg.matrix_rank(V) < K:
        raise ValueError("input vectors are linearly dependent")

    U = np.empty_like(V)
    U[0] = V[0]
    for i in range(1, K):
        coeffs = (V[i] @ U[:i].T) / np.einsum("ij,ij->i", U[:i], U[:i])
        tilde = V[i] - coeffs @ U[:i]
        denom = 1.0 - float(np.sum(coeffs))
        if denom <= 0:
            raise ValueError(f"affine renormalization denominator {denom} <= 0 at vector {i}")
        U[i] = tilde / denom
    return U


# ---------------------------------------------------------------------------
# sigma_T profile over all columns
# ---------------------------------------------------------------------------


@dataclass
class SigmaProfile:
    """Per-column sigma_T^2 with noise on all remaining columns.

    ``sigma_T2`` holds NaN for zero columns; fractions and percentiles are
    over the nonzero columns.
    """

    sigma_T2: np.ndarray
    zero_columns: np.ndarray
    threshold: float
    fraction_at_least: float
    p10: float
    max_sigma_T2: float


def sigma_T_profile(A: SketchMatrix, c0: float = 0.01) -> SigmaProfile:
    """sigma_T^2 for every column h against M = all other columns.

    Reports the fraction of nonzero columns with
    sigma_T^2 >= c0 / (k ln k), their 10th percentile, and the maximum.
    """
    n = A.n
    values = np.full(n, np.nan)
    zero_cols = []
    all_idx = np.arange(n, dtype=np.int64)
    for h in range(n):
        M = np.delete(all_idx, h)
        est = build_optimal(A, h, M, c=1.0)
        if est.column_zero:
            zero_cols.append(h)
        else:
            values[h] = est.sigma_T**2
    finite = values[~np.isnan(values)]
    threshold = c0 / (A.k * math.log(A.k))
    return SigmaProfile(
        sigma_T2=values,
        zero_columns=np.asarray(zero_cols, dtype=np.int64),
        threshold=threshold,
        fraction_at_least=float(np.mean(finite >= threshold)) if finite.size else 0.0,
        p10=float(np.percentile(finite, 10)) if finite.size else math.nan,
        max_sigma_T2=float(finite.max()) if finite.size else math.nan,
    )


# ---------------------------------------------------------------------------
# Signed sums of Gaussian vectors
# ---------------------------------------------------------------------------


@dataclass
class SignedSumReport:
    trials: int
    violation_frequency: float
    bound: float
    deterministic_violations: int


def signed_sum_bound_check(
    m: int, r: int, t: float, trials: int, seed: int, sign_checks: int = 100
) -> SignedSumReport:
    """Check the operator-norm control of signed Gaussian sums.

    For X in R^{m x r} with N(0,1) entries, every signed column sum obeys
    ||X s||_2 <= sigma_max(X) * sqrt(r), and
    sigma_max(X) <= sqrt(r) + sqrt(m) + t except with probability
    2 exp(-t^2/2). Returns the empirical frequency of trials violating the
    probabilistic bound, plus a count of deterministic-inequality failures
    across ``sign_checks`` random sign vectors per trial (expected zero).
    """
    if min(m, r, trials) < 1:
        raise ValueError("m, r and trials must all be at least 1")
    violations = 0
    deterministic = 0
    limit = math.sqrt(r) + math.sqrt(m) + t
    for trial in range(trials):
        rng = stream(seed, "signed-sum", trial)
        X = rng.standard_normal((m, r))
        smax = float(np.linalg.svd(X, compute_uv=False)[0])
        if smax > limit:
            violations += 1
        S = 2.0 * rng.integers(0, 2, size=(r, sign_checks)) - 1.0
        norms = np.linalg.norm(X @ S, axis=0)
        cap = smax * math.sqrt(r)
        deterministic += int(np.count_nonzero(norms > cap * (1.0 + 1e-8)))
    return SignedSumReport(
        trials=trials,
        violation_frequency=violations / trials,
        bound=2.0 * math.exp(-t * t / 2.0),
        deterministic_violations=deterministic,
    )


# ---------------------------------------------------------------------------
# Gain measurement
# ---------------------------------------------------------------------------


def measure_gain(
    A: SketchMatrix,
    spec: QuerySpec,
    responder,
    est: OptimalEstimator,
    trials: int,
    seed: int,
    block: int = 65536,
):
    """Monte Carlo mean of psi(Av) * (T(Av) - w) over fresh queries.

    Positive gain means responses are correlated with the estimator's
    deviation, which is what the attack accumulates. Returns
    (gain_estimate, standard_error).
    """
    if trials < 1:
        raise ValueError(f"need trials >= 1, got {trials}")
    rng = stream(seed, "measure-gain")
    a = A.entries[:, spec.h]
    A_M = A.entries[:, spec.M]
    scale = spec.c / math.sqrt(spec.m)
    total = 0.0
    total_sq = 0.0
    for lo in range(0, trials, block):
        count = min(block, trials - lo)
        w = signal_sample_array(spec, rng, count)
        sketches = scale * (A_M @ rng.standard_normal((spec.m, count))) + np.outer(a, w)
        s = respond_batch(responder, sketches)
        vals = s * (est.g @ sketches - w)
        total += float(vals.sum())
        total_sq += float(vals @ vals)
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0)
    return mean, math.sqrt(var / trials)


# ---------------------------------------------------------------------------
# Response curve vs. the estimator statistic
# ---------------------------------------------------------------------------


@dataclass
class PsiBin:
    tau: float
    psi: float
    count: int


def estimate_psi(
    A: SketchMatrix,
    spec: QuerySpec,
    responder,
    tau_grid: Optional[np.ndarray],
    trials: int,
    seed: int,
    bins: int = 64,
    min_count: int = 50,
) -> list:
    """Binned estimate of the mean response conditioned on T(Av) = tau.

    Buckets queries by the estimator statistic and averages the responses
    within each bucket. ``tau_grid`` supplies explicit bin edges; when
    None, 64 equal-width bins span the observed range. Bins with fewer
    than ``min_count`` samples are omitted, not reported as zero.
    """
    est = build_optimal(A, spec.h, spec.M, spec.c)
    if est.column_zero:
        raise ValueError("cannot form the estimator statistic: signal column is zero")
    rng = stream(seed, "estimate-psi")
    a = A.entries[:, spec.h]
    A_M = A.entries[:, spec.M]
    scale = spec.c / math.sqrt(spec.m)
    w = signal_sample_array(spec, rng, trials)
    sketches = scale * (A_M @ rng.standard_normal((spec.m, trials))) + np.outer(a, w)
    tau = est.g @ sketches
    s = respond_batch(responder, sketches).astype(np.float64)

    if tau_grid is None:
        edges = np.linspace(tau.min(), tau.max(), bins + 1)
    else:
        edges = np.asarray(tau_grid, dtype=np.float64)
        if edges.ndim != 1 or edges.size < 2:
            raise ValueError("tau_grid must be a 1-d array of at least 2 bin edges")
    which = np.clip(np.digitize(tau, edges) - 1, 0, edges.size - 2)
    out = []
    for idx in range(edges.size - 1):
        mask = which == idx
        count = int(np.count_nonzero(mask))
        if count >= max(min_count, 1):
            out.append(
                PsiBin(
                    tau=float(0.5 * (edges[idx] + edges[idx + 1])),
                    psi=float(s[mask].mean()),
                    count=count,
                )
            )
    return out


# ---------------------------------------------------------------------------
# Noise norm concentration
# ---------------------------------------------------------------------------


@dataclass
class ConcentrationReport:
    trials: int
    frequency: float
    bound: float


def noise_norm_concentration(m: int, trials: int, epsilon: float, seed: int) -> ConcentrationReport:
    """Empirical tail frequency of | ||u||^2 - 1 | >= epsilon.

    The squared norm of the noise vector is distributed as chi^2_m / m and
    is drawn directly from that law. The reference tail bound is
    2 exp(-m eps^2 / 4).
    """
    if not 0 < epsilon < 1:
        raise ValueError(f"need epsilon in (0, 1), got {epsilon}")
    if min(m, trials) < 1:
        raise ValueError("m and trials must be at least 1")
    rng = stream(seed, "concentration")
    hits = 0
    for lo in range(0, trials, 1 << 20):
        count = min(1 << 20, trials - lo)
        draws = rng.chisquare(m, size=count) / m
        hits += int(np.count_nonzero(np.abs(draws - 1.0) >= epsilon))
    return ConcentrationReport(
        trials=trials, frequency=hits / trials, bound=2.0 * math.exp(-m * epsilon * epsilon / 4.0)
    )


# ---------------------------------------------------------------------------
# Norm gap to signal gap
# ---------------------------------------------------------------------------


@dataclass
class GapImplicationReport:
    trials: int
    violations: int


def check_norm_signal_gap(
    A: Optional[SketchMatrix], spec: QuerySpec, trials: int, seed: int
) -> GapImplicationReport:
    """Count queries where a forced-correct norm-gap answer is signal-wrong.

    For each query both responses are enumerated. A query counts as a
    violation when the (1 - c^2, 1.1 alpha)-gap label on ||v||_2 forces a
    response (label minus or plus) that is an incorrect answer to the
    (1, alpha)-gap on the signal w. Queries whose norm label is free give
    no guarantee and are never counted. Only (w, ||z||^2) matter, so the
    noise norm is drawn from its chi-square law directly.
    """
    if A is not None and A.n != spec.n:
        raise ValueError(f"matrix dimension n={A.n} does not match query spec n={spec.n}")
    if trials < 1:
        raise ValueError(f"need trials >= 1, got {trials}")
    rng = stream(seed, "norm-signal-gap")
    y = 1.0 - spec.c**2
    width = 1.1 * spec.alpha
    violations = 0
    for lo in range(0, trials, 1 << 20):
        count = min(1 << 20, trials - lo)
        w = signal_sample_array(spec, rng, count)
        unorm2 = rng.chisquare(spec.m, size=count) / spec.m
        x = np.sqrt(w * w + spec.c * spec.c * unorm2)
        # Forced-plus norm queries that are signal-minus, and vice versa.
        violations += int(np.count_nonzero((x >= y + width) & (w <= 1.0)))
        violations += int(np.count_nonzero((x <= y) & (w >= 1.0 + spec.alpha)))
    return GapImplicationReport(trials=trials, violations=violations)


def gap_implication_holds(w: float, x: float, spec: QuerySpec) -> bool:
    """Single-query version of the norm-to-signal transfer check."""
    norm_label = gap_label(x, 1.0 - spec.c**2, 1.1 * spec.alpha)
    if norm_label == FREE:
        return True
    forced = -1 if norm_label == MINUS else 1
    signal_label = gap_label(w, 1.0, spec.alpha)
    if signal_label == FREE:
        return True
    return forced == (-1 if signal_label == MINUS else 1)
