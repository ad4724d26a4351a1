"""
Desk-scale certification of measurement matrices.

Everything here enumerates column subsets exhaustively, so every entry point
is guarded by a combinatorial limit from :data:`dkstp.config.CONFIG`.
Enumeration follows ``itertools.combinations`` order, which fixes witnesses
and tie-breaks.
"""

from __future__ import annotations

import itertools
import logging
import math

import numpy as np

from dkstp.config import CONFIG
from dkstp.core.measurement import make_rng
from dkstp.exceptions import CombinatorialLimitError, DimensionError, RecoveryError
from dkstp.models import (
    IntraGroupResult,
    Matrix,
    RipEstimate,
    RipMode,
    Signal,
    SparkResult,
    UniquenessBounds,
)

logger = logging.getLogger(__name__)


def _as_matrix(a: Matrix) -> Matrix:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise DimensionError(f"Expected a non-empty 2-D matrix, got shape {a.shape}.")
    return a


def _is_dependent(columns: Matrix, rtol: float) -> bool:
    sv = np.linalg.svd(columns, compute_uv=False)
    k = columns.shape[1]
    if sv.size < k or sv[0] == 0.0:
        return True
    return bool(sv[-1] <= rtol * sv[0])


def spark(a: Matrix, limit: int) -> SparkResult:
    """
    Smallest number of linearly dependent columns, searched up to ``limit``.
    """
    a = _as_matrix(a)
    m, n = a.shape
    guard = min(n, CONFIG.spark_max_columns)
    if limit < 1 or limit > guard:
        raise CombinatorialLimitError(
            f"Spark limit {limit} must lie in [1, {guard}] for a matrix with {n} columns."
        )

    for size in range(1, limit + 1):
        for subset in itertools.combinations(range(n), size):
            if _is_dependent(a[:, subset], CONFIG.rank_rtol):
                return SparkResult(spark=size, witness=tuple(subset))

    if limit >= min(m + 1, n):
        return SparkResult(spark=n + 1, full_spark=True)
    logger.info("No dependent subset up to %d columns; spark exceeds the limit.", limit)
    return SparkResult(spark=limit + 1, lower_bound=True)


def coherence(a: Matrix) -> float:
    a = _as_matrix(a)
    norms = np.linalg.norm(a, axis=0)
    if np.any(norms == 0.0):
        raise DimensionError("Coherence is undefined for matrices with a zero column.")
    if a.shape[1] < 2:
        return 0.0
    normalized = a / norms
    gram = np.abs(normalized.T @ normalized)
    np.fill_diagonal(gram, 0.0)
    return float(min(1.0, gram.max()))


def welch_bound(m: int, n: int) -> float:
    """Lower bound √((n−m)/(m(n−1))) on the coherence of an m x n matrix; 0 when n <= m."""
    if n <= m or n < 2:
        return 0.0
    return math.sqrt((n - m) / (m * (n - 1)))


def _support_delta(a: Matrix, support: tuple[int, ...]) -> float:
    sub = a[:, support]
    eig = np.linalg.eigvalsh(sub.T @ sub)
    return float(max(abs(eig[-1] - 1.0), abs(1.0 - eig[0])))


def rip_constant(
    a: Matrix,
    k: int,
    mode: RipMode = RipMode.EXHAUSTIVE,
    samples: int | None = None,
    seed: int = 0,
) -> RipEstimate:
    """
    Restricted isometry constant of order ``k``.

    Exhaustive mode returns the exact δ_k. Sampled mode draws random supports
    and returns a lower bound.
    """
    a = _as_matrix(a)
    n = a.shape[1]
    mode = RipMode(mode)
    if not 1 <= k <= n:
        raise DimensionError(f"RIP order {k} must lie in [1, {n}].")

    if mode is RipMode.EXHAUSTIVE:
        total = math.comb(n, k)
        if total > CONFIG.rip_max_supports:
            raise CombinatorialLimitError(
                f"C({n}, {k}) = {total} supports exceeds the exhaustive limit "
                f"{CONFIG.rip_max_supports}; use sampled mode."
            )
        delta = max(_support_delta(a, s) for s in itertools.combinations(range(n), k))
        return RipEstimate(order=k, delta=delta, mode=mode, supports_checked=total)

    rng = make_rng(seed)
    count = samples or CONFIG.rip_sampled_supports
    delta = 0.0
    for _ in range(count):
        support = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
        delta = max(delta, _support_delta(a, support))
    return RipEstimate(order=k, delta=delta, mode=mode, supports_checked=count)


def intra_group_check(a: Matrix, gamma: int, tau: float | None = None) -> IntraGroupResult:
    """
    Check for intra-group correlation: the γ columns of each group are
    identical while group representatives stay mutually incoherent.

    The default ``tau`` is ten times the Welch bound of the representative
    matrix, capped at 0.99 (0.99 when the bound is zero).
    """
    a = _as_matrix(a)
    m, n = a.shape
    if gamma < 1 or n % gamma:
        raise DimensionError(f"gamma={gamma} must divide the column count {n}.")

    groups = a.reshape(m, n // gamma, gamma)
    within_equal = bool(np.all(groups == groups[:, :, :1]))
    representatives = groups[:, :, 0]
    cross = coherence(representatives)

    if tau is None:
        welch = welch_bound(m, representatives.shape[1])
        tau = min(0.99, 10.0 * welch) if welch > 0 else 0.99
    return IntraGroupResult(
        within_group_equal=within_equal,
        cross_group_coherence=cross,
        tau=float(tau),
        holds=within_equal and cross < tau,
    )


def largest_integer_below(bound: float) -> int:
    """Largest integer strictly below ``bound``, tolerant to rounding just above an integer."""
    return math.ceil(bound - 1e-12 * max(1.0, abs(bound))) - 1


def coherence_uniqueness_level(mu: float, n: int) -> int:
    """Largest ``k`` with ``k < ½(1 + 1/μ)``; ``n`` when the columns are orthogonal."""
    if mu == 0.0:
        return n
    return largest_integer_below(0.5 * (1.0 + 1.0 / mu))


def uniqueness_bounds(a: Matrix, spark_limit: int) -> UniquenessBounds:
    """
    Largest sparsity levels with guaranteed uniqueness: ``k < spark/2`` and
    ``k < ½(1 + 1/μ)``. A zero coherence bounds ``k_mu`` by the column count.
    """
    a = _as_matrix(a)
    sp = spark(a, spark_limit)
    mu = coherence(a)
    return UniquenessBounds(
        k_spark=largest_integer_below(sp.spark / 2),
        k_mu=coherence_uniqueness_level(mu, a.shape[1]),
        spark=sp,
        coherence=mu,
    )


def l0_oracle(psi: Matrix, y: Signal, kmax: int) -> Signal:
    """
    Sparsest exact explanation of ``y`` by exhaustive support search.

    Supports of size 1..kmax are tried in lexicographic order; among those of
    the smallest successful size the smallest residual wins.
    """
    psi = _as_matrix(psi)
    y = np.asarray(y, dtype=np.float64)
    m, n = psi.shape
    if y.shape != (m,):
        raise DimensionError(f"Measurement vector of shape {y.shape} does not match {m} rows.")
    if n > CONFIG.l0_max_columns or not 1 <= kmax <= CONFIG.l0_max_sparsity:
        raise CombinatorialLimitError(
            f"L0 search needs n <= {CONFIG.l0_max_columns} and 1 <= kmax <= "
            f"{CONFIG.l0_max_sparsity}; got n={n}, kmax={kmax}."
        )

    y_norm = float(np.linalg.norm(y))
    if y_norm == 0.0:
        return np.zeros(n)
    bound = CONFIG.l0_residual_rtol * y_norm

    for size in range(1, kmax + 1):
        best_residual = math.inf
        best: Signal | None = None
        for support in itertools.combinations(range(n), size):
            sub = psi[:, support]
            coef, *_ = np.linalg.lstsq(sub, y, rcond=None)
            residual = float(np.linalg.norm(sub @ coef - y))
            if residual <= bound and residual < best_residual:
                best_residual = residual
                best = np.zeros(n)
                best[list(support)] = coef
        if best is not None:
            return best

    raise RecoveryError(f"No support of size <= {kmax} reproduces the measurements.")
