from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from dkstp.core.analysis import (
    coherence,
    coherence_uniqueness_level,
    intra_group_check,
    l0_oracle,
    largest_integer_below,
    rip_constant,
    spark,
    uniqueness_bounds,
    welch_bound,
)
from dkstp.core.stp_algebra import materialize_dkstp_matrix
from dkstp.exceptions import CombinatorialLimitError, DimensionError, RecoveryError
from dkstp.models import RipMode


def test_identity_has_full_spark() -> None:
    result = spark(np.eye(3), 3)
    assert result.full_spark
    assert result.spark == 4


def test_zero_column_gives_spark_one() -> None:
    a = np.array([[1.0, 0.0, 2.0], [0.0, 0.0, 1.0]])
    result = spark(a, 2)
    assert result.spark == 1
    assert result.witness == (1,)


def test_repeated_column_gives_spark_two() -> None:
    a = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    result = spark(a, 3)
    assert result.spark == 2
    assert result.witness == (0, 1)


def test_generic_wide_matrix_has_spark_rows_plus_one(rng: np.random.Generator) -> None:
    result = spark(rng.standard_normal((4, 6)), 5)
    assert result.spark == 5
    assert not result.full_spark


def test_inconclusive_search_reports_lower_bound(rng: np.random.Generator) -> None:
    result = spark(rng.standard_normal((4, 10)), 3)
    assert result.lower_bound
    assert result.spark == 4


def test_spark_limit_is_guarded(rng: np.random.Generator) -> None:
    with pytest.raises(CombinatorialLimitError):
        spark(rng.standard_normal((3, 20)), 13)
    with pytest.raises(CombinatorialLimitError):
        spark(rng.standard_normal((3, 4)), 5)


def test_expanded_dkstp_matrix_has_spark_two_and_unit_coherence() -> None:
    for seed in range(50):
        rng = np.random.default_rng(seed)
        m, n = (int(v) for v in rng.integers(1, 7, size=2))
        gamma = 2 + seed % 2
        expanded = materialize_dkstp_matrix(rng.standard_normal((m, n)), gamma)
        assert spark(expanded, 2).spark == 2
        assert coherence(expanded) == pytest.approx(1.0)


def test_coherence_of_orthonormal_columns_is_zero() -> None:
    q, _ = np.linalg.qr(np.random.default_rng(3).standard_normal((6, 4)))
    assert coherence(q) == pytest.approx(0.0, abs=1e-12)


def test_coherence_rejects_zero_column() -> None:
    with pytest.raises(DimensionError):
        coherence(np.array([[1.0, 0.0], [1.0, 0.0]]))


def test_spark_and_coherence_are_consistent() -> None:
    for seed in range(20):
        a = np.random.default_rng(seed).standard_normal((3, 6))
        mu = coherence(a)
        assert spark(a, 4).spark >= 1.0 + 1.0 / mu - 1e-9
        assert mu >= welch_bound(3, 6) - 1e-12


def test_welch_bound_is_zero_without_redundancy() -> None:
    assert welch_bound(5, 5) == 0.0
    assert welch_bound(2, 3) == pytest.approx(math.sqrt(1 / 4))


def test_rip_of_identity_is_zero() -> None:
    estimate = rip_constant(np.eye(5), 2)
    assert estimate.delta == pytest.approx(0.0)
    assert estimate.supports_checked == 10
    assert not estimate.failed


def test_rip_fails_for_repeated_columns() -> None:
    expanded = materialize_dkstp_matrix(np.random.default_rng(4).standard_normal((4, 3)), 2)
    assert rip_constant(expanded, 2).failed


def test_sampled_rip_never_exceeds_exhaustive(rng: np.random.Generator) -> None:
    a = rng.standard_normal((8, 12)) / math.sqrt(8)
    exact = rip_constant(a, 3)
    sampled = rip_constant(a, 3, RipMode.SAMPLED, samples=200, seed=1)
    assert sampled.mode is RipMode.SAMPLED
    assert sampled.supports_checked == 200
    assert sampled.delta <= exact.delta + 1e-12


def test_exhaustive_rip_is_guarded() -> None:
    with pytest.raises(CombinatorialLimitError, match="sampled"):
        rip_constant(np.ones((2, 60)), 6)


def test_intra_group_structure_of_expanded_matrix(rng: np.random.Generator) -> None:
    expanded = materialize_dkstp_matrix(rng.standard_normal((20, 5)), 3)
    result = intra_group_check(expanded, 3, tau=0.99)
    assert result.within_group_equal
    assert result.cross_group_coherence < 0.99
    assert result.holds


def test_dense_matrix_lacks_intra_group_structure(rng: np.random.Generator) -> None:
    result = intra_group_check(rng.standard_normal((6, 8)), 2)
    assert not result.within_group_equal
    assert not result.holds


def test_default_tau_without_welch_redundancy() -> None:
    expanded = materialize_dkstp_matrix(np.random.default_rng(8).standard_normal((6, 3)), 2)
    assert intra_group_check(expanded, 2).tau == pytest.approx(0.99)


def test_uniqueness_bounds_for_identity() -> None:
    bounds = uniqueness_bounds(np.eye(4), 4)
    assert bounds.k_spark == 2
    assert bounds.k_mu == 4


@pytest.mark.parametrize(
    ("bound", "expected"),
    [(2.5, 2), (3.0, 2), (2.0 + 4e-16, 1), (1.0, 0), (0.5, 0), (1e6 * (1 + 1e-15), 999_999)],
)
def test_largest_integer_below_absorbs_rounding(bound: float, expected: int) -> None:
    assert largest_integer_below(bound) == expected


def test_coherence_level_at_one_third() -> None:
    # 1/μ can round a hair above 3; k < 2 must still give 1.
    assert coherence_uniqueness_level(1.0 / 3.0000000000000004, 10) == 1
    assert coherence_uniqueness_level(1.0 / 3.0, 10) == 1
    assert coherence_uniqueness_level(0.0, 10) == 10

    third = np.array([[1.0, 1.0 / 3.0], [0.0, math.sqrt(8.0) / 3.0]])
    assert uniqueness_bounds(third, 2).k_mu == 1


def test_group_sum_signals_below_half_spark_never_collide() -> None:
    gamma, groups, m = 2, 6, 4
    collisions = 0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        psi = rng.standard_normal((m, groups)) / math.sqrt(gamma)
        k = uniqueness_bounds(psi, 5).k_spark
        assert k == 2
        supports = [s for size in range(1, k + 1) for s in itertools.combinations(range(groups), size)]
        for first, second in itertools.product(supports, repeat=2):
            a = np.zeros(groups)
            b = np.zeros(groups)
            a[list(first)] = rng.uniform(0.5, 2.0, size=len(first))
            b[list(second)] = -rng.uniform(0.5, 2.0, size=len(second))
            if np.linalg.norm(psi @ (a - b)) <= 1e-9 * np.linalg.norm(a - b):
                collisions += 1
    assert collisions == 0


def test_l0_oracle_finds_sparsest_explanation(rng: np.random.Generator) -> None:
    psi = rng.standard_normal((6, 10))
    s = np.zeros(10)
    s[[2, 7]] = [1.5, -0.5]
    assert np.allclose(l0_oracle(psi, psi @ s, 3), s)


def test_l0_oracle_of_zero_measurements_is_zero(rng: np.random.Generator) -> None:
    assert not l0_oracle(rng.standard_normal((3, 5)), np.zeros(3), 2).any()


def test_l0_oracle_raises_when_nothing_fits(rng: np.random.Generator) -> None:
    with pytest.raises(RecoveryError):
        l0_oracle(rng.standard_normal((4, 6)), rng.standard_normal(4), 2)


def test_l0_oracle_is_guarded(rng: np.random.Generator) -> None:
    with pytest.raises(CombinatorialLimitError):
        l0_oracle(rng.standard_normal((4, 21)), np.ones(4), 2)
    with pytest.raises(CombinatorialLimitError):
        l0_oracle(rng.standard_normal((4, 8)), np.ones(4), 5)
