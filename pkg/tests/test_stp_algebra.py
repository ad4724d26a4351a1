from __future__ import annotations

import math
import tracemalloc
from dataclasses import replace

import numpy as np
import pytest

from dkstp.config import CONFIG
from dkstp.core import stp_algebra
from dkstp.core.stp_algebra import (
    apply_dkstp_operator,
    apply_stp_operator,
    dkstp_weighted,
    epsilon,
    equalize,
    general_dkstp,
    group_sum,
    kronecker,
    materialize_dkstp_matrix,
    stp,
)
from dkstp.exceptions import DimensionError
from dkstp.models import GroupSumSignal


def test_epsilon_is_unit_vector() -> None:
    eps = epsilon(4)
    assert eps.shape == (4,)
    assert np.allclose(eps, 0.5)
    assert math.isclose(float(np.linalg.norm(eps)), 1.0)


def test_epsilon_rejects_non_positive_length() -> None:
    with pytest.raises(DimensionError):
        epsilon(0)


def test_stp_with_matching_dimensions_is_matrix_product(rng: np.random.Generator) -> None:
    a = rng.standard_normal((3, 4))
    b = rng.standard_normal((4, 2))
    assert np.array_equal(stp(a, b), a @ b)


def test_stp_expands_with_identity_blocks(rng: np.random.Generator) -> None:
    a = rng.standard_normal((2, 2))
    b = rng.standard_normal((4, 1))
    expected = np.kron(a, np.eye(2)) @ b
    assert np.allclose(stp(a, b), expected)


def test_stp_is_associative(rng: np.random.Generator) -> None:
    a = rng.standard_normal((2, 4))
    b = rng.standard_normal((2, 3))
    c = rng.standard_normal((3, 2))
    assert np.allclose(stp(stp(a, b), c), stp(a, stp(b, c)))


def test_dkstp_weighted_keeps_outer_shape(rng: np.random.Generator) -> None:
    a = rng.standard_normal((3, 4))
    b = rng.standard_normal((2, 5))
    assert dkstp_weighted(a, b).shape == (3, 5)


def test_dkstp_weighted_on_signal_matches_implicit_operator(rng: np.random.Generator) -> None:
    a = rng.standard_normal((5, 6))
    x = rng.standard_normal(18)
    product = dkstp_weighted(a, x.reshape(-1, 1)).ravel()
    assert np.allclose(product, apply_dkstp_operator(a, 3, x))


def test_general_dkstp_is_rescaled_weighted_product(rng: np.random.Generator) -> None:
    a = rng.standard_normal((2, 3))
    b = rng.standard_normal((4, 2))
    t = math.lcm(3, 4)
    scale = math.sqrt((t // 3) * (t // 4))
    assert np.allclose(general_dkstp(a, b), scale * dkstp_weighted(a, b))


def test_group_sum_adds_consecutive_windows() -> None:
    xg = group_sum(np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), 2)
    assert np.array_equal(xg.values, [3.0, 7.0, 11.0])
    assert xg.gamma == 2
    assert xg.signal_dim == 6


def test_group_sum_rejects_non_dividing_gamma() -> None:
    with pytest.raises(DimensionError):
        group_sum(np.ones(7), 2)


def test_gamma_one_is_identity(rng: np.random.Generator) -> None:
    x = rng.standard_normal(9)
    assert np.array_equal(group_sum(x, 1).values, x)
    assert np.array_equal(equalize(group_sum(x, 1)), x)


def test_equalize_spreads_group_mean() -> None:
    x = equalize(GroupSumSignal(np.array([4.0, -2.0]), 2))
    assert np.array_equal(x, [2.0, 2.0, -1.0, -1.0])


def test_group_sum_of_equalized_signal_is_unchanged(rng: np.random.Generator) -> None:
    xg = GroupSumSignal(rng.standard_normal(8), 4)
    assert np.allclose(group_sum(equalize(xg), 4).values, xg.values)


def test_implicit_operator_matches_materialized_matrix() -> None:
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        gamma = int(rng.integers(2, 5))
        m = int(rng.integers(1, 9))
        n = int(rng.integers(1, 9))
        a = rng.standard_normal((m, n))
        x = rng.standard_normal(n * gamma)
        implicit = apply_dkstp_operator(a, gamma, x)
        explicit = materialize_dkstp_matrix(a, gamma) @ x
        scale = max(float(np.linalg.norm(explicit)), 1e-300)
        worst = max(worst, float(np.linalg.norm(implicit - explicit)) / scale)
    assert worst <= 1e-12


def test_stp_operator_matches_kronecker_with_identity(rng: np.random.Generator) -> None:
    a = rng.standard_normal((3, 4))
    x = rng.standard_normal(12)
    assert np.allclose(apply_stp_operator(a, 3, x), np.kron(a, np.eye(3)) @ x)


def test_implicit_operator_rejects_wrong_signal_length(rng: np.random.Generator) -> None:
    with pytest.raises(DimensionError):
        apply_dkstp_operator(rng.standard_normal((2, 3)), 2, np.ones(7))


def test_implicit_operator_never_builds_expanded_matrix() -> None:
    a = np.random.default_rng(0).standard_normal((1024, 1024))
    x = np.random.default_rng(1).standard_normal(2048)
    expanded_bytes = 1024 * 2048 * 8

    tracemalloc.start()
    try:
        apply_dkstp_operator(a, 2, x)
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    assert peak < expanded_bytes // 4


def test_kronecker_respects_entry_guard(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(stp_algebra, "CONFIG", replace(CONFIG, max_matrix_entries=10))
    with pytest.raises(DimensionError, match="exceeds"):
        kronecker(np.ones((4, 4)), np.ones((2, 2)))


def test_stp_respects_lcm_guard(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(stp_algebra, "CONFIG", replace(CONFIG, max_lcm=6))
    with pytest.raises(DimensionError, match="lcm"):
        stp(np.ones((1, 4)), np.ones((3, 1)))


def test_non_finite_operand_is_rejected() -> None:
    with pytest.raises(DimensionError):
        stp(np.array([[np.nan]]), np.ones((1, 1)))


def test_dkstp_weighted_worked_example() -> None:
    product = dkstp_weighted(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[1.0], [0.0], [2.0], [0.0]]))
    assert np.allclose(product.ravel(), np.array([5.0, 11.0]) / math.sqrt(2.0), rtol=0, atol=1e-12)


def test_stp_worked_example() -> None:
    product = stp(np.array([[1.0, 1.0]]), np.array([[1.0], [2.0], [3.0], [4.0]]))
    assert np.array_equal(product.ravel(), [4.0, 6.0])


def test_kronecker_matches_index_formula(rng: np.random.Generator) -> None:
    a = rng.standard_normal((3, 2))
    b = rng.standard_normal((2, 4))
    product = kronecker(a, b)
    assert product.shape == (6, 8)
    for i, j, r, c in np.ndindex(3, 2, 2, 4):
        assert product[i * 2 + r, j * 4 + c] == a[i, j] * b[r, c]


def test_group_sum_is_linear() -> None:
    rng = np.random.default_rng(4)
    for gamma in (1, 2, 3, 4):
        x, z = rng.standard_normal((2, 12 * gamma))
        alpha, beta = rng.standard_normal(2)
        combined = group_sum(alpha * x + beta * z, gamma).values
        separate = alpha * group_sum(x, gamma).values + beta * group_sum(z, gamma).values
        assert np.max(np.abs(combined - separate)) <= 1e-12


def test_group_sum_never_adds_nonzeros() -> None:
    rng = np.random.default_rng(6)
    for _ in range(100):
        gamma = int(rng.integers(1, 5))
        x = rng.integers(-3, 4, size=6 * gamma).astype(np.float64)
        x[rng.random(x.size) < 0.5] = 0.0
        assert np.count_nonzero(group_sum(x, gamma).values) <= np.count_nonzero(x)


def test_group_sum_inverts_equalize_on_random_vectors() -> None:
    rng = np.random.default_rng(8)
    for _ in range(100):
        gamma = int(rng.integers(1, 6))
        xg = GroupSumSignal(rng.standard_normal(int(rng.integers(1, 20))), gamma)
        assert np.allclose(group_sum(equalize(xg), gamma).values, xg.values, rtol=0, atol=1e-12)
