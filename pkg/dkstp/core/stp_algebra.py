"""
Semi-tensor product algebra.

Kronecker, STP and dimension-keeping STP products, the group-sum and
equalization operators, and the implicit application of ``A ⊗ ε_γᵀ``.

Grouping follows contiguous, non-overlapping windows: entry ``j`` of the
group-sum signal is ``x[jγ] + ... + x[jγ + γ - 1]``.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from dkstp.config import CONFIG
from dkstp.exceptions import DimensionError
from dkstp.models import GroupSumSignal, Matrix, Signal

logger = logging.getLogger(__name__)


def _as_matrix(a: Matrix, label: str) -> Matrix:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionError(f"{label} must be a non-empty 2-D matrix, got shape {arr.shape}.")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{label} must contain only finite entries.")
    return arr


def _as_signal(x: Signal, label: str = "signal") -> Signal:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"{label} must be a non-empty vector, got shape {arr.shape}.")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{label} must contain only finite values.")
    return arr


def _check_entries(rows: int, cols: int) -> None:
    if rows * cols > CONFIG.max_matrix_entries:
        raise DimensionError(
            f"Result of {rows}x{cols} exceeds the configured maximum of "
            f"{CONFIG.max_matrix_entries} entries."
        )


def _common_dimension(n: int, p: int) -> int:
    t = math.lcm(n, p)
    if t > CONFIG.max_lcm:
        raise DimensionError(
            f"lcm({n}, {p}) = {t} exceeds the configured maximum {CONFIG.max_lcm}."
        )
    return t


def epsilon(k: int) -> Signal:
    """Weighted ones vector ε_k = (1/√k)·1_k."""
    if k < 1:
        raise DimensionError(f"epsilon length must be positive, got {k}.")
    return np.full(k, 1.0 / math.sqrt(k))


def kronecker(a: Matrix, b: Matrix) -> Matrix:
    a = _as_matrix(a, "left operand")
    b = _as_matrix(b, "right operand")
    _check_entries(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1])
    return np.kron(a, b)


def stp(a: Matrix, b: Matrix) -> Matrix:
    """
    Semi-tensor product ``(a ⊗ I_{t/n})(b ⊗ I_{t/p})`` with ``t = lcm(n, p)``.

    Degenerates to ``a @ b`` when the inner dimensions agree.
    """
    a = _as_matrix(a, "left operand")
    b = _as_matrix(b, "right operand")
    n, p = a.shape[1], b.shape[0]
    if n == p:
        return a @ b
    t = _common_dimension(n, p)
    left = kronecker(a, np.eye(t // n))
    right = kronecker(b, np.eye(t // p))
    return left @ right


def dkstp_weighted(a: Matrix, b: Matrix) -> Matrix:
    """
    Weighted dimension-keeping STP ``(a ⊗ ε_{t/n}ᵀ)(b ⊗ ε_{t/p})``.

    The result keeps the shape ``a.rows x b.cols``.
    """
    a = _as_matrix(a, "left operand")
    b = _as_matrix(b, "right operand")
    n, p = a.shape[1], b.shape[0]
    if n == p:
        return a @ b
    t = _common_dimension(n, p)
    left = kronecker(a, epsilon(t // n).reshape(1, -1))
    right = kronecker(b, epsilon(t // p).reshape(-1, 1))
    return left @ right


def general_dkstp(a: Matrix, b: Matrix) -> Matrix:
    """
    Unweighted dimension-keeping STP ``(a ⊗ 1_{t/n}ᵀ)(b ⊗ 1_{t/p})``.

    Provided for cross-checks; production paths use the weighted form.
    """
    a = _as_matrix(a, "left operand")
    b = _as_matrix(b, "right operand")
    n, p = a.shape[1], b.shape[0]
    t = _common_dimension(n, p)
    left = kronecker(a, np.ones((1, t // n)))
    right = kronecker(b, np.ones((t // p, 1)))
    return left @ right


def group_sum(x: Signal, gamma: int) -> GroupSumSignal:
    x = _as_signal(x)
    if gamma < 1 or x.size % gamma:
        raise DimensionError(f"gamma={gamma} must divide the signal dimension {x.size}.")
    if gamma == 1:
        return GroupSumSignal(x.copy(), 1)
    return GroupSumSignal(x.reshape(-1, gamma).sum(axis=1), gamma)


def equalize(xg: GroupSumSignal) -> Signal:
    """Spread each group sum evenly (sum/γ) back over its γ positions."""
    if xg.gamma == 1:
        return xg.values.copy()
    return np.repeat(xg.values / xg.gamma, xg.gamma)


def apply_dkstp_operator(a: Matrix, gamma: int, x: Signal) -> Signal:
    """
    Compute ``(a ⊗ ε_γᵀ) x`` as ``(1/√γ) a · group_sum(x, γ)`` without
    forming the expanded matrix.
    """
    a = _as_matrix(a, "measurement matrix")
    x = _as_signal(x)
    if gamma < 1 or x.size != a.shape[1] * gamma:
        raise DimensionError(
            f"Signal of dimension {x.size} does not match {a.shape[0]}x{a.shape[1]} "
            f"matrix with gamma={gamma} (expected {a.shape[1] * gamma})."
        )
    y = a @ group_sum(x, gamma).values
    if gamma == 1:
        return y
    return y * (1.0 / math.sqrt(gamma))


def apply_stp_operator(a: Matrix, gamma: int, x: Signal) -> Signal:
    """
    Compute ``(a ⊗ I_γ) x`` by acting on the γ interleaved sub-signals.
    """
    a = _as_matrix(a, "measurement matrix")
    x = _as_signal(x)
    if gamma < 1 or x.size != a.shape[1] * gamma:
        raise DimensionError(
            f"Signal of dimension {x.size} does not match {a.shape[0]}x{a.shape[1]} "
            f"matrix with gamma={gamma} (expected {a.shape[1] * gamma})."
        )
    if gamma == 1:
        return a @ x
    return (a @ x.reshape(-1, gamma)).reshape(-1)


def materialize_dkstp_matrix(a: Matrix, gamma: int) -> Matrix:
    """Expanded ``a ⊗ ε_γᵀ``; for oracles and desk-scale analysis only."""
    return kronecker(a, epsilon(gamma).reshape(1, -1))
