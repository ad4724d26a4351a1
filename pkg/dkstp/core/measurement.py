"""
Seeded measurement matrices and the CS / STP-CS / DK-STP-CS sensing operators.

Matrices are drawn from ``numpy.random.Philox`` (a counter-based 64-bit
generator) seeded with the descriptor seed; normal variates come from
numpy's ziggurat sampler. Identical descriptors regenerate identical
matrices, so a descriptor can be shipped in place of the matrix itself.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.linalg import toeplitz

from dkstp.core.stp_algebra import (
    apply_dkstp_operator,
    apply_stp_operator,
    epsilon,
    kronecker,
)
from dkstp.exceptions import DimensionError
from dkstp.models import (
    Matrix,
    MatrixDescriptor,
    MatrixKind,
    Method,
    Scaling,
    SensingScheme,
    Signal,
)

logger = logging.getLogger(__name__)

FLOAT_BYTES = 8
# kind u8, rows u32, cols u32, seed u64, scaling u8
DESCRIPTOR_BYTES = 1 + 4 + 4 + 8 + 1


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def generate_matrix(d: MatrixDescriptor) -> Matrix:
    rng = make_rng(d.seed)
    m, n = d.rows, d.cols

    if d.kind is MatrixKind.GAUSSIAN:
        a = rng.standard_normal((m, n))
    elif d.kind is MatrixKind.BERNOULLI:
        a = rng.integers(0, 2, size=(m, n)).astype(np.float64) * 2.0 - 1.0
    else:
        # t[i, j] = g[i - j + n - 1]: first column is g[n-1:], first row runs back from g[n-1].
        g = rng.standard_normal(m + n - 1)
        a = toeplitz(g[n - 1 :], g[n - 1 :: -1])

    if d.scaling is Scaling.INV_SQRT_M:
        a = a * (1.0 / math.sqrt(m))
    return np.ascontiguousarray(a, dtype=np.float64)


@dataclass(frozen=True)
class SensingOperator:
    """
    Immutable sensing operator built from a scheme.

    Only the compact matrix ``matrix`` is stored; the expanded m x p form is
    never held. Safe to share between threads.
    """

    scheme: SensingScheme
    matrix: Matrix
    signal_dim: int
    measurements: int

    @property
    def gamma(self) -> int:
        return self.scheme.gamma

    @property
    def method(self) -> Method:
        return self.scheme.method

    @property
    def stored_entries(self) -> int:
        return int(self.matrix.size)

    @property
    def transmitted_parameters(self) -> int:
        """Entries of the stored matrix: m·p, (m/γ)(p/γ) or m·(p/γ)."""
        return self.stored_entries

    def apply(self, x: Signal) -> Signal:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.signal_dim,):
            raise DimensionError(
                f"Operator expects a signal of dimension {self.signal_dim}, got shape {x.shape}."
            )
        if self.method is Method.DKSTPCS:
            return apply_dkstp_operator(self.matrix, self.gamma, x)
        if self.method is Method.STPCS:
            return apply_stp_operator(self.matrix, self.gamma, x)
        return self.matrix @ x

    def reduced_matrix(self) -> Matrix:
        """
        Matrix acting on the unknown that reconstruction solves for.

        DK-STP-CS solves for the group-sum signal, so this is ``(1/√γ)A``
        (shape m x p/γ). CS returns ``A`` and STP-CS the expanded ``A ⊗ I_γ``.
        """
        if self.method is Method.DKSTPCS:
            if self.gamma == 1:
                return self.matrix
            return self.matrix * (1.0 / math.sqrt(self.gamma))
        if self.method is Method.STPCS:
            if self.gamma == 1:
                return self.matrix
            return kronecker(self.matrix, np.eye(self.gamma))
        return self.matrix

    def materialize(self) -> Matrix:
        """Expanded m x p matrix; oracle use only."""
        if self.method is Method.DKSTPCS:
            return kronecker(self.matrix, epsilon(self.gamma).reshape(1, -1))
        return self.reduced_matrix()


def build_operator(s: SensingScheme, signal_dim: int, measurements: int) -> SensingOperator:
    if signal_dim < 1 or measurements < 1:
        raise DimensionError(
            f"Signal dimension ({signal_dim}) and measurement count ({measurements}) must be positive."
        )
    expected = s.stored_shape(signal_dim, measurements)
    if s.descriptor.shape != expected:
        raise DimensionError(
            f"Descriptor shape {s.descriptor.shape} does not match {s.method.name} with "
            f"p={signal_dim}, m={measurements}, gamma={s.gamma} (expected {expected})."
        )
    matrix = generate_matrix(s.descriptor)
    logger.debug(
        "Built %s operator: p=%d m=%d gamma=%d stored=%dx%d",
        s.method.name,
        signal_dim,
        measurements,
        s.gamma,
        *matrix.shape,
    )
    return SensingOperator(scheme=s, matrix=matrix, signal_dim=signal_dim, measurements=measurements)


def storage_report(
    scheme: SensingScheme,
    signal_dim: int,
    measurements: int,
    blocks: int = 1,
    header_bytes: int = 0,
) -> dict[str, Any]:
    """
    Transmission accounting for one compressed image.

    ``dense_matrix_bytes`` is the cost of shipping the stored matrix as
    float64 values; ``packet_bytes`` is what a descriptor-based packet
    actually costs. Ratios compare against a dense CS transmission of the
    same ``signal_dim`` x ``measurements`` problem.
    """
    rows, cols = scheme.stored_shape(signal_dim, measurements)
    payload_bytes = blocks * measurements * FLOAT_BYTES
    dense_matrix_bytes = rows * cols * FLOAT_BYTES
    cs_dense_matrix_bytes = measurements * signal_dim * FLOAT_BYTES
    packet_bytes = header_bytes + DESCRIPTOR_BYTES + payload_bytes
    return {
        "method": scheme.method.cli_name,
        "gamma": scheme.gamma,
        "stored_shape": [rows, cols],
        "transmitted_parameters": rows * cols,
        "dense_matrix_bytes": dense_matrix_bytes,
        "descriptor_bytes": DESCRIPTOR_BYTES,
        "payload_bytes": payload_bytes,
        "packet_bytes": packet_bytes,
        "matrix_ratio_vs_cs": dense_matrix_bytes / cs_dense_matrix_bytes,
        "dense_transmission_ratio_vs_cs": (dense_matrix_bytes + payload_bytes)
        / (cs_dense_matrix_bytes + payload_bytes),
        "packet_ratio_vs_dense_cs": packet_bytes / (cs_dense_matrix_bytes + payload_bytes),
    }
