"""
Orthonormal DCT-II sparsifying basis.

The analysis matrix ``C`` has rows ``c_k(i) = w_k cos(π(2i+1)k / 2n)`` with
``w_0 = 1/√n`` and ``w_k = √(2/n)``; synthesis is ``Θ = Cᵀ`` so ``x = Θ s``.
Signals are treated as 1-D vectors (column-major vectorized image blocks).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.fft import dct

from dkstp.exceptions import DimensionError
from dkstp.models import Matrix, Signal


class Direction(str, Enum):
    SYNTHESIS = "synthesis"
    ANALYSIS = "analysis"


@lru_cache(maxsize=32)
def _analysis_matrix(n: int) -> Matrix:
    c = dct(np.eye(n), type=2, norm="ortho", axis=0)
    c.setflags(write=False)
    return c


@dataclass(frozen=True)
class DctBasis:
    dim: int
    direction: Direction = Direction.SYNTHESIS

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise DimensionError(f"DCT dimension must be positive, got {self.dim}.")
        object.__setattr__(self, "direction", Direction(self.direction))

    @property
    def synthesis_matrix(self) -> Matrix:
        """Θ, whose columns are the DCT atoms."""
        return _analysis_matrix(self.dim).T

    @property
    def analysis_matrix(self) -> Matrix:
        return _analysis_matrix(self.dim)

    @property
    def matrix(self) -> Matrix:
        if self.direction is Direction.SYNTHESIS:
            return self.synthesis_matrix
        return self.analysis_matrix

    def _check(self, v: Signal) -> Signal:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.dim,):
            raise DimensionError(
                f"DCT basis of dimension {self.dim} cannot act on shape {v.shape}."
            )
        return v


def dct_synthesize(basis: DctBasis, s: Signal) -> Signal:
    return basis.synthesis_matrix @ basis._check(s)


def dct_analyze(basis: DctBasis, x: Signal) -> Signal:
    return basis.analysis_matrix @ basis._check(x)
