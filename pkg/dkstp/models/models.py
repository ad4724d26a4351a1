from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from dkstp.config import MAX_INTENSITY
from dkstp.exceptions import DimensionError

# Dense real matrices and vectors are plain float64 ndarrays.
Matrix = NDArray[np.float64]
Signal = NDArray[np.float64]

U32_MAX = 2**32 - 1
U64_MAX = 2**64 - 1


# =====================================================
# 1. ALGEBRA
# =====================================================


@dataclass(frozen=True)
class GroupSumSignal:
    """
    Sums of a signal over consecutive, non-overlapping windows of ``gamma`` entries.
    """

    values: Signal
    gamma: int

    def __post_init__(self) -> None:
        if self.gamma < 1:
            raise DimensionError(f"gamma must be positive, got {self.gamma}.")
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise DimensionError("Group-sum values must be a non-empty vector.")
        if not np.all(np.isfinite(values)):
            raise DimensionError("Group-sum values must be finite.")
        object.__setattr__(self, "values", values)

    @property
    def groups(self) -> int:
        return int(self.values.size)

    @property
    def signal_dim(self) -> int:
        return self.groups * self.gamma


# =====================================================
# 2. MEASUREMENT
# =====================================================


class MatrixKind(IntEnum):
    GAUSSIAN = 0
    BERNOULLI = 1
    TOEPLITZ = 2

    @classmethod
    def from_name(cls, name: str) -> "MatrixKind":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(
                f"Unknown matrix kind {name!r}; expected gaussian, bernoulli or toeplitz."
            )


class Scaling(IntEnum):
    UNIT = 0
    INV_SQRT_M = 1


class Method(IntEnum):
    CS = 0
    STPCS = 1
    DKSTPCS = 2

    @property
    def cli_name(self) -> str:
        return {Method.CS: "cs", Method.STPCS: "stp", Method.DKSTPCS: "dkstp"}[self]

    @classmethod
    def from_name(cls, name: str) -> "Method":
        lookup = {
            "cs": cls.CS,
            "stp": cls.STPCS,
            "stpcs": cls.STPCS,
            "dkstp": cls.DKSTPCS,
            "dkstpcs": cls.DKSTPCS,
        }
        key = name.strip().lower().replace("-", "")
        if key not in lookup:
            raise ValueError(f"Unknown method {name!r}; expected cs, stp or dkstp.")
        return lookup[key]


@dataclass(frozen=True)
class MatrixDescriptor:
    """
    Everything needed to regenerate a measurement matrix bit for bit.
    """

    kind: MatrixKind
    rows: int
    cols: int
    seed: int
    scaling: Scaling = Scaling.INV_SQRT_M

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", MatrixKind(self.kind))
        object.__setattr__(self, "scaling", Scaling(self.scaling))
        if not 1 <= self.rows <= U32_MAX or not 1 <= self.cols <= U32_MAX:
            raise DimensionError(
                f"Matrix shape {self.rows}x{self.cols} must be positive and fit in 32 bits."
            )
        if not 0 <= self.seed <= U64_MAX:
            raise DimensionError(f"Seed {self.seed} does not fit in 64 unsigned bits.")

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def resized(self, rows: int, cols: int) -> "MatrixDescriptor":
        return replace(self, rows=rows, cols=cols)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.name.lower(),
            "rows": self.rows,
            "cols": self.cols,
            "seed": self.seed,
            "scaling": self.scaling.name.lower(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MatrixDescriptor":
        try:
            return cls(
                kind=MatrixKind.from_name(str(data["kind"])),
                rows=int(data["rows"]),
                cols=int(data["cols"]),
                seed=int(data["seed"]),
                scaling=Scaling[str(data.get("scaling", "inv_sqrt_m")).upper()],
            )
        except KeyError as exc:
            raise ValueError(f"Matrix descriptor is missing field {exc}.") from exc


@dataclass(frozen=True)
class SensingScheme:
    """
    A measurement method, its grouping parameter and the matrix it draws from.

    The descriptor shape is the shape of the *stored* matrix: m x p for CS,
    (m/gamma) x (p/gamma) for STP-CS and m x (p/gamma) for DK-STP-CS.
    """

    method: Method
    gamma: int
    descriptor: MatrixDescriptor

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        if self.gamma < 1:
            raise DimensionError(f"gamma must be positive, got {self.gamma}.")
        if self.gamma > 0xFFFF:
            raise DimensionError(f"gamma {self.gamma} does not fit in 16 bits.")

    def stored_shape(self, signal_dim: int, measurements: int) -> tuple[int, int]:
        """
        Shape of the stored matrix for a signal of ``signal_dim`` samples
        measured with ``measurements`` values.
        """
        gamma = self.gamma
        if self.method is Method.CS:
            return measurements, signal_dim
        if signal_dim % gamma:
            raise DimensionError(
                f"gamma={gamma} must divide the signal dimension {signal_dim}."
            )
        if self.method is Method.STPCS:
            if measurements % gamma:
                raise DimensionError(
                    f"gamma={gamma} must divide the measurement count {measurements} for STP-CS."
                )
            return measurements // gamma, signal_dim // gamma
        return measurements, signal_dim // gamma

    def fitted(self, signal_dim: int, measurements: int) -> "SensingScheme":
        """
        Return a copy whose descriptor shape matches the given dimensions.
        """
        rows, cols = self.stored_shape(signal_dim, measurements)
        return replace(self, descriptor=self.descriptor.resized(rows, cols))

    @classmethod
    def create(
        cls,
        method: Method,
        gamma: int,
        signal_dim: int,
        measurements: int,
        kind: MatrixKind = MatrixKind.GAUSSIAN,
        seed: int = 0,
        scaling: Scaling = Scaling.INV_SQRT_M,
    ) -> "SensingScheme":
        template = cls(
            method=method,
            gamma=gamma,
            descriptor=MatrixDescriptor(kind=kind, rows=1, cols=1, seed=seed, scaling=scaling),
        )
        return template.fitted(signal_dim, measurements)


# =====================================================
# 3. IMAGES & PIPELINE
# =====================================================


@dataclass(frozen=True)
class GrayImage:
    """
    8-bit grayscale image stored row-major as a (height, width) array.
    """

    pixels: NDArray[np.uint8]

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 2 or pixels.size == 0:
            raise DimensionError("GrayImage pixels must be a non-empty 2-D array.")
        if pixels.dtype != np.uint8:
            raise DimensionError(f"GrayImage pixels must be uint8, got {pixels.dtype}.")
        object.__setattr__(self, "pixels", np.ascontiguousarray(pixels))

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    def normalized(self) -> NDArray[np.float64]:
        """Pixel values mapped to [0, 1]."""
        return self.pixels.astype(np.float64) / MAX_INTENSITY

    @classmethod
    def from_normalized(cls, values: NDArray[np.float64]) -> "GrayImage":
        """
        Clamp [0, 1] intensities and quantize them to 8 bits.
        """
        clipped = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
        return cls(np.rint(clipped * MAX_INTENSITY).astype(np.uint8))


@dataclass(frozen=True)
class BlockLayout:
    """
    Tiling of an image into equal blocks, enumerated column-major.
    """

    image_w: int
    image_h: int
    block_w: int
    block_h: int

    def __post_init__(self) -> None:
        for label, value in (
            ("image width", self.image_w),
            ("image height", self.image_h),
            ("block width", self.block_w),
            ("block height", self.block_h),
        ):
            if value < 1:
                raise DimensionError(f"{label} must be positive, got {value}.")
        if self.block_w > 0xFFFF or self.block_h > 0xFFFF:
            raise DimensionError("Block dimensions must fit in 16 bits.")
        if self.image_w % self.block_w or self.image_h % self.block_h:
            raise DimensionError(
                f"Block {self.block_w}x{self.block_h} does not tile image "
                f"{self.image_w}x{self.image_h}; padding is not supported."
            )

    @property
    def block_dim(self) -> int:
        return self.block_w * self.block_h

    @property
    def blocks_x(self) -> int:
        return self.image_w // self.block_w

    @property
    def blocks_y(self) -> int:
        return self.image_h // self.block_h

    @property
    def block_count(self) -> int:
        return self.blocks_x * self.blocks_y

    @classmethod
    def square(cls, image: GrayImage, block: int) -> "BlockLayout":
        return cls(image.width, image.height, block, block)

    @classmethod
    def whole(cls, image: GrayImage) -> "BlockLayout":
        return cls(image.width, image.height, image.width, image.height)

    def split(self, values: NDArray) -> NDArray:
        """
        Cut a (height, width) array into column-major vectorized blocks.

        Row ``i`` of the result is block ``i``: block-columns are enumerated
        outermost, and each block is flattened column by column.
        """
        values = np.asarray(values)
        if values.shape != (self.image_h, self.image_w):
            raise DimensionError(
                f"Array of shape {values.shape} does not match layout "
                f"{self.image_w}x{self.image_h}."
            )
        tiles = values.reshape(self.blocks_y, self.block_h, self.blocks_x, self.block_w)
        return tiles.transpose(2, 0, 3, 1).reshape(self.block_count, self.block_dim)

    def assemble(self, vectors: NDArray) -> NDArray:
        """Inverse of :meth:`split`."""
        vectors = np.asarray(vectors)
        if vectors.shape != (self.block_count, self.block_dim):
            raise DimensionError(
                f"Expected {self.block_count} blocks of {self.block_dim} values, "
                f"got shape {vectors.shape}."
            )
        tiles = vectors.reshape(self.blocks_x, self.blocks_y, self.block_w, self.block_h)
        return tiles.transpose(1, 3, 0, 2).reshape(self.image_h, self.image_w)


@dataclass(frozen=True)
class CompressedPacket:
    """
    Per-block measurement vectors plus everything needed to rebuild the operator.

    ``measurements`` has shape (block_count, m) in column-major block order.
    """

    layout: BlockLayout
    scheme: SensingScheme
    measurements: NDArray[np.float64]
    format_version: int = 1

    def __post_init__(self) -> None:
        y = np.asarray(self.measurements, dtype=np.float64)
        if y.ndim != 2:
            raise DimensionError("Packet measurements must be a (blocks, m) array.")
        if y.shape[0] != self.layout.block_count:
            raise DimensionError(
                f"Packet holds {y.shape[0]} blocks, layout requires {self.layout.block_count}."
            )
        if y.shape[1] < 1:
            raise DimensionError("Packets need at least one measurement per block.")
        if not np.all(np.isfinite(y)):
            raise DimensionError("Packet measurements must be finite.")
        object.__setattr__(self, "measurements", y)

    @property
    def m(self) -> int:
        return int(self.measurements.shape[1])


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian pixel noise on [0, 1] intensities; mean is fixed at 0."""

    variance: float = 0.001
    seed: int = 0

    def __post_init__(self) -> None:
        if not math.isfinite(self.variance) or self.variance < 0:
            raise ValueError(f"Noise variance must be finite and >= 0, got {self.variance}.")


# =====================================================
# 4. SOLVERS
# =====================================================


class SolverKind(str, Enum):
    BP = "bp"
    BPDN = "bpdn"
    OMP = "omp"


@dataclass(frozen=True)
class SolverConfig:
    kind: SolverKind = SolverKind.BP
    max_iters: int = 2000
    abs_tol: float = 1e-7
    rel_tol: float = 1e-5
    rho: float = 1.0
    lam: float = 0.01
    # OMP stops after this many atoms; None means "until the residual is small".
    omp_sparsity: Optional[int] = None
    # BP only: least-squares refit on the detected support, kept when feasible and not worse in L1.
    polish: bool = True
    # BPDN only: least-squares refit on the selected support. Leaves the lasso minimizer.
    debias: bool = False
    # Residual balancing of rho every few ADMM iterations.
    auto_rho: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", SolverKind(self.kind))
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1.")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("Solver tolerances must be positive.")
        if self.rho <= 0:
            raise ValueError("rho must be positive.")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative.")
        if self.omp_sparsity is not None and self.omp_sparsity < 1:
            raise ValueError("omp_sparsity must be positive when given.")


@dataclass(frozen=True)
class SolveReport:
    solution: Signal
    iterations: int
    primal_residual: float
    dual_residual: float
    converged: bool


# =====================================================
# 5. ANALYSIS
# =====================================================


class RipMode(str, Enum):
    EXHAUSTIVE = "exhaustive"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class SparkResult:
    """
    ``spark`` is ``cols + 1`` for full column rank (``full_spark``). When the
    search stopped at its limit without a verdict, ``lower_bound`` is set and
    ``spark`` is ``limit + 1``, meaning "larger than the limit".
    """

    spark: int
    witness: tuple[int, ...] = ()
    full_spark: bool = False
    lower_bound: bool = False


@dataclass(frozen=True)
class RipEstimate:
    order: int
    delta: float
    mode: RipMode
    supports_checked: int

    @property
    def failed(self) -> bool:
        return not self.delta < 1.0


@dataclass(frozen=True)
class IntraGroupResult:
    within_group_equal: bool
    cross_group_coherence: float
    tau: float
    holds: bool


@dataclass(frozen=True)
class UniquenessBounds:
    k_spark: int
    k_mu: int
    spark: SparkResult
    coherence: float


# =====================================================
# 6. METRICS & REPORTS
# =====================================================


@dataclass(frozen=True)
class QualityReport:
    psnr_db: float
    mse: float
    mae: float

    @property
    def lossless(self) -> bool:
        return self.mse == 0.0


@dataclass(frozen=True)
class ErrorDecomposition:
    distribution_error: float
    cs_error: float
    original_error: float
    total_l2: float

    @property
    def bound_stated(self) -> float:
        return self.distribution_error + self.cs_error + self.original_error

    @property
    def bound_safe(self) -> float:
        return self.distribution_error + 2.0 * self.cs_error + self.original_error

    @property
    def stated_bound_holds(self) -> bool:
        return self.total_l2 <= self.bound_stated

    @classmethod
    def combine(cls, parts: list["ErrorDecomposition"]) -> "ErrorDecomposition":
        """
        Aggregate per-block decompositions into the decomposition of the
        concatenated signal: L1 terms add, the L2 total adds in quadrature.
        """
        return cls(
            distribution_error=float(sum(p.distribution_error for p in parts)),
            cs_error=float(sum(p.cs_error for p in parts)),
            original_error=float(sum(p.original_error for p in parts)),
            total_l2=float(math.sqrt(sum(p.total_l2**2 for p in parts))),
        )

    def to_dict(self) -> dict:
        return {
            "distribution_error": self.distribution_error,
            "cs_error": self.cs_error,
            "original_error": self.original_error,
            "total_l2": self.total_l2,
            "bound_stated": self.bound_stated,
            "bound_safe": self.bound_safe,
        }


@dataclass(frozen=True)
class BlockReport:
    index: int
    converged: bool
    iterations: int
    primal_residual: float


@dataclass(frozen=True)
class ReconstructionReport:
    """
    Output of a reconstruction: the 8-bit image, its [0, 1] float source,
    per-block solver status and, when a reference was supplied, quality and
    error decomposition.
    """

    image: GrayImage
    signal: NDArray[np.float64]
    blocks: list[BlockReport] = field(default_factory=list)
    quality: Optional[QualityReport] = None
    decomposition: Optional[ErrorDecomposition] = None
    stated_bound_violations: int = 0

    @property
    def all_converged(self) -> bool:
        return all(block.converged for block in self.blocks)


@dataclass(frozen=True)
class ErrorMap:
    heatmap: NDArray[np.float64]
    bin_edges: NDArray[np.float64]
    counts: NDArray[np.int64]
    mae: float
