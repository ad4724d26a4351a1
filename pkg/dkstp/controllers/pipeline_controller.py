from __future__ import annotations

import logging
import math
from concurrent.futures import Executor, ThreadPoolExecutor
from typing import Callable, Optional

import numpy as np
from numpy.typing import NDArray

from dkstp.config import CONFIG
from dkstp.core.measurement import SensingOperator, build_operator, make_rng
from dkstp.core.metrics import decompose_error, quality
from dkstp.core.solver import Solver, build_solver
from dkstp.core.sparsity import DctBasis
from dkstp.core.stp_algebra import equalize
from dkstp.exceptions import DimensionError
from dkstp.models import (
    BlockLayout,
    BlockReport,
    CompressedPacket,
    ErrorDecomposition,
    GrayImage,
    GroupSumSignal,
    Method,
    NoiseSpec,
    ReconstructionReport,
    Scaling,
    SensingScheme,
    SolveReport,
    SolverConfig,
)

ExecutorFactory = Callable[[int], Executor]

logger = logging.getLogger(__name__)


def measurement_count(method: Method, gamma: int, signal_dim: int, cr: float) -> int:
    """
    Measurements per block for compression ratio ``cr``: ``round(cr·p)``,
    at least 1. STP-CS rounds to a multiple of ``gamma``.
    """
    if not math.isfinite(cr) or not 0.0 < cr <= 1.0:
        raise ValueError(f"Compression ratio must lie in (0, 1], got {cr}.")
    if Method(method) is Method.STPCS:
        return gamma * max(1, math.floor(cr * signal_dim / gamma + 0.5))
    return max(1, math.floor(cr * signal_dim + 0.5))


def noise_field(height: int, width: int, spec: NoiseSpec) -> NDArray[np.float64]:
    """
    Gaussian noise on the [0, 1] pixel scale, drawn in column-major pixel
    order so that pixel ``(r, c)`` always receives draw ``c·height + r``.
    """
    rng = make_rng(spec.seed)
    draws = rng.standard_normal(height * width)
    return draws.reshape((height, width), order="F") * math.sqrt(spec.variance)


class PipelineController:
    """
    Blockwise compression and reconstruction of grayscale images.

    One operator is regenerated from the packet descriptor and shared by all
    blocks; blocks are solved concurrently on a thread pool. Results do not
    depend on the worker count.
    """

    def __init__(
        self,
        workers: int | None = None,
        executor_factory: ExecutorFactory | None = None,
    ) -> None:
        self.workers = max(1, workers or CONFIG.workers)
        self._executor_factory: ExecutorFactory = executor_factory or (
            lambda n: ThreadPoolExecutor(max_workers=n, thread_name_prefix="dkstp-block")
        )

    # ------------------------------------------------------------------
    # Compression
    # ------------------------------------------------------------------
    def compress(
        self,
        image: GrayImage,
        scheme: SensingScheme,
        layout: BlockLayout,
        cr: float,
    ) -> CompressedPacket:
        if (image.width, image.height) != (layout.image_w, layout.image_h):
            raise DimensionError(
                f"Layout {layout.image_w}x{layout.image_h} does not match image "
                f"{image.width}x{image.height}."
            )
        p = layout.block_dim
        m = measurement_count(scheme.method, scheme.gamma, p, cr)
        scheme = scheme.fitted(p, m)
        operator = build_operator(scheme, p, m)

        blocks = layout.split(image.normalized())
        measurements = np.empty((layout.block_count, m))
        for i, x in enumerate(blocks):
            measurements[i] = operator.apply(x)

        logger.info(
            "Compressed %dx%d image: method=%s gamma=%d blocks=%d p=%d m=%d",
            image.width,
            image.height,
            scheme.method.cli_name,
            scheme.gamma,
            layout.block_count,
            p,
            m,
        )
        return CompressedPacket(layout=layout, scheme=scheme, measurements=measurements)

    # ------------------------------------------------------------------
    # Reconstruction
    # ------------------------------------------------------------------
    @staticmethod
    def unknown_dim(scheme: SensingScheme, signal_dim: int) -> int:
        """Length of the vector the solver recovers: p/γ for DK-STP-CS, p otherwise."""
        if scheme.method is Method.DKSTPCS:
            return signal_dim // scheme.gamma
        return signal_dim

    def _sensing_problem(
        self, operator: SensingOperator, basis: DctBasis
    ) -> tuple[NDArray[np.float64], float]:
        psi = operator.reduced_matrix() @ basis.synthesis_matrix
        # The solver always works on the 1/sqrt(rows)-scaled matrix.
        scale = 1.0
        if operator.scheme.descriptor.scaling is Scaling.UNIT:
            scale = 1.0 / math.sqrt(operator.scheme.descriptor.rows)
            psi = psi * scale
        return psi, scale

    def _recover_block(
        self,
        solver: Solver,
        basis: DctBasis,
        scheme: SensingScheme,
        y: NDArray[np.float64],
    ) -> tuple[NDArray[np.float64], SolveReport]:
        report = solver.solve(y)
        recovered = basis.synthesis_matrix @ report.solution
        if scheme.method is Method.DKSTPCS:
            recovered = equalize(GroupSumSignal(recovered, scheme.gamma))
        return recovered, report

    def reconstruct(
        self,
        packet: CompressedPacket,
        basis: Optional[DctBasis] = None,
        cfg: Optional[SolverConfig] = None,
        reference: Optional[GrayImage] = None,
    ) -> ReconstructionReport:
        """
        Recover every block of ``packet`` and reassemble the image.

        Non-converged blocks keep their best iterate and are flagged in the
        report. When ``reference`` is given the report also carries quality
        figures and the error decomposition, checked on every block.
        """
        cfg = cfg or SolverConfig()
        layout, scheme = packet.layout, packet.scheme
        p, m = layout.block_dim, packet.m
        operator = build_operator(scheme, p, m)

        n = self.unknown_dim(scheme, p)
        basis = basis or DctBasis(n)
        if basis.dim != n:
            raise DimensionError(
                f"Sparsifying basis of dimension {basis.dim} does not match the "
                f"{n}-dimensional unknown of {scheme.method.name}."
            )

        psi, scale = self._sensing_problem(operator, basis)
        solver = build_solver(psi, cfg)
        rhs = packet.measurements * scale

        with self._executor_factory(self.workers) as executor:
            results = list(
                executor.map(lambda y: self._recover_block(solver, basis, scheme, y), rhs)
            )

        signals = np.vstack([signal for signal, _ in results])
        blocks = [
            BlockReport(
                index=i,
                converged=report.converged,
                iterations=report.iterations,
                primal_residual=report.primal_residual,
            )
            for i, (_, report) in enumerate(results)
        ]
        stalled = sum(1 for block in blocks if not block.converged)
        if stalled:
            logger.warning(
                "%d of %d blocks did not converge within %d iterations; using best iterates.",
                stalled,
                len(blocks),
                cfg.max_iters,
            )

        values = np.clip(layout.assemble(signals), 0.0, 1.0)
        image = GrayImage.from_normalized(values)

        quality_report = None
        decomposition = None
        violations = 0
        if reference is not None:
            quality_report = quality(reference, image)
            if p % scheme.gamma == 0:
                originals = layout.split(reference.normalized())
                parts = [
                    decompose_error(x, x_star, scheme.gamma)
                    for x, x_star in zip(originals, signals)
                ]
                violations = sum(1 for part in parts if not part.stated_bound_holds)
                decomposition = ErrorDecomposition.combine(parts)
            logger.info(
                "Reconstruction quality: PSNR=%.3f dB MSE=%.4f MAE=%.4f",
                quality_report.psnr_db,
                quality_report.mse,
                quality_report.mae,
            )

        return ReconstructionReport(
            image=image,
            signal=values,
            blocks=blocks,
            quality=quality_report,
            decomposition=decomposition,
            stated_bound_violations=violations,
        )

    # ------------------------------------------------------------------
    # Noise
    # ------------------------------------------------------------------
    def inject_noise(self, image: GrayImage, spec: NoiseSpec) -> GrayImage:
        if spec.variance == 0.0:
            return GrayImage(image.pixels.copy())
        noisy = image.normalized() + noise_field(image.height, image.width, spec)
        return GrayImage.from_normalized(noisy)


# ----------------------------------------------------------------------
# Functional entry points
# ----------------------------------------------------------------------
def compress(
    image: GrayImage, scheme: SensingScheme, layout: BlockLayout, cr: float
) -> CompressedPacket:
    return PipelineController().compress(image, scheme, layout, cr)


def reconstruct(
    packet: CompressedPacket,
    basis: Optional[DctBasis] = None,
    cfg: Optional[SolverConfig] = None,
    reference: Optional[GrayImage] = None,
) -> ReconstructionReport:
    return PipelineController().reconstruct(packet, basis, cfg, reference)


def inject_noise(image: GrayImage, spec: NoiseSpec) -> GrayImage:
    return PipelineController().inject_noise(image, spec)
