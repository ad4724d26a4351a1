from __future__ import annotations

import logging
import time
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from dkstp.config import BENCHMARK_CSV_HEADER, CONFIG, MAX_INTENSITY, SWEEP_DIFF_CSV_HEADER
from dkstp.controllers.pipeline_controller import PipelineController, measurement_count
from dkstp.core.metrics import mean_reconstruction_error_map
from dkstp.exceptions import DimensionError
from dkstp.models import (
    BlockLayout,
    ErrorMap,
    GrayImage,
    MatrixKind,
    Method,
    NoiseSpec,
    SensingScheme,
    SolverConfig,
)

logger = logging.getLogger(__name__)


def trial_seeds(seed: int, trial: int) -> tuple[int, int]:
    """
    Independent (matrix, noise) seeds for one trial. All methods of a trial
    share them, so comparisons are paired.
    """
    state = np.random.SeedSequence([seed, trial]).generate_state(2, dtype=np.uint64)
    return int(state[0]), int(state[1])


class ExperimentController:
    """
    Drives benchmark grids, MAE sweeps and error-map experiments on top of
    :class:`PipelineController`.
    """

    def __init__(
        self,
        pipeline: PipelineController | None = None,
        solver_config: SolverConfig | None = None,
    ) -> None:
        self.pipeline = pipeline or PipelineController()
        self.solver_config = solver_config or SolverConfig()

    # ------------------------------------------------------------------
    # Method comparison
    # ------------------------------------------------------------------
    def benchmark(
        self,
        image: GrayImage,
        methods: Sequence[Method],
        cr_grid: Iterable[float],
        gamma: int = CONFIG.default_gamma,
        trials: int = 1,
        seed: int = 0,
        block: int = CONFIG.default_block,
        kind: MatrixKind = MatrixKind.GAUSSIAN,
        noise_var: float = 0.0,
    ) -> pd.DataFrame:
        """
        One row per (trial, cr, method) with the columns of
        :data:`BENCHMARK_CSV_HEADER`.

        Noise, when requested, corrupts the input once per trial; quality is
        measured against the clean image.
        """
        if trials < 1:
            raise ValueError("At least one trial is required.")
        cr_values = [float(cr) for cr in cr_grid]
        if not cr_values or not methods:
            raise ValueError("Benchmark needs at least one method and one compression ratio.")

        layout = BlockLayout.square(image, block)
        p = layout.block_dim
        rows: list[dict] = []

        for trial in range(trials):
            matrix_seed, noise_seed = trial_seeds(seed, trial)
            source = image
            if noise_var > 0.0:
                source = self.pipeline.inject_noise(image, NoiseSpec(variance=noise_var, seed=noise_seed))

            for cr in cr_values:
                for method in methods:
                    m = measurement_count(method, gamma, p, cr)
                    scheme = SensingScheme.create(method, gamma, p, m, kind=kind, seed=matrix_seed)
                    started = time.perf_counter()
                    packet = self.pipeline.compress(source, scheme, layout, cr)
                    report = self.pipeline.reconstruct(packet, cfg=self.solver_config, reference=image)
                    elapsed = time.perf_counter() - started

                    q = report.quality
                    rows.append(
                        {
                            "method": method.cli_name,
                            "cr": cr,
                            "gamma": gamma,
                            "trial": trial,
                            "psnr_db": q.psnr_db,
                            "mse": q.mse,
                            "mae": q.mae,
                            "seconds": elapsed,
                        }
                    )
                    logger.info(
                        "benchmark trial=%d cr=%.3f method=%s psnr=%.3f dB (%.2fs)",
                        trial,
                        cr,
                        method.cli_name,
                        q.psnr_db,
                        elapsed,
                    )

        return pd.DataFrame(rows, columns=list(BENCHMARK_CSV_HEADER))

    # ------------------------------------------------------------------
    # MAE against compression ratio
    # ------------------------------------------------------------------
    def _random_blocks(self, image: GrayImage, block: int, count: int, seed: int) -> list[GrayImage]:
        if block > image.width or block > image.height:
            raise DimensionError(
                f"Block {block} does not fit in a {image.width}x{image.height} image."
            )
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB10C]))
        tops = rng.integers(0, image.height - block + 1, size=count)
        lefts = rng.integers(0, image.width - block + 1, size=count)
        return [
            GrayImage(image.pixels[top : top + block, left : left + block].copy())
            for top, left in zip(tops, lefts)
        ]

    def mae_vs_cr_sweep(
        self,
        image: GrayImage,
        cr_grid: Iterable[float],
        gamma: int = CONFIG.default_gamma,
        trials: int = 1,
        blocks: int = 5,
        block: int = 64,
        seed: int = 0,
        method: Method = Method.DKSTPCS,
        kind: MatrixKind = MatrixKind.GAUSSIAN,
    ) -> tuple[pd.DataFrame, pd.DataFrame]:
        """
        Mean absolute error over ``blocks`` randomly placed blocks for every
        compression ratio and trial.

        Returns the per-trial table (benchmark columns, MAE and MSE on the
        [0, 1] intensity scale) and the per-ratio summary with the
        doubled-ratio difference ``MAE(c) − MAE(2c)`` and the mean
        distribution error per pixel.
        """
        cr_values = [float(cr) for cr in cr_grid]
        if not cr_values:
            raise ValueError("MAE sweep needs at least one compression ratio.")
        if trials < 1 or blocks < 1:
            raise ValueError("MAE sweep needs at least one trial and one block.")

        patches = self._random_blocks(image, block, blocks, seed)
        layout = BlockLayout.whole(patches[0])
        p = layout.block_dim
        rows: list[dict] = []
        distribution: dict[float, list[float]] = {cr: [] for cr in cr_values}

        for trial in range(trials):
            matrix_seed, _ = trial_seeds(seed, trial)
            for cr in cr_values:
                m = measurement_count(method, gamma, p, cr)
                scheme = SensingScheme.create(method, gamma, p, m, kind=kind, seed=matrix_seed)
                started = time.perf_counter()
                psnr, mse, mae = [], [], []
                for patch in patches:
                    packet = self.pipeline.compress(patch, scheme, layout, cr)
                    report = self.pipeline.reconstruct(packet, cfg=self.solver_config, reference=patch)
                    psnr.append(report.quality.psnr_db)
                    mse.append(report.quality.mse / MAX_INTENSITY**2)
                    mae.append(report.quality.mae / MAX_INTENSITY)
                    if report.decomposition is not None:
                        distribution[cr].append(report.decomposition.distribution_error / p)
                rows.append(
                    {
                        "method": method.cli_name,
                        "cr": cr,
                        "gamma": gamma,
                        "trial": trial,
                        "psnr_db": float(np.mean(psnr)),
                        "mse": float(np.mean(mse)),
                        "mae": float(np.mean(mae)),
                        "seconds": time.perf_counter() - started,
                    }
                )

        table = pd.DataFrame(rows, columns=list(BENCHMARK_CSV_HEADER))
        return table, self._doubled_ratio_table(table, distribution)

    @staticmethod
    def _doubled_ratio_table(
        table: pd.DataFrame, distribution: dict[float, list[float]]
    ) -> pd.DataFrame:
        means = table.groupby("cr", sort=True)["mae"].mean()
        grid = means.index.to_numpy(dtype=np.float64)
        records = []
        for cr, mae in means.items():
            match = np.flatnonzero(np.isclose(grid, 2.0 * cr, rtol=0.0, atol=1e-9))
            doubled = float(means.iloc[match[0]]) if match.size else float("nan")
            samples = distribution.get(cr, [])
            records.append(
                {
                    "cr": cr,
                    "mae": float(mae),
                    "mae_at_double_cr": doubled,
                    "mae_difference": float(mae) - doubled,
                    "distribution_mae": float(np.mean(samples)) if samples else float("nan"),
                }
            )
        return pd.DataFrame(records, columns=list(SWEEP_DIFF_CSV_HEADER))

    # ------------------------------------------------------------------
    # Equalization error field
    # ------------------------------------------------------------------
    def error_decomposition(
        self, image: GrayImage, gamma: int, block: int | None = None
    ) -> ErrorMap:
        layout = BlockLayout.square(image, block) if block else None
        error_map = mean_reconstruction_error_map(image, gamma, layout)
        logger.info("Equalization error map: gamma=%d MAE=%.6f", gamma, error_map.mae)
        return error_map
