"""
Image fidelity metrics and the three-term reconstruction error decomposition.
"""

from __future__ import annotations

import logging
import math

import numpy as np
import pandas as pd

from dkstp.config import CONFIG, MAX_INTENSITY
from dkstp.core.stp_algebra import equalize, group_sum
from dkstp.exceptions import DimensionError, InvariantViolation
from dkstp.models import BlockLayout, ErrorDecomposition, ErrorMap, GrayImage, Method, QualityReport, Signal

logger = logging.getLogger(__name__)

# Relative slack for floating-point rounding when asserting the safe bound.
_BOUND_RTOL = 1e-12


def psnr_from_mse(mse: float) -> float:
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(MAX_INTENSITY**2 / mse)


def quality(original: GrayImage, recovered: GrayImage) -> QualityReport:
    """
    MSE and MAE on 8-bit values; PSNR with ``MAX_I = 255``, infinite for
    identical images.
    """
    if original.pixels.shape != recovered.pixels.shape:
        raise DimensionError(
            f"Cannot compare a {original.width}x{original.height} image with a "
            f"{recovered.width}x{recovered.height} image."
        )
    diff = original.pixels.astype(np.float64) - recovered.pixels.astype(np.float64)
    mse = float(np.mean(diff**2))
    mae = float(np.mean(np.abs(diff)))
    return QualityReport(psnr_db=psnr_from_mse(mse), mse=mse, mae=mae)


def decompose_error(x: Signal, x_star: Signal, gamma: int) -> ErrorDecomposition:
    """
    Split the error of a reconstruction ``x_star`` of ``x`` into

    * distribution error ``‖x* − x̄‖₁``, with ``x̄`` the equalized group sums of ``x``,
    * compressed sensing error ``‖x^γ − x^{γ*}‖₁`` between group-sum signals,
    * original signal error ``‖x̄ − x‖₁``.

    ``total_l2`` never exceeds ``distribution + 2·cs + original``; a violation
    raises :class:`InvariantViolation`. The tighter sum without the factor 2
    is only logged when it fails.
    """
    x = np.asarray(x, dtype=np.float64)
    x_star = np.asarray(x_star, dtype=np.float64)
    if x.shape != x_star.shape or x.ndim != 1:
        raise DimensionError(
            f"Original and reconstruction must be vectors of equal length, got {x.shape} and {x_star.shape}."
        )

    x_group = group_sum(x, gamma)
    x_bar = equalize(x_group)
    x_star_group = group_sum(x_star, gamma)

    result = ErrorDecomposition(
        distribution_error=float(np.abs(x_star - x_bar).sum()),
        cs_error=float(np.abs(x_group.values - x_star_group.values).sum()),
        original_error=float(np.abs(x_bar - x).sum()),
        total_l2=float(np.linalg.norm(x_star - x)),
    )

    if result.total_l2 > result.bound_safe * (1.0 + _BOUND_RTOL):
        raise InvariantViolation(
            f"Reconstruction error {result.total_l2:.6e} exceeds the safe bound {result.bound_safe:.6e}."
        )
    if not result.stated_bound_holds:
        logger.warning(
            "Error %.6e exceeds the three-term sum %.6e (safe bound %.6e still holds).",
            result.total_l2,
            result.bound_stated,
            result.bound_safe,
        )
    return result


def mean_reconstruction_error_map(
    image: GrayImage,
    gamma: int,
    layout: BlockLayout | None = None,
) -> ErrorMap:
    """
    Error field ``|x − x̄|`` of replacing every γ-group of pixels by its mean.

    Pixels are normalized to [0, 1] and vectorized per block (the whole image
    when no layout is given). The histogram covers signed errors ``x − x̄``
    over [−1, 1] with :data:`CONFIG.histogram_bins` bins.
    """
    layout = layout or BlockLayout.whole(image)
    if layout.block_dim % gamma:
        raise DimensionError(f"gamma={gamma} must divide the block length {layout.block_dim}.")

    blocks = layout.split(image.normalized())
    signed = np.empty_like(blocks)
    for i, x in enumerate(blocks):
        signed[i] = x - equalize(group_sum(x, gamma))

    counts, edges = np.histogram(signed, bins=CONFIG.histogram_bins, range=(-1.0, 1.0))
    heatmap = np.abs(layout.assemble(signed))
    return ErrorMap(
        heatmap=heatmap,
        bin_edges=edges,
        counts=counts.astype(np.int64),
        mae=float(heatmap.mean()),
    )


# ----------------------------------------------------------------------
# Benchmark tables
# ----------------------------------------------------------------------
def summarize_benchmark(table: pd.DataFrame) -> pd.DataFrame:
    """
    Mean, standard error of the mean and trial count of PSNR/MSE/MAE per
    (method, cr).
    """
    grouped = table.groupby(["method", "cr"], sort=True)[["psnr_db", "mse", "mae"]]
    summary = grouped.agg(["mean", "sem", "count"])
    summary.columns = [f"{metric}_{stat}" for metric, stat in summary.columns]
    summary = summary.rename(columns={"psnr_db_count": "trials"})
    summary = summary.drop(columns=["mse_count", "mae_count"])
    return summary.reset_index()


def increase_rate(table: pd.DataFrame) -> pd.DataFrame:
    """
    Relative PSNR gain of DK-STP-CS over the other methods, per compression
    ratio: ``(psnr_dk − psnr_other) / psnr_other``.
    """
    means = table.groupby(["cr", "method"])["psnr_db"].mean().unstack("method")
    dk = Method.DKSTPCS.cli_name
    if dk not in means.columns:
        raise ValueError("Increase rate needs DK-STP-CS rows in the benchmark table.")

    rates = pd.DataFrame(index=means.index)
    for other, column in ((Method.CS.cli_name, "increase_vs_cs"), (Method.STPCS.cli_name, "increase_vs_stp")):
        if other in means.columns:
            rates[column] = (means[dk] - means[other]) / means[other]
    return rates.reset_index()
