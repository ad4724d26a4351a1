"""
CSV and JSON exports for experiments and reconstruction reports.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any, Union

import numpy as np
import pandas as pd

from dkstp.config import BENCHMARK_CSV_HEADER, HISTOGRAM_CSV_HEADER
from dkstp.io.pgm import write_pgm
from dkstp.models import ErrorMap, GrayImage, ReconstructionReport

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _finite_or_none(value: float) -> float | None:
    return value if math.isfinite(value) else None


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_table_csv(table: pd.DataFrame, path: PathLike, columns: tuple[str, ...] | None = None) -> None:
    """Write ``table`` without an index, in the frozen column order when given."""
    path = _prepare(path)
    if columns is not None:
        missing = [c for c in columns if c not in table.columns]
        if missing:
            raise ValueError(f"Table is missing columns {missing}.")
        table = table.loc[:, list(columns)]
    table.to_csv(path, index=False, lineterminator="\n")
    logger.info("Wrote %d rows to %s", len(table), path)


def write_benchmark_csv(table: pd.DataFrame, path: PathLike) -> None:
    write_table_csv(table, path, BENCHMARK_CSV_HEADER)


def histogram_table(error_map: ErrorMap) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "bin_low": error_map.bin_edges[:-1],
            "bin_high": error_map.bin_edges[1:],
            "count": error_map.counts,
        },
        columns=list(HISTOGRAM_CSV_HEADER),
    )


def write_histogram_csv(error_map: ErrorMap, path: PathLike) -> None:
    write_table_csv(histogram_table(error_map), path, HISTOGRAM_CSV_HEADER)


def write_heatmap(error_map: ErrorMap, path: PathLike) -> None:
    """Absolute error field as an 8-bit PGM; 255 corresponds to an error of 1."""
    write_pgm(GrayImage.from_normalized(error_map.heatmap), path)


def report_to_dict(report: ReconstructionReport) -> dict[str, Any]:
    """
    JSON-ready view: ``blocks``, ``quality`` and ``decomposition`` keys are
    always present; the last two are ``null`` without a reference image.
    """
    quality = None
    if report.quality is not None:
        quality = {
            "psnr_db": _finite_or_none(report.quality.psnr_db),
            "mse": report.quality.mse,
            "mae": report.quality.mae,
        }
    decomposition = None
    if report.decomposition is not None:
        decomposition = report.decomposition.to_dict()
        decomposition["stated_bound_violations"] = report.stated_bound_violations
    return {
        "blocks": [
            {"index": b.index, "converged": b.converged, "iterations": b.iterations}
            for b in report.blocks
        ],
        "quality": quality,
        "decomposition": decomposition,
    }


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars and arrays recursively; non-finite floats become null."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return _finite_or_none(float(value))
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(data: dict[str, Any], path: PathLike) -> None:
    path = _prepare(path)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(to_jsonable(data), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    logger.info("Wrote report %s", path)


def write_report(report: ReconstructionReport, path: PathLike) -> None:
    write_json(report_to_dict(report), path)
