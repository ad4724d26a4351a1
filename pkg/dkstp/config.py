from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv


BASE_DIR: Path = Path(__file__).resolve().parent
ROOT_DIR: Path = BASE_DIR.parent

# Values from a local .env file never override variables already exported.
load_dotenv()


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"Environment variable {name} must be an integer, got {raw!r}.")


def _env_path(name: str, default: Path) -> Path:
    raw = os.environ.get(name)
    return Path(raw).expanduser() if raw else default


# ---------------------------------------------------------------------------
# Packet format
# ---------------------------------------------------------------------------

PACKET_MAGIC: bytes = b"DKSP"
PACKET_VERSION: int = 1

# ---------------------------------------------------------------------------
# Image / metrics conventions
# ---------------------------------------------------------------------------

# 8-bit grayscale: MAX_I = 2**8 - 1.
PIXEL_BITS: int = 8
MAX_INTENSITY: int = 2**PIXEL_BITS - 1

BENCHMARK_CSV_HEADER: tuple[str, ...] = (
    "method",
    "cr",
    "gamma",
    "trial",
    "psnr_db",
    "mse",
    "mae",
    "seconds",
)
HISTOGRAM_CSV_HEADER: tuple[str, ...] = ("bin_low", "bin_high", "count")
SWEEP_DIFF_CSV_HEADER: tuple[str, ...] = (
    "cr",
    "mae",
    "mae_at_double_cr",
    "mae_difference",
    "distribution_mae",
)


@dataclass(frozen=True)
class AppConfig:
    """
    Library-wide configuration values for the DK-STP compressed sensing toolkit.
    """

    app_name: str = "dkstp"
    version: str = "1.0.0"

    # Algebra guards
    max_matrix_entries: int = _env_int("DKSTP_MAX_MATRIX_ENTRIES", 50_000_000)
    max_lcm: int = 2**20

    # Certification guards
    rank_rtol: float = 1e-10
    spark_max_columns: int = 12
    rip_max_supports: int = 1_000_000
    rip_sampled_supports: int = 2_000
    l0_max_columns: int = 20
    l0_max_sparsity: int = 4
    l0_residual_rtol: float = 1e-8

    # Pipeline defaults
    default_block: int = 32
    default_cr: float = 0.5
    default_gamma: int = 2
    noise_variance: float = 0.001
    histogram_bins: int = 256

    # Concurrency: blocks and sweep cells are independent work units.
    workers: int = _env_int("DKSTP_WORKERS", min(4, os.cpu_count() or 1))

    # Persistence
    settings_path: Path = _env_path("DKSTP_SETTINGS_PATH", ROOT_DIR / "dkstp_settings.json")

    # Logging
    log_directory: Path = _env_path("DKSTP_LOG_DIR", ROOT_DIR / "logs")


CONFIG = AppConfig()
