"""
Procedural grayscale test images.

Three deterministic scenes with different spectral character: ``smooth``
(large soft shapes), ``texture`` (band-limited noise, fur-like) and
``stripes`` (oriented periodic fabric over a smooth background).
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.ndimage import gaussian_filter

from dkstp.core.measurement import make_rng
from dkstp.models import GrayImage

logger = logging.getLogger(__name__)

IMAGE_NAMES = ("smooth", "texture", "stripes")
_TEXTURE_SEED = 20240611


def _grid(size: int) -> tuple[np.ndarray, np.ndarray]:
    axis = (np.arange(size) + 0.5) / size
    return np.meshgrid(axis, axis, indexing="xy")


def _smooth(size: int) -> np.ndarray:
    x, y = _grid(size)
    base = 0.45 + 0.2 * np.sin(3.0 * np.pi * x) * np.cos(2.0 * np.pi * y)
    blob = 0.3 * np.exp(-((x - 0.62) ** 2 + (y - 0.38) ** 2) / 0.03)
    shade = 0.1 * (y - 0.5)
    return base + blob + shade


def _texture(size: int) -> np.ndarray:
    noise = make_rng(_TEXTURE_SEED).standard_normal((size, size))
    field = gaussian_filter(noise, sigma=1.2, mode="wrap")
    field = (field - field.mean()) / (field.std() + 1e-12)
    x, y = _grid(size)
    return 0.5 + 0.12 * field + 0.15 * (x - 0.5)


def _stripes(size: int) -> np.ndarray:
    x, y = _grid(size)
    background = 0.55 + 0.2 * np.cos(np.pi * x) * np.cos(1.5 * np.pi * y)
    fabric = 0.18 * np.sin(2.0 * np.pi * (7.0 * x + 3.0 * y))
    mask = 1.0 / (1.0 + np.exp(-30.0 * (x - 0.35)))
    return background + mask * fabric


_BUILDERS = {"smooth": _smooth, "texture": _texture, "stripes": _stripes}


def synthetic_image(name: str, size: int = 128) -> GrayImage:
    """Build one of :data:`IMAGE_NAMES` as a ``size`` x ``size`` 8-bit image."""
    key = name.strip().lower()
    if key not in _BUILDERS:
        raise ValueError(f"Unknown test image {name!r}; expected one of {', '.join(IMAGE_NAMES)}.")
    if size < 2:
        raise ValueError(f"Test image size must be at least 2, got {size}.")
    logger.debug("Generating %s test image (%dx%d).", key, size, size)
    return GrayImage.from_normalized(_BUILDERS[key](size))
