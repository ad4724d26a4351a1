from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pytest

from dkstp.core.settings_manager import SettingsManager
from dkstp.models import GrayImage


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path: Path):
    """Point the settings store at a per-test file so the repo copy is never read."""
    path = tmp_path / "settings.json"
    SettingsManager.use_path(path)
    yield path
    SettingsManager.use_path(path)


@pytest.fixture(autouse=True)
def restore_root_logging():
    """The CLI reconfigures the root logger; put the test runner's handlers back afterwards."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in list(root.handlers):
        if handler not in handlers:
            root.removeHandler(handler)
            handler.close()
    for handler in handlers:
        if handler not in root.handlers:
            root.addHandler(handler)
    root.setLevel(level)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def gradient_image() -> GrayImage:
    """Smooth 16x16 ramp; every vertical pixel pair differs by at most one level."""
    rows, cols = np.mgrid[0:16, 0:16]
    return GrayImage((rows * 2 + cols * 7 + 20).astype(np.uint8))


@pytest.fixture
def random_image(rng: np.random.Generator) -> GrayImage:
    return GrayImage(rng.integers(0, 256, size=(12, 20), dtype=np.uint8))
