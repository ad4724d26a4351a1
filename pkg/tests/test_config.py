from __future__ import annotations

import json
import logging
from pathlib import Path

import pytest

from dkstp.config import CONFIG
from dkstp.core.logging_config import configure_logging
from dkstp.core.settings_manager import SettingsManager
from dkstp.models import Method
from dkstp.utils import parse_methods, parse_range


# ----------------------------------------------------------------------
# Settings
# ----------------------------------------------------------------------
def test_missing_file_gives_defaults(isolated_settings: Path) -> None:
    settings = SettingsManager.load_settings()
    assert settings["solver"] == "bp"
    assert settings["block"] == CONFIG.default_block
    assert not isolated_settings.exists()


def test_save_setting_persists_and_merges(isolated_settings: Path) -> None:
    SettingsManager.save_setting("max_iters", 50)
    on_disk = json.loads(isolated_settings.read_text(encoding="utf-8"))
    assert on_disk["max_iters"] == 50
    assert on_disk["rho"] == 1.0

    SettingsManager.use_path(isolated_settings)
    assert SettingsManager.get_setting("max_iters") == 50


def test_unknown_key_is_rejected() -> None:
    with pytest.raises(ValueError, match="Unknown setting"):
        SettingsManager.save_setting("theme", "dark")


def test_invalid_json_falls_back(isolated_settings: Path, caplog: pytest.LogCaptureFixture) -> None:
    isolated_settings.write_text("{not json", encoding="utf-8")
    SettingsManager.use_path(isolated_settings)
    with caplog.at_level(logging.WARNING):
        assert SettingsManager.get_setting("lambda") == 0.01
    assert "invalid JSON" in caplog.text


def test_unknown_keys_on_disk_are_ignored(isolated_settings: Path, caplog: pytest.LogCaptureFixture) -> None:
    isolated_settings.write_text(json.dumps({"workers": 2, "colour": "red"}), encoding="utf-8")
    SettingsManager.use_path(isolated_settings)
    with caplog.at_level(logging.WARNING):
        settings = SettingsManager.load_settings()
    assert settings["workers"] == 2
    assert "colour" not in settings
    assert "colour" in caplog.text


def test_load_returns_copies() -> None:
    first = SettingsManager.load_settings()
    first["solver"] = "omp"
    assert SettingsManager.get_setting("solver") == "bp"


# ----------------------------------------------------------------------
# Logging
# ----------------------------------------------------------------------
def test_configure_logging_writes_file_and_replaces_handlers(tmp_path: Path) -> None:
    configure_logging(tmp_path / "logs", logging.INFO)
    configure_logging(tmp_path / "logs", logging.INFO)
    root = logging.getLogger()
    assert len(root.handlers) == 2

    logging.getLogger("dkstp.test").info("hello %d", 7)
    for handler in root.handlers:
        handler.flush()
    assert "hello 7" in (tmp_path / "logs" / "dkstp.log").read_text(encoding="utf-8")


def test_configure_logging_without_directory() -> None:
    configure_logging(None, logging.WARNING)
    root = logging.getLogger()
    assert len(root.handlers) == 1
    assert root.level == logging.WARNING


# ----------------------------------------------------------------------
# Grid and method parsing
# ----------------------------------------------------------------------
def test_parse_range_is_inclusive_and_rounded() -> None:
    grid = parse_range("0.05:0.5:0.05")
    assert len(grid) == 10
    assert grid[2] == 0.15
    assert grid[-1] == 0.5


def test_parse_range_value_list() -> None:
    assert parse_range("0.1, 0.25,0.5") == [0.1, 0.25, 0.5]


@pytest.mark.parametrize("text", ["", "0.1:0.5", "0.5:0.1:0.1", "0.1:0.5:0", "a:b:c", "0.1,x"])
def test_parse_range_rejects(text: str) -> None:
    with pytest.raises(ValueError):
        parse_range(text)


def test_parse_methods_keeps_order_and_drops_repeats() -> None:
    assert parse_methods("dkstp,cs,dkstp") == [Method.DKSTPCS, Method.CS]


def test_parse_methods_rejects_empty_and_unknown() -> None:
    with pytest.raises(ValueError):
        parse_methods(" , ")
    with pytest.raises(ValueError):
        parse_methods("cs,bogus")
