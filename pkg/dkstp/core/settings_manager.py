from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict

from dkstp.config import CONFIG


logger = logging.getLogger(__name__)


class SettingsManager:
    """
    Lightweight JSON-backed store for persisted command-line defaults.

    The settings file lives at ``CONFIG.settings_path`` (overridable through
    ``DKSTP_SETTINGS_PATH``) and tracks solver and pipeline defaults:

        {
            "solver": "bp",
            "max_iters": 2000,
            "rho": 1.0,
            "abs_tol": 1e-7,
            "rel_tol": 1e-5,
            "lambda": 0.01,
            "block": 32,
            "workers": 4
        }

    Explicit CLI flags always win over these values. All methods are
    classmethods so the manager can be used without instantiation.
    """

    _settings_path: Path = CONFIG.settings_path
    _defaults: Dict[str, Any] = {
        "solver": "bp",
        "max_iters": 2000,
        "rho": 1.0,
        "abs_tol": 1e-7,
        "rel_tol": 1e-5,
        "lambda": 0.01,
        "block": CONFIG.default_block,
        "workers": CONFIG.workers,
    }
    _cache: Dict[str, Any] | None = None

    @classmethod
    def use_path(cls, path: Path) -> None:
        """
        Point the manager at another settings file and drop the cache.
        """
        cls._settings_path = Path(path)
        cls._cache = None

    @classmethod
    def load_settings(cls) -> Dict[str, Any]:
        """
        Load settings from disk merged over the defaults.

        A missing file, invalid JSON or a non-object payload all fall back to
        the defaults. Each call returns a copy of the cached mapping.
        """
        if cls._cache is not None:
            return dict(cls._cache)

        data: Dict[str, Any] = {}
        try:
            if cls._settings_path.is_file():
                with cls._settings_path.open(encoding="utf-8") as fh:
                    loaded = json.load(fh)
                if isinstance(loaded, dict):
                    data = {k: v for k, v in loaded.items() if k in cls._defaults}
                    unknown = sorted(set(loaded) - set(cls._defaults))
                    if unknown:
                        logger.warning(
                            "Ignoring unknown settings keys %s in %s.",
                            unknown,
                            cls._settings_path,
                        )
                else:
                    logger.warning(
                        "Settings file %s did not contain a JSON object; "
                        "falling back to defaults.",
                        cls._settings_path,
                    )
        except json.JSONDecodeError:
            logger.warning(
                "Settings file %s contained invalid JSON; falling back to defaults.",
                cls._settings_path,
                exc_info=True,
            )
            data = {}

        merged: Dict[str, Any] = dict(cls._defaults)
        merged.update(data)
        cls._cache = merged
        return dict(merged)

    @classmethod
    def save_setting(cls, key: str, value: Any) -> None:
        """
        Persist a single setting immediately.

        The merged settings are written to a temporary file that is then
        atomically moved into place.
        """
        if key not in cls._defaults:
            raise ValueError(
                f"Unknown setting '{key}'. Known settings: {sorted(cls._defaults)}."
            )

        settings = cls.load_settings()
        settings[key] = value
        cls._cache = dict(settings)

        cls._settings_path.parent.mkdir(parents=True, exist_ok=True)
        tmp_path = cls._settings_path.with_suffix(".tmp")
        with tmp_path.open("w", encoding="utf-8") as fh:
            json.dump(settings, fh, indent=2, sort_keys=True)
        tmp_path.replace(cls._settings_path)
        logger.info("Persisted setting '%s' to %s", key, cls._settings_path)

    @classmethod
    def get_setting(cls, key: str, default: Any = None) -> Any:
        """
        Retrieve one setting with a fallback; thin wrapper over :meth:`load_settings`.
        """
        return cls.load_settings().get(key, default)
