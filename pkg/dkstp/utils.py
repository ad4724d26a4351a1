from __future__ import annotations

import math
from typing import Iterable

from dkstp.models import Method

# Grid values are rounded to this many decimals so "0.05:0.5:0.05" yields 0.15, not 0.15000000000000002.
_GRID_DECIMALS = 10


def parse_range(text: str) -> list[float]:
    """
    Parse ``start:stop:step`` (inclusive of ``stop``) or a comma list of
    values into a list of floats.

        >>> parse_range("0.1:0.3:0.1")
        [0.1, 0.2, 0.3]
    """
    text = text.strip()
    if not text:
        raise ValueError("Empty range.")
    if ":" not in text:
        try:
            return [float(part) for part in text.split(",") if part.strip()]
        except ValueError:
            raise ValueError(f"Invalid value list {text!r}.")

    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"Range {text!r} must have the form start:stop:step.")
    try:
        start, stop, step = (float(part) for part in parts)
    except ValueError:
        raise ValueError(f"Range {text!r} must contain numbers.")
    if not all(math.isfinite(v) for v in (start, stop, step)) or step <= 0:
        raise ValueError(f"Range {text!r} needs finite bounds and a positive step.")
    if stop < start:
        raise ValueError(f"Range {text!r} ends before it starts.")

    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, _GRID_DECIMALS) for i in range(count)]


def parse_methods(text: str | Iterable[str]) -> list[Method]:
    """Parse ``"cs,stp,dkstp"`` into methods, keeping order and dropping repeats."""
    names = text.split(",") if isinstance(text, str) else list(text)
    methods: list[Method] = []
    for name in names:
        if not name.strip():
            continue
        method = Method.from_name(name)
        if method not in methods:
            methods.append(method)
    if not methods:
        raise ValueError("At least one method is required.")
    return methods
