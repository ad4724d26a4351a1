"""
Binary PGM (P5, maxval 255) reading and writing.

The header is validated strictly before Pillow decodes the pixel payload;
comments are accepted on read and never written.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from dkstp.config import MAX_INTENSITY
from dkstp.exceptions import FormatError
from dkstp.models import GrayImage

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_WHITESPACE = b" \t\n\r\x0b\x0c"


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """
    Read ``count`` whitespace-separated header tokens, skipping ``#`` comments.

    Returns the tokens and the offset of the single whitespace byte that
    terminates the last one.
    """
    tokens: list[bytes] = []
    pos = 0
    size = len(data)
    while len(tokens) < count:
        while pos < size and data[pos] in _WHITESPACE:
            pos += 1
        if pos < size and data[pos] == ord("#"):
            while pos < size and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < size and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        if start == pos:
            raise FormatError("PGM header ended before width, height and maxval were read.")
        tokens.append(data[start:pos])
    if pos >= size or data[pos] not in _WHITESPACE:
        raise FormatError("PGM maxval must be followed by a single whitespace byte.")
    return tokens, pos


def decode_pgm(data: bytes) -> GrayImage:
    if not data.startswith(b"P5") or len(data) < 3 or data[2] not in _WHITESPACE:
        magic = data[:2].decode("ascii", errors="replace")
        raise FormatError(f"Only binary PGM (P5) is supported, got magic {magic!r}.")

    tokens, pos = _header_tokens(data[2:], 3)
    try:
        width, height, maxval = (int(token) for token in tokens)
    except ValueError:
        raise FormatError(f"PGM header values must be integers, got {tokens!r}.")
    if width < 1 or height < 1:
        raise FormatError(f"PGM dimensions must be positive, got {width}x{height}.")
    if maxval != MAX_INTENSITY:
        raise FormatError(f"PGM maxval must be {MAX_INTENSITY}, got {maxval}.")

    payload = data[2 + pos + 1 :]
    expected = width * height
    if len(payload) < expected:
        raise FormatError(
            f"Truncated PGM payload: expected {expected} bytes, got {len(payload)}."
        )
    if len(payload) > expected:
        logger.debug("Ignoring %d trailing bytes after PGM payload.", len(payload) - expected)

    decoded = Image.frombuffer("L", (width, height), payload[:expected], "raw", "L", 0, 1)
    return GrayImage(np.array(decoded, dtype=np.uint8))


def encode_pgm(image: GrayImage) -> bytes:
    header = b"P5\n%d %d\n%d\n" % (image.width, image.height, MAX_INTENSITY)
    return header + Image.fromarray(image.pixels).tobytes()


def read_pgm(path: PathLike) -> GrayImage:
    path = Path(path)
    data = path.read_bytes()
    image = decode_pgm(data)
    logger.debug("Read %dx%d PGM from %s", image.width, image.height, path)
    return image


def write_pgm(image: GrayImage, path: PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_pgm(image))
    logger.debug("Wrote %dx%d PGM to %s", image.width, image.height, path)
