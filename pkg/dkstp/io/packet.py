"""
Packet file format.

Layout (little-endian, packed)::

    magic "DKSP" | version u8 | method u8 | gamma u16 | block_w u16 |
    block_h u16 | image_w u32 | image_h u32 | m u32 |
    kind u8 | rows u32 | cols u32 | seed u64 | scaling u8 |
    blocks x m float64 measurements, column-major block order

The packet carries the matrix descriptor, never the matrix.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Union

import numpy as np

from dkstp.config import PACKET_MAGIC, PACKET_VERSION
from dkstp.exceptions import DimensionError, FormatError
from dkstp.models import (
    BlockLayout,
    CompressedPacket,
    MatrixDescriptor,
    MatrixKind,
    Method,
    Scaling,
    SensingScheme,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

HEADER_DTYPE = np.dtype(
    [
        ("magic", "S4"),
        ("version", "u1"),
        ("method", "u1"),
        ("gamma", "<u2"),
        ("block_w", "<u2"),
        ("block_h", "<u2"),
        ("image_w", "<u4"),
        ("image_h", "<u4"),
        ("m", "<u4"),
    ]
)
DESCRIPTOR_DTYPE = np.dtype(
    [
        ("kind", "u1"),
        ("rows", "<u4"),
        ("cols", "<u4"),
        ("seed", "<u8"),
        ("scaling", "u1"),
    ]
)
PAYLOAD_DTYPE = np.dtype("<f8")

HEADER_BYTES = HEADER_DTYPE.itemsize
PREAMBLE_BYTES = HEADER_BYTES + DESCRIPTOR_DTYPE.itemsize


def encode_packet(packet: CompressedPacket) -> bytes:
    layout, scheme = packet.layout, packet.scheme
    d = scheme.descriptor
    if layout.image_w > 0xFFFFFFFF or layout.image_h > 0xFFFFFFFF:
        raise DimensionError("Image dimensions must fit in 32 bits.")

    header = np.zeros(1, dtype=HEADER_DTYPE)
    header[0] = (
        PACKET_MAGIC,
        packet.format_version,
        int(scheme.method),
        scheme.gamma,
        layout.block_w,
        layout.block_h,
        layout.image_w,
        layout.image_h,
        packet.m,
    )
    descriptor = np.zeros(1, dtype=DESCRIPTOR_DTYPE)
    descriptor[0] = (int(d.kind), d.rows, d.cols, d.seed, int(d.scaling))
    payload = np.ascontiguousarray(packet.measurements, dtype=PAYLOAD_DTYPE)
    return header.tobytes() + descriptor.tobytes() + payload.tobytes()


def decode_packet(data: bytes) -> CompressedPacket:
    if len(data) < PREAMBLE_BYTES:
        raise FormatError(
            f"Packet too short: expected at least {PREAMBLE_BYTES} header bytes, got {len(data)}."
        )

    header = np.frombuffer(data, dtype=HEADER_DTYPE, count=1)[0]
    if bytes(header["magic"]) != PACKET_MAGIC:
        raise FormatError(f"Bad packet magic {bytes(header['magic'])!r}; expected {PACKET_MAGIC!r}.")
    version = int(header["version"])
    if version != PACKET_VERSION:
        raise FormatError(f"Unsupported packet version {version}; this build reads version {PACKET_VERSION}.")

    desc = np.frombuffer(data, dtype=DESCRIPTOR_DTYPE, count=1, offset=HEADER_BYTES)[0]
    try:
        layout = BlockLayout(
            image_w=int(header["image_w"]),
            image_h=int(header["image_h"]),
            block_w=int(header["block_w"]),
            block_h=int(header["block_h"]),
        )
        scheme = SensingScheme(
            method=Method(int(header["method"])),
            gamma=int(header["gamma"]),
            descriptor=MatrixDescriptor(
                kind=MatrixKind(int(desc["kind"])),
                rows=int(desc["rows"]),
                cols=int(desc["cols"]),
                seed=int(desc["seed"]),
                scaling=Scaling(int(desc["scaling"])),
            ),
        )
    except (DimensionError, ValueError) as exc:
        raise FormatError(f"Inconsistent packet header: {exc}") from exc

    m = int(header["m"])
    expected = PREAMBLE_BYTES + layout.block_count * m * PAYLOAD_DTYPE.itemsize
    if len(data) != expected:
        raise FormatError(
            f"Packet length mismatch: expected {expected} bytes, got {len(data)}."
        )
    try:
        stored = scheme.stored_shape(layout.block_dim, m)
    except DimensionError as exc:
        raise FormatError(f"Inconsistent packet header: {exc}") from exc
    if stored != scheme.descriptor.shape:
        raise FormatError(
            f"Descriptor shape {scheme.descriptor.shape} does not match the declared "
            f"block size and measurement count (expected {stored})."
        )

    measurements = np.frombuffer(data, dtype=PAYLOAD_DTYPE, offset=PREAMBLE_BYTES)
    measurements = measurements.astype(np.float64).reshape(layout.block_count, m)
    try:
        return CompressedPacket(layout=layout, scheme=scheme, measurements=measurements, format_version=version)
    except DimensionError as exc:
        raise FormatError(f"Invalid packet payload: {exc}") from exc


def write_packet(packet: CompressedPacket, path: PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = encode_packet(packet)
    path.write_bytes(data)
    logger.info("Wrote packet %s (%d bytes, %d blocks)", path, len(data), packet.layout.block_count)


def read_packet(path: PathLike) -> CompressedPacket:
    path = Path(path)
    packet = decode_packet(path.read_bytes())
    logger.debug("Read packet %s: %d blocks of %d measurements", path, packet.layout.block_count, packet.m)
    return packet


# ----------------------------------------------------------------------
# Standalone matrix descriptors
# ----------------------------------------------------------------------
def write_descriptor(descriptor: MatrixDescriptor, path: PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(descriptor.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_descriptor(path: PathLike) -> MatrixDescriptor:
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"Matrix descriptor {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise FormatError(f"Matrix descriptor {path} must contain a JSON object.")
    try:
        return MatrixDescriptor.from_dict(data)
    except (KeyError, ValueError) as exc:
        raise FormatError(f"Invalid matrix descriptor {path}: {exc}") from exc
