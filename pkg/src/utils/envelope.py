"""Checksummed binary envelope shared by the image cache, filter-bank, feature and model files.

Layout (all integers big-endian):

    magic      8 bytes
    version    uint32
    header     n x uint32 (meaning fixed per file kind)
    payload    bytes
    checksum   uint32, CRC-32 of version + header + payload
"""
import struct
import zlib
from pathlib import Path
from typing import Callable, Sequence

from src.core.errors import FormatError, IoError, TruncationError

MAGIC_SIZE = 8


def write_envelope(path: Path, magic: bytes, version: int, header: Sequence[int], payload: bytes) -> None:
    if len(magic) != MAGIC_SIZE:
        raise ValueError(f"magic must be {MAGIC_SIZE} bytes")
    body = struct.pack(f">I{len(header)}I", version, *header) + payload
    checksum = zlib.crc32(body) & 0xFFFFFFFF
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as f:
            f.write(magic)
            f.write(body)
            f.write(struct.pack(">I", checksum))
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def read_envelope(
    path: Path,
    magic: bytes,
    version: int,
    header_len: int,
    payload_size: Callable[[tuple[int, ...]], int],
) -> tuple[tuple[int, ...], bytes]:
    """
    Read and verify an envelope.

    Args:
        path: File to read
        magic: Expected 8-byte magic
        version: Expected format version
        header_len: Number of uint32 header fields after the version
        payload_size: Computes the expected payload length from the header

    Returns:
        (header fields, payload bytes)
    """
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e

    fixed = MAGIC_SIZE + 4 + 4 * header_len
    if len(data) < MAGIC_SIZE or data[:MAGIC_SIZE] != magic:
        raise FormatError(f"{path}: bad magic {data[:MAGIC_SIZE]!r}, expected {magic!r}")
    if len(data) < fixed + 4:
        raise TruncationError(f"{path}: file ends inside the header")

    found_version, *header = struct.unpack(f">I{header_len}I", data[MAGIC_SIZE:fixed])
    if found_version != version:
        raise FormatError(f"{path}: format version {found_version}, expected {version}")

    header = tuple(header)
    expected = payload_size(header)
    available = len(data) - fixed - 4
    if available < expected:
        raise TruncationError(f"{path}: payload has {available} bytes, header announces {expected}")
    if available > expected:
        raise FormatError(f"{path}: {available - expected} unexpected trailing bytes")

    (stored,) = struct.unpack(">I", data[-4:])
    if zlib.crc32(data[MAGIC_SIZE:-4]) & 0xFFFFFFFF != stored:
        raise FormatError(f"{path}: checksum mismatch")

    return header, data[fixed:-4]
