"""On-disk formats shared by the construction phases and the scanners.

All multi-byte integers are little-endian; bit files are packed LSB-first.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

BWT_DTYPE = np.dtype(np.uint8)
DA_DTYPE = np.dtype("<u4")
LCP_DTYPE = np.dtype("<u4")
SLEN_DTYPE = np.dtype("<u4")
PAIR_DTYPE = np.dtype("<u8")
PAIR_FLAG = np.uint64(1) << np.uint64(63)
PAIR_POS_MASK = PAIR_FLAG - np.uint64(1)

# intermediate Phase 3 runs: 64-bit position+flag word, then 32-bit value
RUN_DTYPE = np.dtype([("w", "<u8"), ("v", "<u4")])

REPEAT_DTYPE = np.dtype([("length", "<u4"), ("lo", "<u8"), ("hi", "<u8"), ("docs", "<u4")])
OVERLAP_DTYPE = np.dtype([("src", "<u4"), ("dst", "<u4"), ("length", "<u4")])
COLOR_DTYPE = np.dtype([("edge", "<u8"), ("doc", "<u4")])


def nbytes_for_bits(n: int) -> int:
    return (n + 7) // 8


def pack_bits(bits) -> np.ndarray:
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little")


def unpack_bits(packed, n: int) -> np.ndarray:
    return np.unpackbits(np.asarray(packed, dtype=np.uint8), bitorder="little", count=n)


def write_bits(path: str | Path, bits) -> None:
    pack_bits(bits).tofile(path)


def read_bits(path: str | Path, n: int) -> np.ndarray:
    return unpack_bits(np.fromfile(path, dtype=np.uint8), n)


def read_array(path: str | Path, dtype) -> np.ndarray:
    return np.fromfile(path, dtype=dtype)


def open_array(path: str | Path, dtype, mode: str = "r", shape=None) -> np.ndarray:
    """Memory-map ``path``; a zero-length file yields an empty array."""
    path = Path(path)
    if mode == "r" and path.stat().st_size == 0:
        return np.zeros(0, dtype=dtype)
    mm = np.memmap(path, dtype=dtype, mode=mode, shape=shape)
    return mm


def create_array(path: str | Path, dtype, length: int, fill: int = 0) -> np.ndarray:
    """Create a file of ``length`` items and return a writable map over it."""
    path = Path(path)
    itemsize = np.dtype(dtype).itemsize
    with open(path, "wb") as fh:
        if length:
            fh.truncate(length * itemsize)
    if length == 0:
        return np.zeros(0, dtype=dtype)
    mm = np.memmap(path, dtype=dtype, mode="r+", shape=(length,))
    if fill:
        mm[:] = fill
    return mm


def pair_file(prefix: str | Path, value: int) -> Path:
    return Path(f"{prefix}.pairs.{value}")


def pair_value(path: Path) -> int:
    return int(path.name.rsplit(".", 1)[1])
