"""Aligned sequential readers over the final index files."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .formats import BWT_DTYPE, DA_DTYPE, LCP_DTYPE, SLEN_DTYPE, nbytes_for_bits, open_array

BLOCK = 1 << 16


class StreamError(ValueError):
    pass


@dataclass
class Block:
    lo: int
    hi: int
    bwt: np.ndarray | None = None
    lcp: np.ndarray | None = None
    lcp_next: np.ndarray | None = None  # lcp[i+1], -1 past the last rank
    da: np.ndarray | None = None
    xlcp: np.ndarray | None = None
    slen: np.ndarray | None = None
    shortrow: np.ndarray | None = None


@dataclass
class StreamBundle:
    n: int
    bwt_path: Path | None = None
    lcp_path: Path | None = None
    da_path: Path | None = None
    xlcp_path: Path | None = None
    slen_path: Path | None = None
    shortrow_path: Path | None = None

    @classmethod
    def from_prefix(cls, prefix, **overrides) -> "StreamBundle":
        """Pick up whichever of ``<prefix>.{bwt,lcp,da,xlcp,slen,shortrow}`` exist."""
        paths = {}
        for name in ("bwt", "lcp", "da", "xlcp", "slen", "shortrow"):
            p = Path(f"{prefix}.{name}")
            paths[f"{name}_path"] = p if p.exists() else None
        paths.update(overrides)
        if paths["bwt_path"] is None:
            raise StreamError(f"{prefix}.bwt not found")
        n = Path(paths["bwt_path"]).stat().st_size
        bundle = cls(n, **paths)
        bundle.check()
        return bundle

    def check(self) -> None:
        sizes = {
            "bwt": (self.bwt_path, BWT_DTYPE.itemsize * self.n),
            "lcp": (self.lcp_path, LCP_DTYPE.itemsize * self.n),
            "da": (self.da_path, DA_DTYPE.itemsize * self.n),
            "slen": (self.slen_path, SLEN_DTYPE.itemsize * self.n),
            "xlcp": (self.xlcp_path, nbytes_for_bits(self.n)),
            "shortrow": (self.shortrow_path, nbytes_for_bits(self.n)),
        }
        for name, (path, want) in sizes.items():
            if path is None:
                continue
            got = Path(path).stat().st_size
            if got != want:
                raise StreamError(f"{name} stream has {got} bytes, expected {want} for n={self.n}")

    def require(self, *names: str) -> None:
        missing = [k for k in names if getattr(self, f"{k}_path") is None]
        if missing:
            raise StreamError(f"missing streams: {', '.join(missing)}")

    def blocks(self, *names: str, block: int = BLOCK) -> Iterator[Block]:
        """Yield aligned chunks of the requested streams; ``lcp_next`` implies lcp."""
        self.require(*(("lcp" if k == "lcp_next" else k) for k in names))
        block = max(8, block - block % 8)
        maps = {}
        for k, dtype in (("bwt", BWT_DTYPE), ("lcp", LCP_DTYPE), ("da", DA_DTYPE), ("slen", SLEN_DTYPE)):
            want = k in names or (k == "lcp" and "lcp_next" in names)
            if want:
                maps[k] = open_array(getattr(self, f"{k}_path"), dtype)
        for k in ("xlcp", "shortrow"):
            if k in names:
                maps[k] = open_array(getattr(self, f"{k}_path"), np.uint8)
        for lo in range(0, self.n, block):
            hi = min(self.n, lo + block)
            b = Block(lo, hi)
            for k in ("bwt", "da", "slen"):
                if k in maps:
                    setattr(b, k, np.asarray(maps[k][lo:hi]))
            if "lcp" in maps:
                ext = np.asarray(maps["lcp"][lo:hi + 1], dtype=np.int64)
                b.lcp = ext[: hi - lo]
                b.lcp_next = np.append(ext[1:], -1) if hi == self.n else ext[1:]
            for k in ("xlcp", "shortrow"):
                if k in maps:
                    raw = np.asarray(maps[k][lo // 8:(hi + 7) // 8])
                    setattr(b, k, np.unpackbits(raw, bitorder="little", count=hi - lo))
            yield b
