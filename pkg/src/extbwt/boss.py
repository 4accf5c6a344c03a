"""BOSS de Bruijn graph (plain and colored) from one pass over bwt/lcp.

Rows whose suffix is shorter than k are masked out by ``shortrow``. Among
the remaining rows, maximal runs with lcp >= k share a k-mer (a node); the
distinct BWT symbols of a run are its incoming edge labels. All end-markers
collapse to one ``$`` symbol.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .formats import COLOR_DTYPE, pack_bits, read_bits
from .seqio import MARKER
from .streams import StreamBundle, StreamError


class BossError(ValueError):
    pass


@dataclass
class BossGraph:
    k: int
    W: bytearray = field(default_factory=bytearray)
    last: list[int] = field(default_factory=list)
    wminus: list[int] = field(default_factory=list)
    nodes: int = 0

    @property
    def edges(self) -> int:
        return len(self.W)

    def write(self, prefix) -> dict[str, Path]:
        paths = {
            "w": Path(f"{prefix}.boss.w"),
            "last": Path(f"{prefix}.boss.last"),
            "wm": Path(f"{prefix}.boss.wm"),
            "meta": Path(f"{prefix}.boss.meta"),
        }
        paths["w"].write_bytes(bytes(self.W))
        pack_bits(self.last).tofile(paths["last"])
        pack_bits(self.wminus).tofile(paths["wm"])
        paths["meta"].write_text(f"k={self.k}\nnodes={self.nodes}\nedges={self.edges}\n")
        return paths

    @classmethod
    def read(cls, prefix) -> "BossGraph":
        meta = dict(line.split("=", 1) for line in Path(f"{prefix}.boss.meta").read_text().split())
        edges = int(meta["edges"])
        return cls(
            k=int(meta["k"]),
            W=bytearray(Path(f"{prefix}.boss.w").read_bytes()),
            last=read_bits(f"{prefix}.boss.last", edges).tolist(),
            wminus=read_bits(f"{prefix}.boss.wm", edges).tolist(),
            nodes=int(meta["nodes"]),
        )


def shortrow_from_slen(slen: np.ndarray, k: int) -> np.ndarray:
    return (np.asarray(slen) <= k).astype(np.uint8)


def build_boss(streams: StreamBundle, k: int, cap: int | None = None, colors: bool = False,
               shortrow: np.ndarray | None = None):
    """Return ``(graph, color_records)``; the color array is empty unless requested.

    ``shortrow`` overrides the bundle's shortrow stream (e.g. derived from
    suffix lengths in a full-depth run). ``cap`` is the clamp value of a
    capped lcp stream and must be at least k+1.
    """
    if k < 1:
        raise BossError("k must be >= 1")
    if cap is not None and cap < k + 1:
        raise BossError(f"lcp capped at {cap} cannot resolve order {k}")
    names = ["bwt", "lcp"] + (["da"] if colors else [])
    if shortrow is None:
        streams.require("shortrow")
        names.append("shortrow")
    elif len(shortrow) != streams.n:
        raise StreamError("shortrow mask length differs from n")

    g = BossGraph(k)
    color_edges: list[int] = []
    color_docs: list[int] = []
    seen_km1: set[int] = set()
    block: dict[int, set[int]] = {}
    started = False
    gap = None  # minimum lcp since the previous kept row

    def close_block():
        syms = sorted(block)
        for j, c in enumerate(syms):
            edge = len(g.W)
            g.W.append(c)
            g.last.append(1 if j == len(syms) - 1 else 0)
            g.wminus.append(0 if c in seen_km1 else 1)
            seen_km1.add(c)
            if colors:
                for d in sorted(block[c]):
                    color_edges.append(edge)
                    color_docs.append(d)
        g.nodes += 1

    for blk in streams.blocks(*names):
        bwt = blk.bwt.tolist()
        lcp = blk.lcp.tolist()
        da = blk.da.tolist() if colors else None
        short = blk.shortrow.tolist() if shortrow is None else shortrow[blk.lo:blk.hi].tolist()
        for off in range(blk.hi - blk.lo):
            v = lcp[off]
            gap = v if gap is None else min(gap, v)
            if short[off]:
                continue
            if not started or gap < k:
                if started:
                    close_block()
                block = {}
                if not started or gap < k - 1:
                    seen_km1 = set()
                started = True
            c = bwt[off]
            docs = block.setdefault(MARKER if c == MARKER else c, set())
            if colors:
                docs.add(da[off])
            gap = None
    if not started:
        raise BossError(f"empty graph: no suffix of length >= {k}")
    close_block()

    rec = np.empty(len(color_edges), dtype=COLOR_DTYPE)
    rec["edge"] = color_edges
    rec["doc"] = color_docs
    return g, rec


def write_colors(rec: np.ndarray, path) -> Path:
    path = Path(path)
    rec.astype(COLOR_DTYPE).tofile(path)
    return path
