"""All-pairs suffix-prefix overlaps from bwt, lcp, da and xlcp.

Special suffixes (those that, ignoring the end-marker, prefix the next suffix
in rank order) are kept on per-document stacks while they still prefix the
scanned suffix. Whenever a whole document comes up (bwt symbol is the
end-marker), the top of every stack is its longest overlap with that
document.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from . import _kernels
from .formats import BWT_DTYPE, SLEN_DTYPE, open_array
from .seqio import MARKER
from .streams import StreamBundle, StreamError


@dataclass(frozen=True)
class OverlapRecord:
    src: int
    dst: int
    length: int


class _Machine:
    """Per-document stacks plus the per-value index of stack tops."""

    def __init__(self):
        self.stacks: dict[int, list[int]] = {}
        self.top: dict[int, dict[int, None]] = {}
        self.values: list[int] = []  # increasing live values
        self.by_value: dict[int, list[int]] = {}
        self.pushes = 0
        self.evictions = 0

    def _move_top(self, doc, old, new):
        if old is not None:
            bucket = self.top[old]
            del bucket[doc]
            if not bucket:
                del self.top[old]
        if new is not None:
            self.top.setdefault(new, {})[doc] = None

    def push(self, doc: int, value: int) -> None:
        st = self.stacks.setdefault(doc, [])
        old = st[-1] if st else None
        st.append(value)
        self._move_top(doc, old, value)
        if not self.values or self.values[-1] != value:
            self.values.append(value)
            self.by_value[value] = []
        self.by_value[value].append(doc)
        self.pushes += 1

    def evict_above(self, limit: int) -> None:
        while self.values and self.values[-1] > limit:
            v = self.values.pop()
            for doc in self.by_value.pop(v):
                st = self.stacks[doc]
                st.pop()
                self._move_top(doc, v, st[-1] if st else None)
                if not st:
                    del self.stacks[doc]
                self.evictions += 1

    def longest(self):
        """(doc, value) of every nonempty stack, via the top index."""
        for v in self.values:
            bucket = self.top.get(v)
            if bucket:
                for doc in bucket:
                    yield doc, v


def _doc_lengths(streams: StreamBundle) -> np.ndarray:
    counts = None
    for blk in streams.blocks("da"):
        c = np.bincount(blk.da)
        if counts is None:
            counts = c
        else:
            if len(c) > len(counts):
                c, counts = counts, c
            counts[: len(c)] += c
    return counts.astype(np.int64) - 1


def find_overlaps(
    streams: StreamBundle,
    tau: int = 0,
    include_self: bool = False,
    containment: bool = False,
    stats: dict | None = None,
) -> Iterator[OverlapRecord]:
    """Longest overlap longer than ``tau`` for every ordered document pair.

    By default an overlap spanning the whole destination document is not
    reported; the next shorter one is. With ``containment`` such overlaps are
    reported for distinct documents, which needs the suffix-length stream.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    streams.require("bwt", "lcp", "da", "xlcp")
    if containment and streams.slen_path is None:
        raise StreamError("containment mode needs the suffix-length stream")
    names = ["bwt", "lcp", "lcp_next", "da", "xlcp"] + (["slen"] if containment else [])
    doclen = None if containment else _doc_lengths(streams)
    mach = _Machine()
    pending: list[list] = []  # [dst, L, buffered reports, chain srcs]

    for blk in streams.blocks(*names):
        bwt = blk.bwt.tolist()
        lcp = blk.lcp.tolist()
        nxt = blk.lcp_next.tolist()
        da = blk.da.tolist()
        xl = blk.xlcp.tolist()
        sl = blk.slen.tolist() if containment else None
        for off in range(blk.hi - blk.lo):
            dst = da[off]
            if pending:
                keep = []
                for p in pending:
                    if lcp[off] == p[1] and sl[off] == p[1] + 1:
                        p[3].add(dst)
                        keep.append(p)
                    else:
                        yield from _flush(p)
                pending = keep
            if bwt[off] == MARKER:
                dlen = sl[off] - 1 if containment else doclen[dst]
                reports = []
                for src, v in mach.longest():
                    if src == dst and not include_self:
                        continue
                    if v == dlen and (src == dst or not containment):
                        v = _proper(mach, src)
                        if v is None:
                            continue
                    reports.append(OverlapRecord(src, dst, v))
                if containment and xl[off] and nxt[off] > tau:
                    # the whole document prefixes the following suffixes of the same length
                    pending.append([dst, nxt[off], reports, set()])
                else:
                    yield from reports
            L = nxt[off]
            mach.evict_above(L)
            if xl[off] and L > tau:
                mach.push(dst, L)
    for p in pending:
        yield from _flush(p)
    if stats is not None:
        stats["pushes"] = mach.pushes
        stats["evictions"] = mach.evictions


def _proper(mach: _Machine, src: int):
    # the top entry spans all of dst; the one below it is the longest proper overlap
    st = mach.stacks[src]
    return st[-2] if len(st) >= 2 else None


def _flush(p):
    dst, L, reports, srcs = p
    for r in reports:
        if r.src not in srcs:
            yield r
    for src in sorted(srcs):
        yield OverlapRecord(src, dst, L)


def derive_suffix_lengths(bwt_path, m: int, n: int, out_path=None) -> np.ndarray:
    """Suffix length (end-marker included) for every rank, by walking LF from each marker row."""
    bwt = np.asarray(open_array(bwt_path, BWT_DTYPE))
    if len(bwt) != n:
        raise StreamError(f"bwt has {len(bwt)} symbols, expected {n}")
    order = np.argsort(bwt, kind="stable")
    lf = np.empty(n, dtype=np.int64)
    lf[order] = np.arange(n, dtype=np.int64)
    slen = np.zeros(n, dtype=SLEN_DTYPE)
    steps = _kernels.lf_walk(bwt, lf, m, slen)
    if steps != n:
        raise StreamError(f"LF walk covered {steps} ranks, expected {n}: corrupt bwt")
    if out_path is not None:
        slen.tofile(Path(out_path))
    return slen
