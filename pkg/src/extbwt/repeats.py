"""Maximal repeats from one sequential pass over bwt and lcp.

Type 1: every one-symbol extension occurs fewer times than the repeat.
Type 2: every one-symbol extension occurs at most once.

End-markers are pairwise distinct symbols, so an occurrence at a document
boundary never shares an extension with another occurrence.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .seqio import MARKER
from .streams import StreamBundle


@dataclass(frozen=True)
class RepeatRecord:
    length: int
    lo: int
    hi: int
    distinct_docs: int = 0

    @property
    def occurrences(self) -> int:
        return self.hi - self.lo + 1

    def key(self) -> tuple[int, int, int]:
        return self.length, self.lo, self.hi


@dataclass
class RepeatOptions:
    min_length: int = 1
    min_occ: int = 2
    min_docs: int | None = None

    def __post_init__(self):
        if self.min_length < 1:
            raise ValueError("min_length must be >= 1")
        if self.min_occ < 2:
            raise ValueError("min_occ must be >= 2")
        if self.min_docs is not None and self.min_docs < 1:
            raise ValueError("min_docs must be >= 1")


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _left_diverse(charset: int) -> bool:
    # bit 0 is the end-marker: any boundary occurrence makes the left side maximal
    return bool(charset & 1) or _popcount(charset) >= 2


class _Entry:
    __slots__ = ("lb", "value", "chars", "docs")

    def __init__(self, lb, value, chars=0, docs=0):
        self.lb = lb
        self.value = value
        self.chars = chars
        self.docs = docs


def find_type1(streams: StreamBundle, opts: RepeatOptions | None = None,
               stats: dict | None = None) -> Iterator[RepeatRecord]:
    """Stack scan over lcp intervals; each entry carries the BWT symbols seen in it."""
    opts = opts or RepeatOptions()
    track = opts.min_docs is not None
    names = ["bwt", "lcp_next"] + (["da"] if track else [])
    stack = [_Entry(0, 0)]
    depth = 1
    for blk in streams.blocks(*names):
        bwt = blk.bwt.tolist()
        nxt = blk.lcp_next.tolist()
        da = blk.da.tolist() if track else None
        for off in range(blk.hi - blk.lo):
            i = blk.lo + off
            bit = 1 << int(bwt[off])
            dbit = (1 << da[off]) if track else 0
            L = nxt[off]
            top = stack[-1]
            if L > top.value:
                # rank i opens a deeper interval and belongs to it
                stack.append(_Entry(i, L, bit, dbit))
                depth = max(depth, len(stack))
                continue
            top.chars |= bit
            top.docs |= dbit
            while L < stack[-1].value:
                e = stack.pop()
                occ = i - e.lb + 1
                if (e.value >= opts.min_length and occ >= opts.min_occ and _left_diverse(e.chars)
                        and (not track or _popcount(e.docs) >= opts.min_docs)):
                    yield RepeatRecord(e.value, e.lb, i, _popcount(e.docs) if track else 0)
                if stack and L <= stack[-1].value:
                    stack[-1].chars |= e.chars
                    stack[-1].docs |= e.docs
                else:
                    # the popped interval becomes the first child of a shallower one
                    stack.append(_Entry(e.lb, L, e.chars, e.docs))
                    break
    if stats is not None:
        stats["max_depth"] = depth


def find_type2(streams: StreamBundle, opts: RepeatOptions | None = None) -> Iterator[RepeatRecord]:
    """Local maxima of the lcp profile whose BWT symbols are pairwise distinct."""
    opts = opts or RepeatOptions()
    track = opts.min_docs is not None
    names = ["bwt", "lcp"] + (["da"] if track else [])
    prev_lcp = -1
    prev_sym = MARKER
    prev_doc = 0
    cand = None  # [start, value, marks, alive, docs]
    n = streams.n
    for blk in streams.blocks(*names):
        bwt = blk.bwt.tolist()
        lcp = blk.lcp.tolist()
        da = blk.da.tolist() if track else None
        for off in range(blk.hi - blk.lo):
            i = blk.lo + off
            cur = lcp[off] if i > 0 else -1
            sym = bwt[off]
            doc = da[off] if track else 0
            if i > 0:
                if cur > prev_lcp:
                    marks = 0
                    alive = True
                    for s in (prev_sym, sym):
                        if s != MARKER:
                            if marks >> s & 1:
                                alive = False
                            marks |= 1 << s
                    cand = [i - 1, cur, marks, alive, (1 << prev_doc) | (1 << doc)]
                elif cur == prev_lcp:
                    if cand is not None:
                        if sym != MARKER:
                            if cand[2] >> sym & 1:
                                cand[3] = False
                            cand[2] |= 1 << sym
                        cand[4] |= 1 << doc
                else:
                    if cand is not None:
                        yield from _close_type2(cand, i - 1, opts, track)
                    cand = None
            prev_lcp, prev_sym, prev_doc = cur, sym, doc
    if cand is not None and n > 0:
        yield from _close_type2(cand, n - 1, opts, track)


def _close_type2(cand, hi, opts, track):
    start, value, _, alive, docs = cand
    occ = hi - start + 1
    if alive and value >= opts.min_length and occ >= opts.min_occ:
        nd = _popcount(docs) if track else 0
        if not track or nd >= opts.min_docs:
            yield RepeatRecord(value, start, hi, nd)
