"""Phase 3: multiway merge of the per-value pair files into the LCP array."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .formats import (
    LCP_DTYPE,
    PAIR_DTYPE,
    PAIR_FLAG,
    PAIR_POS_MASK,
    RUN_DTYPE,
    nbytes_for_bits,
    open_array,
    pair_value,
)

log = logging.getLogger(__name__)

DEFAULT_FAN_IN = 256
BLOCK = 1 << 16


class LcpMergeError(RuntimeError):
    pass


class RunCursor:
    """Buffered sequential reader over one sorted run."""

    def __init__(self, path: Path, value: int | None = None, block: int = BLOCK):
        self.path = Path(path)
        self.value = value
        dtype = PAIR_DTYPE if value is not None else RUN_DTYPE
        self._data = open_array(self.path, dtype)
        self._next = 0
        self._block = block
        self.buf_w = np.zeros(0, dtype=np.uint64)
        self.buf_v = np.zeros(0, dtype=np.uint32)
        self.last_pos = -1
        self.refill()

    @property
    def exhausted(self) -> bool:
        return len(self.buf_w) == 0

    def refill(self) -> None:
        if len(self.buf_w) or self._next >= len(self._data):
            return
        chunk = np.asarray(self._data[self._next:self._next + self._block])
        self._next += len(chunk)
        if self.value is None:
            w = chunk["w"].astype(np.uint64)
            v = chunk["v"].astype(np.uint32)
        else:
            w = chunk.astype(np.uint64)
            v = np.full(len(w), self.value, dtype=np.uint32)
        pos = (w & PAIR_POS_MASK).astype(np.int64)
        if len(pos) and (pos[0] <= self.last_pos or np.any(np.diff(pos) <= 0)):
            raise LcpMergeError(f"{self.path}: positions not strictly increasing")
        if len(pos):
            self.last_pos = int(pos[-1])
        self.buf_w, self.buf_v = w, v

    def head_limit(self) -> int:
        return int(self.buf_w[-1] & PAIR_POS_MASK)

    def take_upto(self, limit: int):
        pos = (self.buf_w & PAIR_POS_MASK).astype(np.int64)
        cut = int(np.searchsorted(pos, limit, side="right"))
        w, v = self.buf_w[:cut], self.buf_v[:cut]
        self.buf_w, self.buf_v = self.buf_w[cut:], self.buf_v[cut:]
        self.refill()
        return w, v


def _merge_runs(cursors: list[RunCursor]):
    """Yield (w, v) blocks of records in increasing position order."""
    live = [c for c in cursors if not c.exhausted]
    while live:
        # everything up to the smallest buffered maximum is safe to emit
        limit = min(c.head_limit() for c in live)
        ws, vs = [], []
        for c in live:
            w, v = c.take_upto(limit)
            if len(w):
                ws.append(w)
                vs.append(v)
        w = np.concatenate(ws)
        v = np.concatenate(vs)
        order = np.argsort(w & PAIR_POS_MASK, kind="stable")
        yield w[order], v[order]
        live = [c for c in live if not c.exhausted]


@dataclass
class LcpOutputs:
    lcp_path: Path
    xlcp_path: Path | None
    rounds: int


def _level0(pair_dir: Path) -> list[RunCursor]:
    files = sorted(Path(pair_dir).glob("*.pairs.*"), key=pair_value)
    return [RunCursor(p, pair_value(p)) for p in files]


def _write_intermediate(cursors: list[RunCursor], path: Path) -> None:
    with open(path, "wb") as fh:
        for w, v in _merge_runs(cursors):
            rec = np.empty(len(w), dtype=RUN_DTYPE)
            rec["w"] = w
            rec["v"] = v
            rec.tofile(fh)


def _write_final(cursors, n, lcp_path, xlcp_path, cap):
    expected = 1
    xbits = np.zeros(nbytes_for_bits(n), dtype=np.uint8) if xlcp_path is not None else None
    with open(lcp_path, "wb") as fh:
        np.zeros(1, dtype=LCP_DTYPE).tofile(fh)
        for w, v in _merge_runs(cursors):
            pos = (w & PAIR_POS_MASK).astype(np.int64)
            if pos[-1] >= n:
                raise LcpMergeError(f"position {int(pos[-1])} out of range for n={n}")
            want = np.arange(expected, expected + len(pos), dtype=np.int64)
            if not np.array_equal(pos, want):
                bad = int(np.flatnonzero(pos != want)[0])
                if bad > 0 and pos[bad] == pos[bad - 1]:
                    raise LcpMergeError(f"duplicate rank {int(pos[bad])}")
                raise LcpMergeError(f"missing rank {int(want[bad])}")
            if cap is not None:
                v = np.minimum(v, cap)
            v.astype(LCP_DTYPE).tofile(fh)
            if xbits is not None:
                flagged = pos[(w & PAIR_FLAG) != 0] - 1
                np.bitwise_or.at(xbits, flagged >> 3, (1 << (flagged & 7)).astype(np.uint8))
            expected += len(pos)
    if expected != n:
        raise LcpMergeError(f"missing rank {expected}")
    if xbits is not None:
        xbits.tofile(xlcp_path)


def _merge(pair_dir, n, out_prefix, fan_in, cap, with_xlcp) -> LcpOutputs:
    if fan_in < 2:
        raise LcpMergeError("fan-in must be at least 2")
    out_prefix = Path(out_prefix)
    runs = _level0(pair_dir)
    rounds = 1
    scratch: list[Path] = []
    while len(runs) > fan_in:
        nxt = []
        for g, lo in enumerate(range(0, len(runs), fan_in)):
            path = Path(f"{out_prefix}.run.{rounds}.{g}")
            _write_intermediate(runs[lo:lo + fan_in], path)
            scratch.append(path)
            nxt.append(RunCursor(path))
        runs = nxt
        rounds += 1
    lcp_path = Path(f"{out_prefix}.lcp")
    xlcp_path = Path(f"{out_prefix}.xlcp") if with_xlcp else None
    _write_final(runs, n, lcp_path, xlcp_path, cap)
    for p in scratch:
        p.unlink()
    log.debug("lcp merge: %d rounds", rounds)
    return LcpOutputs(lcp_path, xlcp_path, rounds)


def merge_pair_files(pair_dir, n: int, out_prefix, fan_in: int = DEFAULT_FAN_IN) -> LcpOutputs:
    return _merge(pair_dir, n, out_prefix, fan_in, None, True)


def cap_aware_merge(pair_dir, n: int, out_prefix, cap: int, fan_in: int = DEFAULT_FAN_IN) -> LcpOutputs:
    """As merge_pair_files, but every value at or above ``cap`` is stored as ``cap``."""
    return _merge(pair_dir, n, out_prefix, fan_in, cap, False)
