"""Phase 2: external merge of partial multi-string BWTs with LCP discovery.

Each iteration scans the previous interleave vector (one byte per merged
position: 7-bit input ordinal + block-start bit) and redistributes the
ordinals into symbol buckets, refining the blocks by one more context symbol.
A position whose block-start bit appeared one iteration ago has its LCP
value fixed; it is written to the pair file of that value. Runs of settled
positions are recorded as irrelevant ranges and skipped wholesale.
"""
from __future__ import annotations

import logging
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels as K
from .formats import (
    BWT_DTYPE,
    DA_DTYPE,
    PAIR_DTYPE,
    create_array,
    nbytes_for_bits,
    open_array,
    pair_file,
)
from .suffix_core import PartialArtifact

log = logging.getLogger(__name__)

MAX_FAN_IN = 128
MAX_FAN_IN_SEMI = 8
MAX_POSITION = (1 << 63) - 1
EMIT_BUFFER = 1 << 20
RANGE_BUFFER = 1 << 12
COPY_CHUNK = 1 << 22


class MergeError(RuntimeError):
    pass


@dataclass
class MergeConfig:
    out_prefix: Path
    fan_in_limit: int | None = None  # defaults to the mode's cap
    skip_threshold: int | None = None
    skipping_enabled: bool = True
    semi_external: bool = False
    prefix_depth: int | None = None
    track_xlcp: bool = True
    emit_pairs: bool = True

    def __post_init__(self):
        self.out_prefix = Path(self.out_prefix)
        cap = MAX_FAN_IN_SEMI if self.semi_external else MAX_FAN_IN
        if self.fan_in_limit is None:
            self.fan_in_limit = cap
        if not 1 <= self.fan_in_limit <= cap:
            raise MergeError(f"fan-in limit must be in 1..{cap}")
        if self.prefix_depth is not None:
            if self.prefix_depth < 1:
                raise MergeError("prefix depth must be positive")
            # ts snapshots of unsettled rows are not protected by the skip rule
            self.skipping_enabled = False
            self.track_xlcp = False

    def threshold(self, k: int, sigma: int) -> int:
        if self.skip_threshold is not None:
            return self.skip_threshold
        return max(256, k + sigma)


@dataclass
class BucketTable:
    code_of: np.ndarray  # 256 -> code, -1 if absent
    counts: np.ndarray  # per code
    F: np.ndarray  # per code, first position of its bucket
    zero_base: np.ndarray  # per input, first position of its end-marker sub-bucket
    input_sizes: np.ndarray

    @property
    def sigma(self) -> int:
        return len(self.counts) - 1

    @property
    def n(self) -> int:
        return int(self.counts.sum())


@dataclass
class IterationStats:
    h: int
    pairs_emitted: int = 0
    positions_scanned: int = 0
    positions_skipped: int = 0
    ranges_consumed: int = 0
    ranges_written: int = 0
    bytes_read: int = 0
    bytes_written: int = 0
    done: bool = False


@dataclass
class MergedArtifacts:
    bwt_path: Path
    da_path: Path
    pair_dir: Path | None
    pair_prefix: Path | None
    iterations: int
    n: int
    m: int
    stats: list[IterationStats] = field(default_factory=list)
    shortrow_path: Path | None = None
    capped_value: int | None = None

    def as_partial(self, doc_range: tuple[int, int]) -> PartialArtifact:
        return PartialArtifact(self.bwt_path, self.da_path, self.n, doc_range)

    @property
    def bytes_read(self) -> int:
        return sum(s.bytes_read for s in self.stats)


def _chunks(path: Path, dtype, chunk: int = COPY_CHUNK):
    arr = open_array(path, dtype)
    for lo in range(0, len(arr), chunk):
        yield np.asarray(arr[lo:lo + chunk])


def compute_buckets(inputs: Sequence[PartialArtifact], alphabet=None) -> BucketTable:
    """One sequential pass over each input BWT, counting symbols."""
    if not inputs:
        raise MergeError("no inputs to merge")
    byte_counts = np.zeros(256, dtype=np.int64)
    markers = np.zeros(len(inputs), dtype=np.int64)
    sizes = np.zeros(len(inputs), dtype=np.int64)
    for j, art in enumerate(inputs):
        local = np.zeros(256, dtype=np.int64)
        for chunk in _chunks(Path(art.bwt_path), BWT_DTYPE):
            local += np.bincount(chunk, minlength=256)
        size = int(local.sum())
        if size == 0:
            raise MergeError(f"input {art.bwt_path} is empty")
        if size != art.n_sub:
            raise MergeError(f"input {art.bwt_path} has {size} symbols, expected {art.n_sub}")
        sizes[j] = size
        markers[j] = local[0]
        byte_counts += local
    present = [b for b in range(1, 256) if byte_counts[b]]
    if alphabet is not None:
        stray = [b for b in present if b not in alphabet.code_of]
        if stray:
            raise MergeError(f"inputs use bytes outside the alphabet: {stray[:5]}")
        present = sorted(alphabet.code_of)
    code_of = np.full(256, -1, dtype=np.int64)
    code_of[0] = 0
    for c, b in enumerate(present, start=1):
        code_of[b] = c
    counts = np.zeros(len(present) + 1, dtype=np.int64)
    counts[0] = byte_counts[0]
    for c, b in enumerate(present, start=1):
        counts[c] = byte_counts[b]
    F = np.concatenate(([0], np.cumsum(counts)[:-1])).astype(np.int64)
    zero_base = np.concatenate(([0], np.cumsum(markers)[:-1])).astype(np.int64)
    return BucketTable(code_of, counts, F, zero_base, sizes)


class MergeState:
    """Phase 2 working set for one merge instance."""

    def __init__(self, inputs: Sequence[PartialArtifact], config: MergeConfig, workdir: Path,
                 alphabet=None):
        k = len(inputs)
        if k == 0:
            raise MergeError("no inputs to merge")
        cap = MAX_FAN_IN_SEMI if config.semi_external else MAX_FAN_IN
        if k > min(cap, config.fan_in_limit):
            raise MergeError(f"{k} inputs exceed the fan-in limit {min(cap, config.fan_in_limit)}")
        self.inputs = list(inputs)
        self.config = config
        self.workdir = Path(workdir)
        self.workdir.mkdir(parents=True, exist_ok=True)
        self.prefix = self.workdir / "merge"
        self.table = compute_buckets(inputs, alphabet)
        self.k = k
        self.sig1 = len(self.table.counts)
        self.n = self.table.n
        if self.n > MAX_POSITION:
            raise MergeError("collection too large for 63-bit positions")
        self.t = config.threshold(k, self.sig1 - 1)
        self.h = 0
        self.emitted = 0
        self.semi = config.semi_external
        self.track_ts = config.track_xlcp or config.prefix_depth is not None
        self.offsets = np.concatenate(([0], np.cumsum(self.table.input_sizes)[:-1])).astype(np.int64)
        self.stats: list[IterationStats] = []
        self.pair_dir = self.workdir / "pairs"
        if config.emit_pairs:
            self.pair_dir.mkdir(exist_ok=True)
        self._build_concat()
        self._init_arrays()

    # -- setup -----------------------------------------------------------

    def _build_concat(self) -> None:
        # input BWTs are only ever read through per-input sequential cursors
        self.cat_path = Path(f"{self.prefix}.in")
        with open(self.cat_path, "wb") as out:
            for art in self.inputs:
                with open(art.bwt_path, "rb") as src:
                    shutil.copyfileobj(src, out, COPY_CHUNK)
        self.cat = np.asarray(open_array(self.cat_path, BWT_DTYPE))

    def _init_arrays(self) -> None:
        n, k = self.n, self.k
        nb = nbytes_for_bits(n)
        self.bx = create_array(Path(f"{self.prefix}.bx"), np.uint8, nb) if not self.semi else np.zeros(nb, np.uint8)
        self.bx[0] |= 1
        if self.semi:
            self.zpack = np.repeat(np.arange(k, dtype=np.uint8), self.table.input_sizes)
            self.zpack[0] |= 1 << 6
            self.z = [np.zeros(1, np.uint8), np.zeros(1, np.uint8)]
        else:
            self.zpack = np.zeros(1, np.uint8)
            z0 = create_array(Path(f"{self.prefix}.Z0"), np.uint8, n)
            for j, (off, size) in enumerate(zip(self.offsets, self.table.input_sizes)):
                z0[off:off + size] = j
            z0[0] |= 0x80
            z1 = create_array(Path(f"{self.prefix}.Z1"), np.uint8, n)
            self.z = [np.asarray(z0), np.asarray(z1)]
        if self.track_ts:
            if self.semi:
                self.ts = [np.zeros(nb, np.uint8), np.zeros(nb, np.uint8)]
            else:
                self.ts = [np.asarray(create_array(Path(f"{self.prefix}.ts{j}"), np.uint8, nb))
                           for j in (0, 1)]
        else:
            self.ts = [np.zeros(1, np.uint8), np.zeros(1, np.uint8)]
        self.width = 2 + 2 * k + self.sig1
        # ranges found while scanning Z_{h-1} are applied at iteration h+2: only
        # then do the destination slots of the skipped positions hold final values
        self.range_paths = [Path(f"{self.prefix}.ranges.{j}") for j in (0, 1, 2)]
        for p in self.range_paths:
            p.write_bytes(b"")

    @property
    def done(self) -> bool:
        return self.emitted == self.n - 1

    @property
    def final_slot(self) -> int:
        """Which of the two z slots holds the most recent ordering."""
        return self.h % 2

    def ordering(self) -> tuple[np.ndarray, np.ndarray]:
        """(input ordinals, B bits) of the most recent ordering; loads it into RAM."""
        slot = self.final_slot
        if self.semi:
            lam = (self.zpack >> (3 * slot)) & 7
            b = (self.zpack >> (6 if slot == 0 else 7)) & 1
        else:
            lam = self.z[slot] & 0x7F
            b = self.z[slot] >> 7
        return np.array(lam, dtype=np.uint8), np.array(b, dtype=np.uint8)

    # -- one iteration ---------------------------------------------------

    def run_iteration(self) -> IterationStats:
        h = self.h + 1
        cfg = self.config
        n, k, sig1 = self.n, self.k, self.sig1
        old, new = (h - 1) % 2, h % 2
        skip_in = np.fromfile(self.range_paths[(h - 2) % 3], dtype="<i8").reshape(-1, self.width)
        out_path = self.range_paths[h % 3]
        out_fh = open(out_path, "wb")
        pair_fh = None
        if cfg.emit_pairs and h >= 2:
            pair_fh = open(pair_file(self.pair_dir / "merge", h - 2), "wb")

        in_cur = self.offsets.copy()
        bucket_cur = self.table.F.copy()
        zero_cur = self.table.zero_base.copy()
        last_block = np.full(sig1, -1, dtype=np.int64)
        st = np.zeros(K.N_SLOTS, dtype=np.int64)
        st[K.S_PEND_LAM] = -1
        adv = np.zeros(self.width - 2, dtype=np.int64)
        skip_out = np.empty((min(RANGE_BUFFER, n + 1), self.width), dtype=np.int64)
        emit_buf = np.empty(min(EMIT_BUFFER, n + 1) if cfg.emit_pairs else 1, dtype=PAIR_DTYPE)
        pairs_written = 0
        while True:
            status = K.scan_iteration(
                h, n, k, sig1,
                self.cat, in_cur, self.table.code_of, bucket_cur, zero_cur, last_block,
                self.semi, self.z[old], self.z[new], self.zpack, 3 * old, 3 * new,
                self.bx, self.track_ts, self.ts[old], self.ts[new],
                cfg.skipping_enabled, self.t, skip_in, skip_out,
                cfg.emit_pairs, emit_buf,
                st, adv,
            )
            if st[K.S_N_EMIT]:
                if pair_fh is None:
                    raise MergeError("pair emitted before iteration 2")
                emit_buf[: st[K.S_N_EMIT]].tofile(pair_fh)
                pairs_written += int(st[K.S_N_EMIT])
                st[K.S_N_EMIT] = 0
            if st[K.S_N_OUT]:
                skip_out[: st[K.S_N_OUT]].astype("<i8").tofile(out_fh)
                st[K.S_N_OUT] = 0
            if status == K.DONE:
                break
        out_fh.close()
        if pair_fh is not None:
            pair_fh.close()
            if pairs_written == 0:
                pair_file(self.pair_dir / "merge", h - 2).unlink()

        self._check_cursors(in_cur, bucket_cur, zero_cur)
        self.h = h
        self.emitted += int(st[K.S_EMITTED])
        scanned, skipped = int(st[K.S_SCANNED]), int(st[K.S_SKIPPED])
        bit_bytes = nbytes_for_bits(scanned)
        rec_bytes = 8 * self.width
        bytes_read = 2 * scanned + bit_bytes + rec_bytes * int(st[K.S_CONSUMED])
        bytes_written = scanned + bit_bytes + 8 * pairs_written + rec_bytes * int(st[K.S_WRITTEN])
        if self.track_ts:
            bytes_read += bit_bytes
            bytes_written += bit_bytes
        stats = IterationStats(
            h=h,
            pairs_emitted=int(st[K.S_EMITTED]),
            positions_scanned=scanned,
            positions_skipped=skipped,
            ranges_consumed=int(st[K.S_CONSUMED]),
            ranges_written=int(st[K.S_WRITTEN]),
            bytes_read=bytes_read,
            bytes_written=bytes_written,
            done=self.done,
        )
        self.stats.append(stats)
        log.debug("iteration %d: %s", h, stats)
        return stats

    def _check_cursors(self, in_cur, bucket_cur, zero_cur) -> None:
        ends = self.offsets + self.table.input_sizes
        if np.any(in_cur != ends):
            raise MergeError(f"input cursor overrun: inputs inconsistent with bucket table {in_cur} {ends}")
        bucket_end = self.table.F + self.table.counts
        if np.any(bucket_cur[1:] != bucket_end[1:]):
            raise MergeError("bucket overflow: symbol counts inconsistent with bucket table")
        zero_end = self.table.zero_base + np.diff(np.append(self.table.zero_base, self.table.counts[0]))
        if np.any(zero_cur != zero_end):
            raise MergeError("end-marker sub-bucket overflow")

    # -- wrap-up ---------------------------------------------------------

    def snapshot_ts(self, path: Path) -> None:
        np.asarray(self.ts[self.h % 2]).tofile(path)

    def emit_capped(self, value: int) -> int:
        """Record every still-unsettled rank with the capped LCP value."""
        bits = np.unpackbits(np.asarray(self.bx), bitorder="little", count=self.n)
        pos = np.flatnonzero(bits == 0).astype(np.uint64)
        if len(pos):
            pos.astype(PAIR_DTYPE).tofile(pair_file(self.pair_dir / "merge", value))
        self.emitted += len(pos)
        return len(pos)

    def write_output(self, bwt_path: Path, da_path: Path) -> None:
        """Final sequential pass: interleave the inputs as the last ordering says."""
        da_cat = Path(f"{self.prefix}.in.da")
        with open(da_cat, "wb") as out:
            for art in self.inputs:
                with open(art.da_path, "rb") as src:
                    shutil.copyfileobj(src, out, COPY_CHUNK)
        dacat = np.asarray(open_array(da_cat, DA_DTYPE))
        slot = self.final_slot
        in_cur = self.offsets.copy()
        with open(bwt_path, "wb") as fb, open(da_path, "wb") as fd:
            for lo in range(0, self.n, COPY_CHUNK):
                hi = min(self.n, lo + COPY_CHUNK)
                ob = np.empty(hi - lo, dtype=BWT_DTYPE)
                od = np.empty(hi - lo, dtype=DA_DTYPE)
                K.final_pass(self.n, self.semi, self.z[slot], self.zpack, 3 * slot,
                             self.cat, dacat, in_cur, ob, od, lo, hi)
                ob.tofile(fb)
                od.tofile(fd)
        del dacat
        da_cat.unlink()

    def cleanup(self) -> None:
        self.cat = None
        self.z = None
        self.ts = None
        self.bx = None
        for suffix in ("in", "Z0", "Z1", "bx", "ts0", "ts1", "ranges.0", "ranges.1", "ranges.2"):
            p = Path(f"{self.prefix}.{suffix}")
            if p.exists():
                p.unlink()


def init_merge(inputs: Sequence[PartialArtifact], config: MergeConfig, workdir: Path | None = None,
               alphabet=None) -> MergeState:
    workdir = Path(workdir) if workdir is not None else Path(f"{config.out_prefix}.tmp")
    return MergeState(inputs, config, workdir, alphabet)


def run_iteration(state: MergeState) -> IterationStats:
    return state.run_iteration()


def run_merge(inputs: Sequence[PartialArtifact], config: MergeConfig, workdir: Path | None = None,
              alphabet=None, keep: bool = False) -> MergedArtifacts:
    state = init_merge(inputs, config, workdir, alphabet)
    depth = config.prefix_depth
    shortrow = None
    capped = None
    if state.n == 1:
        raise MergeError("degenerate input of length 1")
    while True:
        state.run_iteration()
        if depth is not None and state.h == depth:
            shortrow = Path(f"{config.out_prefix}.shortrow")
            state.snapshot_ts(shortrow)
        if depth is None:
            if state.done:
                break
        elif (state.done and state.h >= depth) or state.h == depth + 2:
            break
    if depth is not None and not state.done:
        capped = depth + 1
        state.emit_capped(capped)
    bwt_path = Path(f"{config.out_prefix}.bwt")
    da_path = Path(f"{config.out_prefix}.da")
    state.write_output(bwt_path, da_path)
    m = int(state.table.counts[0])
    result = MergedArtifacts(
        bwt_path=bwt_path,
        da_path=da_path,
        pair_dir=state.pair_dir if config.emit_pairs else None,
        pair_prefix=(state.pair_dir / "merge") if config.emit_pairs else None,
        iterations=state.h,
        n=state.n,
        m=m,
        stats=state.stats,
        shortrow_path=shortrow,
        capped_value=capped,
    )
    if not keep:
        state.cleanup()
    return result


def plan_merge_tree(num_inputs: int, fan_in_limit: int) -> list[list[list[int]]]:
    """Rounds of groups; each group lists indices into the previous round's outputs.

    Round 0 indexes the Phase 1 partials; the last round has a single group.
    """
    if num_inputs < 1:
        raise MergeError("nothing to merge")
    if fan_in_limit < 2 and num_inputs > 1:
        raise MergeError("fan-in limit below 2 cannot merge several inputs")
    rounds: list[list[list[int]]] = []
    width = num_inputs
    while True:
        groups = [list(range(lo, min(lo + fan_in_limit, width))) for lo in range(0, width, fan_in_limit)]
        rounds.append(groups)
        if len(groups) == 1:
            return rounds
        width = len(groups)
