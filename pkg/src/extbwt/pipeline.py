"""End-to-end construction: split, Phase 1 partials, merge tree, LCP merge."""
from __future__ import annotations

import json
import logging
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import gap_merge, lcp_merge, suffix_core
from .formats import LCP_DTYPE, open_array
from .seqio import DEFAULT_BYTES_PER_SYMBOL, SequenceCollection, plan_subcollections

log = logging.getLogger(__name__)


@dataclass
class IndexConfig:
    out_prefix: Path
    mem_budget: int = 1 << 30
    bytes_per_symbol: int = DEFAULT_BYTES_PER_SYMBOL
    fan_in: int = gap_merge.MAX_FAN_IN
    semi_external: bool = False
    skipping: bool = True
    skip_threshold: int | None = None
    lcp_fan_in: int = lcp_merge.DEFAULT_FAN_IN
    prefix_depth: int | None = None
    want_lcp: bool = True
    want_xlcp: bool = True
    keep: bool = False
    parallel: bool = False

    def __post_init__(self):
        self.out_prefix = Path(self.out_prefix)
        if self.want_xlcp and not self.want_lcp:
            raise ValueError("xlcp output requires lcp output")


@dataclass
class RunStats:
    n: int = 0
    m: int = 0
    subcollections: int = 0
    merge_rounds: int = 0
    iterations: int = 0
    pairs_per_iteration: list[int] = field(default_factory=list)
    positions_skipped: int = 0
    phase2_bytes_read: int = 0
    phase2_bytes_written: int = 0
    lcp_rounds: int = 0
    maxlcp: int = 0
    avelcp: float = 0.0
    time_phase1: float = 0.0
    time_phase2: float = 0.0
    time_phase3: float = 0.0

    TIMING_KEYS = ("time_phase1", "time_phase2", "time_phase3")

    def lines(self, with_timings: bool = True) -> list[str]:
        out = []
        for key, value in asdict(self).items():
            if not with_timings and key in self.TIMING_KEYS:
                continue
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, float):
                value = f"{value:.6f}"
            out.append(f"{key}={value}")
        return out

    def write(self, path: Path) -> None:
        Path(path).write_text("\n".join(self.lines()) + "\n")
        Path(f"{path}.json").write_text(json.dumps(asdict(self), indent=1))


@dataclass
class IndexResult:
    bwt_path: Path
    da_path: Path
    lcp_path: Path | None
    xlcp_path: Path | None
    shortrow_path: Path | None
    stats: RunStats
    n: int
    m: int
    pair_dir: Path | None = None  # only while temporary files are kept


def build_partials(coll: SequenceCollection, cfg: IndexConfig, workdir: Path):
    plan = plan_subcollections(coll, cfg.mem_budget, cfg.bytes_per_symbol)
    prefix = workdir / "part"

    def one(j):
        lo, hi = plan.ranges[j]
        return suffix_core.build_partial(coll.slice(lo, hi), prefix, j)

    if cfg.parallel:
        with ThreadPoolExecutor() as pool:
            return list(pool.map(one, range(len(plan.ranges))))
    return [one(j) for j in range(len(plan.ranges))]


def merge_partials(partials, cfg: IndexConfig, workdir: Path, alphabet=None):
    """Run the merge tree; returns the final round's MergedArtifacts and round count."""
    fan_in = min(cfg.fan_in, gap_merge.MAX_FAN_IN_SEMI) if cfg.semi_external else cfg.fan_in
    rounds = gap_merge.plan_merge_tree(len(partials), fan_in)
    current = list(partials)
    result = None
    for r, groups in enumerate(rounds):
        final = r == len(rounds) - 1
        nxt = []
        for g, group in enumerate(groups):
            members = [current[j] for j in group]
            out_prefix = cfg.out_prefix if final else workdir / f"round{r}.{g}"
            mcfg = gap_merge.MergeConfig(
                out_prefix=out_prefix,
                fan_in_limit=fan_in,
                skip_threshold=cfg.skip_threshold,
                skipping_enabled=cfg.skipping,
                semi_external=cfg.semi_external,
                prefix_depth=cfg.prefix_depth if final else None,
                track_xlcp=final and cfg.want_xlcp,
                emit_pairs=final and cfg.want_lcp,
            )
            res = gap_merge.run_merge(members, mcfg, workdir / f"m{r}.{g}", alphabet, keep=cfg.keep)
            doc_range = (members[0].doc_range[0], members[-1].doc_range[1])
            nxt.append(res.as_partial(doc_range))
            result = res
        if r > 0 and not cfg.keep:
            for art in current:
                Path(art.bwt_path).unlink(missing_ok=True)
                Path(art.da_path).unlink(missing_ok=True)
        current = nxt
    return result, len(rounds)


def lcp_summary(lcp_path: Path, n: int) -> tuple[int, float]:
    lcp = open_array(lcp_path, LCP_DTYPE)
    if n < 2:
        return 0, 0.0
    total, best = 0, 0
    for lo in range(1, n, 1 << 22):
        chunk = np.asarray(lcp[lo:lo + (1 << 22)], dtype=np.int64)
        total += int(chunk.sum())
        best = max(best, int(chunk.max()))
    return best, total / (n - 1)


def build_index(coll: SequenceCollection, cfg: IndexConfig) -> IndexResult:
    workdir = Path(f"{cfg.out_prefix}.tmp")
    workdir.mkdir(parents=True, exist_ok=True)
    stats = RunStats(n=coll.n, m=coll.m)

    t0 = time.perf_counter()
    partials = build_partials(coll, cfg, workdir)
    stats.subcollections = len(partials)
    t1 = time.perf_counter()
    merged, stats.merge_rounds = merge_partials(partials, cfg, workdir, coll.alphabet)
    t2 = time.perf_counter()
    stats.iterations = merged.iterations
    stats.pairs_per_iteration = [s.pairs_emitted for s in merged.stats]
    stats.positions_skipped = sum(s.positions_skipped for s in merged.stats)
    stats.phase2_bytes_read = merged.bytes_read
    stats.phase2_bytes_written = sum(s.bytes_written for s in merged.stats)

    lcp_path = xlcp_path = None
    if cfg.want_lcp:
        if merged.capped_value is not None:
            out = lcp_merge.cap_aware_merge(merged.pair_dir, merged.n, cfg.out_prefix,
                                            merged.capped_value, cfg.lcp_fan_in)
        else:
            out = lcp_merge.merge_pair_files(merged.pair_dir, merged.n, cfg.out_prefix, cfg.lcp_fan_in)
            if not cfg.want_xlcp and out.xlcp_path is not None:
                out.xlcp_path.unlink()
                out.xlcp_path = None
        lcp_path, xlcp_path = out.lcp_path, out.xlcp_path
        stats.lcp_rounds = out.rounds
        stats.maxlcp, stats.avelcp = lcp_summary(lcp_path, merged.n)
    t3 = time.perf_counter()
    stats.time_phase1, stats.time_phase2, stats.time_phase3 = t1 - t0, t2 - t1, t3 - t2

    for art in partials:
        Path(art.bwt_path).unlink(missing_ok=True)
        Path(art.da_path).unlink(missing_ok=True)
    if not cfg.keep:
        shutil.rmtree(workdir, ignore_errors=True)
    return IndexResult(merged.bwt_path, merged.da_path, lcp_path, xlcp_path, merged.shortrow_path,
                       stats, merged.n, merged.m, merged.pair_dir if cfg.keep else None)
