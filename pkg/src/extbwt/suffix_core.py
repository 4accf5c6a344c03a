"""Phase 1: in-memory suffix sorting of one subcollection.

Produces the partial multi-string BWT and document array of a subcollection
and writes them in the toolkit's raw formats.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .formats import BWT_DTYPE, DA_DTYPE
from .seqio import MARKER, SequenceCollection


@dataclass(frozen=True)
class PartialArtifact:
    bwt_path: Path
    da_path: Path
    n_sub: int
    doc_range: tuple[int, int]

    @property
    def markers(self) -> int:
        return self.doc_range[1] - self.doc_range[0]


def _integer_text(docs) -> np.ndarray:
    """Concatenation with end-marker of the j-th document encoded as j.

    Symbols are shifted above every marker so order is preserved and each
    marker is unique, which realises the "markers compare by document" rule.
    """
    m = len(docs)
    parts = []
    for j, d in enumerate(docs):
        arr = np.frombuffer(d, dtype=np.uint8).astype(np.int64)
        parts.append(arr + m)
        parts.append(np.array([j], dtype=np.int64))
    return np.concatenate(parts)


def _prefix_doubling(text: np.ndarray) -> np.ndarray:
    n = len(text)
    _, rank = np.unique(text, return_inverse=True)
    rank = rank.astype(np.int64)
    sa = np.argsort(rank, kind="stable")
    if n <= 1:
        return sa
    k = 1
    while int(rank.max()) < n - 1:
        second = np.full(n, -1, dtype=np.int64)
        second[: n - k] = rank[k:]
        # rank < n and second+1 <= n, so the combined key fits in int64
        key = rank * (n + 1) + (second + 1)
        sa = np.argsort(key, kind="stable")
        sk = key[sa]
        new = np.empty(n, dtype=np.int64)
        new[sa] = np.concatenate(([0], np.cumsum(sk[1:] != sk[:-1])))
        rank = new
        k *= 2
    return sa


def build_suffix_order(subcoll: SequenceCollection) -> np.ndarray:
    """Suffix start positions of the marker-terminated concatenation, sorted.

    Any correct order is acceptable to the later phases; this uses prefix
    doubling, O(n log n) with numpy sorts.
    """
    if not subcoll.docs:
        raise ValueError("empty subcollection")
    return _prefix_doubling(_integer_text(subcoll.docs))


def _doc_layout(subcoll: SequenceCollection) -> tuple[np.ndarray, np.ndarray]:
    lens = np.array([len(d) + 1 for d in subcoll.docs], dtype=np.int64)
    starts = np.concatenate(([0], np.cumsum(lens)[:-1]))
    return lens, starts


def derive_bwt(subcoll: SequenceCollection, order: np.ndarray) -> np.ndarray:
    raw = np.frombuffer(b"".join(d + b"\x00" for d in subcoll.docs), dtype=np.uint8)
    _, starts = _doc_layout(subcoll)
    is_start = np.zeros(len(raw), dtype=bool)
    is_start[starts] = True
    prev = np.roll(raw, 1)
    out = prev[order].copy()
    out[is_start[order]] = MARKER
    return out.astype(BWT_DTYPE)


def derive_da(subcoll: SequenceCollection, order: np.ndarray) -> np.ndarray:
    lens, _ = _doc_layout(subcoll)
    ids = np.repeat(np.arange(subcoll.m, dtype=np.int64) + subcoll.first_id, lens)
    return ids[order].astype(DA_DTYPE)


def write_partial(
    bwt: np.ndarray, da: np.ndarray, out_prefix: str | Path, ordinal: int, doc_range: tuple[int, int]
) -> PartialArtifact:
    if len(bwt) == 0:
        raise ValueError("empty subcollection")
    if len(bwt) != len(da):
        raise ValueError("bwt and da lengths differ")
    bwt_path = Path(f"{out_prefix}.{ordinal}.bwt")
    da_path = Path(f"{out_prefix}.{ordinal}.da")
    np.asarray(bwt, dtype=BWT_DTYPE).tofile(bwt_path)
    np.asarray(da, dtype=DA_DTYPE).tofile(da_path)
    return PartialArtifact(bwt_path, da_path, len(bwt), doc_range)


def build_partial(subcoll: SequenceCollection, out_prefix: str | Path, ordinal: int) -> PartialArtifact:
    order = build_suffix_order(subcoll)
    bwt = derive_bwt(subcoll, order)
    da = derive_da(subcoll, order)
    rng = (subcoll.first_id, subcoll.first_id + subcoll.m)
    return write_partial(bwt, da, out_prefix, ordinal, rng)
