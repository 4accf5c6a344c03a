"""Brute-force reference implementations.

Everything here works directly from the documents with explicit suffix
comparison and substring enumeration. It is deliberately slow and shares no
code with the construction or scanning paths, so tests can use it as an
independent authority at small sizes.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .seqio import SequenceCollection

MARKER_SYMBOL = b"$"


@dataclass
class OracleResult:
    sa: list[tuple[int, int]]  # (doc, offset); offset == len(doc) is the marker
    bwt: bytes
    lcp: list[int]  # lcp[0] == -1
    da: list[int]
    xlcp: list[int]
    slen: list[int]

    @property
    def n(self) -> int:
        return len(self.sa)

    @property
    def maxlcp(self) -> int:
        return max([0] + self.lcp[1:])

    def lcp_file_values(self) -> list[int]:
        """LCP as stored on disk: rank 0 holds 0."""
        return [0] + self.lcp[1:]


def _suffix_key(docs, d: int, o: int, m: int) -> tuple[int, ...]:
    # marker of document d is d - m: below every byte, ordered by document
    return tuple(docs[d][o:]) + (d - m,)


def _common_prefix(a, b) -> int:
    k = 0
    for x, y in zip(a, b):
        if x != y:
            break
        k += 1
    return k


def naive_arrays(coll: SequenceCollection) -> OracleResult:
    docs, m = coll.docs, coll.m
    suffixes = [(d, o) for d in range(m) for o in range(len(docs[d]) + 1)]
    keys = {s: _suffix_key(docs, s[0], s[1], m) for s in suffixes}
    sa = sorted(suffixes, key=keys.__getitem__)
    bwt = bytearray()
    for d, o in sa:
        bwt.append(0 if o == 0 else docs[d][o - 1])
    lcp = [-1] + [_common_prefix(keys[sa[i - 1]], keys[sa[i]]) for i in range(1, len(sa))]
    slen = [len(docs[d]) - o + 1 for d, o in sa]
    nxt = lcp[1:] + [-1]
    xlcp = [1 if nxt[i] == slen[i] - 1 else 0 for i in range(len(sa))]
    da = [coll.first_id + d for d, _ in sa]
    return OracleResult(sa, bytes(bwt), lcp, da, xlcp, slen)


def special_by_definition(coll: SequenceCollection, res: OracleResult) -> list[int]:
    """Rank i is special iff its suffix, markers dropped, prefixes suffix i+1."""
    out = []
    for i, (d, o) in enumerate(res.sa):
        if i + 1 == len(res.sa):
            out.append(0)
            continue
        d2, o2 = res.sa[i + 1]
        out.append(int(coll.docs[d2][o2:].startswith(coll.docs[d][o:])))
    return out


# -- maximal repeats ---------------------------------------------------------

def _occurrences(coll: SequenceCollection) -> dict[bytes, list[tuple[int, int]]]:
    occ: dict[bytes, list[tuple[int, int]]] = defaultdict(list)
    for d, doc in enumerate(coll.docs):
        for i in range(len(doc)):
            for j in range(i + 1, len(doc) + 1):
                occ[doc[i:j]].append((d, i))
    return occ


def _rank_interval(res: OracleResult, coll: SequenceCollection, alpha: bytes) -> tuple[int, int]:
    ranks = [r for r, (d, o) in enumerate(res.sa) if coll.docs[d][o:].startswith(alpha)]
    assert ranks == list(range(ranks[0], ranks[-1] + 1))
    return ranks[0], ranks[-1]


def _extension_counts(coll, alpha: bytes, places) -> tuple[dict[int, int], dict[int, int]]:
    """Occurrence counts of c.alpha and alpha.c over real symbols c only.

    Occurrences at a document boundary are followed or preceded by that
    document's own end-marker, so they never contribute to a shared
    extension.
    """
    left: dict[int, int] = defaultdict(int)
    right: dict[int, int] = defaultdict(int)
    for d, o in places:
        doc = coll.docs[d]
        if o > 0:
            left[doc[o - 1]] += 1
        if o + len(alpha) < len(doc):
            right[doc[o + len(alpha)]] += 1
    return left, right


def _maximal_repeats(coll: SequenceCollection, bound) -> set[tuple[int, int, int]]:
    res = naive_arrays(coll)
    out = set()
    for alpha, places in _occurrences(coll).items():
        k = len(places)
        if k < 2:
            continue
        left, right = _extension_counts(coll, alpha, places)
        if all(bound(v, k) for v in left.values()) and all(bound(v, k) for v in right.values()):
            lo, hi = _rank_interval(res, coll, alpha)
            out.add((len(alpha), lo, hi))
    return out


def naive_type1(coll: SequenceCollection) -> set[tuple[int, int, int]]:
    """(length, lo, hi) of strings occurring >= 2 times whose every extension occurs fewer times."""
    return _maximal_repeats(coll, lambda v, k: v < k)


def naive_type2(coll: SequenceCollection) -> set[tuple[int, int, int]]:
    """(length, lo, hi) of strings occurring >= 2 times whose every extension occurs at most once."""
    return _maximal_repeats(coll, lambda v, k: v <= 1)


def naive_repeat_docs(coll: SequenceCollection, length: int, lo: int, hi: int) -> int:
    res = naive_arrays(coll)
    return len({res.da[r] for r in range(lo, hi + 1)})


# -- suffix-prefix overlaps --------------------------------------------------

def naive_overlaps(
    coll: SequenceCollection, tau: int, include_self: bool = False, containment: bool = False
) -> set[tuple[int, int, int]]:
    """Longest suffix(src)/prefix(dst) overlap longer than ``tau`` per ordered pair.

    An overlap covering all of dst is admitted only in containment mode and
    only between distinct documents; self-overlaps are always proper.
    """
    out = set()
    docs = coll.docs
    for s, src in enumerate(docs):
        for d, dst in enumerate(docs):
            if s == d and not include_self:
                continue
            top = min(len(src), len(dst))
            if top == len(dst) and (s == d or not containment):
                top -= 1
            for ell in range(top, tau, -1):
                if src[len(src) - ell:] == dst[:ell]:
                    out.add((coll.first_id + s, coll.first_id + d, ell))
                    break
    return out


# -- de Bruijn graph ---------------------------------------------------------

@dataclass
class NaiveBoss:
    W: bytes
    last: list[int]
    wminus: list[int]
    nodes: int
    colors: list[tuple[int, int]]


def naive_boss(coll: SequenceCollection, k: int) -> NaiveBoss:
    """Explicit sorted k-mer table with marker-prefixed predecessor sets."""
    preds: dict[bytes, dict[int, set[int]]] = defaultdict(lambda: defaultdict(set))
    for d, doc in enumerate(coll.docs):
        for o in range(len(doc) - k + 1):
            kmer = doc[o:o + k]
            c = doc[o - 1] if o > 0 else 0
            preds[kmer][c].add(coll.first_id + d)
    if not preds:
        raise ValueError(f"empty graph: no document has length >= {k}")
    W = bytearray()
    last, wminus, colors = [], [], []
    seen_for_prefix: dict[bytes, set[int]] = defaultdict(set)
    for kmer in sorted(preds):
        syms = sorted(preds[kmer])
        for j, c in enumerate(syms):
            idx = len(W)
            W.append(c)
            last.append(1 if j == len(syms) - 1 else 0)
            group = seen_for_prefix[kmer[: k - 1]]
            wminus.append(0 if c in group else 1)
            group.add(c)
            colors.extend((idx, doc) for doc in sorted(preds[kmer][c]))
    return NaiveBoss(bytes(W), last, wminus, len(preds), colors)
