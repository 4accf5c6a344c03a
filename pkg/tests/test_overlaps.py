import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extbwt import oracle, overlaps
from extbwt.seqio import make_collection
from extbwt.streams import StreamBundle, StreamError

from conftest import build, doc_lists


def bundle(coll, tmp, slen=True):
    built = build(coll, tmp)
    prefix = built.res.bwt_path.with_suffix("")
    if slen:
        overlaps.derive_suffix_lengths(built.res.bwt_path, coll.m, coll.n, f"{prefix}.slen")
    return StreamBundle.from_prefix(prefix)


def run(sb, tau, self_, cont, stats=None):
    recs = [(r.src, r.dst, r.length) for r in overlaps.find_overlaps(sb, tau, self_, cont, stats)]
    assert len(recs) == len(set(recs))
    return set(recs)


def test_fig1(fig1, tmp_path):
    sb = bundle(fig1, tmp_path)
    assert run(sb, 0, True, False) == {(1, 0, 3), (0, 0, 2)}
    assert run(sb, 2, False, False) == {(1, 0, 3)}
    assert run(sb, 0, False, True) == {(1, 0, 3)}


def test_containment_ab_b(tmp_path):
    coll = make_collection(["ab", "b"])
    sb = bundle(coll, tmp_path)
    assert run(sb, 0, False, True) == {(0, 1, 1)}
    assert run(sb, 0, False, False) == set()


def test_containment_later_rank(tmp_path):
    # the containing document has the larger id, so its suffix ranks after dst
    coll = make_collection(["b", "ab"])
    sb = bundle(coll, tmp_path)
    assert run(sb, 0, False, True) == oracle.naive_overlaps(coll, 0, False, True) == {(1, 0, 1)}


def test_tau_large(fig1, tmp_path):
    assert run(bundle(fig1, tmp_path), 7, True, True) == set()


def test_containment_needs_slen(fig1, tmp_path):
    sb = bundle(fig1, tmp_path, slen=False)
    with pytest.raises(StreamError):
        list(overlaps.find_overlaps(sb, 0, False, True))
    with pytest.raises(ValueError):
        list(overlaps.find_overlaps(sb, -1))


def test_slen_examples(fig1, tmp_path):
    built = build(fig1, tmp_path)
    slen = overlaps.derive_suffix_lengths(built.res.bwt_path, 2, 14)
    assert slen[3:6].tolist() == [3, 4, 6]
    assert slen[:2].tolist() == [1, 1]
    one = build(make_collection(["a"]), tmp_path / "one")
    assert overlaps.derive_suffix_lengths(one.res.bwt_path, 1, 2).tolist() == [1, 2]


def test_slen_corrupt(fig1, tmp_path):
    built = build(fig1, tmp_path)
    data = bytearray(built.res.bwt_path.read_bytes())
    # turning a marker into a symbol makes one walk run into another document
    data[2] = ord("a")
    data[6] = 0
    built.res.bwt_path.write_bytes(bytes(data))
    with pytest.raises(StreamError):
        overlaps.derive_suffix_lengths(built.res.bwt_path, 2, 14)


@settings(max_examples=80)
@given(doc_lists(alphabet="ab", max_docs=6, max_len=10), st.booleans())
def test_oracle_equivalence(tmp_path_factory, docs, dup):
    if dup:
        docs = docs + docs[:1]
    coll = make_collection(docs)
    sb = bundle(coll, tmp_path_factory.mktemp("ov"))
    ref = oracle.naive_arrays(coll)
    slen = np.fromfile(sb.slen_path, "<u4").tolist()
    assert slen == ref.slen
    # marker rows are exactly the length-1 suffixes; every other rank extends one of them
    assert sum(1 for s in slen if s > 1) == coll.n - coll.m
    assert sum(s - 1 for s in slen) == sum(len(d) * (len(d) + 1) // 2 for d in coll.docs)
    nxt = ref.lcp[1:] + [-1]
    assert all(slen[r] == nxt[r] + 1 for r in range(coll.n) if ref.xlcp[r])
    for tau in (0, 1, 2, 5):
        for self_ in (False, True):
            for cont in (False, True):
                stats = {}
                got = run(sb, tau, self_, cont, stats)
                assert got == oracle.naive_overlaps(coll, tau, self_, cont), (tau, self_, cont)
                assert all(length > tau for _, _, length in got)
                assert stats["pushes"] == sum(1 for r in range(coll.n) if ref.xlcp[r] and nxt[r] > tau)
                assert stats["evictions"] <= stats["pushes"]
