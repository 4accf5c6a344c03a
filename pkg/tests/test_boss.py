import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extbwt import boss, oracle, overlaps
from extbwt.boss import BossError, BossGraph
from extbwt.seqio import make_collection
from extbwt.streams import StreamBundle

from conftest import build, doc_lists


def full_graph(coll, tmp, k, colors=True):
    built = build(coll, tmp)
    sb = StreamBundle.from_prefix(built.res.bwt_path.with_suffix(""))
    slen = overlaps.derive_suffix_lengths(built.res.bwt_path, coll.m, coll.n)
    return boss.build_boss(sb, k, colors=colors, shortrow=boss.shortrow_from_slen(slen, k))


def early_graph(coll, tmp, k, colors=True):
    built = build(coll, tmp, prefix_depth=k, want_xlcp=False)
    sb = StreamBundle.from_prefix(built.res.bwt_path.with_suffix(""))
    return boss.build_boss(sb, k, cap=k + 1, colors=colors)


def as_tuple(g, col):
    return bytes(g.W), g.last, g.wminus, g.nodes, list(zip(col["edge"].tolist(), col["doc"].tolist()))


def ref_tuple(nb):
    return nb.W, nb.last, nb.wminus, nb.nodes, nb.colors


def test_acg(tmp_path):
    g, _ = full_graph(make_collection(["ACG"]), tmp_path, 2)
    assert bytes(g.W) == b"\x00A" and g.last == [1, 1] and g.wminus == [1, 1] and g.nodes == 2


def test_aaaa(tmp_path):
    g, _ = full_graph(make_collection(["aaaa"]), tmp_path, 2)
    assert bytes(g.W) == b"\x00a" and g.last == [0, 1] and g.wminus == [1, 1] and g.nodes == 1


def test_empty_graph(tmp_path):
    with pytest.raises(BossError):
        full_graph(make_collection(["ab", "a"]), tmp_path, 3)


def test_cap_too_small(tmp_path):
    coll = make_collection(["abcab"])
    built = build(coll, tmp_path, prefix_depth=2, want_xlcp=False)
    sb = StreamBundle.from_prefix(built.res.bwt_path.with_suffix(""))
    with pytest.raises(BossError):
        boss.build_boss(sb, 3, cap=3)
    with pytest.raises(BossError):
        boss.build_boss(sb, 0)


def test_colors_examples(tmp_path):
    _, col = full_graph(make_collection(["ACG", "ACG"]), tmp_path / "a", 2)
    by_edge = {}
    for e, d in zip(col["edge"].tolist(), col["doc"].tolist()):
        by_edge.setdefault(e, set()).add(d)
    assert set(map(frozenset, by_edge.values())) == {frozenset({0, 1})}
    g, col = full_graph(make_collection(["ACG", "CGT"]), tmp_path / "b", 2)
    # node CG gets $ (doc 1) and A (doc 0)
    pairs = list(zip(col["edge"].tolist(), col["doc"].tolist()))
    cg = [i for i in range(g.edges) if g.W[i] in (0, ord("A"))]
    assert bytes(g.W[i] for i in cg[-2:]) == b"\x00A"
    assert (cg[-2], 1) in pairs and (cg[-1], 0) in pairs
    _, col = full_graph(make_collection(["ACGTAC"]), tmp_path / "c", 2)
    assert set(col["doc"].tolist()) == {0}


def test_wminus_count_without_dummy_nodes(tmp_path):
    # two nodes share the 1-mer "A" and both are entered only from $, so
    # ones(wminus) < N; the reference construction agrees
    coll = make_collection(["AC", "AG"])
    g, _ = full_graph(coll, tmp_path, 2)
    nb = oracle.naive_boss(coll, 2)
    assert (g.wminus, nb.wminus) == ([1, 0], [1, 0])
    assert sum(g.wminus) == 1 and g.nodes == 2


def test_write_read(tmp_path):
    g, _ = full_graph(make_collection(["abcab", "aabcabc"]), tmp_path, 2)
    paths = g.write(tmp_path / "g")
    assert paths["w"].stat().st_size == g.edges
    assert "nodes=%d" % g.nodes in paths["meta"].read_text()
    again = BossGraph.read(tmp_path / "g")
    assert (bytes(again.W), again.last, again.wminus, again.nodes) == (bytes(g.W), g.last, g.wminus, g.nodes)


@settings(max_examples=60)
@given(doc_lists(alphabet="acg", max_docs=5, max_len=14), st.sampled_from([1, 2, 3, 4, 8]))
def test_oracle_equivalence(tmp_path_factory, docs, k):
    coll = make_collection(docs)
    try:
        nb = oracle.naive_boss(coll, k)
    except ValueError:
        with pytest.raises(BossError):
            full_graph(coll, tmp_path_factory.mktemp("b"), k)
        return
    g, col = full_graph(coll, tmp_path_factory.mktemp("b"), k)
    assert as_tuple(g, col) == ref_tuple(nb)
    assert sum(g.last) == g.nodes == nb.nodes
    assert np.all(np.diff(col["edge"].astype(np.int64) * (1 << 32) + col["doc"]) > 0)
    assert as_tuple(*early_graph(coll, tmp_path_factory.mktemp("e"), k)) == as_tuple(g, col)
