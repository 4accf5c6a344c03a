import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extbwt import gap_merge, oracle, suffix_core
from extbwt.gap_merge import MergeConfig, MergeError
from extbwt.seqio import make_collection, plan_subcollections

from conftest import FIG1_BWT, FIG1_DA, FIG1_LCP, build, budget_for, check_partition, doc_lists, read_pairs


def partials(coll, tmp_path, ranges):
    return [suffix_core.build_partial(coll.slice(lo, hi), tmp_path / "part", j)
            for j, (lo, hi) in enumerate(ranges)]


@pytest.fixture
def fig1_parts(fig1, tmp_path):
    return partials(fig1, tmp_path, [(0, 1), (1, 2)])


def test_buckets_fig1(fig1_parts):
    table = gap_merge.compute_buckets(fig1_parts)
    assert table.F.tolist() == [0, 2, 7, 11]
    assert table.counts.tolist() == [2, 5, 4, 3]
    assert table.zero_base.tolist() == [0, 1]
    assert table.n == 14


def test_buckets_single(tmp_path):
    parts = partials(make_collection(["a"]), tmp_path, [(0, 1)])
    assert gap_merge.compute_buckets(parts).F.tolist() == [0, 1]


def test_buckets_alphabet_mismatch(fig1_parts):
    other = make_collection(["ab"])
    with pytest.raises(MergeError):
        gap_merge.compute_buckets(fig1_parts, other.alphabet)


def test_init_fig1(fig1_parts, tmp_path):
    state = gap_merge.init_merge(fig1_parts, MergeConfig(tmp_path / "o"), tmp_path / "w")
    lam, b = state.ordering()
    assert lam.tolist() == [0] * 6 + [1] * 8
    assert b.tolist() == [1] + [0] * 13
    assert np.unpackbits(state.bx, bitorder="little")[:14].tolist() == [1] + [0] * 13


@pytest.mark.parametrize("semi", [False, True])
def test_fig1_iterations(fig1_parts, tmp_path, semi):
    cfg = MergeConfig(tmp_path / "o", semi_external=semi, skip_threshold=1)
    state = gap_merge.init_merge(fig1_parts, cfg, tmp_path / "w")
    stats = [state.run_iteration() for _ in range(7)]
    assert [s.pairs_emitted for s in stats] == [0, 4, 3, 2, 2, 1, 1]
    assert [s.done for s in stats] == [False] * 6 + [True]
    pairs = read_pairs(state.pair_dir)
    assert pairs[0][0].tolist() == [1, 2, 7, 11]


def test_run_merge_fig1(fig1_parts, tmp_path):
    res = gap_merge.run_merge(fig1_parts, MergeConfig(tmp_path / "o"), tmp_path / "w")
    assert res.bwt_path.read_bytes() == FIG1_BWT
    assert np.fromfile(res.da_path, "<u4").tolist() == FIG1_DA
    assert res.iterations == 7 and res.m == 2
    check_partition(res.pair_dir, [-1] + FIG1_LCP[1:])


def test_single_input(tmp_path):
    parts = partials(make_collection(["a"]), tmp_path, [(0, 1)])
    state = gap_merge.init_merge(parts, MergeConfig(tmp_path / "o"), tmp_path / "w")
    state.run_iteration()
    s = state.run_iteration()
    assert s.done and read_pairs(state.pair_dir)[0][0].tolist() == [1]


def test_identical_inputs(tmp_path):
    coll = make_collection(["ab", "ab"])
    res = gap_merge.run_merge(partials(coll, tmp_path, [(0, 1), (1, 2)]), MergeConfig(tmp_path / "o"),
                              tmp_path / "w")
    assert res.bwt_path.read_bytes() == b"bb\x00\x00aa"
    pairs = read_pairs(res.pair_dir)
    lcp = {int(i): v for v, (pos, _) in pairs.items() for i in pos}
    assert [lcp[i] for i in range(1, 6)] == [0, 0, 2, 0, 1]


def test_fan_in_limits(tmp_path):
    with pytest.raises(MergeError):
        MergeConfig(tmp_path / "o", fan_in_limit=129)
    with pytest.raises(MergeError):
        MergeConfig(tmp_path / "o", semi_external=True, fan_in_limit=9)
    coll = make_collection(["a"] * 129)
    parts = partials(coll, tmp_path, [(j, j + 1) for j in range(129)])
    with pytest.raises(MergeError):
        gap_merge.init_merge(parts, MergeConfig(tmp_path / "o"), tmp_path / "w")
    with pytest.raises(MergeError):
        gap_merge.init_merge(parts[:9], MergeConfig(tmp_path / "o", semi_external=True,
                                                    fan_in_limit=8), tmp_path / "w")


def test_prefix_depth_disables_skipping(tmp_path):
    cfg = MergeConfig(tmp_path / "o", prefix_depth=3)
    assert not cfg.skipping_enabled and not cfg.track_xlcp
    assert MergeConfig(tmp_path / "o").threshold(3, 4) == 256
    assert MergeConfig(tmp_path / "o").threshold(200, 100) == 300


def test_plan_merge_tree():
    assert gap_merge.plan_merge_tree(5, 2) == [[[0, 1], [2, 3], [4]], [[0, 1], [2]], [[0, 1]]]
    assert gap_merge.plan_merge_tree(3, 128) == [[[0, 1, 2]]]
    rounds = gap_merge.plan_merge_tree(200, 128)
    assert len(rounds) == 2 and [len(g) for g in rounds[0]] == [128, 72] and rounds[1] == [[0, 1]]


def _context_order(coll, ranges, h):
    """Ordinal sequence after sorting suffixes by their first h context symbols."""
    rows = []
    for lam, (lo, hi) in enumerate(ranges):
        sub = coll.slice(lo, hi)
        ref = oracle.naive_arrays(sub)
        for r, (d, o) in enumerate(ref.sa):
            doc = sub.docs[d]
            key = [(1, c) for c in doc[o:o + h]]
            if len(key) < h:
                key.append((0, sub.first_id + d))
            rows.append((key, lam, r))
    rows.sort(key=lambda x: (x[0], x[1], x[2]))
    return [lam for _, lam, _ in rows]


@settings(max_examples=40)
@given(doc_lists(alphabet="ab", max_docs=5, max_len=10, min_size=2), st.booleans())
def test_permutation_law(tmp_path_factory, docs, semi):
    coll = make_collection(docs)
    tmp = tmp_path_factory.mktemp("perm")
    ranges = plan_subcollections(coll, budget_for(coll, 3)).ranges
    parts = partials(coll, tmp, ranges)
    state = gap_merge.init_merge(parts, MergeConfig(tmp / "o", skipping_enabled=False,
                                                    semi_external=semi), tmp / "w")
    for h in range(1, oracle.naive_arrays(coll).maxlcp + 3):
        state.run_iteration()
        assert state.ordering()[0].tolist() == _context_order(coll, ranges, h)


@settings(max_examples=60)
@given(doc_lists(alphabet="abc", max_docs=6, max_len=14), st.integers(1, 4))
def test_partition_and_iteration_laws(tmp_path_factory, docs, parts):
    coll = make_collection(docs)
    ref = oracle.naive_arrays(coll)
    built = build(coll, tmp_path_factory.mktemp("part"), mem_budget=budget_for(coll, parts),
                  skip_threshold=1, keep=True)
    check_partition(built.res.pair_dir, ref.lcp)
    assert built.res.stats.iterations == ref.maxlcp + 2
    # conservation
    assert sorted(built.bwt) == sorted(b"".join(coll.docs) + b"\x00" * coll.m)
    assert built.da[: coll.m] == list(range(coll.m))
    # flags in the pair files are the specialness bits
    for v, (pos, flag) in read_pairs(built.res.pair_dir).items():
        assert [ref.xlcp[i - 1] for i in pos.tolist()] == flag.astype(int).tolist()


@settings(max_examples=40)
@given(doc_lists(alphabet="ab", max_docs=6, max_len=24))
def test_config_invariance(tmp_path_factory, docs):
    coll = make_collection(docs)
    base = None
    for i, kw in enumerate([
        dict(skipping=False),
        dict(skip_threshold=1),
        dict(skip_threshold=4, semi_external=True),
        dict(skip_threshold=256, fan_in=2, mem_budget=budget_for(coll, 4)),
        dict(skip_threshold=1, semi_external=True, fan_in=3, mem_budget=budget_for(coll, 5)),
    ]):
        built = build(coll, tmp_path_factory.mktemp(f"inv{i}"), **kw)
        if base is None:
            base = built.files()
        assert built.files() == base


def test_truncated_input_detected(fig1_parts, tmp_path):
    bad = fig1_parts[0].bwt_path
    bad.write_bytes(bad.read_bytes()[:-1])
    with pytest.raises(MergeError):
        gap_merge.run_merge(fig1_parts, MergeConfig(tmp_path / "o"), tmp_path / "w")
