from collections import Counter

import numpy as np
import pytest
from hypothesis import given

from extbwt import oracle, suffix_core
from extbwt.formats import BWT_DTYPE, DA_DTYPE
from extbwt.seqio import make_collection

from conftest import FIG1_BWT, FIG1_DA, bwt_bytes, doc_lists


def contexts(coll, order):
    text = b"".join(d + b"$" for d in coll.docs).decode()
    out = []
    for p in order.tolist():
        end = text.index("$", p)
        out.append(text[p:end + 1])
    return out


def test_order_abcab():
    coll = make_collection(["abcab"])
    order = suffix_core.build_suffix_order(coll)
    assert contexts(coll, order) == ["$", "ab$", "abcab$", "b$", "bcab$", "cab$"]
    assert bytes(suffix_core.derive_bwt(coll, order)) == bwt_bytes("bc$aab")


def test_order_single_symbol():
    coll = make_collection(["a"])
    order = suffix_core.build_suffix_order(coll)
    assert contexts(coll, order) == ["$", "a$"]
    assert bytes(suffix_core.derive_bwt(coll, order)) == bwt_bytes("a$")


def test_bwt_aabcabc():
    coll = make_collection(["aabcabc"])
    order = suffix_core.build_suffix_order(coll)
    assert bytes(suffix_core.derive_bwt(coll, order)) == bwt_bytes("c$caaabb")


def test_fig1_one_subcollection(fig1):
    order = suffix_core.build_suffix_order(fig1)
    assert len(contexts(fig1, order)) == 14
    assert contexts(fig1, order)[:3] == ["$", "$", "aabcabc$"]
    assert bytes(suffix_core.derive_bwt(fig1, order)) == FIG1_BWT
    assert suffix_core.derive_da(fig1, order).tolist() == FIG1_DA


def test_da_offsets():
    coll = make_collection(["ab", "ba", "abc", "c", "cc", "a", "b"])
    part = coll.slice(5, 7)
    order = suffix_core.build_suffix_order(part)
    assert min(suffix_core.derive_da(part, order).tolist()) >= 5
    one = make_collection(["abcabc"])
    assert set(suffix_core.derive_da(one, suffix_core.build_suffix_order(one)).tolist()) == {0}


def test_write_partial_sizes(tmp_path):
    coll = make_collection(["abcab"])
    art = suffix_core.build_partial(coll, tmp_path / "p", 0)
    assert art.bwt_path.stat().st_size == 6
    assert art.da_path.stat().st_size == 24
    assert np.fromfile(art.da_path, "<u4").tolist() == [0] * 6
    assert art.n_sub == 6 and art.doc_range == (0, 1) and art.markers == 1
    with pytest.raises(ValueError):
        suffix_core.write_partial(np.zeros(0, BWT_DTYPE), np.zeros(0, DA_DTYPE), tmp_path / "q", 0, (0, 0))


@given(doc_lists(alphabet="abcd", max_docs=8, max_len=20))
def test_matches_oracle(docs):
    coll = make_collection(docs)
    ref = oracle.naive_arrays(coll)
    order = suffix_core.build_suffix_order(coll)
    bwt = suffix_core.derive_bwt(coll, order)
    assert bytes(bwt) == ref.bwt
    assert suffix_core.derive_da(coll, order).tolist() == ref.da
    assert sorted(order.tolist()) == list(range(coll.n))
    # symbol multiset preserved, one marker per document
    assert Counter(bytes(bwt)) == Counter(b"".join(coll.docs) + b"\x00" * coll.m)
