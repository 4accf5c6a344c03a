from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from extbwt.formats import DA_DTYPE, LCP_DTYPE, PAIR_DTYPE, PAIR_FLAG, PAIR_POS_MASK, read_bits
from extbwt.pipeline import IndexConfig, build_index
from extbwt.seqio import make_collection

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture, HealthCheck.too_slow]
)
settings.load_profile("default")

FIG1_DOCS = ["abcab", "aabcabc"]
FIG1_BWT = b"bc$cc$aaaaabbb".replace(b"$", b"\x00")
FIG1_LCP = [0, 0, 0, 1, 2, 3, 5, 0, 1, 2, 4, 0, 1, 3]
FIG1_DA = [0, 1, 1, 0, 1, 0, 1, 0, 1, 0, 1, 1, 0, 1]
FIG1_XLCP = [1, 1, 0, 1, 1, 1, 0, 1, 1, 1, 0, 1, 1, 0]


@pytest.fixture
def fig1():
    return make_collection(FIG1_DOCS)


def doc_lists(alphabet="abc", max_docs=6, max_len=16, min_size=1):
    doc = st.text(alphabet=alphabet, min_size=1, max_size=max_len)
    return st.lists(doc, min_size=min_size, max_size=max_docs)


def budget_for(coll, parts: int, bps: int = 9) -> int:
    """Memory budget that splits ``coll`` into roughly ``parts`` subcollections."""
    longest = max(len(d) for d in coll.docs) + 1
    per = max(longest, -(-coll.n // parts))
    return per * bps


class Built:
    def __init__(self, res):
        self.res = res
        self.n = res.n
        self.bwt = Path(res.bwt_path).read_bytes()
        self.da = np.fromfile(res.da_path, DA_DTYPE).tolist()
        self.lcp = np.fromfile(res.lcp_path, LCP_DTYPE).tolist() if res.lcp_path else None
        self.xlcp = read_bits(res.xlcp_path, res.n).tolist() if res.xlcp_path else None
        self.shortrow = read_bits(res.shortrow_path, res.n).tolist() if res.shortrow_path else None

    def files(self):
        out = {"bwt": Path(self.res.bwt_path).read_bytes(), "da": Path(self.res.da_path).read_bytes()}
        for k in ("lcp_path", "xlcp_path"):
            p = getattr(self.res, k)
            if p is not None:
                out[k] = Path(p).read_bytes()
        return out


def build(coll, out_dir: Path, **kw) -> Built:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kw.setdefault("mem_budget", 1 << 20)
    return Built(build_index(coll, IndexConfig(out_dir / "idx", **kw)))


def read_pairs(pair_dir: Path) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """value -> (positions, flags) straight from the pair files."""
    out = {}
    for p in sorted(Path(pair_dir).glob("*.pairs.*")):
        v = int(p.name.rsplit(".", 1)[1])
        w = np.fromfile(p, PAIR_DTYPE)
        out[v] = ((w & PAIR_POS_MASK).astype(np.int64), (w & PAIR_FLAG) != 0)
    return out


def check_partition(pair_dir: Path, oracle_lcp: list[int]) -> None:
    """Every rank 1..n-1 in exactly one file, matching value, increasing per file."""
    n = len(oracle_lcp)
    seen = np.zeros(n, dtype=np.int64)
    for v, (pos, _) in read_pairs(pair_dir).items():
        assert np.all(np.diff(pos) > 0), f"F_{v} not strictly increasing"
        assert np.all((pos >= 1) & (pos < n)), f"F_{v} has an out-of-range rank"
        for i in pos.tolist():
            assert oracle_lcp[i] == v, f"rank {i} in F_{v}, oracle lcp {oracle_lcp[i]}"
        np.add.at(seen, pos, 1)
    assert seen[0] == 0 and np.all(seen[1:] == 1)


def bwt_bytes(text: str) -> bytes:
    return text.replace("$", "\x00").encode("latin-1")
