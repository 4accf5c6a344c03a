"""Input collections: parsing, alphabet mapping and Phase 1 split planning."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

MARKER = 0
DEFAULT_BYTES_PER_SYMBOL = 9


class CollectionError(ValueError):
    """Raised for malformed or unsupported input collections."""


@dataclass(frozen=True)
class AlphabetMap:
    code_of: dict[int, int]
    byte_of: dict[int, int]

    @property
    def sigma(self) -> int:
        return len(self.code_of)

    @property
    def sigma_eff(self) -> int:
        return self.sigma + 1

    @classmethod
    def from_bytes(cls, present: Iterable[int]) -> "AlphabetMap":
        symbols = sorted(set(present))
        if MARKER in symbols:
            raise CollectionError("byte 0x00 is reserved for the end-marker")
        if len(symbols) > 254:
            raise CollectionError(f"alphabet too large: {len(symbols)} symbols (max 254)")
        code_of = {b: i + 1 for i, b in enumerate(symbols)}
        byte_of = {c: b for b, c in code_of.items()}
        byte_of[0] = MARKER
        return cls(code_of, byte_of)

    def lookup_table(self) -> list[int]:
        """256-entry byte -> code table, -1 for bytes outside the alphabet."""
        table = [-1] * 256
        table[MARKER] = 0
        for b, c in self.code_of.items():
            table[b] = c
        return table


@dataclass(frozen=True)
class SequenceCollection:
    docs: tuple[bytes, ...]
    alphabet: AlphabetMap = field(compare=False)
    first_id: int = 0

    @property
    def m(self) -> int:
        return len(self.docs)

    @property
    def n(self) -> int:
        return sum(len(d) for d in self.docs) + len(self.docs)

    def slice(self, lo: int, hi: int) -> "SequenceCollection":
        """Documents ``lo..hi-1`` keeping their global ids."""
        return SequenceCollection(self.docs[lo:hi], self.alphabet, self.first_id + lo)


def _check_docs(docs: Sequence[bytes]) -> None:
    if not docs:
        raise CollectionError("empty collection")
    for i, d in enumerate(docs):
        if not d:
            raise CollectionError(f"document {i} is empty")
        if MARKER in d:
            raise CollectionError(f"document {i} contains reserved byte 0x00")


def make_collection(docs: Iterable[bytes | str]) -> SequenceCollection:
    """Build a collection from in-memory strings (str is encoded as latin-1)."""
    raw = tuple(d.encode("latin-1") if isinstance(d, str) else bytes(d) for d in docs)
    _check_docs(raw)
    present: set[int] = set()
    for d in raw:
        present.update(d)
    return SequenceCollection(raw, AlphabetMap.from_bytes(present))


def build_alphabet(coll: SequenceCollection) -> AlphabetMap:
    if not coll.docs:
        raise CollectionError("empty collection")
    present: set[int] = set()
    for d in coll.docs:
        present.update(d)
    return AlphabetMap.from_bytes(present)


def _strip_eol(line: bytes) -> bytes:
    if line.endswith(b"\n"):
        line = line[:-1]
    if line.endswith(b"\r"):
        line = line[:-1]
    return line


def _parse_fasta(data: bytes) -> list[bytes]:
    docs: list[bytes] = []
    cur: list[bytes] | None = None
    for line in data.split(b"\n"):
        line = _strip_eol(line)
        if line.startswith(b">"):
            if cur is not None:
                docs.append(b"".join(cur))
            cur = []
        elif cur is None:
            if line.strip():
                raise CollectionError("malformed FASTA: sequence data before the first header")
        else:
            cur.append(line)
    if cur is not None:
        docs.append(b"".join(cur))
    return docs


def _parse_lines(data: bytes) -> list[bytes]:
    if not data:
        return []
    lines = data.split(b"\n")
    if lines[-1] == b"":
        lines.pop()
    return [_strip_eol(ln) for ln in lines]


def load_collection(path: str | Path, fmt: str = "fasta") -> SequenceCollection:
    data = Path(path).read_bytes()
    if fmt == "fasta":
        docs = _parse_fasta(data)
    elif fmt == "lines":
        docs = _parse_lines(data)
    else:
        raise CollectionError(f"unknown input format {fmt!r}")
    return make_collection(docs)


def write_lines(coll: SequenceCollection, path: str | Path) -> None:
    with open(path, "wb") as fh:
        for d in coll.docs:
            fh.write(d)
            fh.write(b"\n")


@dataclass(frozen=True)
class SplitPlan:
    ranges: tuple[tuple[int, int], ...]
    budget_bytes: int
    bytes_per_symbol: int = DEFAULT_BYTES_PER_SYMBOL


def plan_subcollections(
    coll: SequenceCollection,
    budget_bytes: int,
    bytes_per_symbol: int = DEFAULT_BYTES_PER_SYMBOL,
) -> SplitPlan:
    """Greedy left-to-right packing of documents into Phase 1 subcollections.

    A range keeps growing while ``symbols * bytes_per_symbol <= budget_bytes``,
    where ``symbols`` counts one end-marker per document.
    """
    if budget_bytes <= 0:
        raise CollectionError("memory budget must be positive")
    ranges: list[tuple[int, int]] = []
    start, total = 0, 0
    for i, d in enumerate(coll.docs):
        size = len(d) + 1
        if size * bytes_per_symbol > budget_bytes:
            raise CollectionError(
                f"document {i} needs {size * bytes_per_symbol} bytes, budget is {budget_bytes}"
            )
        if (total + size) * bytes_per_symbol > budget_bytes:
            ranges.append((start, i))
            start, total = i, 0
        total += size
    ranges.append((start, coll.m))
    return SplitPlan(tuple(ranges), budget_bytes, bytes_per_symbol)
