"""Command-line front end.

Exit codes: 0 ok, 1 usage or invalid configuration, 2 I/O or malformed
input, 3 verification mismatch.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import boss, gap_merge, lcp_merge, oracle, overlaps, pipeline, repeats
from .formats import (
    BWT_DTYPE,
    DA_DTYPE,
    LCP_DTYPE,
    OVERLAP_DTYPE,
    REPEAT_DTYPE,
    read_bits,
)
from .seqio import CollectionError, load_collection
from .streams import StreamBundle, StreamError
from .suffix_core import PartialArtifact

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_MISMATCH = 0, 1, 2, 3
OUTPUTS = ("bwt", "lcp", "da", "xlcp")

log = logging.getLogger("extbwt")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _outputs(text: str) -> set[str]:
    wanted = {w.strip() for w in text.split(",") if w.strip()}
    bad = wanted - set(OUTPUTS)
    if bad:
        raise argparse.ArgumentTypeError(f"unknown outputs: {', '.join(sorted(bad))}")
    return wanted


def _cap_path(prefix) -> Path:
    return Path(f"{prefix}.lcpcap")


# -- index / merge / lcp-merge ---------------------------------------------

def _index_config(args, outputs: set[str]) -> pipeline.IndexConfig:
    if "xlcp" in outputs and "lcp" not in outputs:
        raise UsageError("xlcp output requires lcp output")
    return pipeline.IndexConfig(
        out_prefix=args.out_prefix,
        mem_budget=args.mem_budget,
        bytes_per_symbol=args.bytes_per_symbol,
        fan_in=args.fan_in,
        semi_external=args.semi_external,
        skipping=not args.no_skipping,
        skip_threshold=args.skip_threshold,
        lcp_fan_in=args.lcp_fan_in,
        prefix_depth=args.prefix_depth,
        want_lcp="lcp" in outputs,
        want_xlcp="xlcp" in outputs and args.prefix_depth is None,
        keep=args.keep,
        parallel=args.parallel,
    )


def _run_index(coll, args, outputs) -> pipeline.IndexResult:
    cfg = _index_config(args, outputs)
    res = pipeline.build_index(coll, cfg)
    if "da" not in outputs:
        Path(res.da_path).unlink()
    cap = _cap_path(cfg.out_prefix)
    if args.prefix_depth is not None and "lcp" in outputs:
        cap.write_text(f"{args.prefix_depth + 1}\n")
    elif cap.exists():
        cap.unlink()
    if args.slen:
        overlaps.derive_suffix_lengths(res.bwt_path, res.m, res.n, f"{cfg.out_prefix}.slen")
    stats_path = Path(args.stats) if args.stats else Path(f"{cfg.out_prefix}.stats")
    res.stats.write(stats_path)
    return res


def cmd_index(args) -> int:
    coll = load_collection(args.input, args.format)
    res = _run_index(coll, args, args.outputs)
    print(f"n={res.n} m={res.m} iterations={res.stats.iterations} maxlcp={res.stats.maxlcp}")
    return EXIT_OK


def _partial(prefix) -> PartialArtifact:
    bwt_path, da_path = Path(f"{prefix}.bwt"), Path(f"{prefix}.da")
    bwt = np.fromfile(bwt_path, dtype=BWT_DTYPE)
    da = np.fromfile(da_path, dtype=DA_DTYPE)
    if len(bwt) != len(da) or len(bwt) == 0:
        raise StreamError(f"{prefix}: bwt and da lengths differ or are empty")
    lo = int(da.min())
    return PartialArtifact(bwt_path, da_path, len(bwt), (lo, lo + int(np.count_nonzero(bwt == 0))))


def cmd_merge(args) -> int:
    inputs = sorted((_partial(p) for p in args.inputs), key=lambda a: a.doc_range[0])
    for a, b in zip(inputs, inputs[1:]):
        if a.doc_range[1] != b.doc_range[0]:
            raise StreamError("input document ranges are not contiguous")
    cfg = gap_merge.MergeConfig(
        out_prefix=args.out_prefix,
        fan_in_limit=max(len(inputs), 1) if not args.semi_external else gap_merge.MAX_FAN_IN_SEMI,
        skip_threshold=args.skip_threshold,
        skipping_enabled=not args.no_skipping,
        semi_external=args.semi_external,
        emit_pairs=not args.no_lcp,
    )
    workdir = Path(f"{args.out_prefix}.merge")
    res = gap_merge.run_merge(inputs, cfg, workdir)
    pairs = res.pair_dir if res.pair_dir is not None else "-"
    print(f"n={res.n} iterations={res.iterations} pairs={pairs}")
    return EXIT_OK


def cmd_lcp_merge(args) -> int:
    if args.cap is not None:
        out = lcp_merge.cap_aware_merge(args.pair_dir, args.n, args.out_prefix, args.cap, args.fan_in)
    else:
        out = lcp_merge.merge_pair_files(args.pair_dir, args.n, args.out_prefix, args.fan_in)
    print(f"lcp={out.lcp_path} rounds={out.rounds}")
    return EXIT_OK


# -- applications ----------------------------------------------------------

def _emit(records, dtype, fields, path, text, header=None):
    rows = [tuple(getattr(r, f) for f in fields) for r in records]
    if text or path is None:
        fh = open(path, "w") if path else sys.stdout
        try:
            if header:
                print(header, file=fh)
            for row in rows:
                print("\t".join(str(v) for v in row), file=fh)
        finally:
            if path:
                fh.close()
    else:
        np.array(rows, dtype=dtype).tofile(path)
    return len(rows)


def _cmd_repeats(args, finder) -> int:
    opts = repeats.RepeatOptions(args.min_length, args.min_occ, args.min_docs)
    streams = StreamBundle.from_prefix(args.prefix)
    recs = list(finder(streams, opts))
    if args.sort:
        recs.sort(key=lambda r: (-r.length, r.lo))
    if args.print_string:
        if not args.input:
            raise UsageError("--print-string needs --input with the documents")
        coll = load_collection(args.input, args.format)
        ref = oracle.naive_arrays(coll)
        for r in recs:
            d, o = ref.sa[r.lo]
            s = coll.docs[d][o:o + r.length].decode("latin-1")
            print(f"{r.length}\t{r.lo}\t{r.hi}\t{r.distinct_docs}\t{s}")
        return EXIT_OK
    _emit(recs, REPEAT_DTYPE, ("length", "lo", "hi", "distinct_docs"), args.out, args.text)
    return EXIT_OK


def cmd_repeats1(args) -> int:
    return _cmd_repeats(args, repeats.find_type1)


def cmd_repeats2(args) -> int:
    return _cmd_repeats(args, repeats.find_type2)


def cmd_overlaps(args) -> int:
    streams = StreamBundle.from_prefix(args.prefix)
    if args.containment and streams.slen_path is None:
        m = int(np.count_nonzero(np.fromfile(streams.bwt_path, dtype=BWT_DTYPE) == 0))
        slen_path = Path(f"{args.prefix}.slen")
        overlaps.derive_suffix_lengths(streams.bwt_path, m, streams.n, slen_path)
        streams = StreamBundle.from_prefix(args.prefix)
    recs = overlaps.find_overlaps(streams, args.tau, args.self_overlaps, args.containment)
    _emit(recs, OVERLAP_DTYPE, ("src", "dst", "length"), args.out, args.text)
    return EXIT_OK


def cmd_dbg(args) -> int:
    prefix = args.prefix
    if args.input:
        coll = load_collection(args.input, args.format)
        args.prefix_depth = args.k
        args.slen = False
        outputs = {"bwt", "lcp", "da"} if args.colors else {"bwt", "lcp"}
        args.out_prefix = prefix
        _run_index(coll, args, outputs)
    streams = StreamBundle.from_prefix(prefix)
    cap_file = _cap_path(prefix)
    cap = int(cap_file.read_text()) if cap_file.exists() else None
    shortrow = None
    if cap is None or streams.shortrow_path is None:
        if cap is not None:
            raise StreamError(f"{prefix}: capped lcp without a shortrow file")
        if streams.slen_path is not None:
            slen = np.fromfile(streams.slen_path, dtype=np.uint32)
        else:
            m = int(np.count_nonzero(np.fromfile(streams.bwt_path, dtype=BWT_DTYPE) == 0))
            slen = overlaps.derive_suffix_lengths(streams.bwt_path, m, streams.n)
        shortrow = boss.shortrow_from_slen(slen, args.k)
    g, colors = boss.build_boss(streams, args.k, cap=cap, colors=args.colors, shortrow=shortrow)
    g.write(prefix)
    if args.colors:
        boss.write_colors(colors, f"{prefix}.boss.colors")
    print(f"k={g.k} nodes={g.nodes} edges={g.edges}")
    return EXIT_OK


def _first_mismatch(got, want):
    got, want = list(got), list(want)
    for i, (a, b) in enumerate(zip(got, want)):
        if a != b:
            return i
    return None if len(got) == len(want) else min(len(got), len(want))


def cmd_verify(args) -> int:
    coll = load_collection(args.input, args.format)
    ref = oracle.naive_arrays(coll)
    n = ref.n
    checks = {
        "bwt": (Path(f"{args.prefix}.bwt"), lambda p: np.fromfile(p, BWT_DTYPE).tolist(), list(ref.bwt)),
        "da": (Path(f"{args.prefix}.da"), lambda p: np.fromfile(p, DA_DTYPE).tolist(), ref.da),
        "lcp": (Path(f"{args.prefix}.lcp"), lambda p: np.fromfile(p, LCP_DTYPE).tolist(), ref.lcp_file_values()),
        "xlcp": (Path(f"{args.prefix}.xlcp"), lambda p: read_bits(p, n).tolist(), ref.xlcp),
    }
    cap_file = _cap_path(args.prefix)
    if cap_file.exists():
        cap = int(cap_file.read_text())
        lcp_want = [min(v, cap) for v in ref.lcp_file_values()]
        checks["lcp"] = (checks["lcp"][0], checks["lcp"][1], lcp_want)
        # the ordering below the cap is only a prefix order; bwt/da are not final
        checks.pop("bwt")
        checks.pop("da")
    status = EXIT_OK
    found = 0
    for name, (path, load, want) in checks.items():
        if not path.exists():
            continue
        found += 1
        got = load(path)
        if name == "xlcp" and path.stat().st_size != (n + 7) // 8:
            got = []
        bad = _first_mismatch(got, want)
        if bad is None:
            print(f"{name}: ok")
        else:
            print(f"{name}: mismatch at position {bad}")
            status = EXIT_MISMATCH
    if not found:
        raise StreamError(f"no index files found for prefix {args.prefix}")
    return status


# -- parser ----------------------------------------------------------------

def _add_input(p, required=True):
    if required:
        p.add_argument("input", help="input collection")
    else:
        p.add_argument("--input", help="input collection")
    p.add_argument("--format", choices=("fasta", "lines"), default="fasta")


def _add_build_flags(p):
    p.add_argument("--mem-budget", type=int, default=1 << 30, help="Phase 1 memory budget in bytes")
    p.add_argument("--bytes-per-symbol", type=int, default=pipeline.DEFAULT_BYTES_PER_SYMBOL)
    p.add_argument("--fan-in", type=int, default=gap_merge.MAX_FAN_IN)
    p.add_argument("--semi-external", action="store_true")
    p.add_argument("--no-skipping", action="store_true")
    p.add_argument("--skip-threshold", type=int)
    p.add_argument("--lcp-fan-in", type=int, default=lcp_merge.DEFAULT_FAN_IN)
    p.add_argument("--keep", action="store_true", help="keep temporary files")
    p.add_argument("--parallel", action="store_true", help="build Phase 1 partials concurrently")
    p.add_argument("--stats", help="stats output path (default <prefix>.stats)")


def _add_repeat_flags(p):
    p.add_argument("prefix")
    p.add_argument("--min-length", type=int, default=1)
    p.add_argument("--min-occ", type=int, default=2)
    p.add_argument("--min-docs", type=int)
    p.add_argument("--sort", action="store_true", help="sort by length desc, then lo")
    p.add_argument("--out")
    p.add_argument("--text", action="store_true")
    p.add_argument("--print-string", action="store_true")
    _add_input(p, required=False)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="extbwt", description="External-memory BWT/LCP/DA construction and applications")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("index", help="build bwt/lcp/da/xlcp from a collection")
    _add_input(p)
    p.add_argument("-o", "--out-prefix", required=True)
    _add_build_flags(p)
    p.add_argument("--prefix-depth", type=int, help="stop after this many iterations (capped lcp)")
    p.add_argument("--outputs", type=_outputs, default=set(OUTPUTS), help="comma list of bwt,lcp,da,xlcp")
    p.add_argument("--slen", action="store_true", help="also write <prefix>.slen")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("merge", help="merge partial bwt/da files")
    p.add_argument("inputs", nargs="+", help="prefixes of <p>.bwt/<p>.da pairs")
    p.add_argument("-o", "--out-prefix", required=True)
    p.add_argument("--semi-external", action="store_true")
    p.add_argument("--no-skipping", action="store_true")
    p.add_argument("--skip-threshold", type=int)
    p.add_argument("--no-lcp", action="store_true", help="do not write pair files")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("lcp-merge", help="merge pair files into the lcp array")
    p.add_argument("pair_dir")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("-o", "--out-prefix", required=True)
    p.add_argument("--fan-in", type=int, default=lcp_merge.DEFAULT_FAN_IN)
    p.add_argument("--cap", type=int)
    p.set_defaults(func=cmd_lcp_merge)

    p = sub.add_parser("repeats1", help="Type 1 maximal repeats")
    _add_repeat_flags(p)
    p.set_defaults(func=cmd_repeats1)
    p = sub.add_parser("repeats2", help="Type 2 maximal repeats")
    _add_repeat_flags(p)
    p.set_defaults(func=cmd_repeats2)

    p = sub.add_parser("overlaps", help="all-pairs suffix-prefix overlaps")
    p.add_argument("prefix")
    p.add_argument("--tau", type=int, default=0)
    p.add_argument("--self", dest="self_overlaps", action="store_true")
    p.add_argument("--containment", action="store_true")
    p.add_argument("--out")
    p.add_argument("--text", action="store_true")
    p.set_defaults(func=cmd_overlaps)

    p = sub.add_parser("dbg", help="BOSS de Bruijn graph")
    p.add_argument("prefix")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--colors", action="store_true")
    _add_input(p, required=False)
    _add_build_flags(p)
    p.set_defaults(func=cmd_dbg)

    p = sub.add_parser("verify", help="compare index files against the brute-force oracle")
    _add_input(p)
    p.add_argument("prefix")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "k", 1) is not None and getattr(args, "k", 1) < 1:
        print("extbwt: error: k must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as e:
        print(f"extbwt: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, CollectionError, StreamError, gap_merge.MergeError, lcp_merge.LcpMergeError) as e:
        print(f"extbwt: error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"extbwt: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
