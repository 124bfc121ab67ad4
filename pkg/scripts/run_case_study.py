"""Convert a corpus and run the six builtin questions over the result.

Defaults to the test fixture corpus; pass directories to point it elsewhere.
"""
import argparse
import sys
import tempfile
import time
from pathlib import Path

from nanocorpus.pipeline import ConvertConfig, convert, load_nanopubs, trig_files
from nanocorpus.query import BUILTINS, QuadStore, format_table, run_builtin

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "corpus"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--corpus", type=Path, default=FIXTURES,
                    help="directory holding raw/, parc/, factbank/ and manifests/")
    ap.add_argument("--out", type=Path, help="output tree (a temp dir when omitted)")
    ap.add_argument("--show", action="store_true", help="print result tables, not just row counts")
    args = ap.parse_args(argv)

    out = args.out or Path(tempfile.mkdtemp(prefix="nanocorpus-"))
    manifests = sorted((args.corpus / "manifests").glob("*.manifest"))
    optional = {name: args.corpus / name for name in ("parc", "factbank", "overrides")}
    config = ConvertConfig(
        manifests=manifests, raw_dir=args.corpus / "raw", output_dir=out,
        parc_dir=optional["parc"] if optional["parc"].is_dir() else None,
        factbank_dir=optional["factbank"] if optional["factbank"].is_dir() else None,
        overrides_dir=optional["overrides"] if optional["overrides"].is_dir() else None,
    )

    t0 = time.perf_counter()
    report = convert(config)
    print(f"convert: {time.perf_counter() - t0:.2f}s  {dict(sorted(report.counts.items()))}")
    print(f"diagnostics: {sorted(report.diagnostic_ids())}  excluded: {[d.doc_id for d in report.excluded]}")

    t0 = time.perf_counter()
    store = QuadStore().load(load_nanopubs(trig_files([out])))
    print(f"load: {time.perf_counter() - t0:.2f}s  {len(store)} triples")

    for q in BUILTINS:
        t0 = time.perf_counter()
        table = run_builtin(store, q)
        ms = (time.perf_counter() - t0) * 1000
        print(f"{q}: {len(table)} row(s) in {ms:.1f} ms")
        if args.show and len(table):
            print(format_table(table))
    print(f"output: {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
