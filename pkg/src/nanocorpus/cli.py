"""Command-line entry point: ``nanocorpus {convert,validate,query,publish,stats}``.

Exit codes: 0 success, 1 failure or bad configuration, 2 conversion finished
but some documents were excluded.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from collections import Counter
from pathlib import Path

from .errors import (ConfigError, MissingLayer, NanocorpusError, ProtectedPublicationRefused, QuerySyntaxError,
                     UnboundProjection, UnknownQuestion, VerificationFailure)
from .generate import KINDS, classify
from .pipeline import ConvertConfig, convert, load_nanopubs, trig_files, validate_paths
from .query import BUILTINS, QuadStore, evaluate, export, format_table, parse_query, run_builtin
from .registry import REGISTRY_ENV, Registry, default_root

log = logging.getLogger("nanocorpus")


def _err(msg: str):
    print(msg, file=sys.stderr)


def cmd_convert(args) -> int:
    config = ConvertConfig(
        manifests=args.manifest or [],
        raw_dir=args.raw_dir,
        output_dir=args.out,
        parc_dir=args.parc_dir,
        factbank_dir=args.factbank_dir,
        overrides_dir=args.overrides_dir,
        dedup_words=not args.no_dedup,
        workers=args.workers,
    )
    try:
        report = convert(config)
    except ConfigError as exc:
        _err(f"error: {exc}")
        return 1
    counts = ", ".join(f"{k}: {v}" for k, v in report.counts.items())
    print(f"converted {len(report.converted)} document(s); {counts}")
    for d in report.excluded:
        _err(f"excluded {d.doc_id} (challenge {d.challenge}): {d.excluded}")
    ids = sorted(report.diagnostic_ids())
    if ids:
        _err("diagnostics: " + ", ".join(map(str, ids)))
    print(f"report: {Path(args.out) / 'report.jsonl'}")
    return report.exit_status


def cmd_validate(args) -> int:
    try:
        problems = validate_paths(args.paths)
    except FileNotFoundError as exc:
        _err(f"error: no such path {exc}")
        return 1
    for line in problems:
        print(line)
    if problems:
        return 1
    print(f"ok: {len(trig_files(args.paths))} file(s) verified")
    return 0


def cmd_query(args) -> int:
    t0 = time.perf_counter()
    try:
        store = QuadStore().load(load_nanopubs(args.paths))
        question = args.question
        if question.lower() in BUILTINS:
            params = {"lemma": args.lemma, "label": args.label, "of": args.of, "component": args.component}
            table = run_builtin(store, question, params)
        elif Path(question).is_file():
            table = evaluate(store, parse_query(Path(question).read_text(encoding="utf-8")))
        else:
            raise UnknownQuestion(f"{question!r} is neither q1..q6 nor a query file")
    except (MissingLayer, UnknownQuestion, QuerySyntaxError, UnboundProjection, VerificationFailure,
            FileNotFoundError, ValueError, NanocorpusError) as exc:
        _err(f"error: {exc}")
        return 1
    elapsed = time.perf_counter() - t0

    if args.format == "table":
        payload = format_table(table).encode("utf-8")
    else:
        payload = export(table, args.format)
    if args.output:
        Path(args.output).write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
        if args.format == "json":
            sys.stdout.buffer.write(b"\n")
        sys.stdout.flush()
    _err(f"{len(table)} row(s) in {elapsed:.3f} s")
    return 0


def cmd_publish(args) -> int:
    root = args.registry or default_root()
    if root is None:
        _err(f"error: pass --registry or set ${REGISTRY_ENV}")
        return 1
    try:
        nanopubs = load_nanopubs(args.paths)
    except (NanocorpusError, FileNotFoundError) as exc:
        _err(f"error: {exc}")
        return 1

    protected = [np for np in nanopubs if np.protected]
    if protected and not args.skip_protected:
        # refuse up front so a failed run leaves the registry untouched
        _err(f"error: {ProtectedPublicationRefused(protected[0].uri)}")
        _err(f"{len(protected)} protected nanopublication(s) in the input; rerun with --skip-protected")
        return 1

    registry = Registry(root)
    created = existing = 0
    for np in nanopubs:
        if np.protected:
            continue
        try:
            receipt = registry.publish(np)
        except NanocorpusError as exc:
            _err(f"error: {exc}")
            return 1
        if receipt.created:
            created += 1
        else:
            existing += 1
    for np in protected:
        _err(f"warning: skipped protected {np.uri}")
    print(f"published {created}, already present {existing}, skipped protected {len(protected)}")
    return 0


def cmd_stats(args) -> int:
    try:
        counts = Counter(classify(np) for np in load_nanopubs(args.paths))
    except (NanocorpusError, FileNotFoundError) as exc:
        _err(f"error: {exc}")
        return 1
    for kind in KINDS + tuple(sorted(set(counts) - set(KINDS))):
        print(f"{kind}\t{counts.get(kind, 0)}")
    print(f"total\t{sum(counts.values())}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nanocorpus", description="Convert annotated corpora to nanopublications and query them.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("convert", help="convert raw documents and annotations to nanopublications")
    c.add_argument("--manifest", action="append", type=Path, help="corpus manifest (repeat per corpus)")
    c.add_argument("--raw-dir", type=Path, required=True)
    c.add_argument("--parc-dir", type=Path, help="PARC XML files named <doc-id>.xml")
    c.add_argument("--factbank-dir", type=Path, help="directory with fb_event.txt and fb_factValue.txt")
    c.add_argument("--overrides-dir", type=Path, help="manual fixes named <doc-id>.fix")
    c.add_argument("--out", type=Path, required=True)
    c.add_argument("--no-dedup", action="store_true", help="keep one word nanopub per annotation corpus")
    c.add_argument("--workers", type=int, default=4)
    c.set_defaults(func=cmd_convert)

    v = sub.add_parser("validate", help="verify nanopub files and network closure")
    v.add_argument("paths", nargs="+")
    v.set_defaults(func=cmd_validate)

    q = sub.add_parser("query", help="run q1..q6 or a query file over nanopub files")
    q.add_argument("question", help="q1..q6 or a path to a query file")
    q.add_argument("paths", nargs="+")
    q.add_argument("--lemma")
    q.add_argument("--label", choices=("source", "cue", "content"))
    q.add_argument("--of", choices=("attribution", "source", "factvalue"), help="what q4 counts")
    q.add_argument("--component", choices=("source", "cue", "content"), help="attribution part for q5")
    q.add_argument("--format", choices=("table", "csv", "json"), default="table")
    q.add_argument("--output", "-o")
    q.set_defaults(func=cmd_query)

    pb = sub.add_parser("publish", help="publish nanopub files into a local registry")
    pb.add_argument("paths", nargs="+")
    pb.add_argument("--registry", type=Path, help=f"registry root (default ${REGISTRY_ENV})")
    pb.add_argument("--skip-protected", action="store_true")
    pb.set_defaults(func=cmd_publish)

    s = sub.add_parser("stats", help="count nanopubs by kind")
    s.add_argument("paths", nargs="+")
    s.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
