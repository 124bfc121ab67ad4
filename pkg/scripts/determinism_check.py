"""Convert the same corpus twice with different worker counts and diff the trees byte for byte."""
import argparse
import sys
import tempfile
from pathlib import Path

from nanocorpus.pipeline import ConvertConfig, convert

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "corpus"


def snapshot(root: Path) -> dict[Path, bytes]:
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def run(corpus: Path, out: Path, workers: int):
    convert(ConvertConfig(
        manifests=sorted((corpus / "manifests").glob("*.manifest")),
        raw_dir=corpus / "raw", output_dir=out, workers=workers,
        parc_dir=corpus / "parc" if (corpus / "parc").is_dir() else None,
        factbank_dir=corpus / "factbank" if (corpus / "factbank").is_dir() else None,
    ))
    return snapshot(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--corpus", type=Path, default=FIXTURES)
    args = ap.parse_args(argv)
    with tempfile.TemporaryDirectory() as tmp:
        a = run(args.corpus, Path(tmp) / "a", workers=1)
        b = run(args.corpus, Path(tmp) / "b", workers=4)
    diff = sorted(set(a) ^ set(b)) + sorted(k for k in set(a) & set(b) if a[k] != b[k])
    for path in diff:
        print(f"differs: {path}")
    print(f"{len(a)} files, {len(diff)} difference(s)")
    return 1 if diff else 0


if __name__ == "__main__":
    sys.exit(main())
