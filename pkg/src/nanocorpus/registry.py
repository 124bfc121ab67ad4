"""A local, content-addressed stand-in for a nanopublication server.

Files live at ``<root>/<code[:2]>/<code>.trig``.  Writes go through a
file lock; reads are lock-free and re-verify what they load.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from filelock import FileLock

from .errors import (ConflictingContent, IncompleteDataset, NotFound, ProtectedPublicationRefused,
                     TrigSyntaxError, InvalidStructure, VerificationFailure)
from .nanopub import Nanopub, code_of, is_trusty_uri, read_nanopub, resolve_index, verify

REGISTRY_ENV = "NANOCORPUS_REGISTRY"


@dataclass(frozen=True)
class Receipt:
    uri: str
    stored_path: Path
    created: bool  # False when the identical nanopub was already there


def default_root() -> Path | None:
    value = os.environ.get(REGISTRY_ENV)
    return Path(value) if value else None


class Registry:
    def __init__(self, root: str | Path | None = None):
        root = root if root is not None else default_root()
        if root is None:
            raise ValueError(f"no registry root given and ${REGISTRY_ENV} is unset")
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = FileLock(str(self.root / ".lock"))

    def path_for(self, code: str) -> Path:
        return self.root / code[:2] / f"{code}.trig"

    @staticmethod
    def _code(uri_or_code: str) -> str:
        if is_trusty_uri(uri_or_code):
            return code_of(uri_or_code)
        if "/" not in uri_or_code and "#" not in uri_or_code:
            return uri_or_code
        raise NotFound(uri_or_code)

    @property
    def published(self) -> set[str]:
        return {p.stem for p in self.root.glob("??/*.trig")}

    def __contains__(self, uri: str) -> bool:
        try:
            return self.path_for(self._code(uri)).is_file()
        except NotFound:
            return False

    def publish(self, np: Nanopub) -> Receipt:
        # the guard comes first so that nothing below can touch the disk
        if np.protected:
            raise ProtectedPublicationRefused(np.uri)
        report = verify(np)
        if not report.valid:
            raise VerificationFailure(np.uri, report.reason)
        payload = np.to_trig().encode("utf-8")
        path = self.path_for(np.artifact_code)
        with self._lock:
            if path.exists():
                if path.read_bytes() != payload:
                    raise ConflictingContent(np.uri)
                return Receipt(np.uri, path, False)
            path.parent.mkdir(exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(payload)
                os.replace(tmp, path)
            except BaseException:
                Path(tmp).unlink(missing_ok=True)
                raise
        return Receipt(np.uri, path, True)

    def fetch(self, uri: str) -> Nanopub:
        code = self._code(uri)
        path = self.path_for(code)
        try:
            raw = path.read_bytes()
        except FileNotFoundError:
            raise NotFound(uri) from None
        try:
            np = read_nanopub(raw.decode("utf-8"))
        except (UnicodeDecodeError, TrigSyntaxError, InvalidStructure, ValueError) as exc:
            raise VerificationFailure(uri, f"unreadable: {exc}") from None
        report = verify(np)
        if not report.valid:
            raise VerificationFailure(uri, report.reason)
        if np.artifact_code != code:
            raise VerificationFailure(uri, "stored under the wrong code")
        # a byte edit that survives hashing (say, a renamed unused prefix) still
        # breaks the canonical serialization
        if np.to_trig().encode("utf-8") != raw:
            raise VerificationFailure(uri, "stored file differs from its canonical form")
        return np

    def fetch_dataset(self, index_uri: str) -> list[Nanopub]:
        members = resolve_index(index_uri, self)
        missing = [m for m in members if m not in self]
        if missing:
            raise IncompleteDataset(missing)
        return [self.fetch(m) for m in members]

    def __iter__(self) -> Iterator[Nanopub]:
        for code in sorted(self.published):
            yield self.fetch(code)

    def verify_all(self) -> list[tuple[str, str]]:
        """(code, reason) for every stored file that fails to verify."""
        bad = []
        for code in sorted(self.published):
            try:
                self.fetch(code)
            except VerificationFailure as exc:
                bad.append((code, exc.reason))
        return bad
