import random
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nanocorpus.errors import (ConflictingContent, IncompleteDataset, NotFound, ProtectedPublicationRefused,
                               VerificationFailure)
from nanocorpus.nanopub import NanopubBuilder, PubInfo, build_index, finalize
from nanocorpus.rdf import IRI, Literal
from nanocorpus.registry import REGISTRY_ENV, Registry
from nanocorpus.vocab import PROV, RDFS
from randomized import random_draft

BASE = "http://example.org/np/"
META = PubInfo("2020-01-01T00:00:00")


def public(label, protected=False):
    b = NanopubBuilder(BASE)
    b.assertion(b.local("x"), RDFS.label, Literal(label))
    b.provenance(b.assertion_graph, PROV.wasDerivedFrom, IRI("http://example.org/src"))
    b.add_pubinfo(META)
    b.protect(protected)
    return b.finalize()


def files(root):
    return sorted(p for p in root.rglob("*") if p.is_file() and p.name != ".lock")


def test_publish_and_fetch(tmp_path):
    reg = Registry(tmp_path)
    np = public("a")
    receipt = reg.publish(np)
    assert receipt.created and receipt.uri == np.uri
    assert receipt.stored_path == tmp_path / np.artifact_code[:2] / f"{np.artifact_code}.trig"
    assert reg.fetch(np.uri) == np and reg.fetch(np.artifact_code) == np
    assert np.uri in reg and list(reg) == [np]


def test_publish_is_idempotent(tmp_path):
    reg = Registry(tmp_path)
    np = public("a")
    reg.publish(np)
    again = reg.publish(np)
    assert not again.created and len(files(tmp_path)) == 1


def test_conflicting_content(tmp_path):
    reg = Registry(tmp_path)
    np = public("a")
    path = reg.publish(np).stored_path
    path.write_text(path.read_text(encoding="utf-8") + "\n", encoding="utf-8")
    with pytest.raises(ConflictingContent):
        reg.publish(np)


def test_protected_refused_before_any_write(tmp_path):
    reg = Registry(tmp_path)
    with pytest.raises(ProtectedPublicationRefused):
        reg.publish(public("secret", protected=True))
    assert files(tmp_path) == []


def test_fetch_errors(tmp_path):
    reg = Registry(tmp_path)
    with pytest.raises(NotFound):
        reg.fetch(BASE + "A" * 43)
    with pytest.raises(NotFound):
        reg.fetch("http://example.org/not/trusty#x")
    np = public("a")
    path = reg.publish(np).stored_path
    raw = bytearray(path.read_bytes())
    i = raw.index(b'"a"') + 1
    raw[i] = ord("b")
    path.write_bytes(bytes(raw))
    with pytest.raises(VerificationFailure):
        reg.fetch(np.uri)
    assert [code for code, _ in reg.verify_all()] == [np.artifact_code]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.data())
def test_any_byte_flip_is_detected(seed, data):
    import tempfile
    from pathlib import Path
    with tempfile.TemporaryDirectory() as d:
        reg = Registry(d)
        np = public(f"value {seed}")
        path = reg.publish(np).stored_path
        raw = bytearray(path.read_bytes())
        i = data.draw(st.integers(0, len(raw) - 1))
        new = data.draw(st.integers(0, 255).filter(lambda b: b != raw[i]))
        raw[i] = new
        Path(path).write_bytes(bytes(raw))
        with pytest.raises(VerificationFailure):
            reg.fetch(np.uri)


def test_wrong_code_file(tmp_path):
    reg = Registry(tmp_path)
    a, b = public("a"), public("b")
    reg.publish(a)
    target = reg.path_for(b.artifact_code)
    target.parent.mkdir(exist_ok=True)
    target.write_bytes(reg.path_for(a.artifact_code).read_bytes())
    with pytest.raises(VerificationFailure):
        reg.fetch(b.uri)


def test_fetch_dataset(tmp_path):
    reg = Registry(tmp_path)
    members = [public(str(i)) for i in range(5)]
    for m in members[:3]:
        reg.publish(m)
    v1 = build_index([m.uri for m in members[:3]], META, base=BASE)
    reg.publish(v1.nanopub)
    assert {n.uri for n in reg.fetch_dataset(v1.uri)} == {m.uri for m in members[:3]}

    v2 = build_index([m.uri for m in members[3:]], META, previous=v1.uri, base=BASE)
    reg.publish(v2.nanopub)
    with pytest.raises(IncompleteDataset) as ei:
        reg.fetch_dataset(v2.uri)
    assert set(ei.value.missing) == {m.uri for m in members[3:]}
    for m in members[3:]:
        reg.publish(m)
    assert {n.uri for n in reg.fetch_dataset(v2.uri)} == {m.uri for m in members}


def test_env_default(tmp_path, monkeypatch):
    monkeypatch.setenv(REGISTRY_ENV, str(tmp_path / "env-reg"))
    assert Registry().root == tmp_path / "env-reg"
    monkeypatch.delenv(REGISTRY_ENV)
    with pytest.raises(ValueError):
        Registry()


def test_concurrent_publishes(tmp_path):
    reg = Registry(tmp_path)
    nps = [public(str(i)) for i in range(20)]
    errors = []

    def work(chunk):
        try:
            for np in chunk:
                Registry(tmp_path).publish(np)
        except Exception as exc:  # pragma: no cover - reported below
            errors.append(exc)

    threads = [threading.Thread(target=work, args=(nps[i::2] + nps,)) for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert errors == []
    assert reg.published == {np.artifact_code for np in nps}
    assert reg.verify_all() == []


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32))
def test_full_registry_verifies(seed):
    import tempfile
    rng = random.Random(seed)
    with tempfile.TemporaryDirectory() as d:
        reg = Registry(d)
        stored = set()
        for _ in range(rng.randint(1, 8)):
            np = finalize(random_draft(rng))
            if not np.protected:
                reg.publish(np)
                stored.add(np.artifact_code)
        assert reg.published == stored
        assert reg.verify_all() == []
