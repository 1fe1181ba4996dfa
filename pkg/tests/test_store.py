import random

import pytest

from conftest import one_sheet
from genwb import mutate_workbook, random_workbook
from scr.diffs import apply, diff, replay
from scr.errors import ConfigError, IntegrityError, NotFoundError, StoreLockError
from scr.grid import serialize_workbook, snapshot_id
from scr.store import AuditEvent, Store, utc_now_iso, validate_timestamp
from scr.workflow import Classification, WorkflowEngine


def event(entry, seq, kind="snapshot", ts="2026-02-01T00:00:00Z", payload=None):
    return AuditEvent(
        sequence=seq,
        entry=entry,
        kind=kind,
        actor="t",
        timestamp=ts,
        payload=payload or {},
    )


def test_init_idempotent(tmp_path):
    store = Store.init(tmp_path / "s")
    again = Store.init(tmp_path / "s")
    assert store.root == again.root
    for name in ("inventory", "snapshots", "changes", "events", "archives", "config"):
        assert (store.root / name).is_dir()


def test_init_refuses_foreign_directory(tmp_path):
    target = tmp_path / "docs"
    target.mkdir()
    (target / "essay.txt").write_text("hello")
    with pytest.raises(ConfigError):
        Store.init(target)


def test_open_requires_store(tmp_path):
    with pytest.raises(NotFoundError):
        Store(tmp_path / "nope")


def test_snapshot_roundtrip(store):
    book = one_sheet({"A1": "1", "B1": "=A1"})
    sid = store.put_snapshot(book)
    assert sid == snapshot_id(book)
    assert serialize_workbook(store.get_snapshot(sid)) == serialize_workbook(book)
    # double put: same id, one file
    store.put_snapshot(book)
    assert len(list((store.root / "snapshots").glob("*.wbk.json"))) == 1
    with pytest.raises(NotFoundError):
        store.get_snapshot("0" * 64)


def test_snapshot_corruption_detected(store):
    book = one_sheet({"A1": "1"})
    sid = store.put_snapshot(book)
    path = store.root / "snapshots" / f"{sid.hash}.wbk.json"
    raw = bytearray(path.read_bytes())
    raw[-5] ^= 0x01  # flip one bit
    path.write_bytes(bytes(raw))
    with pytest.raises(IntegrityError):
        store.get_snapshot(sid)


def test_change_roundtrip(store):
    cs = diff(one_sheet({"A1": "1"}), one_sheet({"A1": "2"}), "a", "2026-02-01T00:00:00Z", "x")
    store.put_change(cs)
    assert store.get_change(cs.id) == cs
    with pytest.raises(NotFoundError):
        store.get_change("f" * 64)


def test_events_append_only_sequences(store):
    store.append_event(event("e1", 1))
    store.append_event(event("e1", 2))
    with pytest.raises(IntegrityError):
        store.append_event(event("e1", 2))  # repeat
    with pytest.raises(IntegrityError):
        store.append_event(event("e1", 4))  # gap
    assert [e.sequence for e in store.read_events("e1")] == [1, 2]
    assert [e.sequence for e in store.read_events("e1", 2, 2)] == [2]
    assert store.read_events("missing") == []


def test_event_kinds_validated():
    with pytest.raises(ConfigError):
        event("e1", 1, kind="gossip")
    with pytest.raises(ConfigError):
        event("e1", 0)


def test_lock_exclusive(store):
    with store.lock():
        with pytest.raises(StoreLockError):
            with store.lock():
                pass
    with store.lock():
        pass  # released properly


def test_stale_lock_broken(store):
    # a lock from a dead process on this host is stale
    (store.root / "lock").write_text(
        '{"pid": 999999999, "host": "%s", "acquired_at": 0}' % __import__("socket").gethostname()
    )
    with store.lock():
        pass


def test_config_roundtrip(store):
    assert store.get_config("profile") is None
    store.put_config("profile", {"bands": {}})
    assert store.get_config("profile") == {"bands": {}}


def test_timestamp_validation():
    validate_timestamp("2026-01-31T12:00:00Z")
    assert len(utc_now_iso()) == 20
    with pytest.raises(ConfigError):
        validate_timestamp("yesterday")
    with pytest.raises(ConfigError):
        validate_timestamp("2026-01-31 12:00:00")


# ---------------------------------------------------------------------------
# Archives
# ---------------------------------------------------------------------------


def full_history(engine):
    """Register an entry and run one approved change; returns the entry id."""
    from scr.workflow import ChecklistKind, Decision, ReviewRecord, generic_checklist, instance_all_pass

    book = one_sheet({"A1": "1", "A2": "=A1"})
    entry = engine.register(book, "Archived", "owen", Classification.CRITICAL)
    engine.record_review(
        entry.id,
        ReviewRecord(
            entry=entry.id,
            reviewer="ruth",
            decision=Decision.APPROVE,
            checklist=instance_all_pass(generic_checklist(ChecklistKind.IN_DEPTH)),
        ),
    )
    changed = one_sheet({"A1": "1", "A2": "=A1", "B1": "=A2*2"})
    engine.submit_change(entry.id, changed, "amy", "double")
    engine.record_review(
        entry.id,
        ReviewRecord(
            entry=entry.id,
            reviewer="ruth",
            decision=Decision.APPROVE,
            checklist=instance_all_pass(generic_checklist(ChecklistKind.CHANGE)),
        ),
    )
    return entry.id


def test_archive_roundtrip_replays_identically(engine, tmp_path):
    entry_id = full_history(engine)
    store = engine.store
    path = store.export_archive("fy2026-q1", [entry_id], timestamp="2026-03-31T00:00:00Z")
    assert path.exists()

    other = Store.init(tmp_path / "other")
    imported = other.import_archive(path)
    assert imported == [entry_id]

    # replay inside the fresh store: same final snapshot id
    record = other.get_entry(entry_id)
    events = other.read_events(entry_id)
    base = other.get_snapshot([e for e in events if e.kind == "snapshot"][0].payload["snapshot"])
    changes = [
        other.get_change(e.payload["change"]) for e in events if e.kind == "change-submitted"
    ]
    final = replay(base, changes)
    assert snapshot_id(final).hash == record["current"]
    # and the archive event itself was appended to the source store
    assert engine.store.read_events(entry_id)[-1].kind == "archive"


def test_archive_tag_reuse_refused(engine):
    entry_id = full_history(engine)
    engine.store.export_archive("once", [entry_id])
    with pytest.raises(ConfigError):
        engine.store.export_archive("once", [entry_id])


def test_archive_empty_filter_is_valid(store):
    path = store.export_archive("empty")
    bundle = __import__("json").loads(path.read_text())
    assert bundle["manifest"]["entries"] == []
    assert bundle["payload"]["snapshots"] == {}


def test_archive_digest_tamper_detected(engine, tmp_path):
    entry_id = full_history(engine)
    path = engine.store.export_archive("sealed", [entry_id])
    text = path.read_text().replace('"owner": "owen"', '"owner": "eve!"')
    tampered = tmp_path / "tampered.bundle"
    tampered.write_text(text)
    other = Store.init(tmp_path / "other")
    with pytest.raises(IntegrityError):
        other.import_archive(tampered)


def test_archive_import_collision_refused(engine, tmp_path):
    entry_id = full_history(engine)
    path = engine.store.export_archive("dup", [entry_id])
    with pytest.raises(IntegrityError):
        engine.store.import_archive(path)  # same store already has the entry


def test_archive_dangling_reference_reported(engine):
    entry_id = full_history(engine)
    record = engine.store.get_entry(entry_id)
    (engine.store.root / "snapshots" / f"{record['current']}.wbk.json").unlink()
    with pytest.raises(NotFoundError) as info:
        engine.store.export_archive("broken", [entry_id])
    assert record["current"] in str(info.value)


def test_durability_across_reopen(tmp_path, ticking_clock):
    store = Store.init(tmp_path / "s")
    engine = WorkflowEngine(store, clock=ticking_clock)
    entry_id = full_history(engine)
    reopened = Store(tmp_path / "s")
    assert reopened.get_entry(entry_id)["state"] == "in_use"
    assert len(reopened.read_events(entry_id)) == len(store.read_events(entry_id))
