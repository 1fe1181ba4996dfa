"""Plain-directory persistence: snapshots, change sets, audit logs, archives.

Layout (a compatibility contract):

* ``snapshots/<digest>.wbk.json`` - write-once canonical workbook documents
* ``changes/<digest>.cs.json``    - canonical change set records
* ``events/<entry-id>.log``       - one canonical audit record per line
* ``inventory/<entry-id>.json``   - governed entry records
* ``archives/<tag>.bundle``       - self-contained archive bundles
* ``config/``                     - profiles, checklists, org settings

All writes go through write-temp-then-rename, so readers observe either the
old or the new file, never a partial one. A single advisory lock file
(``lock`` at the root, with stale-lock detection by age and recorded
process identity) serializes writers; readers never take it.
"""

import os
import socket
import time
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .diffs import ChangeSet, changeset_from_json, changeset_to_text
from .errors import ConfigError, IntegrityError, NotFoundError, StoreLockError
from .grid import SnapshotId, Workbook, parse_workbook, serialize_workbook, snapshot_id
from .jsonutil import canonical_json, canonical_line, digest, digest_json, load_json

_DIRS = ("inventory", "snapshots", "changes", "events", "archives", "config")

AUDIT_KINDS = (
    "registered",
    "snapshot",
    "change-submitted",
    "review",
    "evaluation",
    "state-change",
    "archive",
)


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def validate_timestamp(text: str) -> str:
    try:
        datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ")
    except ValueError as exc:
        raise ConfigError(f"timestamp {text!r} must look like 2026-01-31T12:00:00Z") from exc
    return text


@dataclass(frozen=True)
class AuditEvent:
    sequence: int
    entry: str
    kind: str
    actor: str
    timestamp: str
    payload: dict

    def __post_init__(self):
        if self.kind not in AUDIT_KINDS:
            raise ConfigError(f"unknown audit event kind {self.kind!r}")
        if self.sequence < 1:
            raise ConfigError("audit sequence numbers start at 1")

    def to_json(self) -> dict:
        return {
            "sequence": self.sequence,
            "entry": self.entry,
            "kind": self.kind,
            "actor": self.actor,
            "timestamp": self.timestamp,
            "payload": self.payload,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AuditEvent":
        return cls(
            sequence=obj["sequence"],
            entry=obj["entry"],
            kind=obj["kind"],
            actor=obj["actor"],
            timestamp=obj["timestamp"],
            payload=dict(obj.get("payload", {})),
        )


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


class Store:
    """Handle over a store directory. Mutations must run under :meth:`lock`."""

    LOCK_STALE_SECONDS = 600

    def __init__(self, root: Path | str):
        self.root = Path(root)
        missing = [d for d in _DIRS if not (self.root / d).is_dir()]
        if missing:
            raise NotFoundError(
                f"{self.root} is not a store (missing {', '.join(missing)}); run init first"
            )

    # -- lifecycle ----------------------------------------------------------

    @classmethod
    def init(cls, path: Path | str) -> "Store":
        """Create the directory skeleton; idempotent on an existing store."""
        root = Path(path)
        if root.exists():
            present = {p.name for p in root.iterdir()}
            if present and not present.issuperset(_DIRS):
                foreign = sorted(present - set(_DIRS) - {"lock"})
                if foreign or not present & set(_DIRS):
                    raise ConfigError(
                        f"refusing to init store over non-store contents in {root}: "
                        f"{foreign or sorted(present)}"
                    )
        for name in _DIRS:
            (root / name).mkdir(parents=True, exist_ok=True)
        return cls(root)

    # -- locking ------------------------------------------------------------

    @contextmanager
    def lock(self):
        """Advisory single-writer lock with stale-lock recovery."""
        path = self.root / "lock"
        payload = canonical_json(
            {"pid": os.getpid(), "host": socket.gethostname(), "acquired_at": time.time()}
        )
        for _ in range(2):
            try:
                fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
                with os.fdopen(fd, "w") as handle:
                    handle.write(payload)
                break
            except FileExistsError:
                if not self._break_stale_lock(path):
                    raise StoreLockError(f"store {self.root} is locked by another writer")
        else:
            raise StoreLockError(f"store {self.root} is locked by another writer")
        try:
            yield self
        finally:
            try:
                path.unlink()
            except FileNotFoundError:
                pass

    def _break_stale_lock(self, path: Path) -> bool:
        try:
            info = load_json(path.read_text(encoding="utf-8"))
        except (OSError, ValueError):
            info = {}
        age = time.time() - float(info.get("acquired_at", 0))
        stale = age > self.LOCK_STALE_SECONDS
        if not stale and info.get("host") == socket.gethostname():
            try:
                os.kill(int(info.get("pid", -1)), 0)
            except (ProcessLookupError, ValueError):
                stale = True
            except PermissionError:
                pass
        if stale:
            try:
                path.unlink()
            except FileNotFoundError:
                pass
            return True
        return False

    # -- snapshots ----------------------------------------------------------

    def put_snapshot(self, workbook: Workbook) -> SnapshotId:
        text = serialize_workbook(workbook)
        sid = SnapshotId(digest(text))
        path = self.root / "snapshots" / f"{sid.hash}.wbk.json"
        if not path.exists():
            _atomic_write(path, text)
        return sid

    def get_snapshot(self, sid: SnapshotId | str) -> Workbook:
        sid = SnapshotId(sid) if isinstance(sid, str) else sid
        path = self.root / "snapshots" / f"{sid.hash}.wbk.json"
        if not path.exists():
            raise NotFoundError(f"snapshot {sid.short()} not in store")
        text = path.read_text(encoding="utf-8")
        if digest(text) != sid.hash:
            raise IntegrityError(f"snapshot {sid.short()} is corrupt (digest mismatch)")
        return parse_workbook(text)

    def has_snapshot(self, sid: SnapshotId | str) -> bool:
        hash_ = sid.hash if isinstance(sid, SnapshotId) else sid
        return (self.root / "snapshots" / f"{hash_}.wbk.json").exists()

    # -- change sets --------------------------------------------------------

    def put_change(self, cs: ChangeSet) -> str:
        path = self.root / "changes" / f"{cs.id}.cs.json"
        if not path.exists():
            _atomic_write(path, changeset_to_text(cs))
        return cs.id

    def get_change(self, change_id: str) -> ChangeSet:
        path = self.root / "changes" / f"{change_id}.cs.json"
        if not path.exists():
            raise NotFoundError(f"change set {change_id[:12]} not in store")
        obj = load_json(path.read_text(encoding="utf-8"), source=str(path))
        cs = changeset_from_json(obj)
        if cs.id != change_id:
            raise IntegrityError(f"change set file {change_id[:12]} holds id {cs.id[:12]}")
        return cs

    # -- audit events -------------------------------------------------------

    def _events_path(self, entry_id: str) -> Path:
        return self.root / "events" / f"{entry_id}.log"

    def last_sequence(self, entry_id: str) -> int:
        events = self.read_events(entry_id)
        return events[-1].sequence if events else 0

    def append_event(self, event: AuditEvent) -> None:
        """Refuses any sequence other than last + 1."""
        path = self._events_path(event.entry)
        existing = path.read_text(encoding="utf-8") if path.exists() else ""
        last = 0
        if existing:
            last = load_json(existing.splitlines()[-1])["sequence"]
        if event.sequence != last + 1:
            raise IntegrityError(
                f"audit append for {event.entry!r} must use sequence {last + 1}, "
                f"got {event.sequence}"
            )
        _atomic_write(path, existing + canonical_line(event.to_json()))

    def read_events(
        self, entry_id: str, lo: int | None = None, hi: int | None = None
    ) -> list:
        path = self._events_path(entry_id)
        if not path.exists():
            return []
        events = [
            AuditEvent.from_json(load_json(line, source=str(path)))
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        if lo is not None:
            events = [e for e in events if e.sequence >= lo]
        if hi is not None:
            events = [e for e in events if e.sequence <= hi]
        return events

    # -- inventory ----------------------------------------------------------

    def _entry_path(self, entry_id: str) -> Path:
        return self.root / "inventory" / f"{entry_id}.json"

    def put_entry(self, record: dict) -> None:
        _atomic_write(self._entry_path(record["id"]), canonical_json(record))

    def get_entry(self, entry_id: str) -> dict:
        path = self._entry_path(entry_id)
        if not path.exists():
            raise NotFoundError(f"inventory entry {entry_id!r} not in store")
        return load_json(path.read_text(encoding="utf-8"), source=str(path))

    def entry_exists(self, entry_id: str) -> bool:
        return self._entry_path(entry_id).exists()

    def list_entries(self) -> list:
        return [
            self.get_entry(p.stem)
            for p in sorted((self.root / "inventory").glob("*.json"))
        ]

    # -- config -------------------------------------------------------------

    def get_config(self, name: str) -> dict | None:
        path = self.root / "config" / f"{name}.json"
        if not path.exists():
            return None
        return load_json(path.read_text(encoding="utf-8"), source=str(path))

    def put_config(self, name: str, obj: dict) -> None:
        _atomic_write(self.root / "config" / f"{name}.json", canonical_json(obj))

    # -- archives -----------------------------------------------------------

    def export_archive(
        self,
        tag: str,
        entry_ids: list | None = None,
        time_from: str | None = None,
        time_to: str | None = None,
        actor: str = "system",
        timestamp: str | None = None,
    ) -> Path:
        """Write a self-contained bundle of the selected entries' records.

        Archives are immutable: reusing a tag is refused. Every snapshot and
        change referenced by the selected events (and by the entry records)
        is embedded, so the bundle replays in an empty store.
        """
        if not tag or "/" in tag or tag.startswith("."):
            raise ConfigError(f"bad archive tag {tag!r}")
        path = self.root / "archives" / f"{tag}.bundle"
        if path.exists():
            raise ConfigError(f"archive tag {tag!r} already used; archives are immutable")
        timestamp = timestamp or utc_now_iso()
        if entry_ids is None:
            entry_ids = [record["id"] for record in self.list_entries()]
        inventory: dict = {}
        events: dict = {}
        snapshot_ids: set[str] = set()
        change_ids: set[str] = set()
        for entry_id in entry_ids:
            record = self.get_entry(entry_id)
            inventory[entry_id] = record
            for key in ("current", "pending"):
                if record.get(key):
                    snapshot_ids.add(record[key])
            selected = [
                e
                for e in self.read_events(entry_id)
                if (time_from is None or e.timestamp >= time_from)
                and (time_to is None or e.timestamp <= time_to)
            ]
            events[entry_id] = [e.to_json() for e in selected]
            for event in selected:
                payload = event.payload
                if payload.get("snapshot"):
                    snapshot_ids.add(payload["snapshot"])
                if payload.get("change"):
                    change_ids.add(payload["change"])
        missing: list[str] = []
        changes: dict = {}
        for change_id in sorted(change_ids):
            try:
                cs = self.get_change(change_id)
            except NotFoundError:
                missing.append(change_id)
                continue
            changes[change_id] = cs.to_json()
            snapshot_ids.add(cs.base.hash)
            snapshot_ids.add(cs.result.hash)
        snapshots: dict = {}
        for sid in sorted(snapshot_ids):
            snap_path = self.root / "snapshots" / f"{sid}.wbk.json"
            if not snap_path.exists():
                missing.append(sid)
                continue
            snapshots[sid] = snap_path.read_text(encoding="utf-8")
        if missing:
            raise NotFoundError(f"archive export found dangling references: {missing}")
        payload = {
            "inventory": {k: inventory[k] for k in sorted(inventory)},
            "snapshots": snapshots,
            "changes": changes,
            "events": {k: events[k] for k in sorted(events)},
        }
        bundle = {
            "tag": tag,
            "created_at": timestamp,
            "manifest": {
                "entries": sorted(inventory),
                "snapshots": sorted(snapshots),
                "changes": sorted(changes),
                "events": {
                    k: [v[0]["sequence"], v[-1]["sequence"]] if v else []
                    for k, v in payload["events"].items()
                },
            },
            "payload": payload,
            "digest": digest_json(payload),
        }
        _atomic_write(path, canonical_json(bundle))
        for entry_id in sorted(inventory):
            self.append_event(
                AuditEvent(
                    sequence=self.last_sequence(entry_id) + 1,
                    entry=entry_id,
                    kind="archive",
                    actor=actor,
                    timestamp=timestamp,
                    payload={"tag": tag},
                )
            )
        return path

    def import_archive(self, bundle_path: Path | str) -> list:
        """Load a bundle into this store; returns the imported entry ids.

        Entries already present are refused outright rather than merged.
        """
        bundle_path = Path(bundle_path)
        if not bundle_path.exists():
            raise NotFoundError(f"no archive bundle at {bundle_path}")
        bundle = load_json(bundle_path.read_text(encoding="utf-8"), source=str(bundle_path))
        payload = bundle.get("payload", {})
        if digest_json(payload) != bundle.get("digest"):
            raise IntegrityError("archive bundle digest does not cover its payload")
        manifest = bundle.get("manifest", {})
        for sid in manifest.get("snapshots", ()):
            if sid not in payload.get("snapshots", {}):
                raise IntegrityError(f"bundle manifest lists missing snapshot {sid[:12]}")
        for cid in manifest.get("changes", ()):
            if cid not in payload.get("changes", {}):
                raise IntegrityError(f"bundle manifest lists missing change {cid[:12]}")
        for entry_id in manifest.get("entries", ()):
            if entry_id not in payload.get("inventory", {}):
                raise IntegrityError(f"bundle manifest lists missing entry {entry_id!r}")
            if self.entry_exists(entry_id):
                raise IntegrityError(f"entry {entry_id!r} already present in this store")
        for sid, text in payload.get("snapshots", {}).items():
            if digest(text) != sid:
                raise IntegrityError(f"bundle snapshot {sid[:12]} is corrupt")
            _atomic_write(self.root / "snapshots" / f"{sid}.wbk.json", text)
        for cid, obj in payload.get("changes", {}).items():
            cs = changeset_from_json(obj)
            if cs.id != cid:
                raise IntegrityError(f"bundle change {cid[:12]} holds id {cs.id[:12]}")
            self.put_change(cs)
        for entry_id, record in payload.get("inventory", {}).items():
            self.put_entry(record)
        for entry_id, event_objs in payload.get("events", {}).items():
            lines = "".join(canonical_line(obj) for obj in event_objs)
            _atomic_write(self._events_path(entry_id), lines)
        return sorted(payload.get("inventory", {}))
