"""Crash-safe embedded persistence for all records and file blobs.

A data directory holds four whole-collection snapshots plus a blob store:

    users.json            accounts (provisioned and registered)
    dissertations.json    dissertation metadata records
    favorites.json        per-user ordered favorite lists
    sessions.json         live bearer sessions
    blobs/<sha256hex>     content-addressed file bodies
    lock                  advisory lock file (flock, released on process death)
    commit.journal        present only while a commit is mid-flight

Snapshots are canonical JSON (UTF-8, sorted keys, two-space indent, LF,
trailing newline) so byte-level diffs are deterministic and serialize ->
parse -> serialize round-trips exactly.

Commit protocol: write every dirty collection to a fsynced temp file, then
durably write a journal naming the files being replaced, then atomically
rename each temp over its snapshot, then remove the journal. Recovery on
open rolls a journalled commit forward and discards unjournalled temps, so
after a crash either all of a mutation's effects are visible or none.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import threading
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterator

from .errors import BlobTooLarge, CorruptSnapshot, DirLocked, EmptyBlob, IoError

SCHEMA_VERSION = 1
COLLECTIONS = ("users", "dissertations", "favorites", "sessions")
DEFAULT_MAX_BLOB_BYTES = 64 * 1024 * 1024

JOURNAL_NAME = "commit.journal"
LOCK_NAME = "lock"
BLOBS_DIR = "blobs"


def canonical_json_bytes(obj: Any) -> bytes:
    """Serialize to the canonical snapshot form (stable byte-for-byte)."""
    return (json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n").encode("utf-8")


def content_hash(data: bytes) -> str:
    """Lowercase hex SHA-256 used to address blobs."""
    return hashlib.sha256(data).hexdigest()


def _fsync_dir(path: Path) -> None:
    fd = os.open(path, os.O_RDONLY)
    try:
        os.fsync(fd)
    finally:
        os.close(fd)


def _write_file_durable(path: Path, data: bytes) -> None:
    with open(path, "wb") as f:
        f.write(data)
        f.flush()
        os.fsync(f.fileno())


@dataclass(frozen=True)
class StoreState:
    """Immutable view of all collections. Never mutate the dicts in place;
    commits swap in a fresh state object."""

    users: dict[str, dict] = field(default_factory=dict)
    dissertations: dict[str, dict] = field(default_factory=dict)
    favorites: dict[str, list] = field(default_factory=dict)
    sessions: dict[str, dict] = field(default_factory=dict)

    def collection(self, name: str) -> dict:
        if name not in COLLECTIONS:
            raise ValueError(f"unknown collection: {name!r}")
        return getattr(self, name)


class Mutation:
    """An ordered batch of upserts/deletes plus optional blob writes,
    applied as one atomic unit."""

    def __init__(self) -> None:
        self.ops: list[tuple] = []
        self.blobs: list[bytes] = []

    def upsert(self, collection: str, key: str, record: Any) -> "Mutation":
        self.ops.append(("upsert", collection, key, record))
        return self

    def delete(self, collection: str, key: str) -> "Mutation":
        self.ops.append(("delete", collection, key, None))
        return self

    def put_blob(self, data: bytes) -> "Mutation":
        self.blobs.append(data)
        return self

    def is_empty(self) -> bool:
        return not self.ops and not self.blobs

    def touched_collections(self) -> list[str]:
        return sorted({op[1] for op in self.ops})

    def validate(self) -> None:
        for op in self.ops:
            if op[1] not in COLLECTIONS:
                raise ValueError(f"unknown collection: {op[1]!r}")


class Store:
    """Handle to one data directory. Single-writer, multi-reader: commits
    serialize through ``write_lock`` while readers take ``state`` (an
    immutable snapshot) without locking."""

    def __init__(
        self,
        root: Path,
        state: StoreState,
        lock_fd: int,
        max_blob_bytes: int,
        crash_hook: Callable[[str], None] | None,
    ) -> None:
        self.root = root
        self.blobs_dir = root / BLOBS_DIR
        self.write_lock = threading.RLock()
        self.max_blob_bytes = max_blob_bytes
        self._state = state
        self._lock_fd = lock_fd
        self._closed = False
        self._poisoned = False
        self._crash_hook = crash_hook

    # -- lifecycle ---------------------------------------------------------

    @classmethod
    def open(
        cls,
        root_path: str | Path,
        max_blob_bytes: int = DEFAULT_MAX_BLOB_BYTES,
        crash_hook: Callable[[str], None] | None = None,
    ) -> "Store":
        """Open (creating if needed) a data directory and load all
        collections. Recovers any interrupted commit first; malformed
        snapshots refuse to open rather than being silently truncated."""
        root = Path(root_path)
        try:
            root.mkdir(parents=True, exist_ok=True)
            (root / BLOBS_DIR).mkdir(exist_ok=True)
        except OSError as exc:
            raise IoError(f"cannot create data directory {root}: {exc}") from exc

        lock_fd = os.open(root / LOCK_NAME, os.O_RDWR | os.O_CREAT, 0o644)
        try:
            fcntl.flock(lock_fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            os.close(lock_fd)
            raise DirLocked(f"data directory {root} is in use by another process")

        try:
            cls._recover(root)
            state = cls._load_state(root)
            cls._check_blob_refs(root, state)
        except OSError as exc:
            os.close(lock_fd)
            raise IoError(f"cannot read data directory {root}: {exc}") from exc
        except Exception:
            os.close(lock_fd)
            raise
        return cls(root, state, lock_fd, max_blob_bytes, crash_hook)

    def close(self) -> None:
        """Release the directory lock. Never writes; safe after a failure."""
        if not self._closed:
            self._closed = True
            os.close(self._lock_fd)

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    @property
    def state(self) -> StoreState:
        return self._state

    # -- recovery and loading ----------------------------------------------

    @staticmethod
    def _recover(root: Path) -> None:
        journal = root / JOURNAL_NAME
        if journal.exists():
            try:
                names = json.loads(journal.read_text(encoding="utf-8"))["files"]
            except (ValueError, KeyError, TypeError) as exc:
                raise CorruptSnapshot(f"unreadable commit journal in {root}: {exc}") from exc
            # journal is durable only after all temps are, so a missing temp
            # means its rename already happened: finish the remaining ones
            for name in names:
                tmp = root / (name + ".tmp")
                if tmp.exists():
                    os.replace(tmp, root / name)
            _fsync_dir(root)
            journal.unlink()
            _fsync_dir(root)
        for stray in root.glob("*.tmp"):
            stray.unlink()
        for stray in (root / BLOBS_DIR).glob("*.tmp"):
            stray.unlink()

    @staticmethod
    def _load_state(root: Path) -> StoreState:
        loaded: dict[str, Any] = {}
        for name in COLLECTIONS:
            path = root / f"{name}.json"
            if not path.exists():
                loaded[name] = {}
                continue
            try:
                doc = json.loads(path.read_text(encoding="utf-8"))
            except (ValueError, UnicodeDecodeError) as exc:
                raise CorruptSnapshot(f"{path.name}: malformed JSON ({exc})") from exc
            if not isinstance(doc, dict) or "schema" not in doc or "values" not in doc:
                raise CorruptSnapshot(f"{path.name}: missing schema/values fields")
            if not isinstance(doc["schema"], int) or doc["schema"] < 1:
                raise CorruptSnapshot(f"{path.name}: bad schema field {doc['schema']!r}")
            if doc["schema"] > SCHEMA_VERSION:
                raise CorruptSnapshot(
                    f"{path.name}: schema {doc['schema']} is newer than supported {SCHEMA_VERSION}"
                )
            if not isinstance(doc["values"], dict):
                raise CorruptSnapshot(f"{path.name}: values is not an object")
            loaded[name] = doc["values"]
        return StoreState(**loaded)

    @staticmethod
    def _check_blob_refs(root: Path, state: StoreState) -> None:
        for rec_id, rec in state.dissertations.items():
            try:
                h = rec["file_ref"]["content_hash"]
            except (KeyError, TypeError) as exc:
                raise CorruptSnapshot(f"dissertations.json: record {rec_id} lacks file_ref") from exc
            if not (root / BLOBS_DIR / h).exists():
                raise CorruptSnapshot(f"dissertations.json: record {rec_id} references missing blob {h}")

    # -- commits -------------------------------------------------------------

    def _crash_point(self, name: str) -> None:
        if self._crash_hook is not None:
            self._crash_hook(name)

    def _ensure_usable(self) -> None:
        if self._closed:
            raise IoError("store is closed")
        if self._poisoned:
            raise IoError("store suffered an unrecoverable disk failure; reopen the directory")

    def commit(self, mutation: Mutation) -> None:
        """Apply a mutation durably. All effects land or none do; on disk
        failure before the commit point, in-memory state is untouched."""
        with self.write_lock:
            self._ensure_usable()
            if mutation.is_empty():
                return
            mutation.validate()
            for data in mutation.blobs:
                self._check_blob(data)

            dirty = mutation.touched_collections()
            new_state = self._apply(self._state, mutation)
            payloads = {
                name: canonical_json_bytes(
                    {"schema": SCHEMA_VERSION, "values": new_state.collection(name)}
                )
                for name in dirty
            }

            try:
                for data in mutation.blobs:
                    self._write_blob(data)
                self._crash_point("blobs")
                for name in dirty:
                    _write_file_durable(self.root / f"{name}.json.tmp", payloads[name])
                self._crash_point("temps")
            except OSError as exc:
                self._discard_temps(dirty)
                raise IoError(f"commit failed before reaching disk: {exc}") from exc

            journal = canonical_json_bytes({"files": [f"{name}.json" for name in dirty]})
            try:
                _write_file_durable(self.root / (JOURNAL_NAME + ".tmp"), journal)
                os.replace(self.root / (JOURNAL_NAME + ".tmp"), self.root / JOURNAL_NAME)
                _fsync_dir(self.root)
            except OSError as exc:
                self._discard_temps(dirty)
                raise IoError(f"commit failed writing journal: {exc}") from exc
            self._crash_point("journal")

            # commit point passed: the journal is durable, so the mutation
            # must now become visible even across failures
            try:
                for name in dirty:
                    os.replace(self.root / f"{name}.json.tmp", self.root / f"{name}.json")
                    self._crash_point(f"rename:{name}")
                _fsync_dir(self.root)
                (self.root / JOURNAL_NAME).unlink()
                _fsync_dir(self.root)
                self._crash_point("cleanup")
            except OSError as exc:
                try:
                    self._recover(self.root)
                except OSError:
                    self._poisoned = True
                    raise IoError(f"commit interrupted and recovery failed: {exc}") from exc
            self._state = new_state

    @staticmethod
    def _apply(state: StoreState, mutation: Mutation) -> StoreState:
        fresh = {name: dict(state.collection(name)) for name in mutation.touched_collections()}
        for kind, coll, key, record in mutation.ops:
            if kind == "upsert":
                fresh[coll][key] = record
            else:
                fresh[coll].pop(key, None)
        return replace(state, **fresh)

    def _discard_temps(self, dirty: list[str]) -> None:
        for name in dirty:
            tmp = self.root / f"{name}.json.tmp"
            try:
                tmp.unlink(missing_ok=True)
            except OSError:
                pass

    # -- blobs ---------------------------------------------------------------

    def _check_blob(self, data: bytes) -> None:
        if len(data) == 0:
            raise EmptyBlob("refusing to store an empty file")
        if len(data) > self.max_blob_bytes:
            raise BlobTooLarge(f"file is {len(data)} bytes; limit is {self.max_blob_bytes}")

    def _write_blob(self, data: bytes) -> str:
        h = content_hash(data)
        final = self.blobs_dir / h
        if final.exists():
            return h
        tmp = self.blobs_dir / f"{uuid.uuid4().hex}.tmp"
        _write_file_durable(tmp, data)
        os.replace(tmp, final)
        _fsync_dir(self.blobs_dir)
        return h

    def put_blob(self, data: bytes) -> str:
        """Store bytes content-addressed; idempotent for identical content."""
        with self.write_lock:
            self._ensure_usable()
            self._check_blob(data)
            try:
                return self._write_blob(data)
            except OSError as exc:
                raise IoError(f"blob write failed: {exc}") from exc

    def get_blob(self, h: str) -> bytes:
        path = self.blobs_dir / h
        try:
            return path.read_bytes()
        except FileNotFoundError:
            raise IoError(f"blob {h} missing from store") from None

    def has_blob(self, h: str) -> bool:
        return (self.blobs_dir / h).exists()

    def iter_blob_hashes(self) -> Iterator[str]:
        for p in self.blobs_dir.iterdir():
            if not p.name.endswith(".tmp"):
                yield p.name

    def gc_blobs(self, live_hashes: set[str]) -> int:
        """Delete blobs not in ``live_hashes``; the only deletion path."""
        removed = 0
        with self.write_lock:
            self._ensure_usable()
            for h in list(self.iter_blob_hashes()):
                if h not in live_hashes:
                    (self.blobs_dir / h).unlink()
                    removed += 1
        return removed
