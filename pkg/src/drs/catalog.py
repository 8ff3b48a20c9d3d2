"""Dissertation metadata records and their file blobs.

Files are immutable per record: editing covers metadata only, and replacing
a file means delete + upload. Every catalog mutation updates the live
search index inside the same writer critical section, so the index never
drifts from the records it mirrors.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable

from .auth import AuthService, Session, validate_degree
from .errors import NotFound, ValidationError
from .search import InvertedIndex
from .store import Mutation, Store, content_hash

MIN_YEAR = 1900
DEFAULT_MEDIA_TYPE = "application/octet-stream"

METADATA_FIELDS = ("title", "author_name", "abstract", "keywords", "topic", "degree", "year")


@dataclass(frozen=True)
class FileRef:
    content_hash: str
    original_filename: str
    size_bytes: int
    media_type: str

    @classmethod
    def from_dict(cls, raw: dict) -> "FileRef":
        return cls(
            content_hash=raw["content_hash"],
            original_filename=raw["original_filename"],
            size_bytes=raw["size_bytes"],
            media_type=raw["media_type"],
        )

    def to_dict(self) -> dict:
        return {
            "content_hash": self.content_hash,
            "original_filename": self.original_filename,
            "size_bytes": self.size_bytes,
            "media_type": self.media_type,
        }


@dataclass
class DissertationRecord:
    dissertation_id: str
    title: str
    author_name: str
    abstract: str
    keywords: list[str]
    topic: str
    degree: str
    year: int
    file_ref: FileRef
    uploaded_by: str
    uploaded_at: int

    @classmethod
    def from_dict(cls, raw: dict) -> "DissertationRecord":
        return cls(
            dissertation_id=raw["dissertation_id"],
            title=raw["title"],
            author_name=raw["author_name"],
            abstract=raw["abstract"],
            keywords=list(raw["keywords"]),
            topic=raw["topic"],
            degree=raw["degree"],
            year=raw["year"],
            file_ref=FileRef.from_dict(raw["file_ref"]),
            uploaded_by=raw["uploaded_by"],
            uploaded_at=raw["uploaded_at"],
        )

    def to_dict(self) -> dict:
        return {
            "dissertation_id": self.dissertation_id,
            "title": self.title,
            "author_name": self.author_name,
            "abstract": self.abstract,
            "keywords": list(self.keywords),
            "topic": self.topic,
            "degree": self.degree,
            "year": self.year,
            "file_ref": self.file_ref.to_dict(),
            "uploaded_by": self.uploaded_by,
            "uploaded_at": self.uploaded_at,
        }


def _year_upper_bound(now: float) -> int:
    return datetime.fromtimestamp(now, tz=timezone.utc).year


def validate_metadata(meta: dict, now: float) -> dict:
    """Check and clean the user-supplied metadata fields."""
    unknown = set(meta) - set(METADATA_FIELDS)
    if unknown:
        raise ValidationError(f"unknown metadata fields: {', '.join(sorted(unknown))}")
    cleaned = dict(meta)
    if "title" in cleaned:
        if not isinstance(cleaned["title"], str) or not cleaned["title"].strip():
            raise ValidationError("title must not be blank")
        cleaned["title"] = cleaned["title"].strip()
    if "year" in cleaned:
        year = cleaned["year"]
        upper = _year_upper_bound(now)
        if not isinstance(year, int) or isinstance(year, bool) or not MIN_YEAR <= year <= upper:
            raise ValidationError(f"year must be an integer between {MIN_YEAR} and {upper}")
    if "degree" in cleaned:
        validate_degree(cleaned["degree"])
    if "keywords" in cleaned:
        kws = cleaned["keywords"]
        if not isinstance(kws, list) or not all(isinstance(k, str) for k in kws):
            raise ValidationError("keywords must be a list of strings")
        cleaned["keywords"] = [k.strip() for k in kws if k.strip()]
    for field in ("author_name", "abstract", "topic"):
        if field in cleaned and not isinstance(cleaned[field], str):
            raise ValidationError(f"{field} must be a string")
    return cleaned


class CatalogService:
    def __init__(
        self, store: Store, index: InvertedIndex, clock: Callable[[], float] = time.time
    ) -> None:
        self._store = store
        self._index = index
        self._clock = clock

    def upload_dissertation(
        self,
        admin: Session | None,
        meta: dict,
        file_bytes: bytes,
        original_filename: str = "",
        media_type: str = "",
    ) -> DissertationRecord:
        """Store the file blob, the record and the index postings as one
        atomic unit."""
        AuthService.require_admin(admin)
        now = self._clock()
        cleaned = validate_metadata(meta, now)
        for required in ("title", "degree", "year"):
            if required not in cleaned:
                raise ValidationError(f"metadata field {required} is required")
        record = DissertationRecord(
            dissertation_id=uuid.uuid4().hex,
            title=cleaned["title"],
            author_name=cleaned.get("author_name", ""),
            abstract=cleaned.get("abstract", ""),
            keywords=cleaned.get("keywords", []),
            topic=cleaned.get("topic", ""),
            degree=cleaned["degree"],
            year=cleaned["year"],
            file_ref=FileRef(
                content_hash=content_hash(file_bytes),
                original_filename=original_filename.strip() or "dissertation.bin",
                size_bytes=len(file_bytes),
                media_type=media_type.strip() or DEFAULT_MEDIA_TYPE,
            ),
            uploaded_by=admin.user_id,
            uploaded_at=int(now),
        )
        raw = record.to_dict()
        with self._store.write_lock:
            mutation = Mutation().put_blob(file_bytes).upsert(
                "dissertations", record.dissertation_id, raw
            )
            self._store.commit(mutation)
            self._index.index_document(raw)
        return record

    def edit_dissertation(
        self, admin: Session | None, dissertation_id: str, patch: dict
    ) -> DissertationRecord:
        """Metadata-only edit; the record keeps its id and file, and the
        index postings are replaced in the same critical section."""
        AuthService.require_admin(admin)
        cleaned = validate_metadata(patch, self._clock())
        with self._store.write_lock:
            raw = self._store.state.dissertations.get(dissertation_id)
            if raw is None:
                raise NotFound(f"dissertation {dissertation_id} does not exist")
            if not cleaned:
                return DissertationRecord.from_dict(raw)
            updated = {**raw, **cleaned}
            self._store.commit(Mutation().upsert("dissertations", dissertation_id, updated))
            self._index.reindex_document(updated)
            return DissertationRecord.from_dict(updated)

    def delete_dissertation(self, admin: Session | None, dissertation_id: str) -> None:
        """Remove the record, its postings and every favorite-list entry in
        one commit. The blob stays; garbage collection is explicit."""
        AuthService.require_admin(admin)
        with self._store.write_lock:
            state = self._store.state
            if dissertation_id not in state.dissertations:
                raise NotFound(f"dissertation {dissertation_id} does not exist")
            mutation = Mutation().delete("dissertations", dissertation_id)
            for user_id, items in state.favorites.items():
                if dissertation_id in items:
                    mutation.upsert(
                        "favorites", user_id, [i for i in items if i != dissertation_id]
                    )
            self._store.commit(mutation)
            self._index.remove_document(dissertation_id)

    def get_dissertation(self, dissertation_id: str) -> DissertationRecord:
        """Public metadata view; guests may call this."""
        raw = self._store.state.dissertations.get(dissertation_id)
        if raw is None:
            raise NotFound(f"dissertation {dissertation_id} does not exist")
        return DissertationRecord.from_dict(raw)

    def download(self, session: Session | None, dissertation_id: str) -> tuple[bytes, str, str]:
        """Logged-in users get the exact stored bytes back."""
        AuthService.require_session(session)
        record = self.get_dissertation(dissertation_id)
        data = self._store.get_blob(record.file_ref.content_hash)
        return data, record.file_ref.original_filename, record.file_ref.media_type

    def live_blob_hashes(self) -> set[str]:
        return {
            rec["file_ref"]["content_hash"]
            for rec in self._store.state.dissertations.values()
        }
