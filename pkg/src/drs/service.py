"""Composition root: one open data directory plus all service objects.

The live inverted index is derived state, rebuilt from the catalog when the
directory opens and maintained incrementally inside catalog commits. Index
reads and writes are serialized through the store's writer lock; store
snapshot reads need no lock at all.
"""

from __future__ import annotations

import time
from pathlib import Path
from typing import Callable

from .auth import AuthService, Session
from .catalog import CatalogService
from .favorites import FavoritesService
from .search import AdvancedQuery, SearchHit, advanced_search, rebuild_index, simple_search
from .store import DEFAULT_MAX_BLOB_BYTES, Store


class DrsService:
    def __init__(self, store: Store, clock: Callable[[], float] = time.time) -> None:
        self.store = store
        self.index = rebuild_index(store.state.dissertations)
        self.auth = AuthService(store, clock)
        self.catalog = CatalogService(store, self.index, clock)
        self.favorites = FavoritesService(store)

    @classmethod
    def open(
        cls,
        data_dir: str | Path,
        clock: Callable[[], float] = time.time,
        max_blob_bytes: int = DEFAULT_MAX_BLOB_BYTES,
    ) -> "DrsService":
        return cls(Store.open(data_dir, max_blob_bytes=max_blob_bytes), clock)

    def close(self) -> None:
        self.store.close()

    def __enter__(self) -> "DrsService":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- search entry points ---------------------------------------------------

    def simple_search(self, raw_query: str) -> list[SearchHit]:
        with self.store.write_lock:
            return simple_search(self.index, raw_query)

    def advanced_search(self, session: Session | None, query: AdvancedQuery) -> list[SearchHit]:
        with self.store.write_lock:
            return advanced_search(session, self.index, self.store.state.dissertations, query)

    # -- maintenance -------------------------------------------------------------

    def verify_integrity(self) -> list[str]:
        """Sweep every cross-collection reference; returns problem strings
        (empty means healthy)."""
        problems = []
        with self.store.write_lock:
            state = self.store.state
            for user_id, items in state.favorites.items():
                if user_id not in state.users:
                    problems.append(f"favorites list for unknown user {user_id}")
                if len(set(items)) != len(items):
                    problems.append(f"favorites list for {user_id} has duplicates")
                for item in items:
                    if item not in state.dissertations:
                        problems.append(f"favorite {item} of {user_id} is not in the catalog")
            for rec_id, rec in state.dissertations.items():
                h = rec["file_ref"]["content_hash"]
                if not self.store.has_blob(h):
                    problems.append(f"dissertation {rec_id} references missing blob {h}")
                else:
                    size = len(self.store.get_blob(h))
                    if size != rec["file_ref"]["size_bytes"]:
                        problems.append(f"dissertation {rec_id} blob size mismatch")
            for sess in state.sessions.values():
                if sess["user_id"] not in state.users:
                    problems.append(f"session for unknown user {sess['user_id']}")
            if rebuild_index(state.dissertations) != self.index:
                problems.append("live index differs from a rebuild")
        return problems

    def gc_blobs(self) -> int:
        """Drop blobs no dissertation references; the only blob deletion path."""
        with self.store.write_lock:
            return self.store.gc_blobs(self.catalog.live_blob_hashes())
