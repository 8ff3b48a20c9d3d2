"""Per-member ordered favorite lists over dissertations.

Lists keep insertion order with no duplicates. Adds are idempotent and bulk
removes forgive unknown ids, which keeps checkbox-style UIs trivial.
"""

from __future__ import annotations

from dataclasses import dataclass

from .auth import AuthService, Session
from .errors import NotFound
from .store import Mutation, Store


@dataclass
class FavoriteSet:
    user_id: str
    items: list[str]


class FavoritesService:
    def __init__(self, store: Store) -> None:
        self._store = store

    def _items(self, user_id: str) -> list[str]:
        return list(self._store.state.favorites.get(user_id, []))

    def add_favorite(self, session: Session | None, dissertation_id: str) -> FavoriteSet:
        session = AuthService.require_session(session)
        with self._store.write_lock:
            if dissertation_id not in self._store.state.dissertations:
                raise NotFound(f"dissertation {dissertation_id} does not exist")
            items = self._items(session.user_id)
            if dissertation_id not in items:
                items.append(dissertation_id)
                self._store.commit(Mutation().upsert("favorites", session.user_id, items))
            return FavoriteSet(session.user_id, items)

    def remove_favorites(self, session: Session | None, ids: list[str]) -> FavoriteSet:
        session = AuthService.require_session(session)
        doomed = set(ids)
        with self._store.write_lock:
            items = self._items(session.user_id)
            kept = [i for i in items if i not in doomed]
            if kept != items:
                self._store.commit(Mutation().upsert("favorites", session.user_id, kept))
            return FavoriteSet(session.user_id, kept)

    def list_favorites(self, session: Session | None) -> list[dict]:
        """The member's saved dissertation records in insertion order."""
        session = AuthService.require_session(session)
        state = self._store.state
        return [state.dissertations[i] for i in state.favorites.get(session.user_id, [])]
