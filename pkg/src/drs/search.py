"""Tokenization, field-weighted inverted index and TF-IDF ranked search.

Indexed fields and their weights: title 3, keywords 2, author 2, topic 2,
abstract 1. A document's score for a query is

    sum over query tokens t of  wtf(t, d) * idf(t)

where wtf(t, d) is the field-weighted term frequency and idf(t) is
ln(N / df(t)); a token occurring in every document legitimately scores 0,
and tokens absent from the index contribute nothing. Candidates are all
documents containing at least one query token, ordered by score descending
with ties broken by dissertation id ascending.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import AlreadyIndexed, EmptyQuery, NotIndexed, Unauthenticated, ValidationError

FIELD_WEIGHTS = {
    "title": 3,
    "keywords": 2,
    "author": 2,
    "topic": 2,
    "abstract": 1,
}

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split into maximal runs of letters/digits. Everything
    else separates; no stemming, no stopwords, length-1 tokens kept."""
    return _TOKEN_RE.findall(text.lower())


def document_field_texts(record: dict) -> dict[str, str]:
    """Map a stored dissertation record to its five indexable field texts."""
    return {
        "title": record["title"],
        "keywords": " ".join(record["keywords"]),
        "author": record["author_name"],
        "topic": record["topic"],
        "abstract": record["abstract"],
    }


@dataclass(frozen=True)
class SearchHit:
    dissertation_id: str
    score: float


@dataclass
class AdvancedQuery:
    """Fielded query: keyword tokens plus conjunctive metadata filters."""

    keywords: list[str]
    author_substring: str | None = None
    topic_substring: str | None = None
    degree: str | None = None
    year_from: int | None = None
    year_to: int | None = None

    def has_criteria(self) -> bool:
        return bool(
            self.keywords
            or self.author_substring
            or self.topic_substring
            or self.degree
            or self.year_from is not None
            or self.year_to is not None
        )

    def validate(self) -> None:
        if not self.has_criteria():
            raise ValidationError("advanced search needs at least one criterion")
        if (
            self.year_from is not None
            and self.year_to is not None
            and self.year_from > self.year_to
        ):
            raise ValidationError("year_from must not exceed year_to")

    def matches_filters(self, record: dict) -> bool:
        if self.author_substring is not None:
            if self.author_substring.lower() not in record["author_name"].lower():
                return False
        if self.topic_substring is not None:
            if self.topic_substring.lower() not in record["topic"].lower():
                return False
        if self.degree is not None and record["degree"] != self.degree:
            return False
        if self.year_from is not None and record["year"] < self.year_from:
            return False
        if self.year_to is not None and record["year"] > self.year_to:
            return False
        return True


class InvertedIndex:
    """term -> {dissertation_id -> {field -> term frequency}}, plus the set
    of indexed ids. df(t) is the number of ids under t; N is the id count.
    Incremental maintenance must stay equal to a rebuild from the catalog."""

    def __init__(self) -> None:
        self._postings: dict[str, dict[str, dict[str, int]]] = {}
        self._docs: set[str] = set()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InvertedIndex):
            return NotImplemented
        return self._postings == other._postings and self._docs == other._docs

    @property
    def doc_count(self) -> int:
        return len(self._docs)

    def document_frequency(self, term: str) -> int:
        return len(self._postings.get(term, {}))

    def is_indexed(self, dissertation_id: str) -> bool:
        return dissertation_id in self._docs

    def postings(self, term: str) -> list[tuple[str, str, int]]:
        """(dissertation_id, field, tf) entries sorted by id then field."""
        by_doc = self._postings.get(term, {})
        return [
            (doc_id, fld, tf)
            for doc_id in sorted(by_doc)
            for fld, tf in sorted(by_doc[doc_id].items())
        ]

    def index_document(self, record: dict) -> None:
        doc_id = record["dissertation_id"]
        if doc_id in self._docs:
            raise AlreadyIndexed(f"document {doc_id} is already indexed")
        self._docs.add(doc_id)
        for fld, text in document_field_texts(record).items():
            for term in tokenize(text):
                self._postings.setdefault(term, {}).setdefault(doc_id, {})
                self._postings[term][doc_id][fld] = self._postings[term][doc_id].get(fld, 0) + 1

    def remove_document(self, dissertation_id: str) -> None:
        if dissertation_id not in self._docs:
            raise NotIndexed(f"document {dissertation_id} is not indexed")
        self._docs.discard(dissertation_id)
        for term in list(self._postings):
            self._postings[term].pop(dissertation_id, None)
            if not self._postings[term]:
                del self._postings[term]

    def reindex_document(self, record: dict) -> None:
        """Apply an edit: remove the old postings, add the new ones."""
        self.remove_document(record["dissertation_id"])
        self.index_document(record)

    def score(self, dissertation_id: str, tokens: list[str]) -> float:
        if dissertation_id not in self._docs:
            raise NotIndexed(f"document {dissertation_id} is not indexed")
        total = 0.0
        n = self.doc_count
        for term in tokens:
            by_doc = self._postings.get(term)
            if not by_doc:
                continue
            fields = by_doc.get(dissertation_id)
            if not fields:
                continue
            wtf = sum(FIELD_WEIGHTS[fld] * tf for fld, tf in fields.items())
            total += wtf * math.log(n / len(by_doc))
        return total

    def candidates(self, tokens: list[str]) -> set[str]:
        found: set[str] = set()
        for term in set(tokens):
            found.update(self._postings.get(term, {}))
        return found


def rank(index: InvertedIndex, ids: set[str], tokens: list[str]) -> list[SearchHit]:
    """Order ids by score descending, id ascending; empty token list means
    every id scores 0 and pure id order applies."""
    scored = [
        SearchHit(doc_id, index.score(doc_id, tokens) if tokens else 0.0) for doc_id in ids
    ]
    scored.sort(key=lambda hit: (-hit.score, hit.dissertation_id))
    return scored


def simple_search(index: InvertedIndex, raw_query: str) -> list[SearchHit]:
    """Public keyword search: OR-candidates over the query tokens, ranked."""
    tokens = tokenize(raw_query)
    if not tokens:
        raise EmptyQuery("query contains no searchable terms")
    return rank(index, index.candidates(tokens), tokens)


def advanced_search(
    session: object | None,
    index: InvertedIndex,
    catalog: dict[str, dict],
    query: AdvancedQuery,
) -> list[SearchHit]:
    """Members-only fielded search: keyword candidates (or the whole catalog
    when no keywords) narrowed by the conjunction of the given filters."""
    if session is None:
        raise Unauthenticated("advanced search requires a logged-in user")
    query.validate()
    if query.keywords:
        pool = index.candidates(query.keywords)
    else:
        pool = set(catalog)
    survivors = {doc_id for doc_id in pool if query.matches_filters(catalog[doc_id])}
    return rank(index, survivors, query.keywords)


def rebuild_index(catalog: dict[str, dict]) -> InvertedIndex:
    """Deterministically build a fresh index from catalog records."""
    index = InvertedIndex()
    for doc_id in sorted(catalog):
        index.index_document(catalog[doc_id])
    return index
