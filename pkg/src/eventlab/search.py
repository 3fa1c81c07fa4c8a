"""Inverted index with exact phrase queries over a tokenized corpus.

Tokens are case-folded with a simple lowercase fold. A phrase matches a
document wherever its tokens appear consecutively. Results are ranked by
descending occurrence count, ties broken by ascending doc_id, so the same
corpus and query always produce the same list.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import DocumentSet, tokenize


class SearchError(ValueError):
    pass


def fold(token: str) -> str:
    return token.lower()


def phrase_tokens(text: str) -> tuple[str, ...]:
    """Case-folded token texts of a raw query string."""
    return tuple(text[span.start:span.end].lower() for span in tokenize(text))


@dataclass(frozen=True)
class PhraseQuery:
    phrase: tuple[str, ...]
    limit: int = 10

    def __post_init__(self) -> None:
        if not self.phrase:
            raise SearchError("phrase must be non-empty")
        if self.limit < 1:
            raise SearchError("limit must be >= 1")

    @classmethod
    def from_text(cls, text: str, limit: int = 10) -> "PhraseQuery":
        return cls(phrase_tokens(text), limit)


@dataclass
class InvertedIndex:
    postings: dict[str, list[tuple[str, int]]] = field(default_factory=dict)
    doc_count: int = 0
    # per-token position sets, derived from postings for O(1) adjacency checks
    _positions: dict[str, dict[str, set[int]]] = field(default_factory=dict, repr=False)


def build_index(docs: DocumentSet) -> InvertedIndex:
    index = InvertedIndex(doc_count=len(docs))
    for doc in docs:
        for pos in range(len(doc.tokens)):
            tok = doc.token_text(pos, fold=True)
            index.postings.setdefault(tok, []).append((doc.doc_id, pos))
            index._positions.setdefault(tok, {}).setdefault(doc.doc_id, set()).add(pos)
    for plist in index.postings.values():
        plist.sort()
    return index


def occurrence_counts(index: InvertedIndex, phrase: tuple[str, ...]) -> dict[str, int]:
    """Phrase occurrence count per document (overlapping starts all count)."""
    if not phrase:
        raise SearchError("phrase must be non-empty")
    counts: dict[str, int] = {}
    rest = phrase[1:]
    for doc_id, pos in index.postings.get(phrase[0], []):
        ok = True
        for offset, tok in enumerate(rest, start=1):
            spots = index._positions.get(tok, {}).get(doc_id)
            if spots is None or pos + offset not in spots:
                ok = False
                break
        if ok:
            counts[doc_id] = counts.get(doc_id, 0) + 1
    return counts


def query_phrase(index: InvertedIndex, query: PhraseQuery) -> list[str]:
    """Up to ``limit`` doc_ids containing the phrase, best-ranked first."""
    counts = occurrence_counts(index, query.phrase)
    ranked = sorted(counts, key=lambda doc_id: (-counts[doc_id], doc_id))
    return ranked[: query.limit]
