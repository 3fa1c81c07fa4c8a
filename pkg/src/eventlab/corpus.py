"""Corpus ingestion, tokenization, and sentence segmentation.

All offsets are Unicode code point indices into the document text, start
inclusive and end exclusive. Tokenization is deterministic: a token is
either a maximal run of alphanumeric characters or a single non-whitespace,
non-alphanumeric character. Sentence boundaries fall after ``.``, ``!`` or
``?`` tokens that are followed by a token starting with an uppercase letter,
and at end of text.
"""
from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

SENTENCE_FINAL = frozenset({".", "!", "?"})


class CorpusError(ValueError):
    """Malformed corpus input: bad record, duplicate id, unknown document."""


@dataclass(frozen=True)
class TokenSpan:
    start: int
    end: int


@dataclass(frozen=True)
class SentenceSpan:
    first_token: int
    last_token: int  # exclusive


def tokenize(text: str) -> tuple[TokenSpan, ...]:
    """Split text into token spans. Total and order-deterministic."""
    spans: list[TokenSpan] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isalnum():
            j = i + 1
            while j < n and text[j].isalnum():
                j += 1
            spans.append(TokenSpan(i, j))
            i = j
        else:
            spans.append(TokenSpan(i, i + 1))
            i += 1
    return tuple(spans)


def split_sentences(text: str, tokens: tuple[TokenSpan, ...]) -> tuple[SentenceSpan, ...]:
    """Group token indices into sentences. Spans partition the token list."""
    sentences: list[SentenceSpan] = []
    first = 0
    for idx, tok in enumerate(tokens):
        if text[tok.start:tok.end] not in SENTENCE_FINAL:
            continue
        nxt = idx + 1
        if nxt == len(tokens) or text[tokens[nxt].start].isupper():
            sentences.append(SentenceSpan(first, nxt))
            first = nxt
    if first < len(tokens):
        sentences.append(SentenceSpan(first, len(tokens)))
    return tuple(sentences)


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str
    source: str = ""
    tokens: tuple[TokenSpan, ...] = ()
    sentences: tuple[SentenceSpan, ...] = ()

    @classmethod
    def build(cls, doc_id: str, text: str, source: str = "") -> "Document":
        tokens = tokenize(text)
        return cls(doc_id, text, source, tokens, split_sentences(text, tokens))

    def token_text(self, index: int, fold: bool = False) -> str:
        tok = self.tokens[index]
        piece = self.text[tok.start:tok.end]
        return piece.lower() if fold else piece

    def sentence_tokens(self, sentence_index: int, fold: bool = False) -> list[str]:
        sent = self.sentences[sentence_index]
        return [self.token_text(i, fold) for i in range(sent.first_token, sent.last_token)]

    def sentence_of_token(self, token_index: int) -> int:
        if not 0 <= token_index < len(self.tokens):
            raise CorpusError(f"token index {token_index} out of range for {self.doc_id}")
        firsts = [s.first_token for s in self.sentences]
        return bisect_right(firsts, token_index) - 1

    def sentence_char_span(self, sentence_index: int) -> tuple[int, int]:
        """Character span of a sentence: first token start to last token end."""
        sent = self.sentences[sentence_index]
        return self.tokens[sent.first_token].start, self.tokens[sent.last_token - 1].end

    def sentence_containing(self, start: int, end: int) -> int | None:
        """Sentence index whose character span contains [start, end), or None."""
        for idx in range(len(self.sentences)):
            s_start, s_end = self.sentence_char_span(idx)
            if s_start <= start and end <= s_end:
                return idx
        return None


def word_count(doc: Document) -> int:
    """Number of tokens containing at least one letter or digit."""
    return sum(
        1
        for tok in doc.tokens
        if any(ch.isalnum() for ch in doc.text[tok.start:tok.end])
    )


class DocumentSet:
    """Immutable, insertion-ordered collection of documents keyed by doc_id."""

    def __init__(self, documents: Iterable[Document] = ()):
        self._docs: dict[str, Document] = {}
        for doc in documents:
            if doc.doc_id in self._docs:
                raise CorpusError(f'duplicate doc_id "{doc.doc_id}"')
            self._docs[doc.doc_id] = doc

    def __len__(self) -> int:
        return len(self._docs)

    def __iter__(self) -> Iterator[Document]:
        return iter(self._docs.values())

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._docs

    def get(self, doc_id: str) -> Document:
        try:
            return self._docs[doc_id]
        except KeyError:
            raise CorpusError(f'unknown doc_id "{doc_id}"') from None

    @property
    def doc_ids(self) -> list[str]:
        return list(self._docs)


def ingest_corpus(lines: Iterable[str]) -> DocumentSet:
    """Build a DocumentSet from line-delimited JSON records.

    Each record needs a string ``doc_id`` and ``text``; ``source`` is
    optional. Blank lines are skipped. Duplicate ids and malformed records
    are rejected, never repaired.
    """
    docs: list[Document] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(record, dict):
            raise CorpusError(f"line {lineno}: record must be an object")
        doc_id = record.get("doc_id")
        text = record.get("text")
        if not isinstance(doc_id, str) or not doc_id:
            raise CorpusError(f"line {lineno}: missing or invalid doc_id")
        if not isinstance(text, str):
            raise CorpusError(f"line {lineno}: missing or invalid text")
        source = record.get("source", "")
        if not isinstance(source, str):
            raise CorpusError(f"line {lineno}: source must be a string")
        if doc_id in seen:
            raise CorpusError(f'line {lineno}: duplicate doc_id "{doc_id}"')
        seen.add(doc_id)
        docs.append(Document.build(doc_id, text, source))
    return DocumentSet(docs)


def load_corpus(path: str | Path) -> DocumentSet:
    with open(path, encoding="utf-8") as fh:
        return ingest_corpus(fh)


def write_corpus(path: str | Path, docs: Iterable[Document]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            record: dict[str, str] = {"doc_id": doc.doc_id, "text": doc.text}
            if doc.source:
                record["source"] = doc.source
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
