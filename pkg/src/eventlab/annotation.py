"""Append-only annotation store: indicator lists, span records, time accounting.

Every teacher action lands in an append-only event log (one flat JSON object
per line). Annotation records are validated against the owning document and
the session's prior sentence classifications before they are accepted;
violations are rejected, never silently repaired. Records are never edited
or deleted; corrections arrive as later events that mark earlier records
superseded.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Document, DocumentSet, word_count

EVENT_PRESENT = "EVENT_PRESENT"
NEGATIVE = "NEGATIVE"
ANCHOR = "ANCHOR"
ARGUMENT = "ARGUMENT"
INTERESTING = "INTERESTING"
RECORD_KINDS = frozenset({EVENT_PRESENT, NEGATIVE, ANCHOR, ARGUMENT, INTERESTING})

ORIGIN_BRAINSTORMED = "brainstormed"
ORIGIN_PROMOTED = "promoted"

PER_INDICATOR_BUDGET = 10
BREAK_THRESHOLD_SECONDS = 120.0


class AnnotationError(ValueError):
    pass


@dataclass
class Indicator:
    """A search phrase in the priority queue. Lower priority is served first."""

    phrase: tuple[str, ...]  # case-folded tokens
    priority: int
    origin: str
    docs_annotated: int = 0
    abandoned: bool = False
    budget_extension: int = 0

    def exhausted(self, budget: int = PER_INDICATOR_BUDGET) -> bool:
        return self.abandoned or self.docs_annotated >= budget + self.budget_extension

    def to_view(self) -> dict:
        return {
            "phrase": " ".join(self.phrase),
            "priority": self.priority,
            "origin": self.origin,
            "docs_annotated": self.docs_annotated,
            "exhausted": self.exhausted(),
        }


@dataclass(frozen=True)
class AnnotationRecord:
    record_id: str
    session_id: str
    teacher_id: str
    event_type: str
    doc_id: str
    kind: str
    span_start: int
    span_end: int
    role: str | None
    timestamp: float

    @property
    def span(self) -> tuple[int, int]:
        return self.span_start, self.span_end

    def to_event(self) -> dict:
        return {
            "event": "annotation",
            "record_id": self.record_id,
            "session_id": self.session_id,
            "teacher_id": self.teacher_id,
            "event_type": self.event_type,
            "doc_id": self.doc_id,
            "kind": self.kind,
            "span_start": self.span_start,
            "span_end": self.span_end,
            "role": self.role,
            "ts": self.timestamp,
        }

    @classmethod
    def from_event(cls, event: dict) -> "AnnotationRecord":
        return cls(
            record_id=event["record_id"],
            session_id=event["session_id"],
            teacher_id=event["teacher_id"],
            event_type=event["event_type"],
            doc_id=event["doc_id"],
            kind=event["kind"],
            span_start=event["span_start"],
            span_end=event["span_end"],
            role=event.get("role"),
            timestamp=event["ts"],
        )


@dataclass(frozen=True)
class SearchEvent:
    timestamp: float
    phrase: tuple[str, ...]
    limit: int


@dataclass
class Session:
    """One teacher, one event type, one append-only stream of actions."""

    session_id: str
    teacher_id: str
    event_type: str
    events: list[dict] = field(default_factory=list)
    records: list[AnnotationRecord] = field(default_factory=list)
    searches: list[SearchEvent] = field(default_factory=list)
    indicators: list[Indicator] = field(default_factory=list)
    superseded: set[str] = field(default_factory=set)
    # live sentence classification per (doc_id, sentence_index)
    classified: dict[tuple[str, int], str] = field(default_factory=dict)
    record_index: dict[str, AnnotationRecord] = field(default_factory=dict)
    # sentence each record was validated into, for supersession bookkeeping
    record_sentence: dict[str, tuple[str, int]] = field(default_factory=dict)

    @property
    def last_timestamp(self) -> float:
        return self.events[-1]["ts"] if self.events else 0.0

    def has_record(self, record_id: str) -> bool:
        return record_id in self.record_index

    def effective_records(self) -> list[AnnotationRecord]:
        return [r for r in self.records if r.record_id not in self.superseded]

    def classification_of(self, doc_id: str, sentence_index: int) -> str | None:
        return self.classified.get((doc_id, sentence_index))


def sentence_index_for_record(doc: Document, record: AnnotationRecord) -> int:
    """Sentence a record lives in; classification records must cover it exactly."""
    if record.kind in (EVENT_PRESENT, NEGATIVE):
        for idx in range(len(doc.sentences)):
            if doc.sentence_char_span(idx) == record.span:
                return idx
        raise AnnotationError(
            f"span {record.span} is not a sentence span of {doc.doc_id}"
        )
    idx = doc.sentence_containing(record.span_start, record.span_end)
    if idx is None:
        raise AnnotationError(f"span {record.span} crosses sentence boundaries")
    return idx


def append_record(session: Session, record: AnnotationRecord, doc: Document) -> AnnotationRecord:
    """Validate a record against session state and append it.

    Raises AnnotationError on any invariant violation; the store is only
    ever extended, never repaired.
    """
    if record.kind not in RECORD_KINDS:
        raise AnnotationError(f"unknown record kind {record.kind!r}")
    if record.record_id in session.record_index:
        raise AnnotationError(f'duplicate record_id "{record.record_id}"')
    if record.doc_id != doc.doc_id:
        raise AnnotationError("record doc_id does not match document")
    if not (0 <= record.span_start < record.span_end <= len(doc.text)):
        raise AnnotationError(
            f"span {record.span} out of bounds for {doc.doc_id}"
        )
    if record.timestamp < session.last_timestamp:
        raise AnnotationError("timestamps must be non-decreasing")
    if record.role is not None and record.kind != ARGUMENT:
        raise AnnotationError("role is only valid on ARGUMENT records")
    if record.kind == ARGUMENT and not record.role:
        raise AnnotationError("ARGUMENT records require a role")

    sentence = sentence_index_for_record(doc, record)
    existing = session.classification_of(record.doc_id, sentence)

    if record.kind in (EVENT_PRESENT, NEGATIVE):
        if existing is not None:
            raise AnnotationError(
                f"sentence {sentence} of {doc.doc_id} already classified {existing}"
            )
    elif record.kind == ANCHOR:
        if existing == NEGATIVE:
            raise AnnotationError("anchor not allowed on a negative sentence")
        if existing != EVENT_PRESENT:
            raise AnnotationError("no event context")
    elif record.kind == ARGUMENT:
        if existing != EVENT_PRESENT:
            raise AnnotationError("no event context")
    else:  # INTERESTING rides on either classification
        if existing not in (EVENT_PRESENT, NEGATIVE):
            raise AnnotationError("no classified sentence for interesting span")

    session.records.append(record)
    session.record_index[record.record_id] = record
    session.record_sentence[record.record_id] = (record.doc_id, sentence)
    session.events.append(record.to_event())
    if record.kind in (EVENT_PRESENT, NEGATIVE):
        session.classified[(record.doc_id, sentence)] = record.kind
    return record


def supersede(session: Session, record_ids: Iterable[str]) -> None:
    """Mark records superseded and clear any sentence classification they made."""
    for record_id in record_ids:
        record = session.record_index.get(record_id)
        if record is None:
            raise AnnotationError(f'cannot supersede unknown record "{record_id}"')
        session.superseded.add(record_id)
        if record.kind in (EVENT_PRESENT, NEGATIVE):
            session.classified.pop(session.record_sentence[record_id], None)


def effective_duration(
    timestamps: Sequence[float], break_threshold: float = BREAK_THRESHOLD_SECONDS
) -> float:
    """Total working seconds with each inter-action gap clipped at the threshold."""
    total = 0.0
    prev: float | None = None
    for ts in timestamps:
        if prev is not None:
            gap = ts - prev
            if gap < 0:
                raise AnnotationError("timestamps must be non-decreasing")
            total += min(gap, break_threshold)
        prev = ts
    return total


@dataclass(frozen=True)
class SessionStats:
    words_read: int
    docs_opened: int
    searches: int


def session_stats(session: Session, docs: DocumentSet) -> SessionStats:
    doc_ids = {record.doc_id for record in session.records}
    words = sum(word_count(docs.get(doc_id)) for doc_id in sorted(doc_ids))
    return SessionStats(words_read=words, docs_opened=len(doc_ids), searches=len(session.searches))


def dump_event(event: dict) -> str:
    return json.dumps(event, ensure_ascii=False, sort_keys=True)


def write_events(path: str | Path, events: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(dump_event(event) + "\n")


def read_events(path: str | Path) -> list[dict]:
    events: list[dict] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError as exc:
                raise AnnotationError(f"line {lineno}: invalid log line ({exc.msg})") from None
            if not isinstance(event, dict) or "event" not in event:
                raise AnnotationError(f"line {lineno}: log line is not an event object")
            events.append(event)
    return events
