"""Projection of character-offset annotations onto token-aligned mentions.

A span projects when, after trimming surrounding whitespace, its start sits
exactly on a token start and its end exactly on a token end. Anything else
is a misalignment and the affected mention is dropped rather than repaired.
Anchor failures drop a sentence's mentions everywhere; argument failures
drop them from argument training only, which is why the result keeps two
mention lists.
"""
from __future__ import annotations

import json
from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .annotation import ANCHOR, ARGUMENT, EVENT_PRESENT, NEGATIVE, AnnotationRecord, Session
from .corpus import Document, DocumentSet

REALIS_ACTUAL = "ACTUAL"
REALIS_GENERIC = "GENERIC"
REALIS_OTHER = "OTHER"
REALIS_VALUES = frozenset({REALIS_ACTUAL, REALIS_GENERIC, REALIS_OTHER})

MISALIGNED = "MISALIGNED"
EMPTY = "EMPTY"


class ProjectionError(ValueError):
    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


@dataclass(frozen=True)
class EventMention:
    event_type: str
    doc_id: str
    sentence_index: int
    anchor: tuple[int, int]  # token index range, end exclusive
    arguments: tuple[tuple[str, int, int], ...]  # (role, first_token, last_token)
    realis: str = REALIS_ACTUAL
    provenance: tuple[str, ...] = ()


@dataclass(frozen=True)
class NegativeSentence:
    event_type: str
    doc_id: str
    sentence_index: int
    provenance: tuple[str, ...] = ()


@dataclass
class ProjectionReport:
    mentions_built: int = 0
    mentions_dropped: int = 0
    spans_failed: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class ProjectionResult:
    mentions: list[EventMention] = field(default_factory=list)  # anchor + all args aligned
    trigger_mentions: list[EventMention] = field(default_factory=list)  # anchor aligned
    negatives: list[NegativeSentence] = field(default_factory=list)
    report: ProjectionReport = field(default_factory=ProjectionReport)


def project_span(span: tuple[int, int], doc: Document) -> tuple[int, int]:
    """Token index range covered by a character span, or ProjectionError."""
    start, end = span
    if not (0 <= start <= end <= len(doc.text)):
        raise ValueError(f"span {span} out of bounds for {doc.doc_id}")
    while start < end and doc.text[start].isspace():
        start += 1
    while end > start and doc.text[end - 1].isspace():
        end -= 1
    if start == end:
        raise ProjectionError(EMPTY, f"span {span} contains no text")
    starts = [tok.start for tok in doc.tokens]
    ends = [tok.end for tok in doc.tokens]
    first = bisect_left(starts, start)
    if first == len(starts) or starts[first] != start:
        raise ProjectionError(MISALIGNED, f"span start {start} is inside a token")
    last = bisect_left(ends, end)
    if last == len(ends) or ends[last] != end:
        raise ProjectionError(MISALIGNED, f"span end {end} is inside a token")
    return first, last + 1


def _anchor_runs(token_indices: set[int]) -> list[tuple[int, int]]:
    """Maximal consecutive runs; non-adjacent anchor tokens become separate runs."""
    runs: list[tuple[int, int]] = []
    for idx in sorted(token_indices):
        if runs and idx == runs[-1][1]:
            runs[-1] = (runs[-1][0], idx + 1)
        else:
            runs.append((idx, idx + 1))
    return runs


def build_event_mentions(
    doc: Document, records: Sequence[AnnotationRecord]
) -> ProjectionResult:
    """Project one document's live records into mentions and negatives.

    Report accounting is per event-present sentence: each contributes one
    unit to mentions_built (all spans aligned) or mentions_dropped.
    """
    result = ProjectionResult()
    sentences: dict[int, dict] = {}
    for record in records:
        if record.doc_id != doc.doc_id:
            continue
        if record.kind == EVENT_PRESENT:
            idx = _classification_sentence(doc, record)
            sentences.setdefault(idx, {"classification": record, "anchors": [], "arguments": []})
            sentences[idx]["classification"] = record
        elif record.kind == NEGATIVE:
            idx = _classification_sentence(doc, record)
            result.negatives.append(
                NegativeSentence(
                    event_type=record.event_type,
                    doc_id=doc.doc_id,
                    sentence_index=idx,
                    provenance=(record.record_id,),
                )
            )
        elif record.kind in (ANCHOR, ARGUMENT):
            idx = doc.sentence_containing(record.span_start, record.span_end)
            if idx is None:
                continue
            entry = sentences.setdefault(idx, {"classification": None, "anchors": [], "arguments": []})
            entry["anchors" if record.kind == ANCHOR else "arguments"].append(record)

    for idx in sorted(sentences):
        entry = sentences[idx]
        if entry["classification"] is None:
            continue
        _project_sentence(doc, idx, entry, result)
    return result


def _classification_sentence(doc: Document, record: AnnotationRecord) -> int:
    for idx in range(len(doc.sentences)):
        if doc.sentence_char_span(idx) == record.span:
            return idx
    raise ValueError(f"record {record.record_id} span is not a sentence span")


def _project_sentence(doc: Document, sentence_index: int, entry: dict, result: ProjectionResult) -> None:
    report = result.report
    anchor_tokens: set[int] = set()
    anchor_failed = False
    for record in entry["anchors"]:
        try:
            first, last = project_span(record.span, doc)
        except ProjectionError as exc:
            report.spans_failed.append((record.record_id, exc.reason))
            anchor_failed = True
        else:
            anchor_tokens.update(range(first, last))
    if anchor_failed or not anchor_tokens:
        report.mentions_dropped += 1
        return

    arguments: list[tuple[str, int, int]] = []
    argument_failed = False
    for record in entry["arguments"]:
        try:
            first, last = project_span(record.span, doc)
        except ProjectionError as exc:
            report.spans_failed.append((record.record_id, exc.reason))
            argument_failed = True
        else:
            arguments.append((record.role or "", first, last))

    provenance = tuple(
        [entry["classification"].record_id]
        + [r.record_id for r in entry["anchors"]]
        + [r.record_id for r in entry["arguments"]]
    )
    event_type = entry["classification"].event_type
    mentions = [
        EventMention(
            event_type=event_type,
            doc_id=doc.doc_id,
            sentence_index=sentence_index,
            anchor=run,
            arguments=tuple(arguments),
            provenance=provenance,
        )
        for run in _anchor_runs(anchor_tokens)
    ]
    result.trigger_mentions.extend(mentions)
    if argument_failed:
        report.mentions_dropped += 1
    else:
        report.mentions_built += 1
        result.mentions.extend(mentions)


def project_records(records: Iterable[AnnotationRecord], docs: DocumentSet) -> ProjectionResult:
    """Project an arbitrary record collection, document by document."""
    combined = ProjectionResult()
    by_doc: dict[str, list[AnnotationRecord]] = {}
    for record in records:
        by_doc.setdefault(record.doc_id, []).append(record)
    for doc_id in sorted(by_doc):
        part = build_event_mentions(docs.get(doc_id), by_doc[doc_id])
        combined.mentions.extend(part.mentions)
        combined.trigger_mentions.extend(part.trigger_mentions)
        combined.negatives.extend(part.negatives)
        combined.report.mentions_built += part.report.mentions_built
        combined.report.mentions_dropped += part.report.mentions_dropped
        combined.report.spans_failed.extend(part.report.spans_failed)
    return combined


def project_session(session: Session, docs: DocumentSet) -> ProjectionResult:
    """Project every live record of a session."""
    return project_records(session.effective_records(), docs)


def write_mentions(path: str | Path, mentions: Iterable[EventMention]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for mention in mentions:
            fh.write(
                json.dumps(
                    {
                        "doc_id": mention.doc_id,
                        "event_type": mention.event_type,
                        "sentence_index": mention.sentence_index,
                        "anchor_start": mention.anchor[0],
                        "anchor_end": mention.anchor[1],
                        "arguments": [list(arg) for arg in mention.arguments],
                        "realis": mention.realis,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )


def read_mentions(path: str | Path) -> list[EventMention]:
    mentions: list[EventMention] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            mentions.append(
                EventMention(
                    event_type=obj["event_type"],
                    doc_id=obj["doc_id"],
                    sentence_index=obj["sentence_index"],
                    anchor=(obj["anchor_start"], obj["anchor_end"]),
                    arguments=tuple((a[0], a[1], a[2]) for a in obj["arguments"]),
                    realis=obj.get("realis", REALIS_ACTUAL),
                )
            )
    return mentions
