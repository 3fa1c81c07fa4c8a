"""Teaching-protocol engine: indicator queue, budgets, sentence decisions.

The engine is event-sourced. Every action validates against current state,
produces one log event, applies it, and only then hands it to the durable
sink. Replaying a log therefore reconstructs the exact same state, and the
log is the single source of truth: no state exists that is not derivable
from it.

Queue discipline: indicators are served in ascending priority order among
the non-exhausted ones. A document decision (event-present, negative, or
skip) consumes one unit of the serving indicator's ten-document budget.
Promotions enter at min-priority-minus-one, so the latest promotion is
served first. An event-present sentence left without anchors is converted
to a NO_ANCHOR skip at commit, superseding its records.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import annotation as ann
from .annotation import (
    ANCHOR,
    ARGUMENT,
    EVENT_PRESENT,
    NEGATIVE,
    AnnotationRecord,
    Indicator,
    Session,
    append_record,
    effective_duration,
    supersede,
)
from .corpus import Document, DocumentSet
from .search import phrase_tokens

PHASE_BRAINSTORM = "brainstorm"
PHASE_ANNOTATE = "annotate"
PHASE_DONE = "done"

SKIP_MULTIPLE_INSTANCES = "MULTIPLE_INSTANCES"
SKIP_UNCLEAR = "UNCLEAR"
SKIP_NO_ANCHOR = "NO_ANCHOR"
SKIP_REASONS = frozenset({SKIP_MULTIPLE_INSTANCES, SKIP_UNCLEAR, SKIP_NO_ANCHOR})

DECISION_EVENT_PRESENT = "event_present"
DECISION_NEGATIVE = "negative"
DECISION_SKIP = "skip"

SESSION_BUDGET_SECONDS = 4 * 3600.0


class WorkflowError(ValueError):
    pass


@dataclass
class PendingSentence:
    """Sentence classified but not yet committed; spans attach to it."""

    doc_id: str
    sentence_index: int
    kind: str
    classification_id: str
    anchor_ids: list[str] = field(default_factory=list)
    argument_ids: list[str] = field(default_factory=list)
    interesting_ids: list[str] = field(default_factory=list)

    def dependent_ids(self) -> list[str]:
        return self.anchor_ids + self.argument_ids + self.interesting_ids


@dataclass(frozen=True)
class SkipEntry:
    doc_id: str
    sentence_index: int
    reason: str
    timestamp: float


class WorkflowEngine:
    """Single-session protocol driver over an append-only event stream."""

    def __init__(
        self,
        docs: DocumentSet,
        session_id: str,
        teacher_id: str,
        event_type: str,
        sink: Callable[[dict], None] | None = None,
        clock: Callable[[], float] | None = None,
        start_ts: float = 0.0,
    ):
        self._docs = docs
        self._sink = sink
        self._clock = clock
        self.session = Session(session_id=session_id, teacher_id=teacher_id, event_type=event_type)
        self.pending: PendingSentence | None = None
        self.skips: list[SkipEntry] = []
        self.done = False
        self.seen_request_ids: set[str] = set()
        self._last_consumed: int | None = None
        self._record_counter = 0
        head = {
            "event": "session",
            "session_id": session_id,
            "teacher_id": teacher_id,
            "event_type": event_type,
            "ts": float(start_ts),
        }
        self.session.events.append(head)
        if sink is not None:
            sink(head)

    # ------------------------------------------------------------------ state

    @property
    def phase(self) -> str:
        if self.done:
            return PHASE_DONE
        return PHASE_ANNOTATE if self.session.indicators else PHASE_BRAINSTORM

    def current_indicator(self) -> Indicator | None:
        live = [ind for ind in self.session.indicators if not ind.exhausted()]
        if not live:
            return None
        return min(live, key=lambda ind: ind.priority)

    def next_indicator(self) -> Indicator | None:
        if self.phase == PHASE_BRAINSTORM:
            raise WorkflowError("brainstorm an indicator list first")
        return self.current_indicator()

    def docs_done_for_indicator(self) -> int:
        ind = self.current_indicator()
        return ind.docs_annotated if ind else 0

    def effective_elapsed(self) -> float:
        return effective_duration([event["ts"] for event in self.session.events])

    def should_stop(self, budget: float = SESSION_BUDGET_SECONDS) -> bool:
        """Advisory only; the teacher may keep going past the budget."""
        if self.done:
            return True
        if self.effective_elapsed() >= budget:
            return True
        return self.phase == PHASE_ANNOTATE and self.current_indicator() is None

    # ---------------------------------------------------------------- actions

    def brainstorm(self, phrases: Sequence[str]) -> list[Indicator]:
        self._require_open()
        if self.session.indicators:
            raise WorkflowError("indicator list already brainstormed")
        if not phrases:
            raise WorkflowError("at least one indicator is required")
        token_lists = []
        for phrase in phrases:
            tokens = phrase_tokens(phrase)
            if not tokens:
                raise WorkflowError(f"indicator phrase {phrase!r} has no tokens")
            token_lists.append(tokens)
        ts = self._now()
        for priority, tokens in enumerate(token_lists):
            self._emit({
                "event": "indicator",
                "phrase": " ".join(tokens),
                "priority": priority,
                "origin": ann.ORIGIN_BRAINSTORMED,
                "ts": ts,
            })
        return list(self.session.indicators)

    def record_search(self, phrase: str, limit: int) -> None:
        self._require_open()
        tokens = phrase_tokens(phrase)
        if not tokens:
            raise WorkflowError("search phrase has no tokens")
        self._emit({
            "event": "search",
            "phrase": " ".join(tokens),
            "limit": int(limit),
            "ts": self._now(),
        })

    def classify_sentence(
        self,
        doc_id: str,
        sentence_index: int,
        decision: str,
        skip_reason: str | None = None,
        record_id: str | None = None,
    ) -> AnnotationRecord | None:
        self._require_annotate()
        indicator = self.current_indicator()
        if indicator is None:
            raise WorkflowError("no indicator available")
        doc = self._docs.get(doc_id)
        if not 0 <= sentence_index < len(doc.sentences):
            raise WorkflowError(f"sentence index {sentence_index} out of range for {doc_id}")
        if not sentence_contains_phrase(doc, sentence_index, indicator.phrase):
            raise WorkflowError("indicator not in sentence")
        if decision == DECISION_SKIP and skip_reason not in SKIP_REASONS:
            raise WorkflowError(f"invalid skip reason {skip_reason!r}")
        if decision not in (DECISION_SKIP, DECISION_EVENT_PRESENT, DECISION_NEGATIVE):
            raise WorkflowError(f"unknown decision {decision!r}")
        if self.pending is not None:
            self.commit_sentence()
        ts = self._now()
        if decision == DECISION_SKIP:
            self._emit({
                "event": "skip",
                "doc_id": doc_id,
                "sentence_index": sentence_index,
                "reason": skip_reason,
                "ts": ts,
            })
            return None
        kind = EVENT_PRESENT if decision == DECISION_EVENT_PRESENT else NEGATIVE
        start, end = doc.sentence_char_span(sentence_index)
        record = AnnotationRecord(
            record_id=record_id or self._next_record_id(),
            session_id=self.session.session_id,
            teacher_id=self.session.teacher_id,
            event_type=self.session.event_type,
            doc_id=doc_id,
            kind=kind,
            span_start=start,
            span_end=end,
            role=None,
            timestamp=ts,
        )
        self._emit(record.to_event())
        return record

    def annotate_span(
        self,
        doc_id: str,
        kind: str,
        span_start: int,
        span_end: int,
        role: str | None = None,
        record_id: str | None = None,
    ) -> AnnotationRecord:
        self._require_annotate()
        record = AnnotationRecord(
            record_id=record_id or self._next_record_id(),
            session_id=self.session.session_id,
            teacher_id=self.session.teacher_id,
            event_type=self.session.event_type,
            doc_id=doc_id,
            kind=kind,
            span_start=span_start,
            span_end=span_end,
            role=role,
            timestamp=self._now(),
        )
        self._emit(record.to_event())
        return record

    def commit_sentence(self) -> SkipEntry | None:
        """Close the open sentence; an anchor-less event sentence becomes a skip."""
        pending = self.pending
        if pending is None:
            return None
        converted = (
            SKIP_NO_ANCHOR
            if pending.kind == EVENT_PRESENT and not pending.anchor_ids
            else None
        )
        self._emit({
            "event": "commit",
            "doc_id": pending.doc_id,
            "sentence_index": pending.sentence_index,
            "converted": converted,
            "supersedes": pending.classification_id if converted else None,
            "ts": self._now(),
        })
        return self.skips[-1] if converted else None

    def promote_anchor(self, phrase: str) -> Indicator | None:
        """Queue an annotated anchor phrase at the front; duplicate is a no-op."""
        self._require_annotate()
        tokens = phrase_tokens(phrase)
        if not tokens:
            raise WorkflowError("promotion phrase has no tokens")
        for ind in self.session.indicators:
            if ind.phrase == tokens:
                return None
        if tokens not in self._anchor_phrases():
            raise WorkflowError(f"{phrase!r} was not annotated as an anchor")
        # min over ALL indicators, not just live ones: an exhausted indicator
        # may already own min(live)-1 and priorities must stay unique
        priority = min(ind.priority for ind in self.session.indicators) - 1
        self._emit({
            "event": "indicator",
            "phrase": " ".join(tokens),
            "priority": priority,
            "origin": ann.ORIGIN_PROMOTED,
            "ts": self._now(),
        })
        return self.session.indicators[-1]

    def override_budget(self, extra_docs: int = 1, priority: int | None = None) -> None:
        """Grant extra documents on an indicator the teacher wants to keep."""
        self._require_annotate()
        if extra_docs < 1:
            raise WorkflowError("extra_docs must be >= 1")
        target = priority if priority is not None else self._last_consumed
        if target is None:
            raise WorkflowError("no indicator has been used yet")
        self._find_indicator(target)
        self._emit({
            "event": "override",
            "priority": target,
            "extra_docs": int(extra_docs),
            "ts": self._now(),
        })

    def abandon_indicator(self) -> None:
        self._require_annotate()
        indicator = self.current_indicator()
        if indicator is None:
            raise WorkflowError("no indicator to abandon")
        self._emit({
            "event": "abandon",
            "priority": indicator.priority,
            "ts": self._now(),
        })

    def mark_done(self) -> None:
        self._require_open()
        if self.pending is not None:
            self.commit_sentence()
        self._emit({"event": "done", "ts": self._now()})

    # ----------------------------------------------------------- event replay

    @classmethod
    def replay(
        cls,
        docs: DocumentSet,
        events: Sequence[dict],
        sink: Callable[[dict], None] | None = None,
    ) -> "WorkflowEngine":
        """Rebuild an engine from its log. The head must be a session event."""
        if not events or events[0].get("event") != "session":
            raise WorkflowError("log must start with a session event")
        head = events[0]
        engine = cls(
            docs,
            session_id=head["session_id"],
            teacher_id=head["teacher_id"],
            event_type=head["event_type"],
            sink=None,
            clock=None,
            start_ts=head.get("ts", 0.0),
        )
        for event in events[1:]:
            engine._apply(event)
        engine._sink = sink
        return engine

    def resume(
        self,
        clock: Callable[[], float] | None = None,
        sink: Callable[[dict], None] | None = None,
    ) -> None:
        """Reattach a clock and durable sink after a replay."""
        if clock is not None:
            self._clock = clock
        if sink is not None:
            self._sink = sink

    def _emit(self, event: dict) -> None:
        self._apply(event)
        if self._sink is not None:
            self._sink(event)

    def _apply(self, event: dict) -> None:
        kind = event.get("event")
        ts = event.get("ts")
        if not isinstance(ts, (int, float)):
            raise WorkflowError(f"event without numeric ts: {event!r}")
        if ts < self.session.last_timestamp:
            raise WorkflowError("event timestamps must be non-decreasing")
        if kind == "annotation":
            self._apply_annotation(event)
        elif kind == "indicator":
            self._apply_indicator(event)
        elif kind == "search":
            tokens = tuple(event["phrase"].split(" "))
            self.session.searches.append(
                ann.SearchEvent(timestamp=ts, phrase=tokens, limit=event["limit"])
            )
            self.session.events.append(event)
        elif kind == "skip":
            self._apply_skip(event)
        elif kind == "commit":
            self._apply_commit(event)
        elif kind == "override":
            indicator = self._find_indicator(event["priority"])
            indicator.budget_extension += int(event["extra_docs"])
            self.session.events.append(event)
        elif kind == "abandon":
            indicator = self._find_indicator(event["priority"])
            indicator.abandoned = True
            self.session.events.append(event)
        elif kind == "done":
            self.done = True
            self.session.events.append(event)
        elif kind == "session":
            raise WorkflowError("session event only allowed at log head")
        else:
            raise WorkflowError(f"unknown event type {kind!r}")
        if event.get("request_id"):
            self.seen_request_ids.add(event["request_id"])

    def _apply_indicator(self, event: dict) -> None:
        tokens = tuple(event["phrase"].split(" "))
        priority = int(event["priority"])
        if any(ind.priority == priority for ind in self.session.indicators):
            raise WorkflowError(f"indicator priority {priority} already in use")
        if any(ind.phrase == tokens for ind in self.session.indicators):
            raise WorkflowError(f"indicator {event['phrase']!r} already queued")
        self.session.indicators.append(
            Indicator(phrase=tokens, priority=priority, origin=event["origin"])
        )
        self.session.events.append(event)

    def _apply_annotation(self, event: dict) -> None:
        record = AnnotationRecord.from_event(event)
        if record.session_id != self.session.session_id:
            raise WorkflowError("record belongs to a different session")
        doc = self._docs.get(record.doc_id)
        if record.kind in (EVENT_PRESENT, NEGATIVE):
            if self.pending is not None:
                raise WorkflowError("previous sentence is still uncommitted")
            indicator = self.current_indicator()
            if indicator is None:
                raise WorkflowError("no indicator available")
            append_record(self.session, record, doc)
            indicator.docs_annotated += 1
            self._last_consumed = indicator.priority
            sentence = self.session.record_sentence[record.record_id][1]
            self.pending = PendingSentence(
                doc_id=record.doc_id,
                sentence_index=sentence,
                kind=record.kind,
                classification_id=record.record_id,
            )
            return
        pending = self.pending
        if record.kind == ARGUMENT:
            if pending is None or pending.kind != EVENT_PRESENT or pending.doc_id != record.doc_id:
                raise WorkflowError("no event context")
        elif pending is None or pending.doc_id != record.doc_id:
            raise WorkflowError("no open sentence for span annotation")
        start, end = doc.sentence_char_span(pending.sentence_index)
        if not (start <= record.span_start and record.span_end <= end):
            if record.kind == ARGUMENT:
                raise WorkflowError("no event context")
            raise WorkflowError("span outside the open sentence")
        append_record(self.session, record, doc)
        if record.kind == ANCHOR:
            pending.anchor_ids.append(record.record_id)
        elif record.kind == ARGUMENT:
            pending.argument_ids.append(record.record_id)
        else:
            pending.interesting_ids.append(record.record_id)

    def _apply_skip(self, event: dict) -> None:
        if self.pending is not None:
            raise WorkflowError("previous sentence is still uncommitted")
        indicator = self.current_indicator()
        if indicator is None:
            raise WorkflowError("no indicator available")
        if event["reason"] not in SKIP_REASONS:
            raise WorkflowError(f"invalid skip reason {event['reason']!r}")
        self._docs.get(event["doc_id"])
        indicator.docs_annotated += 1
        self._last_consumed = indicator.priority
        self.skips.append(
            SkipEntry(event["doc_id"], event["sentence_index"], event["reason"], event["ts"])
        )
        self.session.events.append(event)

    def _apply_commit(self, event: dict) -> None:
        pending = self.pending
        if pending is None:
            raise WorkflowError("no open sentence to commit")
        if (
            pending.doc_id != event["doc_id"]
            or pending.sentence_index != event["sentence_index"]
        ):
            raise WorkflowError("commit does not match the open sentence")
        converted = event.get("converted")
        if converted is None:
            if pending.kind == EVENT_PRESENT and not pending.anchor_ids:
                raise WorkflowError("event sentence without anchors must convert to a skip")
        elif converted == SKIP_NO_ANCHOR:
            if pending.kind != EVENT_PRESENT or pending.anchor_ids:
                raise WorkflowError("NO_ANCHOR conversion requires an anchor-less event sentence")
            if event.get("supersedes") != pending.classification_id:
                raise WorkflowError("conversion must supersede the classification record")
            supersede(self.session, [pending.classification_id] + pending.dependent_ids())
            self.skips.append(
                SkipEntry(pending.doc_id, pending.sentence_index, SKIP_NO_ANCHOR, event["ts"])
            )
        else:
            raise WorkflowError(f"invalid conversion {converted!r}")
        self.pending = None
        self.session.events.append(event)

    # ---------------------------------------------------------------- helpers

    def _require_open(self) -> None:
        if self.done:
            raise WorkflowError("session is done")

    def _require_annotate(self) -> None:
        self._require_open()
        if not self.session.indicators:
            raise WorkflowError("brainstorm an indicator list first")

    def _find_indicator(self, priority: int) -> Indicator:
        for indicator in self.session.indicators:
            if indicator.priority == priority:
                return indicator
        raise WorkflowError(f"no indicator with priority {priority}")

    def _anchor_phrases(self) -> set[tuple[str, ...]]:
        phrases: set[tuple[str, ...]] = set()
        for record in self.session.effective_records():
            if record.kind != ANCHOR:
                continue
            doc = self._docs.get(record.doc_id)
            phrases.add(phrase_tokens(doc.text[record.span_start:record.span_end]))
        return phrases

    def _next_record_id(self) -> str:
        self._record_counter += 1
        candidate = f"r{self._record_counter}"
        while candidate in self.session.record_index:
            self._record_counter += 1
            candidate = f"r{self._record_counter}"
        return candidate

    def _now(self) -> float:
        base = self._clock() if self._clock is not None else self.session.last_timestamp
        return max(float(base), self.session.last_timestamp)

    def state_snapshot(self) -> dict:
        """JSON-able view of derived state; equal snapshots mean equal state."""
        current = self.current_indicator()
        return {
            "session_id": self.session.session_id,
            "teacher_id": self.session.teacher_id,
            "event_type": self.session.event_type,
            "phase": self.phase,
            "indicators": [
                {
                    "phrase": " ".join(ind.phrase),
                    "priority": ind.priority,
                    "origin": ind.origin,
                    "docs_annotated": ind.docs_annotated,
                    "abandoned": ind.abandoned,
                    "budget_extension": ind.budget_extension,
                    "exhausted": ind.exhausted(),
                }
                for ind in sorted(self.session.indicators, key=lambda i: i.priority)
            ],
            "current_indicator": current.to_view() if current else None,
            "docs_done_for_indicator": self.docs_done_for_indicator(),
            "pending": None
            if self.pending is None
            else {
                "doc_id": self.pending.doc_id,
                "sentence_index": self.pending.sentence_index,
                "kind": self.pending.kind,
                "anchors": len(self.pending.anchor_ids),
            },
            "records": [record.to_event() for record in self.session.records],
            "superseded": sorted(self.session.superseded),
            "skips": [
                {
                    "doc_id": entry.doc_id,
                    "sentence_index": entry.sentence_index,
                    "reason": entry.reason,
                    "ts": entry.timestamp,
                }
                for entry in self.skips
            ],
            "searches": len(self.session.searches),
            "elapsed_effective": self.effective_elapsed(),
            "done": self.done,
        }


def sentence_contains_phrase(
    doc: Document, sentence_index: int, phrase: tuple[str, ...]
) -> bool:
    tokens = doc.sentence_tokens(sentence_index, fold=True)
    width = len(phrase)
    if width == 0 or width > len(tokens):
        return False
    return any(
        tuple(tokens[i : i + width]) == phrase for i in range(len(tokens) - width + 1)
    )
