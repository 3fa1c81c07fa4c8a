"""HTTP service for the annotation workbench.

Event-sourced: each session owns an append-only log file under the
configured log directory; every state change is exactly one appended
record, applied before it is acknowledged. Restarting the service replays
those logs and continues where it stopped. Timestamps are assigned by the
server clock at receipt, relative to session start, so client clock skew
cannot reorder a log.
"""
from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from fastapi import Body, FastAPI, HTTPException

from .annotation import AnnotationError, dump_event, read_events, session_stats
from .corpus import CorpusError, DocumentSet, load_corpus
from .search import PhraseQuery, SearchError, build_index, query_phrase
from .workflow import WorkflowEngine, WorkflowError

DECISION_VERBS = frozenset(
    {"event_present", "negative", "skip", "commit", "done", "override", "abandon"}
)


@dataclass
class AppConfig:
    corpus_path: str
    log_dir: str
    host: str = "127.0.0.1"
    port: int = 8100
    search_limit: int = 20
    fsync: bool = True


def load_config(path: str | Path) -> AppConfig:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if "corpus_path" not in raw or "log_dir" not in raw:
        raise ValueError("config needs corpus_path and log_dir")
    return AppConfig(
        corpus_path=raw["corpus_path"],
        log_dir=raw["log_dir"],
        host=raw.get("host", "127.0.0.1"),
        port=int(raw.get("port", 8100)),
        search_limit=int(raw.get("search_limit", 20)),
        fsync=bool(raw.get("fsync", True)),
    )


class _SessionHandle:
    """One engine, its durable log file, and a write lock."""

    def __init__(self, engine: WorkflowEngine, path: Path, started_monotonic: float):
        self.engine = engine
        self.path = path
        self.lock = threading.Lock()
        self.started_monotonic = started_monotonic


class Workbench:
    """All mutable service state; the FastAPI app delegates here."""

    def __init__(self, docs: DocumentSet, log_dir: Path, clock: Callable[[], float] | None = None, fsync: bool = True):
        self.docs = docs
        self.index = build_index(docs)
        self.log_dir = log_dir
        self.clock = clock or time.monotonic
        self.fsync = fsync
        self.sessions: dict[str, _SessionHandle] = {}
        self._create_lock = threading.Lock()
        self._counter = 0
        log_dir.mkdir(parents=True, exist_ok=True)
        self._recover()

    def _recover(self) -> None:
        for path in sorted(self.log_dir.glob("*.log")):
            events = read_events(path)
            if not events:
                continue
            engine = WorkflowEngine.replay(self.docs, events)
            handle = _SessionHandle(engine, path, self.clock())
            # resume the relative clock where the log stopped
            handle.started_monotonic = self.clock() - engine.session.last_timestamp
            engine.resume(clock=self._relative_clock(handle), sink=self._appender(handle))
            self.sessions[engine.session.session_id] = handle
            self._counter = max(self._counter, _session_number(engine.session.session_id))

    def _relative_clock(self, handle: _SessionHandle) -> Callable[[], float]:
        return lambda: self.clock() - handle.started_monotonic

    def _appender(self, handle: _SessionHandle) -> Callable[[dict], None]:
        def append(event: dict) -> None:
            with open(handle.path, "a", encoding="utf-8") as fh:
                fh.write(dump_event(event) + "\n")
                fh.flush()
                if self.fsync:
                    os.fsync(fh.fileno())

        return append

    def create_session(self, teacher_id: str, event_type: str) -> WorkflowEngine:
        with self._create_lock:
            self._counter += 1
            session_id = f"s{self._counter}"
        path = self.log_dir / f"{session_id}.log"
        handle = _SessionHandle.__new__(_SessionHandle)
        handle.path = path
        handle.lock = threading.Lock()
        handle.started_monotonic = self.clock()
        engine = WorkflowEngine(
            self.docs,
            session_id=session_id,
            teacher_id=teacher_id,
            event_type=event_type,
            sink=self._appender(handle),
            clock=self._relative_clock(handle),
        )
        handle.engine = engine
        self.sessions[session_id] = handle
        return engine

    def handle(self, session_id: str) -> _SessionHandle:
        handle = self.sessions.get(session_id)
        if handle is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return handle


def _session_number(session_id: str) -> int:
    return int(session_id[1:]) if session_id[1:].isdigit() else 0


def create_app(
    config: AppConfig | None = None,
    docs: DocumentSet | None = None,
    log_dir: str | Path | None = None,
    clock: Callable[[], float] | None = None,
) -> FastAPI:
    """Build the service. Pass a config, or docs and log_dir directly."""
    if config is not None:
        docs = load_corpus(config.corpus_path)
        log_dir = Path(config.log_dir)
        fsync = config.fsync
        search_limit = config.search_limit
    else:
        if docs is None or log_dir is None:
            raise ValueError("create_app needs a config or docs + log_dir")
        fsync = False
        search_limit = 20
    bench = Workbench(docs, Path(log_dir), clock=clock, fsync=fsync)
    app = FastAPI(title="eventlab", version="0.1.0")
    app.state.workbench = bench

    def fail(exc: Exception, status: int = 422) -> HTTPException:
        return HTTPException(status_code=status, detail=str(exc))

    @app.post("/session")
    def create_session(payload: dict = Body(...)):
        teacher_id = payload.get("teacher_id")
        event_type = payload.get("event_type")
        if not teacher_id or not event_type:
            raise fail(ValueError("teacher_id and event_type are required"))
        engine = bench.create_session(teacher_id, event_type)
        return {
            "session_id": engine.session.session_id,
            "teacher_id": teacher_id,
            "event_type": event_type,
            "phase": engine.phase,
        }

    @app.post("/session/{session_id}/brainstorm")
    def brainstorm(session_id: str, payload: dict = Body(...)):
        handle = bench.handle(session_id)
        phrases = payload.get("phrases")
        if not isinstance(phrases, list):
            raise fail(ValueError("phrases must be a list"))
        with handle.lock:
            if _replay_guard(handle, payload.get("request_id")):
                return {"status": "duplicate"}
            try:
                indicators = handle.engine.brainstorm(phrases)
            except (WorkflowError, AnnotationError, SearchError) as exc:
                raise fail(exc)
            _note_request(handle, payload.get("request_id"))
        return {"indicators": [ind.to_view() for ind in indicators]}

    @app.get("/session/{session_id}/next-indicator")
    def next_indicator(session_id: str):
        handle = bench.handle(session_id)
        try:
            indicator = handle.engine.next_indicator()
        except WorkflowError as exc:
            raise fail(exc)
        return {"indicator": indicator.to_view() if indicator else None}

    @app.get("/search")
    def search(q: str, limit: int | None = None, session_id: str | None = None):
        try:
            query = PhraseQuery.from_text(q, limit or search_limit)
        except SearchError as exc:
            raise fail(exc)
        if session_id is not None:
            handle = bench.handle(session_id)
            with handle.lock:
                try:
                    handle.engine.record_search(q, query.limit)
                except WorkflowError as exc:
                    raise fail(exc)
        return {"doc_ids": query_phrase(bench.index, query)}

    @app.get("/doc/{doc_id}")
    def get_doc(doc_id: str):
        try:
            doc = bench.docs.get(doc_id)
        except CorpusError as exc:
            raise fail(exc, status=404)
        return {
            "doc_id": doc.doc_id,
            "text": doc.text,
            "source": doc.source,
            "tokens": [[t.start, t.end] for t in doc.tokens],
            "sentences": [[s.first_token, s.last_token] for s in doc.sentences],
        }

    @app.post("/annotation")
    def post_annotation(payload: dict = Body(...)):
        session_id = payload.get("session_id")
        if not session_id:
            raise fail(ValueError("session_id is required"))
        handle = bench.handle(session_id)
        record_id = payload.get("record_id")
        with handle.lock:
            if record_id and handle.engine.session.has_record(record_id):
                record = handle.engine.session.record_index[record_id]
                return {"status": "duplicate", "record": record.to_event()}
            try:
                record = handle.engine.annotate_span(
                    doc_id=payload["doc_id"],
                    kind=payload["kind"],
                    span_start=int(payload["span_start"]),
                    span_end=int(payload["span_end"]),
                    role=payload.get("role"),
                    record_id=record_id,
                )
            except KeyError as exc:
                raise fail(ValueError(f"missing field {exc.args[0]!r}"))
            except (WorkflowError, AnnotationError, CorpusError) as exc:
                raise fail(exc)
        return {"status": "ok", "record": record.to_event()}

    @app.post("/session/{session_id}/decision")
    def decision(session_id: str, payload: dict = Body(...)):
        handle = bench.handle(session_id)
        verb = payload.get("decision")
        if verb not in DECISION_VERBS:
            raise fail(ValueError(f"decision must be one of {sorted(DECISION_VERBS)}"))
        with handle.lock:
            if _replay_guard(handle, payload.get("request_id")):
                return {"status": "duplicate"}
            engine = handle.engine
            record_id = payload.get("record_id")
            if record_id and engine.session.has_record(record_id):
                record = engine.session.record_index[record_id]
                return {"status": "duplicate", "record": record.to_event()}
            try:
                if verb == "commit":
                    converted = engine.commit_sentence()
                    _note_request(handle, payload.get("request_id"))
                    return {
                        "status": "ok",
                        "converted": None if converted is None else converted.reason,
                    }
                if verb == "done":
                    engine.mark_done()
                    _note_request(handle, payload.get("request_id"))
                    return {"status": "ok", "phase": engine.phase}
                if verb == "override":
                    engine.override_budget(int(payload.get("extra_docs", 1)))
                    _note_request(handle, payload.get("request_id"))
                    return {"status": "ok"}
                if verb == "abandon":
                    engine.abandon_indicator()
                    _note_request(handle, payload.get("request_id"))
                    return {"status": "ok"}
                record = engine.classify_sentence(
                    doc_id=payload["doc_id"],
                    sentence_index=int(payload["sentence_index"]),
                    decision=verb,
                    skip_reason=payload.get("skip_reason"),
                    record_id=payload.get("record_id"),
                )
            except KeyError as exc:
                raise fail(ValueError(f"missing field {exc.args[0]!r}"))
            except (WorkflowError, AnnotationError, CorpusError) as exc:
                raise fail(exc)
            _note_request(handle, payload.get("request_id"))
        return {"status": "ok", "record": record.to_event() if record else None}

    @app.post("/session/{session_id}/promote")
    def promote(session_id: str, payload: dict = Body(...)):
        handle = bench.handle(session_id)
        phrase = payload.get("phrase")
        if not phrase:
            raise fail(ValueError("phrase is required"))
        with handle.lock:
            if _replay_guard(handle, payload.get("request_id")):
                return {"status": "duplicate"}
            try:
                indicator = handle.engine.promote_anchor(phrase)
            except (WorkflowError, AnnotationError) as exc:
                raise fail(exc)
            _note_request(handle, payload.get("request_id"))
        if indicator is None:
            return {"status": "noop", "indicator": None}
        return {"status": "ok", "indicator": indicator.to_view()}

    @app.get("/session/{session_id}/state")
    def state(session_id: str):
        handle = bench.handle(session_id)
        snapshot = handle.engine.state_snapshot()
        snapshot["should_stop"] = handle.engine.should_stop()
        return snapshot

    @app.get("/session/{session_id}/stats")
    def stats(session_id: str):
        handle = bench.handle(session_id)
        try:
            result = session_stats(handle.engine.session, bench.docs)
        except (AnnotationError, CorpusError) as exc:
            raise fail(exc)
        return {
            "words_read": result.words_read,
            "docs_opened": result.docs_opened,
            "searches": result.searches,
        }

    return app


def _replay_guard(handle: _SessionHandle, request_id: str | None) -> bool:
    return bool(request_id) and request_id in handle.engine.seen_request_ids


def _note_request(handle: _SessionHandle, request_id: str | None) -> None:
    if request_id:
        handle.engine.seen_request_ids.add(request_id)


def serve(config: AppConfig) -> None:
    """Run the service until interrupted. Startup failures raise immediately."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
