import pytest

from eventlab.analysis import (
    AnalysisError,
    Checkpoint,
    CostModel,
    CurvePoint,
    CurveResult,
    corpus_prefix,
    reading_time_estimate,
    combine_checkpoints,
    session_checkpoints,
    format_per_event_table,
    learning_curve,
    per_event_table,
    read_curves,
    write_curves,
)
from eventlab.annotation import NEGATIVE, AnnotationRecord, Session
from eventlab.scoring import Counts, ScoreReport
from eventlab.analysis import EvalOutcome


def test_cost_model_rate():
    assert reading_time_estimate(1500) == 1.0
    assert reading_time_estimate(0) == 0.0
    assert reading_time_estimate(500) * 60 == pytest.approx(20.0)


def test_cost_model_validation():
    with pytest.raises(AnalysisError):
        CostModel(words_per_hour=0)
    with pytest.raises(AnalysisError):
        reading_time_estimate(-1)


def test_corpus_prefix():
    docs = list(range(10))
    assert corpus_prefix(docs, 0.0) == []
    assert corpus_prefix(docs, 1.0) == docs
    assert corpus_prefix(docs, 0.25) == [0, 1, 2]
    assert corpus_prefix(docs, 0.2) == [0, 1]
    with pytest.raises(AnalysisError):
        corpus_prefix(docs, 1.5)


def _session_with_events(times, record_times=()):
    """Session whose events sit at the given timestamps; some are records."""
    session = Session(session_id="s1", teacher_id="t", event_type="x.y")
    session.events.append({"event": "session", "ts": times[0] if times else 0.0})
    counter = 0
    for ts in times[1:]:
        if ts in record_times:
            record = AnnotationRecord(
                record_id=f"r{counter}",
                session_id="s1",
                teacher_id="t",
                event_type="x.y",
                doc_id=f"d{counter}",
                kind=NEGATIVE,
                span_start=0,
                span_end=5,
                role=None,
                timestamp=ts,
            )
            counter += 1
            session.records.append(record)
            session.record_index[record.record_id] = record
            session.events.append(record.to_event())
        else:
            session.events.append({"event": "search", "phrase": "x", "limit": 5, "ts": ts})
    return session


def test_checkpoints_empty_session():
    session = _session_with_events([0.0])
    points = session_checkpoints(session, 10.0)
    assert len(points) == 1
    assert points[0].records == []
    assert points[0].minutes == 0.0


def test_checkpoints_thirty_minutes_interval_ten():
    # 100-second gaps so nothing is clipped: 18 gaps -> 1800 s = 30 min
    times = [i * 100.0 for i in range(19)]
    session = _session_with_events(times, record_times=set(times))
    points = session_checkpoints(session, 10.0)
    assert [round(p.minutes, 3) for p in points] == [10.0, 20.0, 30.0, 30.0]
    assert len(points) == 4
    assert len(points[-1].records) == len(session.records)


def test_checkpoint_boundary_inclusive():
    times = [0.0, 60.0, 120.0]
    session = _session_with_events(times, record_times={120.0})
    points = session_checkpoints(session, 2.0)
    # the record sits exactly at the 2-minute boundary -> included in k=1
    assert len(points[0].records) == 1


def test_checkpoints_raw_time_keeps_breaks():
    # a 10-minute break: clipped to 2 minutes effectively, kept raw
    times = [0.0, 600.0]
    session = _session_with_events(times, record_times={600.0})
    clipped = session_checkpoints(session, 1.0)
    raw = session_checkpoints(session, 1.0, raw_time=True)
    assert clipped[-1].minutes == pytest.approx(2.0)
    assert raw[-1].minutes == pytest.approx(10.0)


def test_checkpoint_prefix_monotone():
    times = [i * 50.0 for i in range(40)]
    session = _session_with_events(times, record_times=set(times[::3]))
    points = session_checkpoints(session, 5.0)
    for earlier, later in zip(points, points[1:]):
        ids_earlier = [r.record_id for r in earlier.records]
        ids_later = [r.record_id for r in later.records]
        assert ids_later[: len(ids_earlier)] == ids_earlier


def test_combine_checkpoints_means_minutes():
    a = [Checkpoint(10.0, []), Checkpoint(20.0, [])]
    b = [Checkpoint(10.0, []), Checkpoint(20.0, []), Checkpoint(25.0, [])]
    combined = combine_checkpoints([a, b])
    assert [c.minutes for c in combined] == [10.0, 20.0, 22.5]


def test_learning_curve_series_and_skips():
    reports = []
    for f1_target in (0.0, 0.5):
        report = ScoreReport()
        report.overall = Counts(tp=1, fp=1, fn=1) if f1_target else Counts(0, 0, 1)
        report.per_type["x.y"] = report.overall
        reports.append(report)
    outcomes = [EvalOutcome(reports[0], ["trigger:x.y"]), EvalOutcome(reports[1], [])]

    def evaluate(records):
        return outcomes.pop(0)

    points = learning_curve(
        [Checkpoint(10.0, []), Checkpoint(20.0, [])], evaluate
    )
    assert [p.minutes for p in points.points] == [10.0, 20.0]
    assert points.points[0].f1 == 0.0
    assert points.points[1].f1 == 0.5
    assert points.per_type["x.y"][1].f1 == 0.5
    assert points.skipped == ["10.000:trigger:x.y"]


def test_curve_file_round_trip_and_determinism(tmp_path):
    result = CurveResult(
        points=[CurvePoint(10.0, 0.5, 0.25, 1 / 3)],
        per_type={"x.y": [CurvePoint(10.0, 0.5, 0.25, 1 / 3)]},
    )
    path = tmp_path / "curve.tsv"
    write_curves(path, result)
    first = path.read_bytes()
    write_curves(path, result)
    assert path.read_bytes() == first
    series = read_curves(path)
    assert set(series) == {"overall", "x.y"}
    assert series["overall"][0].minutes == 10.0


def test_per_event_table_rows():
    rows = per_event_table(
        curves={"a.a": [CurvePoint(1, 0, 0, 0)]},
        train_counts={"a.a": 12},
        eval_counts={"a.a": 7, "b.b": 3},
    )
    by_type = {row.event_type: row for row in rows}
    assert by_type["a.a"].label == "12 → 7"
    assert by_type["b.b"].label == "0 → 3"  # zero-count rows retained
    table = format_per_event_table(rows)
    assert "12 → 7" in table


def test_full_checkpoint_equals_direct_pipeline_run():
    # the last checkpoint must score identically to a non-curve run on the
    # same records: the checkpoint machinery adds nothing and loses nothing
    from eventlab.corpus import Document, DocumentSet
    from eventlab.learning import build_training_sets, train_suite
    from eventlab.pipeline import Ontology, as_scoring_tuples, extract
    from eventlab.projection import project_records
    from eventlab.scoring import ScoreOptions, score
    from eventlab.workflow import WorkflowEngine
    from eventlab.analysis import make_evaluator, session_checkpoints

    docs = DocumentSet(
        [
            Document.build("d1", "Troops marched in Paris. Crowds cheered."),
            Document.build("d2", "Workers marched at dawn. Nothing happened."),
        ]
    )

    class Step:
        def __init__(self):
            self.now = 0.0

        def __call__(self):
            self.now += 30.0
            return self.now

    engine = WorkflowEngine(docs, "s1", "t", "unrest.protest", clock=Step())
    engine.brainstorm(["marched"])
    engine.classify_sentence("d1", 0, "event_present")
    engine.annotate_span("d1", "ANCHOR", 7, 14)
    engine.annotate_span("d1", "ARGUMENT", 0, 6, role="Agent")
    engine.commit_sentence()
    engine.classify_sentence("d2", 0, "negative")
    engine.mark_done()

    key = [("d1", "unrest.protest", "Agent", "troops", "ACTUAL")]
    ontology = Ontology(roles={"unrest.protest": ("Agent",)})
    hyper = dict(l2_lambda=0.001, learning_rate=1.0, epochs=300)

    evaluate = make_evaluator(docs, docs, key, ontology, **hyper)
    checkpoints = session_checkpoints(engine.session, 1.0)
    curve_report = evaluate(checkpoints[-1].records).report

    projected = project_records(engine.session.effective_records(), docs)
    sets = build_training_sets(
        projected.trigger_mentions,
        projected.negatives,
        docs,
        argument_mentions=projected.mentions,
        role_inventory=ontology.roles,
    )
    suite = train_suite(sets, **hyper)
    system = []
    for doc in docs:
        system.extend(as_scoring_tuples(doc.doc_id, extract(doc, suite, ontology)))
    direct_report = score(system, key, ScoreOptions(neutralize_realis=True))

    assert curve_report.overall == direct_report.overall
    assert curve_report.per_type == direct_report.per_type
