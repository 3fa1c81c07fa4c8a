"""Acceptance suite: one test per criterion, each printing a pass line.

Run with `pytest tests/test_acceptance.py -v` (add -s to see the pass lines
as they happen).
"""
import itertools
import math
import random
import time

import pytest
from fastapi.testclient import TestClient

from eventlab.analysis import (
    reading_time_estimate,
    combine_checkpoints,
    session_checkpoints,
    learning_curve,
    make_evaluator,
)
from eventlab.annotation import (
    ANCHOR,
    ARGUMENT,
    EVENT_PRESENT,
    AnnotationRecord,
    effective_duration,
    read_events,
)
from eventlab.corpus import Document, DocumentSet
from eventlab.learning import (
    LinearModel,
    TrainExample,
    objective_and_gradient,
    predict,
    train,
)
from eventlab.pipeline import ModelSuite, Ontology, detect_triggers, extract
from eventlab.projection import build_event_mentions
from eventlab.scoring import ScoreOptions, ScoreReport, Counts, error_reduction, neutralize, score
from eventlab.search import PhraseQuery, build_index, query_phrase
from eventlab.server import create_app
from eventlab.workflow import WorkflowEngine

from synth import (
    ARREST,
    ARREST_TRIGGERS,
    PROTEST,
    PROTEST_TRIGGERS,
    ManualClock,
    ScriptedTeacher,
    generate_corpus,
    gold_key,
)


def announce(name):
    print(f"ACCEPTANCE PASS: {name}")


# ---------------------------------------------------------------- scorer


def brute_force_counts(system, key):
    sys_set, key_set = set(system), set(key)
    tp = len([x for x in sys_set if x in key_set])
    fp = len([x for x in sys_set if x not in key_set])
    fn = len([x for x in key_set if x not in sys_set])
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return tp, fp, fn, p, r, f


def test_scorer_oracle_equivalence():
    started = time.monotonic()
    rng = random.Random(1234)
    pool = [
        ("d1", t, r, e, m)
        for t, r, e, m in itertools.product(
            ["a.a", "b.b"], ["Agent", "Place"], ["x", "y", "z"], ["ACTUAL", "GENERIC"]
        )
    ]
    for _ in range(100):
        system = rng.sample(pool, rng.randint(0, 6))
        key = rng.sample(pool, rng.randint(0, 6))
        report = score(system, key)
        tp, fp, fn, p, r, f = brute_force_counts(system, key)
        assert (report.overall.tp, report.overall.fp, report.overall.fn) == (tp, fp, fn)
        assert (report.overall.precision, report.overall.recall, report.overall.f1) == (p, r, f)
    worked_system = [("d", "t", "r", e, "m") for e in "ABC"]
    worked_key = [("d", "t", "r", e, "m") for e in "ABDE"]
    report = score(worked_system, worked_key)
    assert abs(report.overall.f1 - 4 / 7) <= 1e-9
    assert time.monotonic() - started < 1.0
    announce("scorer oracle equivalence (100 random instances + 4/7 case)")


def test_neutralization():
    started = time.monotonic()
    rows = {("d", "t", "r", "e", "ACTUAL"), ("d", "t", "r", "e", "GENERIC")}
    assert len(neutralize(rows, ScoreOptions(neutralize_realis=True))) == 1
    coref = {"the president": "c1", "obama": "c1"}
    rows = {("d", "t", "r", "the president", "A"), ("d", "t", "r", "obama", "A")}
    assert len(neutralize(rows, ScoreOptions(neutralize_coref=True, coref_map=coref))) == 1
    assert neutralize(rows, ScoreOptions()) == rows
    assert time.monotonic() - started < 1.0
    announce("neutralization collapses realis variants and coref clusters")


# --------------------------------------------------------------- learning


def test_gradient_check():
    started = time.monotonic()
    rng = random.Random(4321)
    step = 1e-5
    worst = 0.0
    for _ in range(20):
        names = [f"f{i}" for i in range(rng.randint(3, 9))]
        weights = {
            name: rng.uniform(-2, 2) for name in rng.sample(names, rng.randint(1, len(names)))
        }
        bias = rng.uniform(-1, 1)
        examples = [
            TrainExample(
                {n: rng.choice([0.5, 1.0, 2.0]) for n in rng.sample(names, rng.randint(1, len(names)))},
                rng.random() < 0.5,
            )
            for _ in range(rng.randint(2, 12))
        ]
        l2 = rng.choice([0.0, 0.1, 0.3])
        _, grad_w, grad_b = objective_and_gradient(examples, weights, bias, l2)
        probe = set(weights) | {n for e in examples for n in e.features}
        for name in probe:
            hi_w = dict(weights)
            lo_w = dict(weights)
            hi_w[name] = hi_w.get(name, 0.0) + step
            lo_w[name] = lo_w.get(name, 0.0) - step
            hi, _, _ = objective_and_gradient(examples, hi_w, bias, l2)
            lo, _, _ = objective_and_gradient(examples, lo_w, bias, l2)
            numeric = (hi - lo) / (2 * step)
            analytic = grad_w.get(name, 0.0)
            rel = abs(analytic - numeric) / max(abs(numeric), abs(analytic), 1e-8)
            worst = max(worst, rel)
        hi, _, _ = objective_and_gradient(examples, weights, bias + step, l2)
        lo, _, _ = objective_and_gradient(examples, weights, bias - step, l2)
        numeric_b = (hi - lo) / (2 * step)
        rel = abs(grad_b - numeric_b) / max(abs(numeric_b), abs(grad_b), 1e-8)
        worst = max(worst, rel)
    assert worst <= 1e-4
    assert time.monotonic() - started < 5.0
    announce(f"gradient check vs central differences (max rel err {worst:.2e})")


def test_separable_training_reaches_full_accuracy():
    started = time.monotonic()
    examples = [TrainExample({"x": 1.0}, True) for _ in range(12)]
    examples += [TrainExample({"y": 1.0, "z": 1.0}, False) for _ in range(12)]
    model = train(examples)  # default hyperparameters
    assert all((predict(model, e.features) >= 0.5) == e.label for e in examples)
    assert time.monotonic() - started < 5.0
    announce("separable toy set reaches 100% training accuracy at 0.5")


# ------------------------------------------------------------------ index


def test_index_oracle_equivalence_thousand_docs():
    started = time.monotonic()
    rng = random.Random(2024)
    vocab = ["riot", "march", "rally", "calm", "city", "crowd", "street", "by", "at"]
    docs = DocumentSet(
        Document.build(
            f"d{i:04d}", " ".join(rng.choice(vocab) for _ in range(rng.randint(5, 40)))
        )
        for i in range(1000)
    )
    index = build_index(docs)

    def naive(phrase):
        counts = {}
        for doc in docs:
            tokens = [doc.token_text(i, fold=True) for i in range(len(doc.tokens))]
            hits = sum(
                1
                for i in range(len(tokens) - len(phrase) + 1)
                if tuple(tokens[i : i + len(phrase)]) == phrase
            )
            if hits:
                counts[doc.doc_id] = hits
        return sorted(counts, key=lambda d: (-counts[d], d))

    for _ in range(50):
        phrase = tuple(rng.choice(vocab) for _ in range(rng.randint(1, 3)))
        assert query_phrase(index, PhraseQuery(phrase, 1000)) == naive(phrase)
    elapsed = time.monotonic() - started
    assert elapsed < 10.0
    announce(f"index oracle equivalence on 1000 docs, 50 queries ({elapsed:.2f}s)")


# ------------------------------------------------------------- projection


def test_projection_alignment_rules():
    started = time.monotonic()
    doc = Document.build("d1", "Crowds took to the streets. Quiet fell.")

    def rec(kind, start, end, role=None):
        return AnnotationRecord(
            record_id=f"{kind}:{start}",
            session_id="s",
            teacher_id="t",
            event_type="x.y",
            doc_id="d1",
            kind=kind,
            span_start=start,
            span_end=end,
            role=role,
            timestamp=0.0,
        )

    sentence_span = doc.sentence_char_span(0)
    aligned = [
        rec(EVENT_PRESENT, *sentence_span),
        rec(ANCHOR, 7, 11),
        rec(ARGUMENT, 0, 6, role="Agent"),
    ]
    result = build_event_mentions(doc, aligned)
    assert result.report.mentions_dropped == 0
    assert result.report.mentions_built == 1

    midtoken = [
        rec(EVENT_PRESENT, *sentence_span),
        rec(ANCHOR, 7, 11),
        rec(ARGUMENT, 1, 6, role="Agent"),  # starts inside "Crowds"
    ]
    result = build_event_mentions(doc, midtoken)
    assert result.mentions == []  # excluded from argument training
    assert len(result.trigger_mentions) == 1  # retained for trigger training
    report = result.report
    assert report.mentions_built + report.mentions_dropped == 1
    assert time.monotonic() - started < 1.0
    announce("projection drop rules and report identity")


# ------------------------------------------------------------------- time


def test_time_accounting():
    started = time.monotonic()
    assert effective_duration([0, 30, 400]) == 150.0
    assert effective_duration([0, 60, 180]) == 180.0
    rng = random.Random(77)
    for _ in range(200):
        stamps = sorted(rng.uniform(0, 5000) for _ in range(rng.randint(0, 30)))
        base = effective_duration(stamps)
        appended = stamps + [stamps[-1] + rng.uniform(0, 500)] if stamps else [0.0]
        assert effective_duration(appended) >= base
    assert time.monotonic() - started < 1.0
    announce("time accounting: clipping values and append monotonicity")


# --------------------------------------------------------------- workflow


VOCAB = ["alpha", "beta", "gamma", "delta", "omega"]
INDICATORS = ["alpha", "beta", "gamma"]


def _random_docs(rng, n_docs=6):
    docs = []
    for i in range(n_docs):
        sentences = []
        for _ in range(rng.randint(1, 3)):
            words = [rng.choice(VOCAB) for _ in range(rng.randint(2, 5))]
            words.insert(rng.randrange(len(words) + 1), rng.choice(INDICATORS))
            words[0] = words[0].capitalize()
            sentences.append(" ".join(words + ["."]))
        docs.append(Document.build(f"d{i}", " ".join(sentences)))
    return DocumentSet(docs)


class _Stepper:
    def __init__(self, rng):
        self.now = 0.0
        self.rng = rng

    def __call__(self):
        self.now += self.rng.uniform(0.5, 200.0)
        return self.now


def _scripted_random_session(seed):
    rng = random.Random(seed)
    docs = _random_docs(rng)
    events = []
    engine = WorkflowEngine(
        docs, f"s{seed}", "t", "x.y", sink=events.append, clock=_Stepper(rng)
    )
    engine.brainstorm(rng.sample(INDICATORS, rng.randint(1, 3)))
    promoted_done = False
    for _ in range(rng.randint(3, 25)):
        indicator = engine.current_indicator()
        if indicator is None:
            break
        _assert_invariants(engine)
        target = _findable_sentence(engine, docs, indicator)
        if target is None:
            engine.abandon_indicator()
            continue
        doc_id, sentence_index = target
        roll = rng.random()
        if roll < 0.2:
            engine.classify_sentence(
                doc_id, sentence_index, "skip",
                skip_reason=rng.choice(["MULTIPLE_INSTANCES", "UNCLEAR"]),
            )
        elif roll < 0.55:
            engine.classify_sentence(doc_id, sentence_index, "negative")
            if rng.random() < 0.3:
                doc = docs.get(doc_id)
                tok = doc.sentences[sentence_index].first_token
                span = doc.tokens[tok]
                engine.annotate_span(doc_id, "INTERESTING", span.start, span.end)
        else:
            engine.classify_sentence(doc_id, sentence_index, "event_present")
            doc = docs.get(doc_id)
            sent = doc.sentences[sentence_index]
            if rng.random() < 0.85:
                tok = rng.randrange(sent.first_token, sent.last_token)
                span = doc.tokens[tok]
                engine.annotate_span(doc_id, "ANCHOR", span.start, span.end)
                if rng.random() < 0.4:
                    anchor_text = doc.text[span.start:span.end]
                    before = len(engine.session.indicators)
                    engine.promote_anchor(anchor_text)
                    promoted_done = promoted_done or len(engine.session.indicators) > before
                if rng.random() < 0.6:
                    tok2 = rng.randrange(sent.first_token, sent.last_token)
                    span2 = doc.tokens[tok2]
                    engine.annotate_span(
                        doc_id, "ARGUMENT", span2.start, span2.end, role="Agent"
                    )
            engine.commit_sentence()
        if rng.random() < 0.1 and engine._last_consumed is not None:
            engine.override_budget(extra_docs=rng.randint(1, 2))
        _assert_invariants(engine)
    if not engine.done:
        engine.mark_done()
    return docs, events, engine


def _findable_sentence(engine, docs, indicator):
    from eventlab.workflow import sentence_contains_phrase

    for doc in docs:
        for idx in range(len(doc.sentences)):
            if engine.session.classification_of(doc.doc_id, idx) is not None:
                continue
            if sentence_contains_phrase(doc, idx, indicator.phrase):
                return doc.doc_id, idx
    return None


def _assert_invariants(engine):
    live = [i for i in engine.session.indicators if not i.exhausted()]
    current = engine.current_indicator()
    if live:
        assert current is not None
        assert current.priority == min(i.priority for i in live)
    promoted = [i.priority for i in engine.session.indicators if i.origin == "promoted"]
    brainstormed = [i.priority for i in engine.session.indicators if i.origin == "brainstormed"]
    if promoted and brainstormed:
        assert max(promoted) < min(brainstormed)


def test_workflow_replay_hundred_sessions():
    started = time.monotonic()
    for seed in range(100):
        docs, events, engine = _scripted_random_session(seed)
        replayed = WorkflowEngine.replay(docs, events)
        assert replayed.state_snapshot() == engine.state_snapshot()
        _assert_invariants(replayed)
        # a document visit consumes exactly one unit of exactly one budget
        decisions = sum(
            1
            for e in events
            if e["event"] == "skip"
            or (e["event"] == "annotation" and e["kind"] in ("EVENT_PRESENT", "NEGATIVE"))
        )
        assert decisions == sum(i.docs_annotated for i in replayed.session.indicators)
    elapsed = time.monotonic() - started
    assert elapsed < 10.0
    announce(f"workflow replay determinism over 100 scripted sessions ({elapsed:.2f}s)")


# -------------------------------------------------------------- threshold


def test_threshold_semantics_and_monotonicity():
    started = time.monotonic()
    doc = Document.build("d", "Workers marched in Cairo .")

    def const_model(p):
        return LinearModel({}, math.log(p / (1 - p)), "trigger:x.y")

    assert len(detect_triggers(doc, {"x.y": const_model(0.10)}, 0.10)) == len(doc.tokens)
    assert detect_triggers(doc, {"x.y": const_model(0.0999)}, 0.10) == []

    rng = random.Random(555)
    vocab = ["marched", "rallied", "cairo", "workers", "waited", "in"]
    ontology = Ontology(roles={"x.y": ("Agent",)})
    for _ in range(50):
        words = [rng.choice(vocab) for _ in range(rng.randint(4, 10))]
        words[0] = words[0].capitalize()
        rand_doc = Document.build("r", " ".join(words + ["."]))
        suite = ModelSuite(
            trigger={
                "x.y": LinearModel(
                    {f"w0={w}": rng.uniform(-3, 3) for w in vocab}, rng.uniform(-2, 0), "trigger:x.y"
                )
            },
            argument=LinearModel(
                {f"role=Agent|head={w}": rng.uniform(-3, 3) for w in vocab},
                rng.uniform(-2, 0),
                "argument",
            ),
        )
        lo = extract(rand_doc, suite, ontology, threshold=0.10)
        hi = extract(rand_doc, suite, ontology, threshold=rng.uniform(0.11, 0.9))
        assert hi <= lo
    assert time.monotonic() - started < 5.0
    announce("threshold inclusivity at 0.10 and monotonicity on 50 random pairs")


# ------------------------------------------------------------- cost model


def test_cost_model():
    assert reading_time_estimate(1500) == 1.0
    assert reading_time_estimate(500) * 60.0 == pytest.approx(20.0, abs=1e-12)
    announce("cost model: 1500 words = 1 hour, 500-word doc = 20 minutes")


def test_error_reduction_reporting():
    base = ScoreReport(overall=Counts(tp=1, fp=1, fn=1))      # P=R=F=0.50
    improved = ScoreReport(overall=Counts(tp=53, fp=47, fn=47))  # 0.53
    reduction = error_reduction(base, improved)
    assert abs(reduction.f1 - 0.06) <= 1e-9
    announce("error-reduction arithmetic (0.50 -> 0.53 is 6%)")


# ------------------------------------------------------------- end to end


def test_end_to_end_synthetic_fixture(tmp_path):
    started = time.monotonic()
    train_docs, train_gold = generate_corpus(seed=11, n_docs=160, prefix="t")
    eval_docs, eval_gold = generate_corpus(seed=23, n_docs=40, prefix="e")
    key = gold_key(eval_docs, eval_gold)
    assert len(key) > 50

    log_dir = tmp_path / "logs"
    clock = ManualClock()
    app = create_app(docs=train_docs, log_dir=log_dir, clock=clock)
    rng = random.Random(5)
    with TestClient(app) as client:
        teacher = ScriptedTeacher(client, clock, rng, train_gold, train_docs)
        sid_protest = teacher.run_session("t1", PROTEST, list(PROTEST_TRIGGERS))
        sid_arrest = teacher.run_session("t1", ARREST, list(ARREST_TRIGGERS))
        protest_state = client.get(f"/session/{sid_protest}/state").json()
        assert any(i["origin"] == "promoted" for i in protest_state["indicators"])
        assert protest_state["done"] is True

    # the durable logs are the source of truth for the curve
    engines = [
        WorkflowEngine.replay(train_docs, read_events(log_dir / f"{sid}.log"))
        for sid in (sid_protest, sid_arrest)
    ]
    chains = [session_checkpoints(engine.session, 5.0) for engine in engines]
    checkpoints = combine_checkpoints(chains)
    assert len(checkpoints) >= 3

    ontology = Ontology(roles={PROTEST: ("Agent", "Place"), ARREST: ("Person", "Place")})
    evaluate = make_evaluator(train_docs, eval_docs, key, ontology)
    result = learning_curve(checkpoints, evaluate)

    first, last = result.points[0], result.points[-1]
    assert last.f1 >= 0.6, f"final F1 {last.f1:.4f} below 0.6"
    assert last.f1 > first.f1, f"no improvement: {first.f1:.4f} -> {last.f1:.4f}"
    elapsed = time.monotonic() - started
    assert elapsed < 300.0
    announce(
        f"end-to-end fixture: F1 {first.f1:.3f} -> {last.f1:.3f} over "
        f"{len(checkpoints)} checkpoints in {elapsed:.0f}s"
    )
