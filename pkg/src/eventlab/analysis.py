"""Measurement machinery: annotation-time learning curves and cost baselines.

Checkpoints slice a session's record stream by cumulative effective time
(break-clipped, matching the session timer), so curve points answer "what
did N minutes of teaching buy". Each checkpoint is evaluated end to end:
project, train, extract over a held-out corpus, score against its key.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .annotation import BREAK_THRESHOLD_SECONDS, AnnotationRecord, Session
from .corpus import DocumentSet
from .learning import build_training_sets, train_suite
from .pipeline import Ontology, as_scoring_tuples, extract
from .projection import project_records
from .scoring import ScoreOptions, ScoreReport, Tuple5, score


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class CurvePoint:
    minutes: float
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class CostModel:
    words_per_hour: float = 1500.0

    def __post_init__(self) -> None:
        if self.words_per_hour <= 0:
            raise AnalysisError("words_per_hour must be positive")


def reading_time_estimate(word_count: int, cost_model: CostModel = CostModel()) -> float:
    """Hours of traditional annotation a word count stands for."""
    if word_count < 0:
        raise AnalysisError("word_count must be >= 0")
    return word_count / cost_model.words_per_hour


def corpus_prefix(documents: Sequence, fraction: float) -> list:
    """First ceil(fraction * N) documents in corpus order."""
    if not 0.0 <= fraction <= 1.0:
        raise AnalysisError("fraction must be in [0, 1]")
    exact = fraction * len(documents)
    count = int(exact)
    if count < exact:  # ceiling, so any nonzero fraction keeps at least one doc
        count += 1
    return list(documents)[:count]


@dataclass
class Checkpoint:
    minutes: float
    records: list[AnnotationRecord] = field(default_factory=list)


def session_checkpoints(
    session: Session,
    interval_minutes: float,
    break_threshold: float = BREAK_THRESHOLD_SECONDS,
    raw_time: bool = False,
) -> list[Checkpoint]:
    """Record prefixes at each interval boundary, plus the full session last.

    A record sits in checkpoint k when its cumulative effective time is
    <= k * interval (inclusive). Superseded records never appear. With
    raw_time the clock is wall time since session start, breaks included,
    for comparison curves.
    """
    if interval_minutes <= 0:
        raise AnalysisError("interval_minutes must be positive")
    effective_at: dict[int, float] = {}
    total = 0.0
    prev_ts: float | None = None
    for position, event in enumerate(session.events):
        ts = event["ts"]
        if prev_ts is not None:
            gap = ts - prev_ts
            total += gap if raw_time else min(gap, break_threshold)
        prev_ts = ts
        effective_at[position] = total

    live = {record.record_id for record in session.effective_records()}
    record_times: list[tuple[AnnotationRecord, float]] = []
    cursor = 0
    for position, event in enumerate(session.events):
        if event.get("event") != "annotation":
            continue
        record = session.records[cursor]
        cursor += 1
        if record.record_id in live:
            record_times.append((record, effective_at[position]))

    checkpoints: list[Checkpoint] = []
    interval_seconds = interval_minutes * 60.0
    k = 1
    while k * interval_seconds <= total:
        bound = k * interval_seconds
        checkpoints.append(
            Checkpoint(
                minutes=k * interval_minutes,
                records=[record for record, t in record_times if t <= bound],
            )
        )
        k += 1
    checkpoints.append(
        Checkpoint(minutes=total / 60.0, records=[record for record, _ in record_times])
    )
    return checkpoints


def combine_checkpoints(per_session: Sequence[list[Checkpoint]]) -> list[Checkpoint]:
    """Align checkpoints across sessions; minutes become the per-session mean.

    Sessions shorter than the longest contribute their final prefix to the
    later combined checkpoints.
    """
    if not per_session:
        return []
    depth = max(len(chain) for chain in per_session)
    combined: list[Checkpoint] = []
    for level in range(depth):
        minutes = 0.0
        records: list[AnnotationRecord] = []
        for chain in per_session:
            checkpoint = chain[min(level, len(chain) - 1)]
            minutes += checkpoint.minutes
            records.extend(checkpoint.records)
        combined.append(Checkpoint(minutes=minutes / len(per_session), records=records))
    return combined


@dataclass
class EvalOutcome:
    report: ScoreReport
    skipped_models: list[str] = field(default_factory=list)


@dataclass
class CurveResult:
    points: list[CurvePoint] = field(default_factory=list)
    per_type: dict[str, list[CurvePoint]] = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)  # "<minutes>:<model>" entries


# curve-training defaults: the per-checkpoint data is small, so the fit must
# be driven much harder than train()'s conservative signature defaults or
# every probability hovers near the base rate and the 10% gate passes junk
CURVE_L2 = 0.0005
CURVE_LEARNING_RATE = 2.0
CURVE_EPOCHS = 2000
CURVE_TOLERANCE = 1e-10


def make_evaluator(
    train_docs: DocumentSet,
    eval_docs: DocumentSet,
    key_tuples: Sequence[Tuple5],
    ontology: Ontology,
    threshold: float = 0.10,
    options: ScoreOptions = ScoreOptions(neutralize_realis=True),
    l2_lambda: float = CURVE_L2,
    learning_rate: float = CURVE_LEARNING_RATE,
    epochs: int = CURVE_EPOCHS,
    tolerance: float = CURVE_TOLERANCE,
    entity_spans: Mapping[str, Sequence[tuple[int, int]]] | None = None,
) -> Callable[[Sequence[AnnotationRecord]], EvalOutcome]:
    """Project -> train -> extract -> score closure for learning_curve."""

    def evaluate(records: Sequence[AnnotationRecord]) -> EvalOutcome:
        projected = project_records(records, train_docs)
        sets = build_training_sets(
            projected.trigger_mentions,
            projected.negatives,
            train_docs,
            argument_mentions=projected.mentions,
            role_inventory=ontology.roles,
            entity_spans=entity_spans,
        )
        suite = train_suite(
            sets,
            l2_lambda=l2_lambda,
            learning_rate=learning_rate,
            epochs=epochs,
            tolerance=tolerance,
        )
        system: list[Tuple5] = []
        for doc in eval_docs:
            tuples = extract(
                doc, suite, ontology, threshold=threshold, entity_spans=entity_spans
            )
            system.extend(as_scoring_tuples(doc.doc_id, tuples))
        return EvalOutcome(report=score(system, key_tuples, options), skipped_models=suite.skipped)

    return evaluate


def learning_curve(
    checkpoints: Sequence[Checkpoint],
    evaluate: Callable[[Sequence[AnnotationRecord]], EvalOutcome],
) -> CurveResult:
    """One scored point per checkpoint, aggregate and per event type."""
    result = CurveResult()
    for checkpoint in checkpoints:
        outcome = evaluate(checkpoint.records)
        overall = outcome.report.overall
        result.points.append(
            CurvePoint(checkpoint.minutes, overall.precision, overall.recall, overall.f1)
        )
        for event_type, counts in sorted(outcome.report.per_type.items()):
            result.per_type.setdefault(event_type, []).append(
                CurvePoint(checkpoint.minutes, counts.precision, counts.recall, counts.f1)
            )
        for name in outcome.skipped_models:
            result.skipped.append(f"{checkpoint.minutes:.3f}:{name}")
    return result


def write_curves(path: str | Path, result: CurveResult) -> None:
    """Line-delimited series: series, minutes, precision, recall, f1."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("series\tminutes\tprecision\trecall\tf1\n")
        for point in result.points:
            fh.write(_curve_line("overall", point))
        for event_type in sorted(result.per_type):
            for point in result.per_type[event_type]:
                fh.write(_curve_line(event_type, point))


def _curve_line(series: str, point: CurvePoint) -> str:
    return (
        f"{series}\t{point.minutes:.3f}\t{point.precision:.6f}"
        f"\t{point.recall:.6f}\t{point.f1:.6f}\n"
    )


def read_curves(path: str | Path) -> dict[str, list[CurvePoint]]:
    series: dict[str, list[CurvePoint]] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("series\t"):
            raise AnalysisError(f"{path}: not a curve file")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            name, minutes, precision, recall, f1 = line.split("\t")
            series.setdefault(name, []).append(
                CurvePoint(float(minutes), float(precision), float(recall), float(f1))
            )
    return series


def plot_curves(result: CurveResult, path: str | Path, title: str = "Performance vs. annotation time") -> None:
    """Render curve series to an image file (format from the extension)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    xs = [point.minutes for point in result.points]
    ax.plot(xs, [p.f1 for p in result.points], marker="o", label="overall F1")
    ax.plot(xs, [p.precision for p in result.points], marker=".", linestyle="--", label="precision")
    ax.plot(xs, [p.recall for p in result.points], marker=".", linestyle=":", label="recall")
    for event_type in sorted(result.per_type):
        pts = result.per_type[event_type]
        ax.plot([p.minutes for p in pts], [p.f1 for p in pts], alpha=0.5, label=f"{event_type} F1")
    ax.set_xlabel("effective annotation minutes")
    ax.set_ylabel("score")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


@dataclass(frozen=True)
class PerEventRow:
    event_type: str
    train_mentions: int
    eval_tuples: int

    @property
    def label(self) -> str:
        return f"{self.train_mentions} → {self.eval_tuples}"


def per_event_table(
    curves: Mapping[str, Sequence[CurvePoint]],
    train_counts: Mapping[str, int],
    eval_counts: Mapping[str, int],
) -> list[PerEventRow]:
    """One row per event type with its train/eval counts; zeros are retained."""
    types = sorted(set(curves) | set(train_counts) | set(eval_counts))
    return [
        PerEventRow(
            event_type=event_type,
            train_mentions=train_counts.get(event_type, 0),
            eval_tuples=eval_counts.get(event_type, 0),
        )
        for event_type in types
    ]


def format_per_event_table(rows: Sequence[PerEventRow]) -> str:
    width = max([len(r.event_type) for r in rows] + [10])
    lines = [f"{'type'.ljust(width)}  train → eval"]
    for row in rows:
        lines.append(f"{row.event_type.ljust(width)}  {row.label}")
    return "\n".join(lines)
