"""Tuple-level precision/recall/F1 with realis and coreference neutralization.

System and key tuples are (doc_id, event_type, role, entity, realis) rows
compared under exact set equality after neutralization. Zero-denominator
conventions are fixed: precision and recall are 0 when undefined, and F1 is
0 when precision + recall is 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

Tuple5 = tuple[str, str, str, str, str]  # (doc_id, t, r, e, m)

REALIS_NEUTRAL = "*"


class ScoringError(ValueError):
    pass


@dataclass(frozen=True)
class ScoreOptions:
    neutralize_realis: bool = False
    neutralize_coref: bool = False
    # without a map, coref neutralization falls back to exact text matching
    coref_map: Mapping[str, str] | None = None


@dataclass
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class ScoreReport:
    overall: Counts = field(default_factory=Counts)
    per_type: dict[str, Counts] = field(default_factory=dict)


def neutralize(tuples: Iterable[Tuple5], options: ScoreOptions) -> set[Tuple5]:
    """Collapse realis and/or map entities to coref clusters; result is a set."""
    out: set[Tuple5] = set()
    coref = options.coref_map or {}
    for doc_id, t, r, e, m in tuples:
        if options.neutralize_realis:
            m = REALIS_NEUTRAL
        if options.neutralize_coref:
            e = coref.get(e, e)
        out.add((doc_id, t, r, e, m))
    return out


def score(
    system: Iterable[Tuple5],
    key: Iterable[Tuple5],
    options: ScoreOptions = ScoreOptions(),
) -> ScoreReport:
    """Micro-averaged overall counts plus a per-event-type breakdown."""
    sys_set = neutralize(system, options)
    key_set = neutralize(key, options)
    report = ScoreReport()
    types = sorted({row[1] for row in sys_set} | {row[1] for row in key_set})
    for event_type in types:
        report.per_type[event_type] = Counts()
    for row in sys_set:
        counts = report.per_type[row[1]]
        if row in key_set:
            counts.tp += 1
            report.overall.tp += 1
        else:
            counts.fp += 1
            report.overall.fp += 1
    for row in key_set:
        if row not in sys_set:
            report.per_type[row[1]].fn += 1
            report.overall.fn += 1
    return report


@dataclass(frozen=True)
class AssessmentPair:
    item_id: str
    dimension: str  # event_presence | role_selection | argument_assessment
    judge_a: str
    judge_b: str


def agreement(pairs: Sequence[AssessmentPair]) -> dict[str, float]:
    """Fraction of matching verdicts per dimension; empty dimensions are omitted."""
    totals: dict[str, int] = {}
    matches: dict[str, int] = {}
    for pair in pairs:
        totals[pair.dimension] = totals.get(pair.dimension, 0) + 1
        if pair.judge_a == pair.judge_b:
            matches[pair.dimension] = matches.get(pair.dimension, 0) + 1
    return {dim: matches.get(dim, 0) / totals[dim] for dim in sorted(totals)}


@dataclass(frozen=True)
class ErrorReduction:
    precision: float | None
    recall: float | None
    f1: float | None


def error_reduction(base: ScoreReport, improved: ScoreReport) -> ErrorReduction:
    """Fraction of remaining error removed, per component; undefined at base 1."""

    def reduce(before: float, after: float) -> float | None:
        if before >= 1.0:
            return None
        return (after - before) / (1.0 - before)

    return ErrorReduction(
        precision=reduce(base.overall.precision, improved.overall.precision),
        recall=reduce(base.overall.recall, improved.overall.recall),
        f1=reduce(base.overall.f1, improved.overall.f1),
    )


def load_coref_map(path: str | Path) -> dict[str, str]:
    """Two tab-separated columns: entity text, cluster id."""
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ScoringError(f"line {lineno}: expected entity<TAB>cluster")
            mapping[parts[0]] = parts[1]
    return mapping


def format_report(report: ScoreReport) -> str:
    """Human-readable table, one row per event type plus the pooled overall."""
    rows = [("type", "tp", "fp", "fn", "precision", "recall", "f1")]
    for event_type in sorted(report.per_type):
        counts = report.per_type[event_type]
        rows.append(_metric_row(event_type, counts))
    rows.append(_metric_row("OVERALL", report.overall))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = [
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in rows
    ]
    return "\n".join(lines)


def _metric_row(label: str, counts: Counts) -> tuple[str, ...]:
    return (
        label,
        str(counts.tp),
        str(counts.fp),
        str(counts.fn),
        f"{counts.precision:.4f}",
        f"{counts.recall:.4f}",
        f"{counts.f1:.4f}",
    )


def write_report_records(path: str | Path, report: ScoreReport) -> None:
    """Line-delimited machine-readable counterpart of format_report."""
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for event_type in sorted(report.per_type):
            counts = report.per_type[event_type]
            fh.write(json.dumps(_record(event_type, counts), sort_keys=True) + "\n")
        fh.write(json.dumps(_record("OVERALL", report.overall), sort_keys=True) + "\n")


def _record(label: str, counts: Counts) -> dict:
    return {
        "type": label,
        "tp": counts.tp,
        "fp": counts.fp,
        "fn": counts.fn,
        "precision": counts.precision,
        "recall": counts.recall,
        "f1": counts.f1,
    }
