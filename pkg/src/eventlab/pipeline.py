"""Document-to-tuples extraction in high-recall mode.

Trigger detection scores every token against every event type's model and
keeps candidates at or above the probability threshold (default 10%, and
the comparison is inclusive so ties behave deterministically). Argument
attachment and realis assignment run per candidate, then data-driven
inference rules, then deduplication into a tuple set.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Document
from .learning import (
    LinearModel,
    ModelSuite,
    argument_features,
    candidate_spans,
    genericity_features,
    predict,
    trigger_features,
)
from .projection import REALIS_ACTUAL, REALIS_GENERIC, EventMention

DEFAULT_THRESHOLD = 0.10


class PipelineError(ValueError):
    pass


@dataclass(frozen=True)
class Ontology:
    """Event types and their role inventories, loaded from configuration."""

    roles: Mapping[str, tuple[str, ...]]

    @property
    def event_types(self) -> tuple[str, ...]:
        return tuple(self.roles)

    def roles_for(self, event_type: str) -> tuple[str, ...]:
        if event_type not in self.roles:
            raise PipelineError(f"event type {event_type!r} not in ontology")
        return self.roles[event_type]


def load_ontology(path: str | Path) -> Ontology:
    """Parse `event.type: Role1, Role2` lines; `#` starts a comment."""
    roles: dict[str, tuple[str, ...]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise PipelineError(f"line {lineno}: expected `event_type: roles`")
            event_type, tail = line.split(":", 1)
            event_type = event_type.strip()
            if not event_type or "\t" in event_type:
                raise PipelineError(f"line {lineno}: bad event type")
            if event_type in roles:
                raise PipelineError(f"line {lineno}: duplicate event type {event_type!r}")
            names = tuple(part.strip() for part in tail.split(",") if part.strip())
            if any("\t" in name or " " in name for name in names):
                raise PipelineError(f"line {lineno}: role names must be single tokens")
            roles[event_type] = names
    return Ontology(roles=roles)


def write_ontology(path: str | Path, ontology: Ontology) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for event_type in ontology.event_types:
            fh.write(f"{event_type}: {', '.join(ontology.roles[event_type])}\n")


@dataclass(frozen=True)
class ResponseTuple:
    """The scored unit. Identity is (type, role, entity, realis); spans justify."""

    event_type: str
    role: str
    entity: str
    realis: str
    anchor_span: tuple[int, int] = field(compare=False, default=(0, 0))
    argument_span: tuple[int, int] = field(compare=False, default=(0, 0))
    trigger_prob: float = field(compare=False, default=0.0)
    argument_prob: float = field(compare=False, default=0.0)


@dataclass(frozen=True)
class Candidate:
    """A detected mention before argument attachment."""

    event_type: str
    doc_id: str
    sentence_index: int
    anchor: tuple[int, int]
    probability: float


def canonical_entity(text: str) -> str:
    """Case-folded span text with internal whitespace collapsed."""
    return " ".join(text.lower().split())


def detect_triggers(
    doc: Document,
    trigger_models: Mapping[str, LinearModel],
    threshold: float = DEFAULT_THRESHOLD,
) -> list[Candidate]:
    """Every (token, type) whose probability clears the threshold, inclusive."""
    candidates: list[Candidate] = []
    for token_index in range(len(doc.tokens)):
        feats = trigger_features(doc, token_index)
        for event_type in sorted(trigger_models):
            prob = predict(trigger_models[event_type], feats)
            if prob >= threshold:
                candidates.append(
                    Candidate(
                        event_type=event_type,
                        doc_id=doc.doc_id,
                        sentence_index=doc.sentence_of_token(token_index),
                        anchor=(token_index, token_index + 1),
                        probability=prob,
                    )
                )
    return candidates


def attach_arguments(
    doc: Document,
    candidate: Candidate,
    spans: Sequence[tuple[int, int]],
    arg_model: LinearModel,
    roles: Sequence[str],
    threshold: float = DEFAULT_THRESHOLD,
) -> list[tuple[str, tuple[int, int], float]]:
    """All (role, span) pairs at or above threshold; one span may fill many roles."""
    mention = EventMention(
        event_type=candidate.event_type,
        doc_id=candidate.doc_id,
        sentence_index=candidate.sentence_index,
        anchor=candidate.anchor,
        arguments=(),
    )
    attached: list[tuple[str, tuple[int, int], float]] = []
    for span in spans:
        for role in roles:
            prob = predict(arg_model, argument_features(doc, mention, span, role))
            if prob >= threshold:
                attached.append((role, span, prob))
    return attached


def assign_realis(
    doc: Document,
    candidate: Candidate,
    genericity_model: LinearModel | None,
) -> str:
    if genericity_model is None:
        return REALIS_ACTUAL
    mention = EventMention(
        event_type=candidate.event_type,
        doc_id=candidate.doc_id,
        sentence_index=candidate.sentence_index,
        anchor=candidate.anchor,
        arguments=(),
    )
    prob = predict(genericity_model, genericity_features(doc, mention))
    return REALIS_ACTUAL if prob >= 0.5 else REALIS_GENERIC


@dataclass(frozen=True)
class InferenceRule:
    """Data-driven post-processing: match on tuple fields, then act."""

    action: str  # add | remove | rescore
    match: Mapping[str, str] = field(default_factory=dict)
    tuple_fields: Mapping[str, str] | None = None  # for add
    factor: float = 1.0  # for rescore

    def matches(self, item: ResponseTuple) -> bool:
        values = {
            "t": item.event_type,
            "r": item.role,
            "e": item.entity,
            "m": item.realis,
        }
        return all(values.get(key) == want for key, want in self.match.items())


def load_rules(path: str | Path) -> list[InferenceRule]:
    """Rules are JSONL; malformed rules fail here, never at apply time."""
    rules: list[InferenceRule] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise PipelineError(f"line {lineno}: invalid rule ({exc.msg})") from None
            action = obj.get("action")
            if action not in ("add", "remove", "rescore"):
                raise PipelineError(f"line {lineno}: unknown action {action!r}")
            match = obj.get("match", {})
            if not isinstance(match, dict) or not all(
                key in ("t", "r", "e", "m") for key in match
            ):
                raise PipelineError(f"line {lineno}: match keys must be t/r/e/m")
            tuple_fields = obj.get("tuple")
            if action == "add":
                if not isinstance(tuple_fields, dict) or set(tuple_fields) != {"t", "r", "e", "m"}:
                    raise PipelineError(f"line {lineno}: add rule needs full tuple t/r/e/m")
            factor = obj.get("factor", 1.0)
            if not isinstance(factor, (int, float)):
                raise PipelineError(f"line {lineno}: factor must be numeric")
            rules.append(
                InferenceRule(action=action, match=match, tuple_fields=tuple_fields, factor=float(factor))
            )
    return rules


def apply_inference_rules(
    tuples: Iterable[ResponseTuple], rules: Sequence[InferenceRule]
) -> set[ResponseTuple]:
    """Apply rules in order; the empty rule set is the identity."""
    current = set(tuples)
    for rule in rules:
        if rule.action == "remove":
            current = {item for item in current if not rule.matches(item)}
        elif rule.action == "add":
            fields = rule.tuple_fields or {}
            current.add(
                ResponseTuple(
                    event_type=fields["t"],
                    role=fields["r"],
                    entity=fields["e"],
                    realis=fields["m"],
                )
            )
        else:  # rescore probabilities in tuple metadata
            updated = set()
            for item in current:
                if rule.matches(item):
                    item = ResponseTuple(
                        event_type=item.event_type,
                        role=item.role,
                        entity=item.entity,
                        realis=item.realis,
                        anchor_span=item.anchor_span,
                        argument_span=item.argument_span,
                        trigger_prob=item.trigger_prob * rule.factor,
                        argument_prob=item.argument_prob * rule.factor,
                    )
                updated.add(item)
            current = updated
    return current


def extract(
    doc: Document,
    suite: ModelSuite,
    ontology: Ontology,
    threshold: float = DEFAULT_THRESHOLD,
    rules: Sequence[InferenceRule] = (),
    entity_spans: Mapping[str, Sequence[tuple[int, int]]] | None = None,
) -> set[ResponseTuple]:
    """detect -> attach -> realis -> rules -> deduplicated tuple set."""
    for event_type in suite.trigger:
        if event_type not in ontology.roles:
            raise PipelineError(f"model event type {event_type!r} missing from ontology")
    results: dict[ResponseTuple, ResponseTuple] = {}
    if suite.argument is None:
        return apply_inference_rules(results.values(), rules)
    candidates = detect_triggers(doc, suite.trigger, threshold)
    extra = list((entity_spans or {}).get(doc.doc_id, ()))
    for candidate in candidates:
        spans = candidate_spans(doc, candidate.sentence_index, extra)
        roles = ontology.roles_for(candidate.event_type)
        attached = attach_arguments(doc, candidate, spans, suite.argument, roles, threshold)
        if not attached:
            continue
        realis = assign_realis(doc, candidate, suite.genericity)
        for role, span, prob in attached:
            start = doc.tokens[span[0]].start
            end = doc.tokens[span[1] - 1].end
            item = ResponseTuple(
                event_type=candidate.event_type,
                role=role,
                entity=canonical_entity(doc.text[start:end]),
                realis=realis,
                anchor_span=candidate.anchor,
                argument_span=span,
                trigger_prob=candidate.probability,
                argument_prob=prob,
            )
            kept = results.get(item)
            # set semantics on (t,r,e,m); keep the smallest justification spans
            if kept is None or (item.anchor_span, item.argument_span) < (
                kept.anchor_span,
                kept.argument_span,
            ):
                results[item] = item
    return apply_inference_rules(results.values(), rules)


def as_scoring_tuples(
    doc_id: str, tuples: Iterable[ResponseTuple]
) -> list[tuple[str, str, str, str, str]]:
    return [
        (doc_id, item.event_type, item.role, item.entity, item.realis)
        for item in tuples
    ]


def write_tuples(path: str | Path, by_doc: Mapping[str, Iterable[ResponseTuple]]) -> None:
    """Tab-separated, lexicographically sorted lines; stable for diffing."""
    lines = []
    for doc_id, tuples in by_doc.items():
        for item in tuples:
            lines.append(
                "\t".join(
                    [
                        doc_id,
                        item.event_type,
                        item.role,
                        item.entity,
                        item.realis,
                        str(item.anchor_span[0]),
                        str(item.anchor_span[1]),
                        str(item.argument_span[0]),
                        str(item.argument_span[1]),
                    ]
                )
            )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in sorted(lines):
            fh.write(line + "\n")


def read_tuples(path: str | Path) -> list[tuple[str, str, str, str, str]]:
    """Scoring view of a tuple file: (doc_id, t, r, e, m) rows."""
    rows: list[tuple[str, str, str, str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 5:
                raise PipelineError(f"line {lineno}: expected at least 5 tab-separated fields")
            rows.append((parts[0], parts[1], parts[2], parts[3], parts[4]))
    return rows
