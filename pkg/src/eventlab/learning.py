"""Sparse binary log-linear models and their feature templates.

One trigger model per event type, a single argument-attachment model with
role-conjoined features, and an optional genericity model. Training is
full-batch gradient ascent on average log-likelihood with L2 weight decay,
zero-initialized, so a fixed example order always yields the same model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Document, DocumentSet
from .projection import (
    REALIS_VALUES,
    EventMention,
    NegativeSentence,
    ProjectionError,
    project_span,
)

SENTENCE_START = "<S>"
SENTENCE_END = "</S>"

KIND_ARGUMENT = "argument"
KIND_GENERICITY = "genericity"

DEFAULT_L2 = 0.1
DEFAULT_LEARNING_RATE = 0.1
DEFAULT_EPOCHS = 200
DEFAULT_TOLERANCE = 1e-6

STOPWORDS = frozenset(
    """a an and are as at be been but by for from had has have he her his i if
    in is it its not of on or she that the their them they this to was we were
    will with you""".split()
)


class LearningError(ValueError):
    pass


@dataclass
class LinearModel:
    weights: dict[str, float]
    bias: float
    kind: str

    def copy(self) -> "LinearModel":
        return LinearModel(dict(self.weights), self.bias, self.kind)


@dataclass
class TrainExample:
    features: dict[str, float]
    label: bool


@dataclass
class TrainReport:
    epochs_run: int = 0
    final_objective: float = 0.0
    step_halvings: int = 0
    objective_trace: list[float] = field(default_factory=list)


def trigger_kind(event_type: str) -> str:
    return f"trigger:{event_type}"


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def _log_sigmoid(z: float) -> float:
    # log(sigmoid(z)) without overflow for large |z|
    if z > 30:
        return -math.exp(-z)
    if z < -30:
        return z
    return -math.log1p(math.exp(-z))


def predict(model: LinearModel, features: Mapping[str, float]) -> float:
    """Probability of the positive class. Order of features is irrelevant."""
    z = model.bias
    weights = model.weights
    for name, value in features.items():
        weight = weights.get(name)
        if weight is not None:
            z += weight * value
    return _sigmoid(z)


def objective_and_gradient(
    examples: Sequence[TrainExample],
    weights: Mapping[str, float],
    bias: float,
    l2_lambda: float,
) -> tuple[float, dict[str, float], float]:
    """Average log-likelihood minus (l2/2)*||w||^2, with its gradient."""
    n = len(examples)
    if n == 0:
        raise LearningError("no training examples")
    loglik = 0.0
    grad_w: dict[str, float] = {}
    grad_b = 0.0
    for example in examples:
        z = bias
        for name, value in example.features.items():
            weight = weights.get(name)
            if weight is not None:
                z += weight * value
        p = _sigmoid(z)
        y = 1.0 if example.label else 0.0
        loglik += _log_sigmoid(z) if example.label else _log_sigmoid(-z)
        residual = (y - p) / n
        grad_b += residual
        for name, value in example.features.items():
            grad_w[name] = grad_w.get(name, 0.0) + residual * value
    objective = loglik / n
    penalty = 0.0
    for name, weight in weights.items():
        penalty += weight * weight
        grad_w[name] = grad_w.get(name, 0.0) - l2_lambda * weight
    objective -= 0.5 * l2_lambda * penalty
    return objective, grad_w, grad_b


def train(
    examples: Sequence[TrainExample],
    kind: str = "model",
    l2_lambda: float = DEFAULT_L2,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    epochs: int = DEFAULT_EPOCHS,
    tolerance: float = DEFAULT_TOLERANCE,
    report: TrainReport | None = None,
) -> LinearModel:
    """Fit a model by deterministic full-batch ascent from zero weights.

    If the objective ever worsens the last step is undone and the step size
    halved; halvings are counted in the report. Stops early once an epoch
    improves the objective by less than the tolerance.
    """
    if not any(e.label for e in examples) or not any(not e.label for e in examples):
        raise LearningError("degenerate training set")
    weights: dict[str, float] = {}
    bias = 0.0
    step = learning_rate
    prev_objective: float | None = None
    prev_state: tuple[dict[str, float], float] | None = None
    epochs_run = 0
    objective = 0.0
    while epochs_run < epochs:
        objective, grad_w, grad_b = objective_and_gradient(examples, weights, bias, l2_lambda)
        if prev_objective is not None:
            if objective < prev_objective:
                # monotonicity violated: undo the step, halve, and re-step
                weights, bias = dict(prev_state[0]), prev_state[1]  # type: ignore[index]
                step *= 0.5
                if report is not None:
                    report.step_halvings += 1
                objective, grad_w, grad_b = objective_and_gradient(
                    examples, weights, bias, l2_lambda
                )
            elif objective - prev_objective < tolerance:
                break
        prev_state = (dict(weights), bias)
        prev_objective = objective
        if report is not None:
            report.objective_trace.append(objective)
        for name, grad in grad_w.items():
            updated = weights.get(name, 0.0) + step * grad
            if updated == 0.0:
                weights.pop(name, None)
            else:
                weights[name] = updated
        bias += step * grad_b
        epochs_run += 1
    if report is not None:
        report.epochs_run = epochs_run
        report.final_objective = objective
    return LinearModel(weights=weights, bias=bias, kind=kind)


# ------------------------------------------------------------------ features


def token_shape(token: str) -> str:
    if token.isdigit():
        return "digit"
    if token.isalpha():
        if token.islower():
            return "lower"
        if token.isupper():
            return "upper"
        if token[0].isupper() and token[1:].islower():
            return "title"
        return "mixed"
    if any(ch.isalnum() for ch in token):
        return "alnum"
    return "punct"


def sentence_length_bucket(n_tokens: int) -> str:
    if n_tokens <= 5:
        return "xs"
    if n_tokens <= 10:
        return "s"
    if n_tokens <= 20:
        return "m"
    if n_tokens <= 40:
        return "l"
    return "xl"


def _neighbor(tokens: list[str], index: int) -> str:
    if index < 0:
        return SENTENCE_START
    if index >= len(tokens):
        return SENTENCE_END
    return tokens[index]


def trigger_features(doc: Document, token_index: int) -> dict[str, float]:
    """Context features for one token, bounded by its sentence."""
    sentence_index = doc.sentence_of_token(token_index)
    sentence = doc.sentences[sentence_index]
    tokens = doc.sentence_tokens(sentence_index, fold=True)
    local = token_index - sentence.first_token
    surface = doc.token_text(token_index)
    feats = {
        f"w0={tokens[local]}": 1.0,
        f"shape0={token_shape(surface)}": 1.0,
        f"w-1={_neighbor(tokens, local - 1)}": 1.0,
        f"w+1={_neighbor(tokens, local + 1)}": 1.0,
        f"w-2={_neighbor(tokens, local - 2)}": 1.0,
        f"w+2={_neighbor(tokens, local + 2)}": 1.0,
        f"bi={_neighbor(tokens, local - 1)}_{tokens[local]}": 1.0,
        f"slen={sentence_length_bucket(len(tokens))}": 1.0,
    }
    return feats


def _distance_bucket(delta: int) -> str:
    if abs(delta) <= 3:
        return str(delta)
    sign = "-" if delta < 0 else "+"
    return f"{sign}4-7" if abs(delta) <= 7 else f"{sign}8+"


def argument_features(
    doc: Document,
    mention: EventMention,
    span: tuple[int, int],
    role: str,
) -> dict[str, float]:
    """Features for one (candidate span, role) pair, all conjoined with the role."""
    sentence = doc.sentences[mention.sentence_index]
    if not (sentence.first_token <= span[0] < span[1] <= sentence.last_token):
        raise LearningError(f"candidate span {span} outside mention sentence")
    anchor_text = "_".join(
        doc.token_text(i, fold=True) for i in range(mention.anchor[0], mention.anchor[1])
    )
    head_index = span[1] - 1
    head = doc.token_text(head_index, fold=True)
    delta = head_index - mention.anchor[0]
    if span[1] <= mention.anchor[0]:
        order = "before"
    elif span[0] >= mention.anchor[1]:
        order = "after"
    else:
        order = "overlap"
    prefix = f"role={role}"
    return {
        f"{prefix}|anchor={anchor_text}": 1.0,
        f"{prefix}|head={head}": 1.0,
        f"{prefix}|dist={_distance_bucket(delta)}": 1.0,
        f"{prefix}|order={order}": 1.0,
        f"{prefix}|headshape={token_shape(doc.token_text(head_index))}": 1.0,
    }


def genericity_features(doc: Document, mention: EventMention) -> dict[str, float]:
    return trigger_features(doc, mention.anchor[0])


# --------------------------------------------------------------- candidates


def candidate_spans(
    doc: Document,
    sentence_index: int,
    extra_spans: Iterable[tuple[int, int]] = (),
) -> list[tuple[int, int]]:
    """Argument candidates: capitalized runs, noun-like single tokens, sidecar spans."""
    sentence = doc.sentences[sentence_index]
    spans: set[tuple[int, int]] = set()
    run_start: int | None = None
    for idx in range(sentence.first_token, sentence.last_token):
        surface = doc.token_text(idx)
        if surface[0].isupper():
            if run_start is None:
                run_start = idx
        elif run_start is not None:
            spans.add((run_start, idx))
            run_start = None
        if surface.isalpha() and surface.lower() not in STOPWORDS:
            spans.add((idx, idx + 1))
    if run_start is not None:
        spans.add((run_start, sentence.last_token))
    for span in extra_spans:
        if sentence.first_token <= span[0] < span[1] <= sentence.last_token:
            spans.add(span)
    return sorted(spans)


def load_entity_spans(path: str | Path, docs: DocumentSet) -> dict[str, list[tuple[int, int]]]:
    """Optional sidecar of entity character spans, projected to token ranges."""
    by_doc: dict[str, list[tuple[int, int]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise LearningError(f"line {lineno}: expected doc_id<TAB>start<TAB>end")
            doc_id, start, end = parts[0], int(parts[1]), int(parts[2])
            try:
                span = project_span((start, end), docs.get(doc_id))
            except ProjectionError:
                continue
            by_doc.setdefault(doc_id, []).append(span)
    return by_doc


# ------------------------------------------------------------ training sets


@dataclass
class TrainingSets:
    trigger: dict[str, list[TrainExample]] = field(default_factory=dict)
    argument: list[TrainExample] = field(default_factory=list)
    genericity: list[TrainExample] = field(default_factory=list)


def build_training_sets(
    mentions: Sequence[EventMention],
    negatives: Sequence[NegativeSentence],
    docs: DocumentSet,
    argument_mentions: Sequence[EventMention] | None = None,
    role_inventory: Mapping[str, Sequence[str]] | None = None,
    entity_spans: Mapping[str, Sequence[tuple[int, int]]] | None = None,
) -> TrainingSets:
    """Assemble per-model example sets.

    Trigger positives are the anchor tokens of each type's mentions; trigger
    negatives are every token of that type's negative sentences plus the
    non-anchor tokens of its event sentences, so each type sees its own
    negatives. Argument examples pair candidate spans with roles; mentions
    whose arguments failed to project must be excluded by passing the
    stricter list as ``argument_mentions``.
    """
    sets = TrainingSets()
    if argument_mentions is None:
        argument_mentions = mentions

    # trigger examples: one per (type, doc, token), positives win over negatives
    seen: dict[str, dict[tuple[str, int], bool]] = {}
    for mention in mentions:
        doc = docs.get(mention.doc_id)
        per_type = seen.setdefault(mention.event_type, {})
        sentence = doc.sentences[mention.sentence_index]
        for idx in range(mention.anchor[0], mention.anchor[1]):
            per_type[(mention.doc_id, idx)] = True
        for idx in range(sentence.first_token, sentence.last_token):
            per_type.setdefault((mention.doc_id, idx), False)
    for negative in negatives:
        doc = docs.get(negative.doc_id)
        per_type = seen.setdefault(negative.event_type, {})
        sentence = doc.sentences[negative.sentence_index]
        for idx in range(sentence.first_token, sentence.last_token):
            per_type.setdefault((negative.doc_id, idx), False)
    for event_type in sorted(seen):
        examples = []
        for (doc_id, token_index), label in seen[event_type].items():
            examples.append(
                TrainExample(trigger_features(docs.get(doc_id), token_index), label)
            )
        sets.trigger[event_type] = examples

    # argument examples: annotated spans are positives, other candidates negatives
    observed_roles: dict[str, list[str]] = {}
    for mention in argument_mentions:
        roles = observed_roles.setdefault(mention.event_type, [])
        for role, _, _ in mention.arguments:
            if role not in roles:
                roles.append(role)
    for mention in argument_mentions:
        doc = docs.get(mention.doc_id)
        if role_inventory is not None:
            roles = list(role_inventory.get(mention.event_type, ()))
        else:
            roles = observed_roles.get(mention.event_type, [])
        if not roles:
            continue
        extra = list((entity_spans or {}).get(mention.doc_id, ()))
        annotated = {(role, first, last) for role, first, last in mention.arguments}
        spans = set(candidate_spans(doc, mention.sentence_index, extra))
        spans.update((first, last) for _, first, last in annotated)
        for span in sorted(spans):
            for role in roles:
                label = (role, span[0], span[1]) in annotated
                sets.argument.append(
                    TrainExample(argument_features(doc, mention, span, role), label)
                )

    # genericity examples come from realis labels when a data source has them
    for mention in mentions:
        if mention.realis not in REALIS_VALUES:
            continue
        doc = docs.get(mention.doc_id)
        sets.genericity.append(
            TrainExample(genericity_features(doc, mention), mention.realis == "ACTUAL")
        )
    return sets


@dataclass
class ModelSuite:
    trigger: dict[str, LinearModel] = field(default_factory=dict)
    argument: LinearModel | None = None
    genericity: LinearModel | None = None
    skipped: list[str] = field(default_factory=list)


def train_suite(
    sets: TrainingSets,
    l2_lambda: float = DEFAULT_L2,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    epochs: int = DEFAULT_EPOCHS,
    tolerance: float = DEFAULT_TOLERANCE,
) -> ModelSuite:
    """Train every trainable model; degenerate sets are skipped and recorded."""
    suite = ModelSuite()
    for event_type in sorted(sets.trigger):
        try:
            suite.trigger[event_type] = train(
                sets.trigger[event_type],
                kind=trigger_kind(event_type),
                l2_lambda=l2_lambda,
                learning_rate=learning_rate,
                epochs=epochs,
                tolerance=tolerance,
            )
        except LearningError:
            suite.skipped.append(trigger_kind(event_type))
    try:
        suite.argument = train(
            sets.argument,
            kind=KIND_ARGUMENT,
            l2_lambda=l2_lambda,
            learning_rate=learning_rate,
            epochs=epochs,
            tolerance=tolerance,
        )
    except LearningError:
        suite.skipped.append(KIND_ARGUMENT)
    if sets.genericity:
        try:
            suite.genericity = train(
                sets.genericity,
                kind=KIND_GENERICITY,
                l2_lambda=l2_lambda,
                learning_rate=learning_rate,
                epochs=epochs,
                tolerance=tolerance,
            )
        except LearningError:
            suite.skipped.append(KIND_GENERICITY)
    return suite


# ------------------------------------------------------------------ model io


def save_model(model: LinearModel, path: str | Path) -> None:
    """Write kind header, bias line, then sorted (feature, weight) lines."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"kind\t{model.kind}\n")
        fh.write(f"bias\t{model.bias!r}\n")
        for name in sorted(model.weights):
            fh.write(f"{name}\t{model.weights[name]!r}\n")


def load_model(path: str | Path) -> LinearModel:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if len(lines) < 2 or not lines[0].startswith("kind\t") or not lines[1].startswith("bias\t"):
        raise LearningError(f"{path}: not a model file")
    kind = lines[0].split("\t", 1)[1]
    bias = float(lines[1].split("\t", 1)[1])
    weights: dict[str, float] = {}
    for line in lines[2:]:
        if not line:
            continue
        name, raw = line.rsplit("\t", 1)
        weights[name] = float(raw)
    return LinearModel(weights=weights, bias=bias, kind=kind)


def save_suite(suite: ModelSuite, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for event_type, model in suite.trigger.items():
        save_model(model, directory / f"trigger__{event_type}.model")
    if suite.argument is not None:
        save_model(suite.argument, directory / "argument.model")
    if suite.genericity is not None:
        save_model(suite.genericity, directory / "genericity.model")


def load_suite(directory: str | Path) -> ModelSuite:
    directory = Path(directory)
    suite = ModelSuite()
    for path in sorted(directory.glob("*.model")):
        model = load_model(path)
        if model.kind.startswith("trigger:"):
            suite.trigger[model.kind.split(":", 1)[1]] = model
        elif model.kind == KIND_ARGUMENT:
            suite.argument = model
        elif model.kind == KIND_GENERICITY:
            suite.genericity = model
        else:
            raise LearningError(f"{path}: unknown model kind {model.kind!r}")
    return suite
