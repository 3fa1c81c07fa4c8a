"""Batch command line: ingest, index, serve, project, train, extract, score,
curve, stats, replay. Every subcommand reads and writes the same bit-exact
file formats the library modules own, exits 0 on success and nonzero with a
diagnostic otherwise."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis, annotation, learning, pipeline, projection, scoring, search, server
from .corpus import CorpusError, load_corpus, word_count
from .workflow import WorkflowEngine, WorkflowError


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (
        CorpusError,
        WorkflowError,
        annotation.AnnotationError,
        learning.LearningError,
        pipeline.PipelineError,
        scoring.ScoringError,
        analysis.AnalysisError,
        search.SearchError,
        OSError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eventlab")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("ingest", help="validate a corpus file and print its shape")
    p.add_argument("corpus")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="build the phrase index and print statistics")
    p.add_argument("corpus")
    p.add_argument("--query", help="optional phrase to run against the fresh index")
    p.add_argument("--limit", type=int, default=10)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--config", required=True, help="JSON config with corpus_path and log_dir")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("project", help="project a session log into mention files")
    p.add_argument("log")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="mention file (argument-training grade)")
    p.add_argument("--trigger-out", help="optional anchor-grade mention file")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("train", help="train models from one or more session logs")
    p.add_argument("logs", nargs="+")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ontology")
    p.add_argument("--out", required=True, help="model directory")
    p.add_argument("--l2", type=float, default=learning.DEFAULT_L2)
    p.add_argument("--learning-rate", type=float, default=learning.DEFAULT_LEARNING_RATE)
    p.add_argument("--epochs", type=int, default=learning.DEFAULT_EPOCHS)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("extract", help="run extraction over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--ontology", required=True)
    p.add_argument("--out", required=True, help="tuple file")
    p.add_argument("--threshold", type=float, default=pipeline.DEFAULT_THRESHOLD)
    p.add_argument("--rules", help="inference rule file (JSONL)")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("score", help="score a system tuple file against a key")
    p.add_argument("--system", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--neutralize-realis", action="store_true")
    p.add_argument("--neutralize-coref", action="store_true")
    p.add_argument("--coref-map")
    p.add_argument("--report-out", help="optional line-delimited report file")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("curve", help="learning curve from session logs")
    p.add_argument("--session", action="append", required=True, dest="sessions")
    p.add_argument("--corpus", required=True, help="training corpus the sessions annotated")
    p.add_argument("--eval", required=True, dest="eval_corpus")
    p.add_argument("--key", required=True)
    p.add_argument("--ontology", required=True)
    p.add_argument("--interval", type=float, default=10.0, help="checkpoint minutes")
    p.add_argument("--out", required=True, help="curve file")
    p.add_argument("--plot", help="optional image file")
    p.add_argument("--per-event-out", help="optional per-event table file")
    p.add_argument("--threshold", type=float, default=pipeline.DEFAULT_THRESHOLD)
    p.add_argument("--l2", type=float, default=analysis.CURVE_L2)
    p.add_argument("--learning-rate", type=float, default=analysis.CURVE_LEARNING_RATE)
    p.add_argument("--epochs", type=int, default=analysis.CURVE_EPOCHS)
    p.add_argument(
        "--raw-time",
        action="store_true",
        help="x-axis in wall time since session start instead of break-clipped time",
    )
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("stats", help="session statistics from a log")
    p.add_argument("log")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("replay", help="re-derive state from a session log")
    p.add_argument("log")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_replay)

    return parser


def cmd_ingest(args: argparse.Namespace) -> int:
    docs = load_corpus(args.corpus)
    tokens = sum(len(doc.tokens) for doc in docs)
    words = sum(word_count(doc) for doc in docs)
    sentences = sum(len(doc.sentences) for doc in docs)
    print(f"documents: {len(docs)}")
    print(f"tokens: {tokens}")
    print(f"words: {words}")
    print(f"sentences: {sentences}")
    return 0


def cmd_index(args: argparse.Namespace) -> int:
    docs = load_corpus(args.corpus)
    index = search.build_index(docs)
    print(f"documents: {index.doc_count}")
    print(f"distinct tokens: {len(index.postings)}")
    print(f"postings: {sum(len(p) for p in index.postings.values())}")
    if args.query:
        query = search.PhraseQuery.from_text(args.query, args.limit)
        for doc_id in search.query_phrase(index, query):
            print(doc_id)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    config = server.load_config(args.config)
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    server.serve(config)
    return 0


def _load_session(log_path: str, docs) -> WorkflowEngine:
    events = annotation.read_events(log_path)
    return WorkflowEngine.replay(docs, events)


def cmd_project(args: argparse.Namespace) -> int:
    docs = load_corpus(args.corpus)
    engine = _load_session(args.log, docs)
    result = projection.project_session(engine.session, docs)
    projection.write_mentions(args.out, result.mentions)
    if args.trigger_out:
        projection.write_mentions(args.trigger_out, result.trigger_mentions)
    report = result.report
    print(f"mentions built: {report.mentions_built}")
    print(f"mentions dropped: {report.mentions_dropped}")
    print(f"negatives: {len(result.negatives)}")
    for record_id, reason in report.spans_failed:
        print(f"failed span: {record_id} {reason}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    docs = load_corpus(args.corpus)
    mentions: list[projection.EventMention] = []
    trigger_mentions: list[projection.EventMention] = []
    negatives: list[projection.NegativeSentence] = []
    for log_path in args.logs:
        engine = _load_session(log_path, docs)
        result = projection.project_session(engine.session, docs)
        mentions.extend(result.mentions)
        trigger_mentions.extend(result.trigger_mentions)
        negatives.extend(result.negatives)
    inventory = None
    if args.ontology:
        inventory = pipeline.load_ontology(args.ontology).roles
    sets = learning.build_training_sets(
        trigger_mentions,
        negatives,
        docs,
        argument_mentions=mentions,
        role_inventory=inventory,
    )
    suite = learning.train_suite(
        sets, l2_lambda=args.l2, learning_rate=args.learning_rate, epochs=args.epochs
    )
    learning.save_suite(suite, args.out)
    print(f"trigger models: {len(suite.trigger)}")
    print(f"argument model: {'yes' if suite.argument else 'no'}")
    print(f"genericity model: {'yes' if suite.genericity else 'no'}")
    for name in suite.skipped:
        print(f"skipped: {name}")
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    docs = load_corpus(args.corpus)
    suite = learning.load_suite(args.models)
    ontology = pipeline.load_ontology(args.ontology)
    rules = pipeline.load_rules(args.rules) if args.rules else []
    by_doc = {}
    for doc in docs:
        by_doc[doc.doc_id] = sorted(
            pipeline.extract(doc, suite, ontology, threshold=args.threshold, rules=rules),
            key=lambda t: (t.event_type, t.role, t.entity, t.realis),
        )
    pipeline.write_tuples(args.out, by_doc)
    total = sum(len(v) for v in by_doc.values())
    print(f"tuples: {total}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    coref_map = scoring.load_coref_map(args.coref_map) if args.coref_map else None
    options = scoring.ScoreOptions(
        neutralize_realis=args.neutralize_realis,
        neutralize_coref=args.neutralize_coref,
        coref_map=coref_map,
    )
    report = scoring.score(
        pipeline.read_tuples(args.system), pipeline.read_tuples(args.key), options
    )
    print(scoring.format_report(report))
    if args.report_out:
        scoring.write_report_records(args.report_out, report)
    return 0


def cmd_curve(args: argparse.Namespace) -> int:
    train_docs = load_corpus(args.corpus)
    eval_docs = load_corpus(args.eval_corpus)
    key = pipeline.read_tuples(args.key)
    ontology = pipeline.load_ontology(args.ontology)
    chains = []
    engines = []
    for log_path in args.sessions:
        engine = _load_session(log_path, train_docs)
        engines.append(engine)
        chains.append(
            analysis.session_checkpoints(engine.session, args.interval, raw_time=args.raw_time)
        )
    checkpoints = analysis.combine_checkpoints(chains)
    evaluate = analysis.make_evaluator(
        train_docs,
        eval_docs,
        key,
        ontology,
        threshold=args.threshold,
        l2_lambda=args.l2,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
    )
    result = analysis.learning_curve(checkpoints, evaluate)
    analysis.write_curves(args.out, result)
    if args.plot:
        analysis.plot_curves(result, args.plot)
    if args.per_event_out:
        mentions = []
        for engine in engines:
            mentions.extend(projection.project_session(engine.session, train_docs).trigger_mentions)
        train_counts: dict[str, int] = {}
        for mention in mentions:
            train_counts[mention.event_type] = train_counts.get(mention.event_type, 0) + 1
        eval_counts: dict[str, int] = {}
        for row in key:
            eval_counts[row[1]] = eval_counts.get(row[1], 0) + 1
        rows = analysis.per_event_table(result.per_type, train_counts, eval_counts)
        Path(args.per_event_out).write_text(
            analysis.format_per_event_table(rows) + "\n", encoding="utf-8"
        )
    for point in result.points:
        print(f"{point.minutes:.1f} min  P={point.precision:.4f} R={point.recall:.4f} F1={point.f1:.4f}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    docs = load_corpus(args.corpus)
    engine = _load_session(args.log, docs)
    stats = annotation.session_stats(engine.session, docs)
    elapsed = engine.effective_elapsed()
    print(f"words_read: {stats.words_read}")
    print(f"docs_opened: {stats.docs_opened}")
    print(f"searches: {stats.searches}")
    print(f"effective_minutes: {elapsed / 60.0:.1f}")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    docs = load_corpus(args.corpus)
    engine = _load_session(args.log, docs)
    print(json.dumps(engine.state_snapshot(), ensure_ascii=False, sort_keys=True, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
