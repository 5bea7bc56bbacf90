"""Command-line interface: ask one question, benchmark a dataset, export DOT.

Exit codes: 0 on success, 1 on runtime failures (unreachable backend, no
answer produced), 2 on configuration and input errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .answer import AnswerSource, answer_question
from .backend import (
    InMemoryBackend,
    KnowledgeBackend,
    SparqlBackend,
    load_label_file,
    load_triple_file,
)
from .config import CHAT_ENDPOINT_ENV, EngineConfig, build_config, load_config_file
from .dotexport import export_dot
from .errors import (
    BackendUnavailable,
    ConfigError,
    KgTrailError,
    NoTopicEntities,
    UnreadableDataset,
)
from .evalkit import (
    load_dataset,
    render_hits_csv,
    render_hits_table,
    run_baseline,
    run_engine,
)
from .gateway import AgentGateway, LiveAgent, ScriptedAgent, load_script
from .metering import render_cost_csv, render_cost_table
from .model import EntityRef, PathSource, Subgraph, parse_path, render_path
from .prompts import PromptKind

logger = logging.getLogger(__name__)

SWEEP_TRIPLE_COUNTS = (0, 15, 30, 45)


def _add_shared_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--depth", type=int, help="maximum exploration rounds")
    parser.add_argument("--triples", type=int, help="internal knowledge triples to request")
    parser.add_argument("--temperature", type=float, help="agent sampling temperature")
    parser.add_argument("--width", type=int, help="relation and entity selection width")
    parser.add_argument("--max-width", type=int, help="live paths kept per subgraph")
    parser.add_argument("--endpoint", help="SPARQL endpoint URL")
    parser.add_argument("--chat-endpoint", help="chat completions endpoint URL")
    parser.add_argument("--model", help="model name for the live agent")
    parser.add_argument("--workers", type=int, help="worker threads for benchmark runs")
    parser.add_argument("--result-limit", type=int, help="max results per backend query")
    parser.add_argument("--retries", type=int, help="retries per malformed agent reply")
    parser.add_argument("--scripted", help="JSONL script replacing the live agent")
    parser.add_argument("--kg-file", help="tab-separated triple file for the in-memory backend")
    parser.add_argument("--labels", help="tab-separated id/label file")
    parser.add_argument("--strict-match", action="store_true", default=None,
                        help="require exact alias equality when scoring")


def _config_from_args(args: argparse.Namespace) -> EngineConfig:
    file_values = load_config_file(args.config) if args.config else {}
    flag_values = {
        "max_depth": args.depth,
        "triple_count": args.triples,
        "temperature": args.temperature,
        "relation_width": args.width,
        "entity_width": args.width,
        "max_width": args.max_width if args.max_width is not None else args.width,
        "sparql_endpoint": args.endpoint,
        "chat_endpoint": args.chat_endpoint,
        "model_name": args.model,
        "workers": args.workers,
        "result_limit": args.result_limit,
        "max_retries_on_malformed": args.retries,
        "strict_match": args.strict_match,
    }
    return build_config(file_values, flag_values)


def _build_backend(args: argparse.Namespace, config: EngineConfig) -> KnowledgeBackend:
    if args.kg_file:
        labels = load_label_file(args.labels) if args.labels else None
        try:
            triples = load_triple_file(args.kg_file)
        except (OSError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return InMemoryBackend(triples, labels, config.backend_config())
    backend_config = config.backend_config()
    if not backend_config.endpoint_url:
        raise ConfigError(
            "no knowledge backend: pass --kg-file or --endpoint (or set the endpoint env var)"
        )
    backend = SparqlBackend(backend_config)
    backend.probe()  # fail fast instead of degrading every query later
    return backend


def _build_agent(args: argparse.Namespace, config: EngineConfig) -> AgentGateway:
    if args.scripted:
        return ScriptedAgent(load_script(args.scripted), config.agent_config())
    endpoint = config.chat_endpoint
    return LiveAgent(endpoint or None, config.agent_config())


def _parse_topics(pairs: list[str] | None) -> dict[str, str]:
    topics: dict[str, str] = {}
    for pair in pairs or []:
        label, separator, mid = pair.partition("=")
        if not separator or not label.strip() or not mid.strip():
            raise ConfigError(f"--topic expects LABEL=ID, got {pair!r}")
        topics[label.strip()] = mid.strip()
    return topics


def cmd_ask(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    backend = _build_backend(args, config)
    agent = _build_agent(args, config)
    topics = _parse_topics(args.topic)
    outcome = answer_question(
        args.question, topics, agent, backend, config.settings()
    )
    print(f"answer: {outcome.answer_text}")
    if outcome.source is AnswerSource.SUBGRAPH and not outcome.best_effort:
        print(f"source: {outcome.source.value} (answerable at round {outcome.answerable_round})")
    elif outcome.best_effort:
        print(f"source: {outcome.source.value} (best effort)")
    else:
        print(f"source: {outcome.source.value}")
    print("paths:")
    for subgraph in outcome.final_subgraphs:
        for path in subgraph.paths:
            print(f"  {render_path(path)}")
    for warning in outcome.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    calls = len(outcome.transcript)
    print(f"agent calls: {calls}")
    if args.dot:
        Path(args.dot).write_text(export_dot(outcome.final_subgraphs), encoding="utf-8")
        print(f"dot written to {args.dot}")
    if not outcome.answer_text and outcome.warnings:
        return 1
    return 0


def _bench_engine(args: argparse.Namespace, config: EngineConfig) -> list:
    backend = _build_backend(args, config)
    agent = _build_agent(args, config)
    records = load_dataset(args.dataset)
    runs = []
    if args.sweep_triples:
        for count in SWEEP_TRIPLE_COUNTS:
            settings = replace(config.settings(), triple_count=count)
            runs.append(
                run_engine(
                    records,
                    agent,
                    backend,
                    settings,
                    config.workers,
                    config.strict_match,
                    label=f"engine(triples={count})",
                )
            )
    else:
        runs.append(
            run_engine(
                records,
                agent,
                backend,
                config.settings(),
                config.workers,
                config.strict_match,
                label="engine",
            )
        )
    return runs


def cmd_bench(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    if args.mode == "engine":
        runs = _bench_engine(args, config)
    else:
        agent = _build_agent(args, config)
        records = load_dataset(args.dataset)
        kind = PromptKind.IO if args.mode == "io" else PromptKind.COT
        runs = [run_baseline(kind, records, agent)]

    hits_text = render_hits_table(runs)
    hits_csv = render_hits_csv(runs)
    cost_rows = [(run.label, run.cost_row()) for run in runs if run.results]
    cost_text = render_cost_table(cost_rows) if cost_rows else "(no records; no cost rows)"
    cost_csv = render_cost_csv(cost_rows) if cost_rows else ""
    report = f"{hits_text}\n\n{cost_text}\n"
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.txt").write_text(report, encoding="utf-8")
        (out_dir / "hits.csv").write_text(hits_csv + "\n", encoding="utf-8")
        (out_dir / "cost.csv").write_text(cost_csv + "\n", encoding="utf-8")
        print(f"report written to {out_dir}")
    else:
        print(report, end="")
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    topics = _parse_topics(args.topic)
    if not topics:
        raise ConfigError("export needs at least one --topic LABEL=ID")
    try:
        lines = Path(args.paths).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read paths file {args.paths}: {exc}") from exc
    paths = tuple(
        parse_path(line.strip(), source=PathSource.EXTERNAL)
        for line in lines
        if line.strip()
    )
    subgraphs = []
    for label, mid in topics.items():
        anchor = EntityRef(id=mid, label=label)
        owned = tuple(p for p in paths if p.origin.display in (label, mid)) or paths
        subgraphs.append(
            Subgraph(
                topic=anchor,
                paths=owned,
                round=max((p.hops for p in owned), default=0),
            )
        )
    text = export_dot(subgraphs)
    Path(args.out).write_text(text, encoding="utf-8")
    print(f"dot written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgtrail",
        description="Knowledge-graph question answering with agent-guided subgraph exploration",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    ask = commands.add_parser("ask", help="answer one question")
    ask.add_argument("question")
    ask.add_argument("--topic", action="append", metavar="LABEL=ID",
                     help="topic entity anchor; repeatable")
    ask.add_argument("--dot", help="write the final subgraphs as Graphviz DOT")
    _add_shared_flags(ask)

    bench = commands.add_parser("bench", help="run a benchmark dataset")
    bench.add_argument("--dataset", required=True, help="JSONL dataset file")
    bench.add_argument("--mode", choices=("engine", "io", "cot"), default="engine")
    bench.add_argument("--out", help="directory for report.txt, hits.csv, cost.csv")
    bench.add_argument("--sweep-triples", action="store_true",
                       help="run the internal-triple-count sweep (0, 15, 30, 45)")
    _add_shared_flags(bench)

    export = commands.add_parser("export", help="render stored paths as Graphviz DOT")
    export.add_argument("--paths", required=True, help="file of arrow-notation paths, one per line")
    export.add_argument("--topic", action="append", metavar="LABEL=ID", required=True)
    export.add_argument("--out", required=True, help="output DOT file")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handlers = {"ask": cmd_ask, "bench": cmd_bench, "export": cmd_export}
    try:
        return handlers[args.command](args)
    except (ConfigError, NoTopicEntities, UnreadableDataset, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BackendUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KgTrailError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
