"""End-to-end control flow for one question.

The order is fixed: elicit the agent's own reasoning paths, anchor one
subgraph per topic entity, then alternate exploration rounds with an
answerability evaluation over all subgraphs jointly.  The first round whose
evaluation says answerable wins.  When the depth budget runs out, or every
subgraph freezes, or the backend dies mid-flight, the agent's internal
answer takes over; failing even that, the last evaluation response is used
and flagged as best-effort.
"""

from __future__ import annotations

import enum
import logging
from collections.abc import Mapping
from dataclasses import dataclass, field

from .backend import KnowledgeBackend
from .errors import (
    AgentUnavailable,
    BackendUnavailable,
    MalformedSelection,
    QueryRejected,
)
from .explore import ExplorationState, initialize_state, run_round
from .gateway import AgentGateway, complete_and_parse
from .inference import IpgResult, generate_inference, link_topic_entities
from .metering import CostLedger
from .model import ReasoningPath, Subgraph, render_path
from .parsing import parse_evaluation
from .prompts import PromptKind, render_prompt

logger = logging.getLogger(__name__)


class AnswerSource(enum.Enum):
    """Which mechanism produced the final answer."""

    SUBGRAPH = "Subgraph"
    INTERNAL_FALLBACK = "InternalFallback"


@dataclass(frozen=True)
class AnswerOutcome:
    """Everything a caller needs to score, audit, or display one answer."""

    answer_text: str
    source: AnswerSource
    answerable_round: int | None
    final_subgraphs: tuple[Subgraph, ...]
    transcript: tuple[tuple[PromptKind, str, str], ...]
    internal_paths: tuple[ReasoningPath, ...] = ()
    best_effort: bool = False
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class EngineSettings:
    """Knobs the answering loop needs; a trimmed view of the full config."""

    max_depth: int = 3
    triple_count: int = 15
    relation_width: int = 7
    entity_width: int = 7
    max_width: int = 7
    max_retries_on_malformed: int = 2


def evaluate_subgraphs(
    subgraphs: tuple[Subgraph, ...] | list[Subgraph],
    question: str,
    agent: AgentGateway,
    ledger: CostLedger | None,
    max_retries: int = 2,
) -> tuple[bool, str]:
    """One joint answerability check over every explored path.

    All paths of all subgraphs are rendered, one per line, into a single
    prompt.  A verdict that stays malformed through the retry budget counts
    as not answerable.
    """
    rendered = "\n".join(
        render_path(path) for subgraph in subgraphs for path in subgraph.paths
    )
    prompt = render_prompt(
        PromptKind.EVALUATION, {"question": question, "subgraph": rendered}
    )
    try:
        return complete_and_parse(
            agent, prompt, PromptKind.EVALUATION, parse_evaluation, ledger, max_retries
        )
    except MalformedSelection:
        logger.warning("evaluation verdict unusable; treating round as not answerable")
        return False, ""


def answer_question(
    question: str,
    topic_entities: Mapping[str, str] | None,
    agent: AgentGateway,
    backend: KnowledgeBackend,
    settings: EngineSettings | None = None,
    ledger: CostLedger | None = None,
) -> AnswerOutcome:
    """Answer one question; total, never raises past configuration errors.

    Args:
        question: natural-language question, non-empty.
        topic_entities: dataset-provided ``{label: machine id}`` anchors;
            falls back to the agent's own extraction when empty.
        settings: loop knobs; defaults match the standard configuration.
        ledger: cost accumulator; a fresh one is created when omitted.

    Raises:
        NoTopicEntities: when nothing can anchor exploration.
        ValueError: on an empty question.
    """
    settings = settings or EngineSettings()
    ledger = ledger if ledger is not None else CostLedger()
    warnings: list[str] = []
    retries = settings.max_retries_on_malformed

    ipg = generate_inference(question, agent, settings.triple_count, ledger, retries)
    if ipg.requested_triples and not ipg.paths and not ipg.internal_answer:
        warnings.append("internal path elicitation returned nothing usable")
    topics = link_topic_entities(ipg, topic_entities)
    state = initialize_state(topics, settings.max_depth, settings.max_width)

    answerable_round: int | None = None
    gate_response = ""
    last_response = ""
    evaluations = 0
    try:
        while state.round < settings.max_depth and not state.exhausted:
            state = run_round(
                state,
                question,
                ipg.paths,
                agent,
                backend,
                ledger,
                settings.relation_width,
                settings.entity_width,
                retries,
            )
            answerable, response = evaluate_subgraphs(
                state.subgraphs, question, agent, ledger, retries
            )
            evaluations += 1
            last_response = response
            if answerable:
                answerable_round = state.round
                gate_response = response
                break
    except (BackendUnavailable, QueryRejected, AgentUnavailable) as exc:
        warnings.append(f"exploration aborted: {exc}")
        logger.warning("exploration aborted, falling back: %s", exc)

    if answerable_round is not None:
        return AnswerOutcome(
            answer_text=gate_response,
            source=AnswerSource.SUBGRAPH,
            answerable_round=answerable_round,
            final_subgraphs=state.subgraphs,
            transcript=tuple(ledger.transcript()),
            internal_paths=ipg.paths,
            warnings=tuple(warnings),
        )
    if ipg.internal_answer:
        return AnswerOutcome(
            answer_text=ipg.internal_answer,
            source=AnswerSource.INTERNAL_FALLBACK,
            answerable_round=None,
            final_subgraphs=state.subgraphs,
            transcript=tuple(ledger.transcript()),
            internal_paths=ipg.paths,
            warnings=tuple(warnings),
        )
    if evaluations:
        # No internal answer to fall back on: surface the last evaluation
        # response even though the gate never fired, and say so.
        warnings.append("gate never fired and no internal answer; last evaluation used")
        return AnswerOutcome(
            answer_text=last_response,
            source=AnswerSource.SUBGRAPH,
            answerable_round=state.round,
            final_subgraphs=state.subgraphs,
            transcript=tuple(ledger.transcript()),
            internal_paths=ipg.paths,
            best_effort=True,
            warnings=tuple(warnings),
        )
    warnings.append("no exploration round ran and no internal answer was available")
    return AnswerOutcome(
        answer_text="",
        source=AnswerSource.INTERNAL_FALLBACK,
        answerable_round=None,
        final_subgraphs=state.subgraphs,
        transcript=tuple(ledger.transcript()),
        internal_paths=ipg.paths,
        best_effort=True,
        warnings=tuple(warnings),
    )
