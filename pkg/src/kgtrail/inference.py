"""Elicits the agent's own reasoning paths before any graph work starts.

One prompt asks the agent for topic entities, ranked knowledge triples and
arrow-notation reasoning paths ending in its best-guess answer.  The parsed
paths later steer relation and entity selection, and the answer text is the
fallback when exploration never produces an answerable subgraph.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field

from .errors import MalformedSelection, NoTopicEntities
from .gateway import AgentGateway, complete_and_parse
from .metering import CostLedger
from .model import EntityRef, PathSource, ReasoningPath, Triple
from .parsing import parse_ipg
from .prompts import PromptKind, render_prompt

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IpgResult:
    """What the internal-paths call produced."""

    paths: tuple[ReasoningPath, ...] = ()
    internal_answer: str = ""
    triples: tuple[Triple, ...] = ()
    topic_entities: tuple[EntityRef, ...] = ()
    requested_triples: int = 0

    @property
    def skipped(self) -> bool:
        """True when the call was disabled (requested triple count of zero)."""
        return self.requested_triples == 0


def _origins(paths: tuple[ReasoningPath, ...]) -> tuple[EntityRef, ...]:
    seen: set[str] = set()
    out = []
    for path in paths:
        if path.origin.id not in seen:
            seen.add(path.origin.id)
            out.append(path.origin)
    return tuple(out)


def generate_inference(
    question: str,
    agent: AgentGateway,
    triple_count: int,
    ledger: CostLedger | None = None,
    max_retries: int = 2,
) -> IpgResult:
    """Run the internal-paths prompt once and parse the reply.

    A triple count of zero disables the step entirely (no agent call).  A
    reply that stays malformed through the retry budget degrades to an empty
    result with a warning instead of aborting the question.
    """
    if not question:
        raise ValueError("question must be non-empty")
    if triple_count == 0:
        return IpgResult()
    prompt = render_prompt(
        PromptKind.IPG, {"question": question, "tripleCount": triple_count}
    )
    try:
        paths, answer, triples = complete_and_parse(
            agent, prompt, PromptKind.IPG, parse_ipg, ledger, max_retries
        )
    except MalformedSelection as exc:
        logger.warning("internal paths unusable, continuing without them: %s", exc)
        return IpgResult(requested_triples=triple_count)
    internal = tuple(
        ReasoningPath(p.origin, p.steps, PathSource.INTERNAL) for p in paths
    )
    return IpgResult(
        paths=internal,
        internal_answer=answer,
        triples=tuple(triples),
        topic_entities=_origins(internal),
        requested_triples=triple_count,
    )


def link_topic_entities(
    ipg: IpgResult, dataset_entities: Mapping[str, str] | None = None
) -> list[EntityRef]:
    """Decide which topic entities anchor exploration.

    Dataset-provided ``{label: machine id}`` pairs win when present; the
    agent's extracted origins are the fallback, using the surface form as
    the id.  With neither, the question cannot anchor a subgraph.

    Raises:
        NoTopicEntities: when no source supplies an entity.
    """
    if dataset_entities:
        linked = [EntityRef(id=mid, label=label) for label, mid in dataset_entities.items()]
        agent_names = {e.display.lower() for e in ipg.topic_entities}
        dataset_names = {e.display.lower() for e in linked}
        if agent_names and not (agent_names & dataset_names):
            logger.info(
                "agent topic entities %s disagree with dataset %s",
                sorted(agent_names),
                sorted(dataset_names),
            )
        return linked
    if ipg.topic_entities:
        logger.warning("no dataset topic entities; using agent surface forms as ids")
        return list(ipg.topic_entities)
    raise NoTopicEntities("no topic entities from dataset or agent")
