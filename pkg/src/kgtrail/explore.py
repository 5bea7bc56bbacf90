"""One round of subgraph exploration: relations, then entities, then growth.

Each topic entity owns a subgraph whose live paths expose their endpoints as
the frontier.  A round, per subgraph, lists candidate relations around the
frontier, asks the agent to pick, fetches the neighbors those picks reach,
asks the agent to pick again, and extends the paths.  Directions are kept
explicit throughout: a step stores whether the frontier entity was the head
or the tail of the traversed triple, so every grown path stays a verbatim
chain of stored facts.

Path growth follows four cases.  With the frontier at the path's end
(``path_is_head`` false): a forward hop appends ``→ r → e`` and a backward
hop appends ``← r ← e``.  With the frontier at the path's origin
(``path_is_head`` true): a forward hop prepends ``e → r →`` and a backward
hop prepends ``e ← r ←``.  The current engine only ever extends at the end;
the origin cases exist for paths whose anchor sits mid-chain.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

from .backend import KnowledgeBackend
from .errors import MalformedSelection
from .gateway import AgentGateway, complete_and_parse
from .metering import CostLedger
from .model import (
    Direction,
    EntityRef,
    PathStep,
    ReasoningPath,
    RelationRef,
    Subgraph,
    dedup_paths,
    render_path,
)
from .parsing import parse_entity_selection, parse_relation_selection
from .prompts import PromptKind, render_prompt

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SelectedRelation:
    """A relation the agent picked, tagged with the frontier's role in it."""

    relation: RelationRef
    frontier_is_head: bool


@dataclass(frozen=True)
class SelectedEntity:
    """An entity the agent picked, with full provenance for path growth."""

    entity: EntityRef
    via: RelationRef
    frontier_is_head: bool
    path_index: int
    frontier: EntityRef


@dataclass(frozen=True)
class ExplorationState:
    """All subgraphs plus their frontiers after some number of rounds.

    ``frontiers[i]`` maps live path indices of ``subgraphs[i]`` to the
    entities those paths end at; an empty mapping means the subgraph is
    frozen.  State values are replaced, never mutated.
    """

    subgraphs: tuple[Subgraph, ...]
    frontiers: tuple[dict[int, EntityRef], ...]
    round: int
    max_depth: int
    max_width: int
    last_new_paths: tuple[str, ...] = ()

    @property
    def exhausted(self) -> bool:
        """True when no subgraph has a live frontier left."""
        return not any(self.frontiers)


def initialize_state(
    topics: list[EntityRef] | tuple[EntityRef, ...], max_depth: int, max_width: int
) -> ExplorationState:
    """Round-zero state: one subgraph per topic, the bare entity as frontier."""
    if not topics:
        raise ValueError("at least one topic entity is required")
    return ExplorationState(
        subgraphs=tuple(Subgraph.initial(topic) for topic in topics),
        frontiers=tuple({0: topic} for topic in topics),
        round=0,
        max_depth=max_depth,
        max_width=max_width,
    )


def update_path(
    path: ReasoningPath,
    path_is_head: bool,
    is_head: bool,
    relation: RelationRef,
    entity: EntityRef,
) -> ReasoningPath:
    """Grow a path by one hop on the side named by ``path_is_head``.

    ``is_head`` states whether the frontier entity (the path end when
    ``path_is_head`` is false, the origin otherwise) is the head of the
    traversed triple.
    """
    if not path_is_head:
        direction = Direction.FORWARD if is_head else Direction.BACKWARD
        step = PathStep(direction, relation, entity)
        return replace(path, steps=path.steps + (step,))
    # Prepending: the new entity becomes the origin; the step that leads
    # from it to the old origin carries the arrow.
    direction = Direction.BACKWARD if is_head else Direction.FORWARD
    step = PathStep(direction, relation, path.origin)
    return replace(path, origin=entity, steps=(step,) + path.steps)


def _ipg_text(ipg_paths: tuple[ReasoningPath, ...] | list[ReasoningPath]) -> str:
    return "\n".join(render_path(path) for path in ipg_paths)


def explore_relations(
    state: ExplorationState,
    index: int,
    question: str,
    ipg_paths: tuple[ReasoningPath, ...] | list[ReasoningPath],
    agent: AgentGateway,
    backend: KnowledgeBackend,
    ledger: CostLedger | None,
    width: int = 7,
    max_retries: int = 2,
) -> list[SelectedRelation]:
    """List relations around subgraph ``index``'s frontier and let the agent pick.

    Candidates pair every frontier entity's head relations (frontier as
    head) and tail relations (frontier as tail), deduplicated by name while
    keeping both role taggings.  No candidates, or a selection that stays
    malformed through the retry budget, yields an empty pick list and costs
    no extra calls.
    """
    frontier = state.frontiers[index]
    if not frontier:
        return []
    roles: dict[str, list[bool]] = {}
    order: list[str] = []
    for path_index in sorted(frontier):
        entity = frontier[path_index]
        for relation in backend.head_relations(entity):
            flags = roles.setdefault(relation.name, [])
            if True not in flags:
                flags.append(True)
            if relation.name not in order:
                order.append(relation.name)
        for relation in backend.tail_relations(entity):
            flags = roles.setdefault(relation.name, [])
            if False not in flags:
                flags.append(False)
            if relation.name not in order:
                order.append(relation.name)
    if not order:
        return []
    candidates = [RelationRef(name) for name in order]
    prompt = render_prompt(
        PromptKind.RELATION_EXPLORATION,
        {
            "question": question,
            "topicEntity": state.subgraphs[index].topic.display,
            "inferencePaths": _ipg_text(ipg_paths),
            "relationList": order,
            "relationWidth": width,
        },
    )
    try:
        picked = complete_and_parse(
            agent,
            prompt,
            PromptKind.RELATION_EXPLORATION,
            lambda text: parse_relation_selection(text, candidates, width),
            ledger,
            max_retries,
        )
    except MalformedSelection:
        logger.warning("relation selection unusable for subgraph %d; freezing", index)
        return []
    selected = []
    for relation in picked:
        for is_head in roles[relation.name]:
            selected.append(SelectedRelation(relation, is_head))
    return selected


def explore_entities(
    state: ExplorationState,
    index: int,
    question: str,
    ipg_paths: tuple[ReasoningPath, ...] | list[ReasoningPath],
    selected_relations: list[SelectedRelation],
    agent: AgentGateway,
    backend: KnowledgeBackend,
    ledger: CostLedger | None,
    width: int = 7,
    max_retries: int = 2,
) -> list[SelectedEntity]:
    """Fetch neighbors along the picked relations and let the agent pick again.

    Every candidate keeps its provenance (frontier entity, relation, role),
    so the subgraph update can place the grown step exactly.  Labels are
    resolved before the candidate list is serialized into the prompt.
    """
    frontier = state.frontiers[index]
    if not frontier or not selected_relations:
        return []
    candidates: list[SelectedEntity] = []
    seen_keys: set[tuple[str, str, bool, int]] = set()
    for path_index in sorted(frontier):
        frontier_entity = frontier[path_index]
        for picked in selected_relations:
            if picked.frontier_is_head:
                neighbors = backend.tail_entities(frontier_entity, picked.relation)
            else:
                neighbors = backend.head_entities(frontier_entity, picked.relation)
            for neighbor in neighbors:
                key = (neighbor.id, picked.relation.name, picked.frontier_is_head, path_index)
                if key in seen_keys:
                    continue
                seen_keys.add(key)
                candidates.append(
                    SelectedEntity(
                        entity=backend.resolve_label(neighbor),
                        via=picked.relation,
                        frontier_is_head=picked.frontier_is_head,
                        path_index=path_index,
                        frontier=frontier_entity,
                    )
                )
    if not candidates:
        return []
    names: list[str] = []
    unique_entities: list[EntityRef] = []
    seen_ids: set[str] = set()
    for candidate in candidates:
        if candidate.entity.id not in seen_ids:
            seen_ids.add(candidate.entity.id)
            unique_entities.append(candidate.entity)
            if candidate.entity.display not in names:
                names.append(candidate.entity.display)
    relation_names = []
    for picked in selected_relations:
        if picked.relation.name not in relation_names:
            relation_names.append(picked.relation.name)
    prompt = render_prompt(
        PromptKind.ENTITY_EXPLORATION,
        {
            "question": question,
            "topicEntity": state.subgraphs[index].topic.display,
            "inferencePaths": _ipg_text(ipg_paths),
            "relationList": relation_names,
            "entityList": names,
        },
    )
    try:
        picked_entities = complete_and_parse(
            agent,
            prompt,
            PromptKind.ENTITY_EXPLORATION,
            lambda text: parse_entity_selection(text, unique_entities, width),
            ledger,
            max_retries,
        )
    except MalformedSelection:
        logger.warning("entity selection unusable for subgraph %d; freezing", index)
        return []
    picked_ids = {entity.id for entity in picked_entities}
    ordering = {entity.id: position for position, entity in enumerate(picked_entities)}
    chosen = [c for c in candidates if c.entity.id in picked_ids]
    chosen.sort(key=lambda c: (ordering[c.entity.id], c.path_index))
    return chosen


def update_subgraph(
    state: ExplorationState, index: int, selections: list[SelectedEntity]
) -> ExplorationState:
    """Grow subgraph ``index`` by the picked entities and refresh its frontier.

    A path with several selections is cloned once per selection; a path with
    none is frozen in place (kept in the subgraph, dropped from the
    frontier).  Live paths are capped at ``max_width`` in selection order,
    and duplicate whole paths are deduplicated on insert.
    """
    subgraph = state.subgraphs[index]
    frontier = state.frontiers[index]
    kept = selections[: state.max_width]
    by_path: dict[int, list[SelectedEntity]] = {}
    for selection in kept:
        by_path.setdefault(selection.path_index, []).append(selection)

    new_paths: list[ReasoningPath] = []
    new_frontier: dict[int, EntityRef] = {}
    seen: set[ReasoningPath] = set()

    def add(path: ReasoningPath, endpoint: EntityRef | None = None) -> bool:
        if path in seen:
            return False
        seen.add(path)
        new_paths.append(path)
        if endpoint is not None:
            new_frontier[len(new_paths) - 1] = endpoint
        return True

    for path_index, path in enumerate(subgraph.paths):
        extensions = by_path.get(path_index) if path_index in frontier else None
        if not extensions:
            add(path)
            continue
        grew = False
        for selection in extensions:
            child = update_path(
                path,
                path_is_head=False,
                is_head=selection.frontier_is_head,
                relation=selection.via,
                entity=selection.entity,
            )
            if add(child, endpoint=selection.entity):
                grew = True
        if not grew:
            add(path)  # every clone collided with an existing path

    paths = dedup_paths(new_paths)
    new_subgraph = Subgraph(
        topic=subgraph.topic,
        paths=paths,
        round=max((path.hops for path in paths), default=0),
    )
    added = tuple(render_path(path) for path in paths if path not in subgraph.paths)
    subgraphs = list(state.subgraphs)
    frontiers = list(state.frontiers)
    subgraphs[index] = new_subgraph
    frontiers[index] = new_frontier
    return replace(
        state,
        subgraphs=tuple(subgraphs),
        frontiers=tuple(frontiers),
        last_new_paths=state.last_new_paths + added,
    )


def freeze_subgraph(state: ExplorationState, index: int) -> ExplorationState:
    """Drop subgraph ``index`` from further exploration, keeping its paths."""
    frontiers = list(state.frontiers)
    frontiers[index] = {}
    return replace(state, frontiers=tuple(frontiers))


def run_round(
    state: ExplorationState,
    question: str,
    ipg_paths: tuple[ReasoningPath, ...] | list[ReasoningPath],
    agent: AgentGateway,
    backend: KnowledgeBackend,
    ledger: CostLedger | None,
    relation_width: int = 7,
    entity_width: int = 7,
    max_retries: int = 2,
) -> ExplorationState:
    """Run one exploration round over every live subgraph.

    Subgraphs whose relation or entity stage comes back empty are frozen;
    the rest grow by one hop.  The round counter advances regardless, and
    ``last_new_paths`` is reset to this round's additions.
    """
    state = replace(state, last_new_paths=())
    for index in range(len(state.subgraphs)):
        if not state.frontiers[index]:
            continue
        relations = explore_relations(
            state, index, question, ipg_paths, agent, backend, ledger, relation_width, max_retries
        )
        if not relations:
            state = freeze_subgraph(state, index)
            continue
        entities = explore_entities(
            state,
            index,
            question,
            ipg_paths,
            relations,
            agent,
            backend,
            ledger,
            entity_width,
            max_retries,
        )
        if not entities:
            state = freeze_subgraph(state, index)
            continue
        state = update_subgraph(state, index, entities)
    return replace(state, round=state.round + 1)
