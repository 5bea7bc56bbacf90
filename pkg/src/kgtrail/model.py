"""Domain types: entities, relations, triples and directed reasoning paths.

The arrow notation rendered and parsed here is the wire format used inside
prompts, reports and exports.  A path alternates entity and relation tokens,
with each relation flanked by two identical direction markers:

    Canberra → capital of → Australia ← seat of ← Parliament House

A forward step ``X → r → Y`` asserts the stored triple ``(X, r, Y)``; a
backward step ``X ← r ← Y`` asserts ``(Y, r, X)``.  Rendering and parsing
are inverses for identifier-only paths, which lets path text round-trip
between the engine and the agent.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .errors import MalformedPath


class Direction(enum.Enum):
    """Traversal direction of one path step relative to the stored triple."""

    FORWARD = "→"
    BACKWARD = "←"


class PathSource(enum.Enum):
    """Provenance of a reasoning path."""

    INTERNAL = "internal"  # elicited from the agent's own knowledge
    EXTERNAL = "external"  # assembled from knowledge-graph exploration


@dataclass(frozen=True)
class EntityRef:
    """A graph entity: machine identifier plus optional display label."""

    id: str
    label: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("entity id must be non-empty")
        if self.label is not None and not self.label:
            raise ValueError("entity label, when present, must be non-empty")

    @property
    def display(self) -> str:
        """Human-readable name: the label when known, otherwise the id."""
        return self.label if self.label is not None else self.id


@dataclass(frozen=True)
class RelationRef:
    """A named relation."""

    name: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("relation name must be non-empty")


@dataclass(frozen=True)
class Triple:
    """One stored fact, head → relation → tail."""

    head: EntityRef
    relation: RelationRef
    tail: EntityRef


@dataclass(frozen=True)
class PathStep:
    """One hop of a reasoning path: a direction-tagged relation and the entity reached."""

    direction: Direction
    relation: RelationRef
    entity: EntityRef

    def as_triple(self, previous: EntityRef) -> tuple[Triple, Direction]:
        """The stored triple this step asserts, given the entity it departs from."""
        if self.direction is Direction.FORWARD:
            return Triple(previous, self.relation, self.entity), self.direction
        return Triple(self.entity, self.relation, previous), self.direction


@dataclass(frozen=True)
class ReasoningPath:
    """A directed chain of steps starting at an origin entity."""

    origin: EntityRef
    steps: tuple[PathStep, ...] = ()
    source: PathSource = PathSource.EXTERNAL

    def __post_init__(self) -> None:
        if not isinstance(self.steps, tuple):
            object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def hops(self) -> int:
        return len(self.steps)

    @property
    def end(self) -> EntityRef:
        """The entity the path currently terminates at."""
        return self.steps[-1].entity if self.steps else self.origin

    def entities(self) -> list[EntityRef]:
        """All entities along the path, origin first."""
        return [self.origin] + [s.entity for s in self.steps]


@dataclass(frozen=True)
class Subgraph:
    """All reasoning paths explored for one topic entity.

    ``round`` is the number of exploration rounds applied; it always equals
    the maximum hop count over the contained paths.
    """

    topic: EntityRef
    paths: tuple[ReasoningPath, ...] = field(default=())
    round: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.paths, tuple):
            object.__setattr__(self, "paths", tuple(self.paths))

    @classmethod
    def initial(cls, topic: EntityRef) -> Subgraph:
        """Round-zero subgraph: the bare topic entity as a zero-hop path."""
        return cls(topic=topic, paths=(ReasoningPath(origin=topic),), round=0)


_ARROW_SPLIT = re.compile(r"(→|←)")


def _normalize_arrows(text: str) -> str:
    # ASCII spellings are tolerated on input; canonical output is unicode.
    return text.replace("->", "→").replace("<-", "←")


def render_path(path: ReasoningPath) -> str:
    """Render a path in arrow notation, e.g. ``A → r → B ← s ← C``."""
    parts = [path.origin.display]
    for step in path.steps:
        arrow = step.direction.value
        parts.extend([arrow, step.relation.name, arrow, step.entity.display])
    return " ".join(parts)


def parse_path(text: str, source: PathSource = PathSource.INTERNAL) -> ReasoningPath:
    """Parse arrow notation back into a path.

    Tolerates ``->``/``<-`` in place of the unicode arrows and arbitrary
    spacing around tokens.  Entities parsed from text carry no label; the
    surface form becomes the id.

    Raises:
        MalformedPath: when the token structure is not entity/relation
            alternation or the two markers of a step disagree.
    """
    pieces = [piece.strip() for piece in _ARROW_SPLIT.split(_normalize_arrows(text))]
    if len(pieces) % 4 != 1:
        raise MalformedPath(f"unbalanced path structure: {text!r}")
    if not pieces[0]:
        raise MalformedPath(f"path has no origin entity: {text!r}")
    steps = []
    for i in range(1, len(pieces), 4):
        first, relation, second, entity = pieces[i : i + 4]
        if first != second:
            raise MalformedPath(f"direction markers disagree in step {i // 4 + 1}: {text!r}")
        if not relation or not entity:
            raise MalformedPath(f"empty relation or entity token: {text!r}")
        steps.append(PathStep(Direction(first), RelationRef(relation), EntityRef(entity)))
    return ReasoningPath(origin=EntityRef(pieces[0]), steps=tuple(steps), source=source)


def subgraph_triples(subgraph: Subgraph) -> set[tuple[Triple, Direction]]:
    """Every (triple, traversal direction) pair asserted by the subgraph's paths."""
    found: set[tuple[Triple, Direction]] = set()
    for path in subgraph.paths:
        previous = path.origin
        for step in path.steps:
            found.add(step.as_triple(previous))
            previous = step.entity
    return found


def dedup_paths(paths: list[ReasoningPath] | tuple[ReasoningPath, ...]) -> tuple[ReasoningPath, ...]:
    """Drop exact duplicate paths, keeping first occurrence order."""
    seen: set[ReasoningPath] = set()
    kept = []
    for path in paths:
        if path not in seen:
            seen.add(path)
            kept.append(path)
    return tuple(kept)
