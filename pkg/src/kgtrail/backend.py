"""Knowledge backends: the query surface the explorer walks.

Two implementations share one interface: an in-memory triple store for
offline runs and tests, and a SPARQL 1.1 HTTP client for a real endpoint.
Both return deterministic, lexicographically ordered results, truncate at
the configured result limit, and filter relation listings through an
optional denylist of namespace prefixes.

The four query templates (head/tail relation listing, head/tail entity
lookup) are frozen strings; ``render_sparql`` fills them and golden tests
pin the bytes.  The HTTP client appends a documented ``LIMIT`` clause to the
rendered query; the templates themselves stay unbounded.
"""

from __future__ import annotations

import abc
import logging
import threading
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import BackendUnavailable, BadBinding, QueryRejected
from .model import EntityRef, RelationRef, Triple

logger = logging.getLogger(__name__)

FREEBASE_NS = "http://rdf.freebase.com/ns/"

# Relations whose namespaces are pure schema plumbing on Freebase dumps.
# Off by default; pass as BackendConfig.denylist to enable.
FREEBASE_META_PREFIXES = ("type.", "common.", "kg.", "freebase.")

SPARQL_TEMPLATES: dict[str, str] = {
    "head_relation": """\
PREFIX ns: <http://rdf.freebase.com/ns/>
SELECT DISTINCT ?relation
WHERE {
    ns:%s ?relation ?tail .
}""",
    "tail_relation": """\
PREFIX ns: <http://rdf.freebase.com/ns/>
SELECT DISTINCT ?relation
WHERE {
    ?head ?relation ns:%s .
}""",
    "head_entity": """\
PREFIX ns: <http://rdf.freebase.com/ns/>
SELECT DISTINCT ?Entity
WHERE {
    ns:%s ns:%s ?Entity .
}""",
    "tail_entity": """\
PREFIX ns: <http://rdf.freebase.com/ns/>
SELECT DISTINCT ?Entity
WHERE {
    ?Entity ns:%s ns:%s .
}""",
    "label": """\
PREFIX ns: <http://rdf.freebase.com/ns/>
SELECT DISTINCT ?name
WHERE {
    ns:%s ns:%s ?name .
}""",
}

_TEMPLATE_ARITY = {name: template.count("%s") for name, template in SPARQL_TEMPLATES.items()}


def render_sparql(template_id: str, bindings: tuple[str, ...]) -> str:
    """Fill one of the frozen query templates.

    Raises:
        BadBinding: on wrong arity or identifiers carrying whitespace,
            quotes, or bracket characters that would corrupt the query.
    """
    if template_id not in SPARQL_TEMPLATES:
        raise BadBinding(f"unknown query template: {template_id!r}")
    if len(bindings) != _TEMPLATE_ARITY[template_id]:
        raise BadBinding(
            f"{template_id} takes {_TEMPLATE_ARITY[template_id]} bindings, got {len(bindings)}"
        )
    for value in bindings:
        if not value:
            raise BadBinding("empty query binding")
        if any(ch.isspace() for ch in value) or any(ch in "\"'<>{}()" for ch in value):
            raise BadBinding(f"unsafe query binding: {value!r}")
    return SPARQL_TEMPLATES[template_id] % bindings


@dataclass(frozen=True)
class BackendConfig:
    """Settings shared by every backend."""

    endpoint_url: str = ""
    timeout: float = 30.0
    result_limit: int = 200
    denylist: tuple[str, ...] = ()
    name_predicate: str = "type.object.name"
    retries: int = 1

    def __post_init__(self) -> None:
        if self.result_limit < 1:
            raise ValueError("result_limit must be at least 1")


class KnowledgeBackend(abc.ABC):
    """Query surface: relation listings, neighbor lookups, label resolution."""

    def __init__(self, config: BackendConfig | None = None) -> None:
        self.config = config or BackendConfig()
        self.query_count = 0
        self._label_cache: dict[str, str] = {}
        self._label_lock = threading.Lock()

    # -- relation listings ------------------------------------------------

    @abc.abstractmethod
    def head_relations(self, entity: EntityRef) -> list[RelationRef]:
        """Relations where ``entity`` appears as head, sorted by name."""

    @abc.abstractmethod
    def tail_relations(self, entity: EntityRef) -> list[RelationRef]:
        """Relations where ``entity`` appears as tail, sorted by name."""

    # -- neighbor lookups --------------------------------------------------

    @abc.abstractmethod
    def tail_entities(self, entity: EntityRef, relation: RelationRef) -> list[EntityRef]:
        """Tails of ``(entity, relation, ?)``, sorted by id."""

    @abc.abstractmethod
    def head_entities(self, entity: EntityRef, relation: RelationRef) -> list[EntityRef]:
        """Heads of ``(?, relation, entity)``, sorted by id."""

    # -- labels --------------------------------------------------------------

    @abc.abstractmethod
    def _lookup_label(self, entity_id: str) -> str | None:
        """Fetch a display label, or None when the store has none."""

    def resolve_label(self, entity: EntityRef) -> EntityRef:
        """Attach a display label, caching per backend instance.

        Falls back to the id itself when no label exists, so the result
        always carries a label.
        """
        if entity.label is not None:
            return entity
        cached = self._label_cache.get(entity.id)
        if cached is None:
            found = self._lookup_label(entity.id)
            cached = found if found else entity.id
            with self._label_lock:
                self._label_cache.setdefault(entity.id, cached)
        return EntityRef(id=entity.id, label=cached)

    # -- shared filters ----------------------------------------------------

    def _filter_relations(self, names: Iterable[str]) -> list[RelationRef]:
        out = []
        for name in sorted(names):
            if any(name.startswith(prefix) for prefix in self.config.denylist):
                continue
            out.append(RelationRef(name))
            if len(out) >= self.config.result_limit:
                break
        return out

    def _limit_entities(self, ids: Iterable[str]) -> list[EntityRef]:
        return [EntityRef(i) for i in sorted(ids)[: self.config.result_limit]]


class InMemoryBackend(KnowledgeBackend):
    """Triple store held in dictionaries; the offline workhorse."""

    def __init__(
        self,
        triples: Iterable[tuple[str, str, str]],
        labels: Mapping[str, str] | None = None,
        config: BackendConfig | None = None,
    ) -> None:
        super().__init__(config)
        self.labels = dict(labels or {})
        self.triples: set[tuple[str, str, str]] = set()
        self._head_rels: dict[str, set[str]] = {}
        self._tail_rels: dict[str, set[str]] = {}
        self._tails: dict[tuple[str, str], set[str]] = {}
        self._heads: dict[tuple[str, str], set[str]] = {}
        for head, relation, tail in triples:
            if not head or not relation or not tail:
                raise ValueError(f"triple fields must be non-empty: {(head, relation, tail)!r}")
            self.triples.add((head, relation, tail))
            self._head_rels.setdefault(head, set()).add(relation)
            self._tail_rels.setdefault(tail, set()).add(relation)
            self._tails.setdefault((head, relation), set()).add(tail)
            self._heads.setdefault((tail, relation), set()).add(head)

    def head_relations(self, entity: EntityRef) -> list[RelationRef]:
        self.query_count += 1
        return self._filter_relations(self._head_rels.get(entity.id, ()))

    def tail_relations(self, entity: EntityRef) -> list[RelationRef]:
        self.query_count += 1
        return self._filter_relations(self._tail_rels.get(entity.id, ()))

    def tail_entities(self, entity: EntityRef, relation: RelationRef) -> list[EntityRef]:
        self.query_count += 1
        return self._limit_entities(self._tails.get((entity.id, relation.name), ()))

    def head_entities(self, entity: EntityRef, relation: RelationRef) -> list[EntityRef]:
        self.query_count += 1
        return self._limit_entities(self._heads.get((entity.id, relation.name), ()))

    def contains(self, triple: Triple) -> bool:
        """Membership check used by soundness tests."""
        return (triple.head.id, triple.relation.name, triple.tail.id) in self.triples

    def _lookup_label(self, entity_id: str) -> str | None:
        self.query_count += 1
        return self.labels.get(entity_id)


class SparqlBackend(KnowledgeBackend):
    """SPARQL 1.1 protocol client over HTTP.

    Sends the rendered template plus a ``LIMIT`` clause derived from the
    configured result limit, parses JSON bindings, strips the namespace
    prefix from returned IRIs, and retries transient failures once before
    raising.
    """

    def __init__(self, config: BackendConfig, session: requests.Session | None = None) -> None:
        super().__init__(config)
        if not config.endpoint_url:
            raise ValueError("SparqlBackend needs a non-empty endpoint_url")
        self._session = session or requests.Session()

    def _execute(self, query: str, variable: str) -> list[str]:
        """Run one query and project ``variable`` from the bindings."""
        self.query_count += 1
        limited = f"{query}\nLIMIT {self.config.result_limit}"
        last_error: Exception | None = None
        for _ in range(max(1, self.config.retries + 1)):
            try:
                reply = self._session.post(
                    self.config.endpoint_url,
                    data={"query": limited},
                    headers={"Accept": "application/sparql-results+json"},
                    timeout=self.config.timeout,
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if 500 <= reply.status_code < 600:
                last_error = BackendUnavailable(
                    f"endpoint returned {reply.status_code}: {reply.text[:200]}"
                )
                continue
            if reply.status_code != 200:
                raise QueryRejected(f"endpoint returned {reply.status_code}: {reply.text[:200]}")
            try:
                bindings = reply.json()["results"]["bindings"]
            except (ValueError, KeyError, TypeError) as exc:
                raise QueryRejected(f"unparseable endpoint payload: {reply.text[:200]}") from exc
            values = []
            for binding in bindings:
                value = binding.get(variable, {}).get("value")
                if value is None:
                    continue
                if value.startswith(FREEBASE_NS):
                    value = value[len(FREEBASE_NS) :]
                values.append(value)
            return values
        raise BackendUnavailable(f"endpoint unreachable: {last_error}")

    def probe(self) -> None:
        """Cheap reachability check; QueryRejected still proves liveness."""
        try:
            self._execute(render_sparql("head_relation", ("m.0",)), "relation")
        except QueryRejected:
            pass

    def head_relations(self, entity: EntityRef) -> list[RelationRef]:
        values = self._execute(render_sparql("head_relation", (entity.id,)), "relation")
        return self._filter_relations(set(values))

    def tail_relations(self, entity: EntityRef) -> list[RelationRef]:
        values = self._execute(render_sparql("tail_relation", (entity.id,)), "relation")
        return self._filter_relations(set(values))

    def tail_entities(self, entity: EntityRef, relation: RelationRef) -> list[EntityRef]:
        values = self._execute(
            render_sparql("head_entity", (entity.id, relation.name)), "Entity"
        )
        return self._limit_entities(set(values))

    def head_entities(self, entity: EntityRef, relation: RelationRef) -> list[EntityRef]:
        values = self._execute(
            render_sparql("tail_entity", (relation.name, entity.id)), "Entity"
        )
        return self._limit_entities(set(values))

    def _lookup_label(self, entity_id: str) -> str | None:
        values = self._execute(
            render_sparql("label", (entity_id, self.config.name_predicate)), "name"
        )
        return values[0] if values else None


def load_triple_file(path: str | Path) -> list[tuple[str, str, str]]:
    """Read a tab-separated ``head<TAB>relation<TAB>tail`` file.

    Blank lines and ``#`` comments are skipped; any other malformed line is
    an error, since a silently dropped fact would poison soundness checks.
    """
    triples = []
    text = Path(path).read_text(encoding="utf-8")
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split("\t")
        if len(parts) != 3 or not all(part.strip() for part in parts):
            raise ValueError(f"{path}:{number}: expected head<TAB>relation<TAB>tail")
        triples.append((parts[0].strip(), parts[1].strip(), parts[2].strip()))
    return triples


def load_label_file(path: str | Path) -> dict[str, str]:
    """Read a tab-separated ``id<TAB>label`` file."""
    labels = {}
    text = Path(path).read_text(encoding="utf-8")
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split("\t")
        if len(parts) != 2 or not all(part.strip() for part in parts):
            raise ValueError(f"{path}:{number}: expected id<TAB>label")
        labels[parts[0].strip()] = parts[1].strip()
    return labels
