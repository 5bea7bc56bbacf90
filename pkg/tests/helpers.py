"""Scenario builders shared by unit and acceptance tests.

The chain scenario builder constructs a knowledge graph, the exact script a
run will consume, and an independent expectation of every prompt/response
pair the run should produce.  The expectation is composed from the
scenario's own bookkeeping (which chain grows which hop in which round), not
from the pipeline, so transcript and cost assertions are real oracles.
"""

from __future__ import annotations

import json
import random
import re
from collections import defaultdict
from dataclasses import dataclass, field

from kgtrail.answer import EngineSettings
from kgtrail.backend import InMemoryBackend
from kgtrail.gateway import AgentGateway, ScriptRecord, ScriptedAgent
from kgtrail.metering import approx_token_count
from kgtrail.prompts import PromptKind, render_prompt

GIBBERISH = "absolutely not parseable output"


def relation_reply(names: list[str]) -> str:
    return json.dumps({"Relations": list(names)})


def entity_reply(names: list[str]) -> str:
    return json.dumps({"Entities": list(names)})


def eval_reply(answerable: bool, response: str = "") -> str:
    return json.dumps({"Answerable": answerable, "Response": response})


def ipg_reply(paths: list[str], answer: str) -> str:
    return json.dumps({"reasoning_path": list(paths), "response": answer})


@dataclass
class ChainScenario:
    """A fully scripted multi-chain run plus its independent expectations."""

    question: str
    topics: dict[str, str]
    backend: InMemoryBackend
    script: list[ScriptRecord]
    settings: EngineSettings
    expected_pairs: list[tuple[PromptKind, str, str]]
    internal_answer: str
    gate_answer: str
    final_entities: list[str]
    triples: list[tuple[str, str, str]]

    @property
    def expected_calls(self) -> int:
        return len(self.expected_pairs)

    @property
    def expected_input_tokens(self) -> int:
        return sum(approx_token_count(prompt) for _, prompt, _ in self.expected_pairs)

    @property
    def expected_output_tokens(self) -> int:
        return sum(approx_token_count(response) for _, _, response in self.expected_pairs)

    def agent(self) -> ScriptedAgent:
        return ScriptedAgent(list(self.script))


def chain_scenario(
    num_chains: int = 1,
    rounds: int = 1,
    gate: bool = True,
    max_depth: int = 3,
    triple_count: int = 15,
    retries: int = 0,
    inject: dict[int, int] | None = None,
    question: str | None = None,
) -> ChainScenario:
    """Build a run over ``num_chains`` disjoint chains of ``rounds`` hops.

    Each round every chain grows by exactly one hop, then one joint
    evaluation runs.  With ``gate`` the last evaluation answers true; without
    it every evaluation answers false and the loop dies on the depth budget
    (``max_depth`` is forced to ``rounds`` so the chains never starve first).

    ``inject`` maps positions in the clean script to a count of unparseable
    records inserted before that position; the run only survives them when
    ``retries`` covers the count.
    """
    if gate and rounds > max_depth:
        raise ValueError("gate round cannot exceed max_depth")
    if not gate:
        max_depth = rounds
    question = question or f"which entity ends chain zero after {rounds} hops?"
    topics = {f"t{i}": f"t{i}" for i in range(num_chains)}

    triples = []
    for i in range(num_chains):
        previous = f"t{i}"
        for j in range(1, rounds + 1):
            triples.append((previous, f"rel_{i}_{j}", f"e{i}_{j}"))
            previous = f"e{i}_{j}"
    backend = InMemoryBackend(triples)

    ipg_path = "t0 → related to → answer0"
    internal_answer = f"internal guess for: {question}"
    paths_text = ipg_path if triple_count > 0 else ""
    gate_answer = f"the answer to the question {question} is e0_{rounds}" if rounds else ""

    def chain_path(i: int, upto: int) -> str:
        parts = [f"t{i}"]
        for h in range(1, upto + 1):
            parts.append(f"→ rel_{i}_{h} → e{i}_{h}")
        return " ".join(parts)

    clean: list[tuple[PromptKind, str, str]] = []
    if triple_count > 0:
        prompt = render_prompt(
            PromptKind.IPG, {"question": question, "tripleCount": triple_count}
        )
        clean.append((PromptKind.IPG, prompt, ipg_reply([ipg_path], internal_answer)))
    for j in range(1, rounds + 1):
        for i in range(num_chains):
            if j == 1:
                relation_candidates = [f"rel_{i}_1"]
            else:
                relation_candidates = [f"rel_{i}_{j}", f"rel_{i}_{j - 1}"]
            prompt = render_prompt(
                PromptKind.RELATION_EXPLORATION,
                {
                    "question": question,
                    "topicEntity": f"t{i}",
                    "inferencePaths": paths_text,
                    "relationList": relation_candidates,
                    "relationWidth": 7,
                },
            )
            clean.append(
                (PromptKind.RELATION_EXPLORATION, prompt, relation_reply([f"rel_{i}_{j}"]))
            )
            prompt = render_prompt(
                PromptKind.ENTITY_EXPLORATION,
                {
                    "question": question,
                    "topicEntity": f"t{i}",
                    "inferencePaths": paths_text,
                    "relationList": [f"rel_{i}_{j}"],
                    "entityList": [f"e{i}_{j}"],
                },
            )
            clean.append(
                (PromptKind.ENTITY_EXPLORATION, prompt, entity_reply([f"e{i}_{j}"]))
            )
        subgraph_text = "\n".join(chain_path(i, j) for i in range(num_chains))
        prompt = render_prompt(
            PromptKind.EVALUATION, {"question": question, "subgraph": subgraph_text}
        )
        if gate and j == rounds:
            response = eval_reply(True, gate_answer)
        else:
            response = eval_reply(False, f"undecided at round {j}")
        clean.append((PromptKind.EVALUATION, prompt, response))

    script: list[ScriptRecord] = []
    expected: list[tuple[PromptKind, str, str]] = []
    for position, (kind, prompt, response) in enumerate(clean):
        for _ in range((inject or {}).get(position, 0)):
            script.append(ScriptRecord(response=GIBBERISH, kind=kind))
            expected.append((kind, prompt, GIBBERISH))
        script.append(ScriptRecord(response=response, kind=kind))
        expected.append((kind, prompt, response))

    settings = EngineSettings(
        max_depth=max_depth,
        triple_count=triple_count,
        max_retries_on_malformed=retries,
    )
    return ChainScenario(
        question=question,
        topics=topics,
        backend=backend,
        script=script,
        settings=settings,
        expected_pairs=expected,
        internal_answer=internal_answer,
        gate_answer=gate_answer,
        final_entities=[f"e{i}_{rounds}" for i in range(num_chains)] if rounds else [],
        triples=triples,
    )


_QUOTED = re.compile(r'"([^"]*)"')


def offered_names(prompt: str, list_name: str) -> list[str]:
    """Pull the quoted candidate names out of a rendered prompt line."""
    for line in prompt.splitlines():
        if line.startswith(f"{list_name}: "):
            return _QUOTED.findall(line)
    return []


class RandomAgent(AgentGateway):
    """Seeded agent that picks random subsets of whatever was offered.

    Used for soundness fuzzing: whatever it picks, the explorer must only
    ever build paths out of stored facts.
    """

    def __init__(self, seed: int, answer_probability: float = 0.2) -> None:
        super().__init__()
        self.rng = random.Random(seed)
        self.answer_probability = answer_probability

    def _pick(self, names: list[str]) -> list[str]:
        if not names:
            return []
        count = self.rng.randint(0, min(len(names), 7))
        return self.rng.sample(names, count)

    def _complete(self, prompt: str, temperature: float, kind: PromptKind) -> str:
        if kind is PromptKind.IPG:
            return ipg_reply(["seed → guessed from → noise"], "random internal guess")
        if kind is PromptKind.RELATION_EXPLORATION:
            return relation_reply(self._pick(offered_names(prompt, "RelationList")))
        if kind is PromptKind.ENTITY_EXPLORATION:
            return entity_reply(self._pick(offered_names(prompt, "EntityList")))
        if kind is PromptKind.EVALUATION:
            answerable = self.rng.random() < self.answer_probability
            return eval_reply(answerable, "random verdict answer")
        return "random baseline answer"


def random_kg(rng: random.Random, max_triples: int = 1000) -> tuple[list[tuple[str, str, str]], str]:
    """A random store of at most ``max_triples`` facts plus a topic entity id."""
    entity_count = rng.randint(5, 60)
    relation_count = rng.randint(2, 12)
    triple_count = rng.randint(4, max_triples)
    entities = [f"n{i}" for i in range(entity_count)]
    relations = [f"rel{i}" for i in range(relation_count)]
    triples = set()
    for _ in range(triple_count):
        triples.add((rng.choice(entities), rng.choice(relations), rng.choice(entities)))
    topic = rng.choice([h for h, _, _ in triples])
    return sorted(triples), topic


def enumerate_directed_paths(
    triples: list[tuple[str, str, str]], origin: str, max_hops: int
) -> set[tuple]:
    """Exhaustive directed-path enumeration, the explorer-independent oracle.

    A path is ``(origin, ((arrow, relation, entity), ...))`` where arrow is
    the unicode direction marker; a forward hop walks head to tail, a
    backward hop walks tail to head.
    """
    adjacency: dict[str, list[tuple[str, str, str]]] = defaultdict(list)
    for head, relation, tail in triples:
        adjacency[head].append(("→", relation, tail))
        adjacency[tail].append(("←", relation, head))
    found: set[tuple] = set()

    def walk(node: str, steps: tuple) -> None:
        found.add((origin, steps))
        if len(steps) >= max_hops:
            return
        for arrow, relation, neighbor in adjacency[node]:
            walk(neighbor, steps + ((arrow, relation, neighbor),))

    walk(origin, ())
    return found


def path_signature(path) -> tuple:
    """The enumeration-oracle form of a parsed or built path (id space)."""
    return (
        path.origin.id,
        tuple((step.direction.value, step.relation.name, step.entity.id) for step in path.steps),
    )
