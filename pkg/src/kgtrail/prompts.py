"""Prompt templates and byte-stable rendering.

Six templates drive the engine and the baselines: internal-path elicitation,
relation selection, entity selection, answerability evaluation, a six-shot
chain-of-thought baseline and a minimal direct-answer baseline.  Rendering is
plain ``string.Template`` substitution, so for fixed bindings the emitted
text is stable down to the byte; golden tests pin every template.

List-valued bindings are serialized as comma-separated double-quoted names
before substitution.  The count slots (``tripleCount``, ``relationWidth``,
``entityWidth``) default to the standard settings when unbound.
"""

from __future__ import annotations

import enum
import string
from collections.abc import Iterable, Mapping

from .errors import MissingBinding


class PromptKind(str, enum.Enum):
    """The six prompt shapes the engine can issue."""

    IPG = "IPG"
    RELATION_EXPLORATION = "RelationExploration"
    ENTITY_EXPLORATION = "EntityExploration"
    EVALUATION = "Evaluation"
    COT = "CoT"
    IO = "IO"


_IPG_TEMPLATE = """\
You need to answer Question using follow steps:
step1: You need to extract the most relevant topic entities from the Question.
step2: Based on the topic entities and Question. List the $tripleCount related knowledge triples from high to low in terms of relevance to the Question. The triples are given in the form of (entity, relation, entity).
step3: Based on the knowledge triples you listed, combined with the Question and topic entities, you need to give the final answer. In addition, you need to give the reasoning path. The overall format should be "entity1→relation1→entity2→relation2→entity3→...→end".
The answer format is {reasoning_path : ["entity1→relation1→entity2→relation2→entity3→...→end"], "response": "based on the knowledge, the answer to the question $question is xxxx" }
Query:$question"""

_RELATION_TEMPLATE = """\
Dict : {
"Question" : $question,
"Topic entity" : $topicEntity,
"Knowledge Path" : $inferencePaths,
}
RelationList: $relationList
Now you need to find out up to $relationWidth most relevant relations from RelationList to each entry in the dictionary Dict and put them into a list called Relations. The answer format is: { "Relations":[xxx, xxx, xxx,...] (length up to 5) }. Do not output any extra content except what is required by the format.
Answer:"""

_ENTITY_TEMPLATE = """\
Dict : {
"Question" : $question,
"Topic entity" : $topicEntity,
"Knowledge Path" : $inferencePaths,
"RelationList" : $relationList,
}
EntityList: $entityList
Now you need to find out up to $entityWidth entities that are most relevant to each entry in the dictionary Dict from EntityList by relevance, and put them into a list called Entities. The answer format is: { "Entities":[xxx, xxx, xxx,...] (length up to 5) }. Do not output any extra content except what is required by the format.
Answer:"""

_EVALUATION_TEMPLATE = """\
Reasoning_path:$subgraph
Based on the Reasoning_path and your own knowledge, you need to determine whether the Question:$question can be answered. '->' and '<-' indicate the direction of Reasoning_path between entities and relationships.
Requests:
1. The answer format is: { "Answerable": True or False, "Response": "the answer to the question $question is xxxx" }
Answer:"""

_COT_TEMPLATE = """\
Q: What state is home to the university that is represented in sports by George Washington Colonials men's basketball?
A: First, the education institution has a sports team named George Washington Colonials men's basketball in is George Washington University, Second, George Washington University is in Washington D.C.
The answer is {Washington, D.C.}.

Q: Who lists Pramatha Chaudhuri as an influence and wrote Jana Gana Mana?
A: First, Bharoto Bhagyo Bidhata wrote Jana Gana Mana. Second, Bharoto Bhagyo Bidhata lists Pramatha Chaudhuri as an influence.
The answer is {Bharoto Bhagyo Bidhata}.

Q: Who was the artist nominated for an award for You Drive Me Crazy?
A: First, the artist nominated for an award for You Drive Me Crazy is Britney Spears.
The answer is {Jason Allen Alexander}.

Q: What person born in Siegen influenced the work of Vincent Van Gogh?
A: First, Peter Paul Rubens, Claude Monet and etc. influenced the work of Vincent Van Gogh. Second, Peter Paul Rubens born in Siegen.
The answer is {Peter Paul Rubens}.

Q: What is the country close to Russia where Mikheil Saakashvii holds a government position?
A: First, China, Norway, Finland, Estonia and Georgia is close to Russia. Second, Mikheil Saakashvii holds a government position at Georgia.
The answer is {Georgia}.

Q: What drug did the actor who portrayed the character Urethane Wheels Guy overdosed on?
A: First, Mitchell Lee Hedberg portrayed character Urethane Wheels Guy. Second, Mitchell Lee Hedberg overdose Heroin.
The answer is {Heroin}.

Q: $question
A:"""

_IO_TEMPLATE = """\
Q: $question
A:"""

_TEMPLATES: dict[PromptKind, str] = {
    PromptKind.IPG: _IPG_TEMPLATE,
    PromptKind.RELATION_EXPLORATION: _RELATION_TEMPLATE,
    PromptKind.ENTITY_EXPLORATION: _ENTITY_TEMPLATE,
    PromptKind.EVALUATION: _EVALUATION_TEMPLATE,
    PromptKind.COT: _COT_TEMPLATE,
    PromptKind.IO: _IO_TEMPLATE,
}

_REQUIRED: dict[PromptKind, frozenset[str]] = {
    PromptKind.IPG: frozenset({"question"}),
    PromptKind.RELATION_EXPLORATION: frozenset(
        {"question", "topicEntity", "inferencePaths", "relationList"}
    ),
    PromptKind.ENTITY_EXPLORATION: frozenset(
        {"question", "topicEntity", "inferencePaths", "relationList", "entityList"}
    ),
    PromptKind.EVALUATION: frozenset({"question", "subgraph"}),
    PromptKind.COT: frozenset({"question"}),
    PromptKind.IO: frozenset({"question"}),
}

_DEFAULTS: dict[PromptKind, dict[str, str]] = {
    PromptKind.IPG: {"tripleCount": "15"},
    PromptKind.RELATION_EXPLORATION: {"relationWidth": "7"},
    PromptKind.ENTITY_EXPLORATION: {"entityWidth": "7"},
}


def render_name_list(names: Iterable[str]) -> str:
    """Serialize names as a comma-separated list of double-quoted strings."""
    return ", ".join(f'"{name}"' for name in names)


def render_prompt(kind: PromptKind, bindings: Mapping[str, object]) -> str:
    """Fill the template for ``kind`` with ``bindings``.

    Sequence values are serialized with :func:`render_name_list`; everything
    else is substituted via ``str()``.

    Raises:
        MissingBinding: when a required slot is absent from ``bindings``.
    """
    merged = dict(_DEFAULTS.get(kind, {}))
    for name, value in bindings.items():
        if isinstance(value, (list, tuple)):
            merged[name] = render_name_list(str(item) for item in value)
        else:
            merged[name] = str(value)
    missing = _REQUIRED[kind] - merged.keys()
    if missing:
        raise MissingBinding(f"{kind.value} prompt is missing bindings: {sorted(missing)}")
    try:
        return string.Template(_TEMPLATES[kind]).substitute(merged)
    except KeyError as exc:  # template slot without a default
        raise MissingBinding(f"{kind.value} prompt is missing binding: {exc}") from exc
