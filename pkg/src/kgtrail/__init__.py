"""Knowledge-graph question answering with agent-guided subgraph exploration.

The engine elicits an agent's own reasoning paths for a question, then walks
an external knowledge graph round by round, letting the agent pick relations
and entities, until an evaluation step judges the explored subgraphs
sufficient to answer.  Everything runs offline against an in-memory triple
store and a scripted agent, or live against a SPARQL endpoint and a chat
completions API.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .answer import AnswerOutcome, AnswerSource, EngineSettings, answer_question
from .backend import (
    BackendConfig,
    InMemoryBackend,
    KnowledgeBackend,
    SparqlBackend,
    load_label_file,
    load_triple_file,
    render_sparql,
)
from .config import EngineConfig, build_config, load_config_file
from .dotexport import export_dot
from .errors import KgTrailError
from .evalkit import (
    EvalResult,
    QARecord,
    hits_at_1,
    load_dataset,
    normalize_answer,
    run_baseline,
    run_engine,
)
from .gateway import (
    AgentConfig,
    AgentGateway,
    LiveAgent,
    ScriptedAgent,
    ScriptRecord,
    load_script,
)
from .inference import IpgResult, generate_inference, link_topic_entities
from .metering import CostLedger, CostRow, aggregate, approx_token_count
from .model import (
    Direction,
    EntityRef,
    PathSource,
    PathStep,
    ReasoningPath,
    RelationRef,
    Subgraph,
    Triple,
    parse_path,
    render_path,
    subgraph_triples,
)
from .prompts import PromptKind, render_prompt

__all__ = [
    "AgentConfig",
    "AgentGateway",
    "AnswerOutcome",
    "AnswerSource",
    "BackendConfig",
    "CostLedger",
    "CostRow",
    "Direction",
    "EngineConfig",
    "EngineSettings",
    "EntityRef",
    "EvalResult",
    "InMemoryBackend",
    "IpgResult",
    "KgTrailError",
    "KnowledgeBackend",
    "LiveAgent",
    "PathSource",
    "PathStep",
    "PromptKind",
    "QARecord",
    "ReasoningPath",
    "RelationRef",
    "ScriptRecord",
    "ScriptedAgent",
    "SparqlBackend",
    "Subgraph",
    "Triple",
    "aggregate",
    "answer_question",
    "approx_token_count",
    "build_config",
    "export_dot",
    "generate_inference",
    "hits_at_1",
    "link_topic_entities",
    "load_config_file",
    "load_dataset",
    "load_label_file",
    "load_script",
    "load_triple_file",
    "normalize_answer",
    "parse_path",
    "render_path",
    "render_prompt",
    "render_sparql",
    "run_baseline",
    "run_engine",
    "subgraph_triples",
]
