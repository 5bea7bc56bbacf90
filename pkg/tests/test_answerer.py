"""End-to-end answering control flow against scripted chain scenarios."""

from __future__ import annotations

import pytest

from helpers import GIBBERISH, chain_scenario, eval_reply, ipg_reply
from kgtrail.answer import (
    AnswerSource,
    EngineSettings,
    answer_question,
    evaluate_subgraphs,
)
from kgtrail.backend import InMemoryBackend
from kgtrail.errors import BackendUnavailable, NoTopicEntities
from kgtrail.gateway import ScriptRecord, ScriptedAgent
from kgtrail.metering import CostLedger
from kgtrail.model import EntityRef, Subgraph, parse_path, render_path
from kgtrail.prompts import PromptKind


def test_gate_fires_and_everything_matches_the_oracle():
    scenario = chain_scenario(num_chains=1, rounds=2, gate=True)
    ledger = CostLedger()
    outcome = answer_question(
        scenario.question,
        scenario.topics,
        scenario.agent(),
        scenario.backend,
        scenario.settings,
        ledger,
    )
    assert outcome.answer_text == scenario.gate_answer
    assert outcome.source is AnswerSource.SUBGRAPH
    assert outcome.answerable_round == 2
    assert not outcome.best_effort
    assert outcome.warnings == ()
    assert outcome.transcript == tuple(scenario.expected_pairs)
    assert ledger.call_count == scenario.expected_calls == 7  # 1 + 2 * (2*1 + 1)
    ends = {s.paths[-1].end.id for s in outcome.final_subgraphs}
    assert ends == set(scenario.final_entities)


def test_two_topics_budget():
    scenario = chain_scenario(num_chains=2, rounds=1, gate=True)
    ledger = CostLedger()
    outcome = answer_question(
        scenario.question,
        scenario.topics,
        scenario.agent(),
        scenario.backend,
        scenario.settings,
        ledger,
    )
    assert ledger.call_count == scenario.expected_calls == 6  # 1 + 1 * (2*2 + 1)
    assert len(outcome.final_subgraphs) == 2


def test_gate_never_fires_falls_back_to_internal_answer():
    scenario = chain_scenario(num_chains=1, rounds=2, gate=False)
    outcome = answer_question(
        scenario.question,
        scenario.topics,
        scenario.agent(),
        scenario.backend,
        scenario.settings,
    )
    assert outcome.answer_text == scenario.internal_answer
    assert outcome.source is AnswerSource.INTERNAL_FALLBACK
    assert outcome.answerable_round is None
    assert not outcome.best_effort


def test_no_internal_answer_surfaces_last_evaluation_best_effort():
    scenario = chain_scenario(num_chains=1, rounds=2, gate=False)
    script = list(scenario.script)
    script[0] = ScriptRecord(ipg_reply(["t0 → related to → answer0"], ""))
    outcome = answer_question(
        scenario.question,
        scenario.topics,
        ScriptedAgent(script),
        scenario.backend,
        scenario.settings,
    )
    assert outcome.answer_text == "undecided at round 2"
    assert outcome.source is AnswerSource.SUBGRAPH
    assert outcome.best_effort
    assert outcome.answerable_round == 2  # the round the text came from
    assert any("gate never fired" in w for w in outcome.warnings)


def test_zero_triples_skips_internal_paths():
    scenario = chain_scenario(num_chains=1, rounds=1, gate=True, triple_count=0)
    ledger = CostLedger()
    outcome = answer_question(
        scenario.question,
        scenario.topics,
        scenario.agent(),
        scenario.backend,
        scenario.settings,
        ledger,
    )
    kinds = [kind for kind, _, _ in ledger.transcript()]
    assert PromptKind.IPG not in kinds
    assert ledger.call_count == scenario.expected_calls == 3
    assert outcome.internal_paths == ()
    assert outcome.answer_text == scenario.gate_answer


def test_zero_depth_goes_straight_to_internal_answer():
    scenario = chain_scenario(num_chains=1, rounds=1, gate=True)
    script = [scenario.script[0]]  # only the elicitation record is consumed
    settings = EngineSettings(max_depth=0, triple_count=15)
    ledger = CostLedger()
    outcome = answer_question(
        scenario.question,
        scenario.topics,
        ScriptedAgent(script),
        scenario.backend,
        settings,
        ledger,
    )
    assert [kind for kind, _, _ in ledger.transcript()] == [PromptKind.IPG]
    assert outcome.answer_text == scenario.internal_answer
    assert outcome.source is AnswerSource.INTERNAL_FALLBACK


def test_nothing_ran_and_nothing_known_is_total():
    settings = EngineSettings(max_depth=0, triple_count=0)
    outcome = answer_question(
        "a question",
        {"t0": "t0"},
        ScriptedAgent([]),
        InMemoryBackend([("t0", "r", "x")]),
        settings,
    )
    assert outcome.answer_text == ""
    assert outcome.source is AnswerSource.INTERNAL_FALLBACK
    assert outcome.best_effort
    assert outcome.warnings


def test_retries_survive_injected_garbage():
    scenario = chain_scenario(
        num_chains=1, rounds=2, gate=True, retries=2, inject={1: 2, 4: 1}
    )
    ledger = CostLedger()
    outcome = answer_question(
        scenario.question,
        scenario.topics,
        scenario.agent(),
        scenario.backend,
        scenario.settings,
        ledger,
    )
    assert outcome.answer_text == scenario.gate_answer
    assert ledger.call_count == scenario.expected_calls == 7 + 3
    assert outcome.transcript == tuple(scenario.expected_pairs)


def test_backend_death_mid_flight_falls_back_with_warning():
    scenario = chain_scenario(num_chains=1, rounds=1, gate=True)

    class DyingBackend(InMemoryBackend):
        def head_relations(self, entity):
            raise BackendUnavailable("store went away")

    backend = DyingBackend(scenario.triples)
    outcome = answer_question(
        scenario.question,
        scenario.topics,
        ScriptedAgent([scenario.script[0]]),
        backend,
        scenario.settings,
    )
    assert outcome.answer_text == scenario.internal_answer
    assert outcome.source is AnswerSource.INTERNAL_FALLBACK
    assert any("aborted" in w for w in outcome.warnings)


def test_no_topic_entities_raises():
    agent = ScriptedAgent([ScriptRecord(ipg_reply([], "a bare guess"))])
    with pytest.raises(NoTopicEntities):
        answer_question("question?", None, agent, InMemoryBackend([]))


def test_unusable_elicitation_warns_but_continues():
    scenario = chain_scenario(num_chains=1, rounds=1, gate=True)
    script = [ScriptRecord(GIBBERISH)] + list(scenario.script[1:])
    outcome = answer_question(
        scenario.question,
        scenario.topics,
        ScriptedAgent(script),
        scenario.backend,
        scenario.settings,
    )
    assert outcome.answer_text == scenario.gate_answer
    assert any("nothing usable" in w for w in outcome.warnings)


def test_evaluate_subgraphs_joint_prompt_and_verdict():
    subgraphs = (
        Subgraph(EntityRef(id="A"), (parse_path("A → r → B"),), 1),
        Subgraph(EntityRef(id="C"), (parse_path("C ← s ← D"),), 1),
    )
    agent = ScriptedAgent([ScriptRecord(eval_reply(True, "B"))])
    ledger = CostLedger()
    answerable, response = evaluate_subgraphs(subgraphs, "q?", agent, ledger)
    assert (answerable, response) == (True, "B")
    _, prompt, _ = ledger.transcript()[0]
    assert "A → r → B\nC ← s ← D" in prompt


def test_evaluate_subgraphs_malformed_counts_as_no():
    subgraphs = (Subgraph(EntityRef(id="A"), (parse_path("A"),), 0),)
    agent = ScriptedAgent([ScriptRecord(GIBBERISH)])
    answerable, response = evaluate_subgraphs(subgraphs, "q?", agent, None, max_retries=0)
    assert (answerable, response) == (False, "")
