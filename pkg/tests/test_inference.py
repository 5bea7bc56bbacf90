"""Internal path elicitation and topic-entity linking."""

from __future__ import annotations

import logging

import pytest

from helpers import GIBBERISH, ipg_reply
from kgtrail.errors import NoTopicEntities
from kgtrail.gateway import ScriptRecord, ScriptedAgent
from kgtrail.inference import IpgResult, generate_inference, link_topic_entities
from kgtrail.metering import CostLedger
from kgtrail.model import PathSource
from kgtrail.prompts import PromptKind, render_prompt

QUESTION = "where was canberra's designer born?"
REPLY = ipg_reply(
    ["Canberra → designed by → Walter Burley Griffin → born in → Chicago"],
    "Chicago",
)


def test_happy_path_result():
    agent = ScriptedAgent([ScriptRecord(REPLY, kind=PromptKind.IPG)])
    ledger = CostLedger()
    result = generate_inference(QUESTION, agent, 15, ledger)
    assert result.internal_answer == "Chicago"
    assert result.requested_triples == 15
    assert not result.skipped
    assert len(result.paths) == 1
    assert result.paths[0].source is PathSource.INTERNAL
    assert [e.display for e in result.topic_entities] == ["Canberra"]
    assert ledger.call_count == 1
    kind, prompt, response = ledger.transcript()[0]
    assert kind is PromptKind.IPG
    assert prompt == render_prompt(
        PromptKind.IPG, {"question": QUESTION, "tripleCount": 15}
    )
    assert response == REPLY


def test_topic_entities_deduplicate_origins():
    reply = ipg_reply(["A → r → B", "A → s → C", "D → t → E"], "B")
    agent = ScriptedAgent([ScriptRecord(reply)])
    result = generate_inference(QUESTION, agent, 15)
    assert [e.display for e in result.topic_entities] == ["A", "D"]


def test_zero_triples_skips_the_call():
    agent = ScriptedAgent([])  # any call would raise ScriptExhausted
    result = generate_inference(QUESTION, agent, 0)
    assert result == IpgResult()
    assert result.skipped
    assert agent.consumed == 0


def test_empty_question_rejected():
    with pytest.raises(ValueError):
        generate_inference("", ScriptedAgent([ScriptRecord(REPLY)]), 15)


def test_malformed_exhaustion_degrades_to_empty(caplog):
    agent = ScriptedAgent([ScriptRecord(GIBBERISH), ScriptRecord(GIBBERISH)])
    ledger = CostLedger()
    with caplog.at_level(logging.WARNING, logger="kgtrail.inference"):
        result = generate_inference(QUESTION, agent, 15, ledger, max_retries=1)
    assert result.paths == ()
    assert result.internal_answer == ""
    assert result.requested_triples == 15  # ran, produced nothing
    assert not result.skipped
    assert agent.consumed == 2  # original call plus one retry
    assert ledger.call_count == 2
    assert caplog.records


def test_retry_recovers_and_meters_both_calls():
    agent = ScriptedAgent([ScriptRecord(GIBBERISH), ScriptRecord(REPLY)])
    ledger = CostLedger()
    result = generate_inference(QUESTION, agent, 15, ledger, max_retries=2)
    assert result.internal_answer == "Chicago"
    assert ledger.call_count == 2
    prompts = {prompt for _, prompt, _ in ledger.transcript()}
    assert len(prompts) == 1  # the identical prompt was re-sent


def _ipg(*origins: str) -> IpgResult:
    reply = ipg_reply([f"{origin} → r → X" for origin in origins], "X")
    agent = ScriptedAgent([ScriptRecord(reply)])
    return generate_inference(QUESTION, agent, 15)


def test_dataset_entities_win():
    linked = link_topic_entities(_ipg("Canberra"), {"Canberra": "m.0k2kfpc"})
    assert [(e.id, e.label) for e in linked] == [("m.0k2kfpc", "Canberra")]


def test_dataset_disagreement_is_logged_not_fatal(caplog):
    with caplog.at_level(logging.INFO, logger="kgtrail.inference"):
        linked = link_topic_entities(_ipg("Sydney"), {"Canberra": "m.0k2kfpc"})
    assert [e.id for e in linked] == ["m.0k2kfpc"]
    assert any("disagree" in record.message for record in caplog.records)


def test_agent_origins_are_the_fallback(caplog):
    ipg = _ipg("Canberra")
    with caplog.at_level(logging.WARNING, logger="kgtrail.inference"):
        linked = link_topic_entities(ipg, None)
    assert [e.id for e in linked] == ["Canberra"]  # surface form doubles as id
    assert caplog.records


def test_no_entities_anywhere_raises():
    with pytest.raises(NoTopicEntities):
        link_topic_entities(IpgResult(), {})
