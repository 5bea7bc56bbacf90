"""Agent gateways: one live HTTP client and one scripted double.

Both run behind the same interface, and all metering happens in the shared
``complete`` wrapper, so a call is recorded exactly once whether it succeeds,
fails, or gets retried by a caller.  The scripted gateway consumes an ordered
list of canned records and refuses prompts that do not match, which makes
every offline test an exact transcript check rather than a fuzzy mock.
"""

from __future__ import annotations

import abc
import json
import logging
import os
import threading
import time
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path
from typing import TypeVar

import requests

from .errors import (
    AgentUnavailable,
    ConfigError,
    MalformedSelection,
    ScriptExhausted,
    ScriptMismatch,
)
from .metering import CostLedger
from .prompts import PromptKind

logger = logging.getLogger(__name__)

API_KEY_ENV = "KGTRAIL_API_KEY"
CHAT_ENDPOINT_ENV = "KGTRAIL_CHAT_ENDPOINT"

T = TypeVar("T")


@dataclass(frozen=True)
class AgentConfig:
    """Settings shared by every gateway."""

    model_name: str = "gpt-3.5-turbo"
    temperature: float = 0.4
    max_retries_on_malformed: int = 2
    timeout: float = 60.0


class AgentGateway(abc.ABC):
    """Completion interface; subclasses implement ``_complete`` only."""

    def __init__(self, config: AgentConfig | None = None) -> None:
        self.config = config or AgentConfig()

    def complete(
        self,
        prompt: str,
        kind: PromptKind,
        ledger: CostLedger | None = None,
        temperature: float | None = None,
    ) -> str:
        """Send one prompt and meter it, on success and failure alike."""
        if temperature is None:
            temperature = self.config.temperature
        start = time.perf_counter()
        try:
            response = self._complete(prompt, temperature, kind)
        except Exception:
            if ledger is not None:
                ledger.record_call(kind, prompt, "", time.perf_counter() - start)
            raise
        if ledger is not None:
            ledger.record_call(kind, prompt, response, time.perf_counter() - start)
        return response

    @abc.abstractmethod
    def _complete(self, prompt: str, temperature: float, kind: PromptKind) -> str:
        """Produce the raw completion text."""


class LiveAgent(AgentGateway):
    """Chat-completions HTTP client.

    Expects an endpoint speaking the common chat JSON shape: a POST of
    ``{model, messages, temperature}`` answered with
    ``choices[0].message.content``.  The API key is read from the
    ``KGTRAIL_API_KEY`` environment variable only, never from flags.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        config: AgentConfig | None = None,
        session: requests.Session | None = None,
    ) -> None:
        super().__init__(config)
        self.endpoint = endpoint or os.environ.get(CHAT_ENDPOINT_ENV, "")
        if not self.endpoint:
            raise ConfigError(
                f"no chat endpoint configured (flag/config or {CHAT_ENDPOINT_ENV})"
            )
        self._session = session or requests.Session()

    def _complete(self, prompt: str, temperature: float, kind: PromptKind) -> str:
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
        }
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        try:
            reply = self._session.post(
                self.endpoint, json=payload, headers=headers, timeout=self.config.timeout
            )
        except requests.RequestException as exc:
            raise AgentUnavailable(f"agent endpoint unreachable: {exc}") from exc
        if reply.status_code != 200:
            raise AgentUnavailable(
                f"agent endpoint returned {reply.status_code}: {reply.text[:200]}"
            )
        try:
            return reply.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise AgentUnavailable(f"unexpected agent payload: {reply.text[:200]}") from exc


@dataclass(frozen=True)
class ScriptRecord:
    """One canned response, optionally constrained to a prompt it must match."""

    response: str
    kind: PromptKind | None = None
    contains: str | None = None


class ScriptedAgent(AgentGateway):
    """Deterministic gateway that replays an ordered script.

    Records are consumed strictly in order; a prompt that does not match the
    next record's constraints raises instead of answering, so a drifted
    pipeline fails loudly in tests.
    """

    def __init__(self, script: list[ScriptRecord], config: AgentConfig | None = None) -> None:
        super().__init__(config)
        self.script = list(script)
        self._index = 0
        self._lock = threading.Lock()

    @property
    def consumed(self) -> int:
        """How many records have been served."""
        return self._index

    def _complete(self, prompt: str, temperature: float, kind: PromptKind) -> str:
        with self._lock:
            if self._index >= len(self.script):
                raise ScriptExhausted(
                    f"script exhausted after {len(self.script)} records (next kind: {kind.value})"
                )
            record = self.script[self._index]
            if record.kind is not None and record.kind != kind:
                raise ScriptMismatch(
                    f"record {self._index} expects kind {record.kind.value}, got {kind.value}"
                )
            if record.contains is not None and record.contains not in prompt:
                raise ScriptMismatch(
                    f"record {self._index} expects prompt containing {record.contains!r}"
                )
            self._index += 1
            return record.response


def load_script(path: str | Path) -> list[ScriptRecord]:
    """Load a JSONL script: one ``{response, kind?, contains?}`` object per line.

    Raises:
        ConfigError: on unreadable files, invalid JSON, or unknown kinds.
    """
    records = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read script file {path}: {exc}") from exc
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{number}: invalid JSON: {exc}") from exc
        if not isinstance(raw, dict) or "response" not in raw:
            raise ConfigError(f"{path}:{number}: script record needs a 'response' field")
        kind = None
        if raw.get("kind") is not None:
            try:
                kind = PromptKind(raw["kind"])
            except ValueError as exc:
                raise ConfigError(f"{path}:{number}: unknown prompt kind {raw['kind']!r}") from exc
        records.append(
            ScriptRecord(response=str(raw["response"]), kind=kind, contains=raw.get("contains"))
        )
    return records


def complete_and_parse(
    agent: AgentGateway,
    prompt: str,
    kind: PromptKind,
    parser: Callable[[str], T],
    ledger: CostLedger | None,
    max_retries: int,
) -> T:
    """Issue a prompt and parse the reply, re-asking on malformed output.

    Each retry re-sends the identical prompt and is metered like any other
    call.  When every attempt is malformed the last error propagates.
    """
    attempts = max(0, max_retries) + 1
    last_error: MalformedSelection | None = None
    for attempt in range(attempts):
        response = agent.complete(prompt, kind, ledger)
        try:
            return parser(response)
        except MalformedSelection as exc:
            last_error = exc
            logger.warning(
                "%s reply malformed (attempt %d/%d): %s", kind.value, attempt + 1, attempts, exc
            )
    assert last_error is not None
    raise last_error
