"""Engine configuration: defaults, config files and flag precedence.

Precedence is flag over file over default.  Config files are plain
``key = value`` lines with ``#`` comments.  Endpoints may also come from the
``KGTRAIL_SPARQL_ENDPOINT`` and ``KGTRAIL_CHAT_ENDPOINT`` environment
variables; the API key comes from ``KGTRAIL_API_KEY`` only and never from a
flag or file.
"""

from __future__ import annotations

import os
from collections.abc import Mapping
from dataclasses import dataclass, fields
from pathlib import Path

from .answer import EngineSettings
from .backend import BackendConfig
from .errors import ConfigError
from .gateway import AgentConfig

SPARQL_ENDPOINT_ENV = "KGTRAIL_SPARQL_ENDPOINT"
CHAT_ENDPOINT_ENV = "KGTRAIL_CHAT_ENDPOINT"


@dataclass(frozen=True)
class EngineConfig:
    """Every knob in one place; field names double as config-file keys."""

    max_depth: int = 3
    triple_count: int = 15
    temperature: float = 0.4
    relation_width: int = 7
    entity_width: int = 7
    max_width: int = 7
    result_limit: int = 200
    max_retries_on_malformed: int = 2
    model_name: str = "gpt-3.5-turbo"
    sparql_endpoint: str = ""
    chat_endpoint: str = ""
    workers: int = 4
    timeout: float = 30.0
    name_predicate: str = "type.object.name"
    denylist: tuple[str, ...] = ()
    strict_match: bool = False

    def __post_init__(self) -> None:
        if self.max_depth < 0:
            raise ConfigError("max_depth must be non-negative")
        if self.triple_count < 0:
            raise ConfigError("triple_count must be non-negative")
        for name in ("relation_width", "entity_width", "max_width", "result_limit", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.max_retries_on_malformed < 0:
            raise ConfigError("max_retries_on_malformed must be non-negative")

    def settings(self) -> EngineSettings:
        return EngineSettings(
            max_depth=self.max_depth,
            triple_count=self.triple_count,
            relation_width=self.relation_width,
            entity_width=self.entity_width,
            max_width=self.max_width,
            max_retries_on_malformed=self.max_retries_on_malformed,
        )

    def agent_config(self) -> AgentConfig:
        return AgentConfig(
            model_name=self.model_name,
            temperature=self.temperature,
            max_retries_on_malformed=self.max_retries_on_malformed,
            timeout=self.timeout,
        )

    def backend_config(self) -> BackendConfig:
        return BackendConfig(
            endpoint_url=self.sparql_endpoint or os.environ.get(SPARQL_ENDPOINT_ENV, ""),
            timeout=self.timeout,
            result_limit=self.result_limit,
            denylist=self.denylist,
            name_predicate=self.name_predicate,
        )


def load_config_file(path: str | Path) -> dict[str, str]:
    """Parse a ``key = value`` config file.

    Raises:
        ConfigError: on unreadable files, unknown keys, or lines without '='.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    known = {f.name for f in fields(EngineConfig)}
    values: dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{number}: expected key = value")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in known:
            raise ConfigError(f"{path}:{number}: unknown config key {key!r}")
        values[key] = value.strip()
    return values


def _coerce(name: str, value: object, target: type) -> object:
    if isinstance(value, target) and not (target is int and isinstance(value, bool)):
        return value
    text = str(value).strip()
    try:
        if target is int:
            return int(text)
        if target is float:
            return float(text)
        if target is bool:
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if target is tuple:
            return tuple(part.strip() for part in text.split(",") if part.strip())
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {value!r}") from exc


_FIELD_TYPES: dict[str, type] = {
    "max_depth": int,
    "triple_count": int,
    "temperature": float,
    "relation_width": int,
    "entity_width": int,
    "max_width": int,
    "result_limit": int,
    "max_retries_on_malformed": int,
    "model_name": str,
    "sparql_endpoint": str,
    "chat_endpoint": str,
    "workers": int,
    "timeout": float,
    "name_predicate": str,
    "denylist": tuple,
    "strict_match": bool,
}


def build_config(
    file_values: Mapping[str, object] | None = None,
    flag_values: Mapping[str, object] | None = None,
) -> EngineConfig:
    """Merge defaults, config-file values and flags, flags winning.

    ``None`` flag values mean "not set" and are skipped.
    """
    merged: dict[str, object] = {}
    for source in (file_values or {}, flag_values or {}):
        for key, value in source.items():
            if value is None:
                continue
            if key not in _FIELD_TYPES:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = _coerce(key, value, _FIELD_TYPES[key])
    return EngineConfig(**merged)
