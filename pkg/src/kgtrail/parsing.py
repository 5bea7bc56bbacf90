"""Parsers for the semi-structured text an agent returns.

Responses are nominally JSON but arrive with every flaw production traffic
produces: single quotes, Python literals, unquoted keys, surrounding prose,
markdown fences, or no JSON at all.  Each parser either recovers a value or
raises :class:`MalformedSelection`; no other exception type escapes this
module for string input.

Selections are filtered against the candidate set that was offered in the
prompt, so a hallucinated name can never enter the pipeline.
"""

from __future__ import annotations

import ast
import json
import logging
import re

from .errors import MalformedPath, MalformedSelection
from .model import EntityRef, PathSource, ReasoningPath, RelationRef, Triple, parse_path

logger = logging.getLogger(__name__)

_MISSING = object()


def _first_balanced(text: str, open_ch: str = "{", close_ch: str = "}") -> str | None:
    """The first balanced ``open_ch``..``close_ch`` region, string-aware."""
    start = text.find(open_ch)
    if start < 0:
        return None
    depth = 0
    in_string: str | None = None
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == in_string:
                in_string = None
            continue
        if ch in "\"'":
            in_string = ch
        elif ch == open_ch:
            depth += 1
        elif ch == close_ch:
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return None


_TRAILING_COMMA = re.compile(r",\s*([}\]])")


def _loads_tolerant(fragment: str) -> object | None:
    """Parse a JSON-ish fragment, repairing the common mistakes, or None."""
    attempts = [fragment, _TRAILING_COMMA.sub(r"\1", fragment)]
    for candidate in attempts:
        try:
            return json.loads(candidate)
        except (json.JSONDecodeError, ValueError):
            pass
        try:
            # Python-flavoured output: single quotes, True/False/None.
            return ast.literal_eval(candidate)
        except (ValueError, SyntaxError, MemoryError, RecursionError):
            pass
    return None


def _get_key(mapping: dict, name: str) -> object:
    """Case-insensitive dict lookup, tolerating quote-wrapped keys."""
    wanted = name.lower()
    for key, value in mapping.items():
        if str(key).strip().strip("\"'").lower() == wanted:
            return value
    return _MISSING


def _naive_items(array_body: str) -> list[str]:
    """Last-resort split of an array body on commas, stripping quotes."""
    items = []
    for piece in array_body.split(","):
        cleaned = piece.strip().strip("\"'").strip()
        if cleaned:
            items.append(cleaned)
    return items


def _extract_array(text: str, key: str) -> list[str] | None:
    """Find the array stored under ``key`` anywhere in ``text``."""
    obj_text = _first_balanced(text)
    if obj_text is not None:
        parsed = _loads_tolerant(obj_text)
        if isinstance(parsed, dict):
            value = _get_key(parsed, key)
            if isinstance(value, (list, tuple)):
                return [str(item) for item in value]
            if isinstance(value, str):
                return [value]
    # Object parse failed or lacked the key: look for `key : [...]` textually.
    match = re.search(rf"[\"']?{re.escape(key)}[\"']?\s*:\s*\[", text, re.IGNORECASE)
    if match:
        array_text = _first_balanced(text[match.end() - 1 :], "[", "]")
        if array_text is not None:
            parsed = _loads_tolerant(array_text)
            if isinstance(parsed, (list, tuple)):
                return [str(item) for item in parsed]
            return _naive_items(array_text[1:-1])
    return None


def parse_selection_names(text: str, key: str) -> list[str]:
    """Recover the list of names stored under ``key`` in a response.

    Falls back to a bare top-level array when no keyed object is present.

    Raises:
        MalformedSelection: when no array can be recovered at all.
    """
    names = _extract_array(text, key)
    if names is None and "{" not in text:
        array_text = _first_balanced(text, "[", "]")
        if array_text is not None:
            parsed = _loads_tolerant(array_text)
            if isinstance(parsed, (list, tuple)):
                names = [str(item) for item in parsed]
            else:
                names = _naive_items(array_text[1:-1])
    if names is None:
        raise MalformedSelection(f"no {key} array found in response: {text[:120]!r}")
    return [name.strip() for name in names if name and name.strip()]


def parse_relation_selection(
    text: str,
    candidates: list[RelationRef] | tuple[RelationRef, ...],
    width: int | None = None,
) -> list[RelationRef]:
    """Map a Relations response onto the offered candidates.

    Matching is case-insensitive on the relation name; response order is
    preserved, duplicates and hallucinated names are dropped, and the result
    is capped at ``width`` when given.  An empty selection is valid.
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    names = parse_selection_names(text, "Relations")
    by_name: dict[str, RelationRef] = {}
    for candidate in candidates:
        by_name.setdefault(candidate.name.lower(), candidate)
    chosen: list[RelationRef] = []
    seen: set[str] = set()
    for name in names:
        match = by_name.get(name.lower())
        if match is not None and match.name.lower() not in seen:
            seen.add(match.name.lower())
            chosen.append(match)
    if width is not None:
        chosen = chosen[:width]
    return chosen


def parse_entity_selection(
    text: str,
    candidates: list[EntityRef] | tuple[EntityRef, ...],
    width: int | None = None,
) -> list[EntityRef]:
    """Map an Entities response onto the offered candidates.

    Names are matched case-insensitively against candidate labels first and
    ids second, preserving response order, dropping duplicates and unknown
    names, capped at ``width`` when given.
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    by_label: dict[str, EntityRef] = {}
    by_id: dict[str, EntityRef] = {}
    for candidate in candidates:
        if candidate.label is not None:
            by_label.setdefault(candidate.label.lower(), candidate)
        by_id.setdefault(candidate.id.lower(), candidate)
    names = parse_selection_names(text, "Entities")
    chosen: list[EntityRef] = []
    seen: set[str] = set()
    for name in names:
        key = name.lower()
        match = by_label.get(key) or by_id.get(key)
        if match is not None and match.id not in seen:
            seen.add(match.id)
            chosen.append(match)
    if width is not None:
        chosen = chosen[:width]
    return chosen


def _coerce_bool(value: object) -> bool | None:
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        lowered = value.strip().strip("\"'").lower()
        if lowered == "true":
            return True
        if lowered == "false":
            return False
    return None


_ANSWERABLE_RE = re.compile(
    r"[\"']?Answerable[\"']?\s*:\s*[\"']?(true|false)[\"']?", re.IGNORECASE
)
_RESPONSE_RE = re.compile(r"[\"']?Response[\"']?\s*:\s*\"((?:[^\"\\]|\\.)*)\"", re.IGNORECASE)


def parse_evaluation(text: str) -> tuple[bool, str]:
    """Recover the (answerable, response) verdict of an evaluation reply.

    A missing response defaults to the empty string and a missing verdict to
    False, but when neither field is recoverable the reply is malformed.
    """
    answerable: bool | None = None
    response: str | None = None
    obj_text = _first_balanced(text)
    if obj_text is not None:
        parsed = _loads_tolerant(obj_text)
        if isinstance(parsed, dict):
            raw = _get_key(parsed, "Answerable")
            if raw is not _MISSING:
                answerable = _coerce_bool(raw)
            raw = _get_key(parsed, "Response")
            if raw is not _MISSING and raw is not None:
                response = str(raw)
    if answerable is None:
        match = _ANSWERABLE_RE.search(text)
        if match:
            answerable = match.group(1).lower() == "true"
    if response is None:
        match = _RESPONSE_RE.search(text)
        if match:
            response = match.group(1).replace('\\"', '"')
    if answerable is None and response is None:
        raise MalformedSelection(f"no Answerable verdict found in response: {text[:120]!r}")
    return bool(answerable), response if response is not None else ""


_RESPONSE_FIELD_RE = re.compile(
    r"[\"']?response[\"']?\s*:\s*\"((?:[^\"\\]|\\.)*)\"", re.IGNORECASE
)
_PATH_MARKERS = re.compile(r"\s*\((?:topic entity|final answer)\)", re.IGNORECASE)
_FINAL_ANSWER_RE = re.compile(r"(?:the\s+)?final answer is\s*:?", re.IGNORECASE)
_ANSWER_IS_RE = re.compile(r"\banswer(?:\s+to\s+the\s+question\b[^.\n]*?)?\s+is\s*:?\s*([^\n]+)", re.IGNORECASE)
_TRIPLE_LINE_RE = re.compile(r"\((.+)\)[.,;]?\s*$")


def _freeform_paths(text: str) -> list[ReasoningPath]:
    """Collect arrow-notation paths written as prose lines.

    A line that starts with an arrow continues the previous line, which lets
    multi-line path listings (origin on its own line, one hop per line) fuse
    into a single parseable string.
    """
    fragments: list[str] = []
    buffer: str | None = None
    previous_plain: str | None = None

    def flush() -> None:
        nonlocal buffer
        if buffer is not None:
            fragments.append(buffer)
            buffer = None

    for raw_line in text.splitlines():
        line = raw_line.strip().strip("`")
        if not line:
            flush()
            previous_plain = None
            continue
        normalized = line.replace("->", "→").replace("<-", "←")
        if normalized.startswith(("→", "←")):
            if buffer is not None:
                buffer += " " + normalized
            elif previous_plain is not None:
                buffer = previous_plain + " " + normalized
            previous_plain = None
        elif "→" in normalized or "←" in normalized:
            flush()
            buffer = normalized
            previous_plain = None
        else:
            flush()
            previous_plain = normalized
    flush()

    paths = []
    for fragment in fragments:
        cleaned = _PATH_MARKERS.sub("", fragment).strip().rstrip(".")
        try:
            paths.append(parse_path(cleaned, source=PathSource.INTERNAL))
        except MalformedPath:
            logger.debug("skipping unparseable path fragment: %r", cleaned)
    return paths


def _freeform_answer(text: str) -> str:
    match = _FINAL_ANSWER_RE.search(text)
    if match:
        for line in text[match.end() :].splitlines():
            stripped = line.strip()
            if stripped:
                return stripped
    match = _ANSWER_IS_RE.search(text)
    if match:
        return match.group(1).strip()
    return ""


def _scan_triples(text: str) -> list[Triple]:
    """Best-effort scan for ``(entity, relation, entity)`` lines."""
    triples = []
    for raw_line in text.splitlines():
        line = raw_line.strip().lstrip("-*•").strip()
        match = _TRIPLE_LINE_RE.search(line)
        if not match or not line.startswith("("):
            continue
        parts = [part.strip() for part in match.group(1).split(",")]
        if len(parts) != 3 or not all(parts):
            continue
        triples.append(Triple(EntityRef(parts[0]), RelationRef(parts[1]), EntityRef(parts[2])))
    return triples


def parse_ipg(text: str) -> tuple[list[ReasoningPath], str, list[Triple]]:
    """Parse an internal-paths reply into (paths, answer text, listed triples).

    Prefers the documented JSON shape (``reasoning_path`` array plus
    ``response``); falls back to scraping arrow-notation lines and a
    "final answer is" sentence when the agent answered free-form.
    Unparseable individual paths and triples are skipped.

    Raises:
        MalformedSelection: when neither a ``reasoning_path`` array nor any
            arrow-notation path is present.
    """
    paths: list[ReasoningPath] = []
    answer = ""
    entries: list[str] | None = None

    obj_text = _first_balanced(text)
    if obj_text is not None:
        parsed = _loads_tolerant(obj_text)
        if isinstance(parsed, dict):
            raw = _get_key(parsed, "reasoning_path")
            if isinstance(raw, (list, tuple)):
                entries = [str(item) for item in raw]
            elif isinstance(raw, str):
                entries = [raw]
            raw = _get_key(parsed, "response")
            if isinstance(raw, str):
                answer = raw
    if entries is None:
        entries = _extract_array(text, "reasoning_path")

    if entries is not None:
        for entry in entries:
            cleaned = _PATH_MARKERS.sub("", entry).strip()
            if not cleaned:
                continue
            try:
                paths.append(parse_path(cleaned, source=PathSource.INTERNAL))
            except MalformedPath:
                logger.debug("skipping unparseable reasoning_path entry: %r", entry)
    else:
        paths = _freeform_paths(text)
        if not paths:
            raise MalformedSelection(
                f"no reasoning_path array or arrow path found in response: {text[:120]!r}"
            )

    if not answer:
        match = _RESPONSE_FIELD_RE.search(text)
        if match:
            answer = match.group(1).replace('\\"', '"')
    if not answer:
        answer = _freeform_answer(text)
    return paths, answer, _scan_triples(text)
