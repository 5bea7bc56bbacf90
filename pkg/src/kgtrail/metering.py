"""Per-question cost accounting: agent calls, tokens and wall time.

Token counts default to a documented approximation (UTF-8 byte length
divided by four, rounded up); a real tokenizer can be injected per ledger.
Wall time covers the gateway call only, so scripted runs report near-zero
latency while live runs report network time.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

from .errors import EmptyAggregate
from .prompts import PromptKind


def approx_token_count(text: str) -> int:
    """Approximate token count: ceil(utf-8 bytes / 4)."""
    if not text:
        return 0
    return math.ceil(len(text.encode("utf-8")) / 4)


@dataclass(frozen=True)
class CallRecord:
    """One metered agent call."""

    kind: PromptKind
    prompt: str
    response: str
    input_tokens: int
    output_tokens: int
    elapsed: float


@dataclass(frozen=True)
class KindTotals:
    """Per-prompt-kind accumulation."""

    calls: int = 0
    input_tokens: int = 0
    output_tokens: int = 0
    elapsed: float = 0.0


class CostLedger:
    """Accumulates the cost of answering one question."""

    def __init__(self, token_counter: Callable[[str], int] = approx_token_count) -> None:
        self._count = token_counter
        self.records: list[CallRecord] = []

    def record_call(self, kind: PromptKind, prompt: str, response: str, elapsed: float) -> CallRecord:
        """Append one call; every gateway invocation lands here exactly once."""
        record = CallRecord(
            kind=kind,
            prompt=prompt,
            response=response,
            input_tokens=self._count(prompt),
            output_tokens=self._count(response),
            elapsed=elapsed,
        )
        self.records.append(record)
        return record

    @property
    def call_count(self) -> int:
        return len(self.records)

    @property
    def input_tokens(self) -> int:
        return sum(record.input_tokens for record in self.records)

    @property
    def output_tokens(self) -> int:
        return sum(record.output_tokens for record in self.records)

    @property
    def total_tokens(self) -> int:
        return self.input_tokens + self.output_tokens

    @property
    def wall_time(self) -> float:
        return sum(record.elapsed for record in self.records)

    def by_kind(self) -> dict[PromptKind, KindTotals]:
        """Totals broken down by prompt kind."""
        out: dict[PromptKind, KindTotals] = {}
        for record in self.records:
            current = out.get(record.kind, KindTotals())
            out[record.kind] = KindTotals(
                calls=current.calls + 1,
                input_tokens=current.input_tokens + record.input_tokens,
                output_tokens=current.output_tokens + record.output_tokens,
                elapsed=current.elapsed + record.elapsed,
            )
        return out

    def transcript(self) -> list[tuple[PromptKind, str, str]]:
        """(kind, prompt, response) triples in call order."""
        return [(record.kind, record.prompt, record.response) for record in self.records]


@dataclass(frozen=True)
class CostRow:
    """Mean per-question cost over a set of ledgers (one report row)."""

    mean_calls: float
    mean_total_tokens: float
    mean_input_tokens: float
    mean_time: float

    def formatted(self) -> tuple[str, str, str, str]:
        """The four column values with one-decimal formatting."""
        return (
            f"{self.mean_calls:.1f}",
            f"{self.mean_total_tokens:.1f}",
            f"{self.mean_input_tokens:.1f}",
            f"{self.mean_time:.1f}",
        )


def aggregate(ledgers: Sequence[CostLedger]) -> CostRow:
    """Mean call count, total tokens, input tokens and wall time per question.

    Raises:
        EmptyAggregate: when ``ledgers`` is empty.
    """
    if not ledgers:
        raise EmptyAggregate("no ledgers to aggregate")
    n = len(ledgers)
    return CostRow(
        mean_calls=sum(ledger.call_count for ledger in ledgers) / n,
        mean_total_tokens=sum(ledger.total_tokens for ledger in ledgers) / n,
        mean_input_tokens=sum(ledger.input_tokens for ledger in ledgers) / n,
        mean_time=sum(ledger.wall_time for ledger in ledgers) / n,
    )


_HEADERS = ("Method", "LLM Call", "Total Token", "Input Token", "Time(s)")
_FOOTNOTE = (
    "averages include retried calls; token counts are approximate (utf-8 bytes / 4)"
)


def render_cost_table(rows: Sequence[tuple[str, CostRow]]) -> str:
    """Aligned plain-text cost table with the four standard columns."""
    table = [list(_HEADERS)]
    for label, row in rows:
        table.append([label, *row.formatted()])
    widths = [max(len(line[i]) for line in table) for i in range(len(_HEADERS))]
    lines = []
    for line in table:
        lines.append("  ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip())
    lines.append(f"# {_FOOTNOTE}")
    return "\n".join(lines)


def render_cost_csv(rows: Sequence[tuple[str, CostRow]]) -> str:
    """Machine-readable cost rows, one comma-separated line each."""
    lines = ["method,llm_calls,total_tokens,input_tokens,time_s"]
    for label, row in rows:
        lines.append(",".join([label, *row.formatted()]))
    return "\n".join(lines)
