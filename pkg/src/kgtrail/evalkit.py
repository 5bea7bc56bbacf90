"""Dataset loading, answer scoring and benchmark runners.

Scoring uses a containment-style Hits@1: the prediction and every gold
alias are normalized (lowercase, collapsed whitespace, leading articles and
terminal punctuation stripped) and a hit is an exact match or a whole-token
contiguous occurrence of the alias inside the prediction.  A strict switch
drops the containment part.  Cost rows aggregate each record's ledger.
"""

from __future__ import annotations

import json
import logging
import re
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .answer import AnswerOutcome, AnswerSource, EngineSettings, answer_question
from .backend import KnowledgeBackend
from .errors import EmptyAggregate, KgTrailError, UnreadableDataset
from .gateway import AgentGateway, ScriptedAgent
from .metering import CostLedger, CostRow, aggregate
from .prompts import PromptKind, render_prompt

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QARecord:
    """One benchmark question with its gold aliases and topic anchors."""

    question: str
    gold_answers: tuple[str, ...]
    topic_entities: dict[str, str] = field(default_factory=dict)
    dataset_id: str = ""
    record_id: str = ""


def load_dataset(path: str | Path, dataset_id: str = "") -> list[QARecord]:
    """Read a JSONL dataset of ``{question, answers, topic_entities?, id?}``.

    Malformed lines are skipped with a warning rather than aborting the run;
    the warning carries the line number.

    Raises:
        UnreadableDataset: when the file cannot be read at all.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UnreadableDataset(f"cannot read dataset {path}: {exc}") from exc
    records = []
    skipped = 0
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            skipped += 1
            logger.warning("%s:%d: skipping invalid JSON: %s", path, number, exc)
            continue
        question = raw.get("question") if isinstance(raw, dict) else None
        answers = raw.get("answers") if isinstance(raw, dict) else None
        if not isinstance(question, str) or not question.strip():
            skipped += 1
            logger.warning("%s:%d: skipping record without a question", path, number)
            continue
        if not isinstance(answers, list) or not any(
            isinstance(a, str) and a.strip() for a in answers
        ):
            skipped += 1
            logger.warning("%s:%d: skipping record without answers", path, number)
            continue
        topics = raw.get("topic_entities") or {}
        if not isinstance(topics, dict):
            skipped += 1
            logger.warning("%s:%d: skipping record with non-mapping topic_entities", path, number)
            continue
        records.append(
            QARecord(
                question=question.strip(),
                gold_answers=tuple(a.strip() for a in answers if isinstance(a, str) and a.strip()),
                topic_entities={str(k): str(v) for k, v in topics.items()},
                dataset_id=dataset_id,
                record_id=str(raw.get("id", number)),
            )
        )
    if skipped:
        logger.warning("%s: skipped %d malformed record(s)", path, skipped)
    return records


_ARTICLES = ("the ", "a ", "an ")
_TERMINAL_PUNCT = ".,!?;:"


def normalize_answer(text: str) -> str:
    """Canonical answer form; idempotent by construction.

    Lowercases, collapses whitespace, strips leading articles and terminal
    punctuation.
    """
    out = " ".join(text.lower().split())
    changed = True
    while changed:
        changed = False
        for article in _ARTICLES:
            if out.startswith(article):
                out = out[len(article) :]
                changed = True
        stripped = out.rstrip(_TERMINAL_PUNCT).rstrip()
        if stripped != out:
            out = stripped
            changed = True
    return out


def _token_key(token: str) -> str:
    # Mid-sentence tokens keep their punctuation through normalize_answer
    # ("for Liverpool F.C. in" -> "f.c."), so comparison strips it here.
    stripped = token.rstrip(_TERMINAL_PUNCT)
    return stripped or token


def hits_at_1(predicted: str, gold: Sequence[str], strict: bool = False) -> bool:
    """Score one prediction against a gold alias set.

    Non-strict matching also accepts a gold alias occurring inside the
    prediction as a contiguous run of whole tokens (trailing punctuation
    ignored), so a sentence-shaped answer containing the entity still counts.
    """
    prediction = normalize_answer(predicted)
    if not prediction:
        return False
    prediction_tokens = [_token_key(t) for t in prediction.split()]
    for alias in gold:
        target = normalize_answer(alias)
        if not target:
            continue
        if prediction == target:
            return True
        if strict:
            continue
        target_tokens = [_token_key(t) for t in target.split()]
        span = len(target_tokens)
        for start in range(len(prediction_tokens) - span + 1):
            if prediction_tokens[start : start + span] == target_tokens:
                return True
    return False


@dataclass(frozen=True)
class RecordResult:
    """Outcome of one record: prediction, score and cost."""

    record: QARecord
    predicted: str
    hit: bool
    ledger: CostLedger
    outcome: AnswerOutcome | None = None
    error: str = ""


@dataclass(frozen=True)
class EvalResult:
    """A whole run: per-record results plus roll-ups."""

    label: str
    results: tuple[RecordResult, ...]

    @property
    def hits(self) -> int:
        return sum(1 for result in self.results if result.hit)

    @property
    def hits_percent(self) -> float:
        """Hits@1 as a percentage; zero records scores zero."""
        if not self.results:
            return 0.0
        return 100.0 * self.hits / len(self.results)

    def cost_row(self) -> CostRow:
        """Mean cost over the run's ledgers.

        Raises:
            EmptyAggregate: when the run had no records.
        """
        return aggregate([result.ledger for result in self.results])


def run_baseline(
    kind: PromptKind,
    records: Sequence[QARecord],
    agent: AgentGateway,
) -> EvalResult:
    """Single-prompt baseline: one direct or chain-of-thought call per record."""
    if kind not in (PromptKind.IO, PromptKind.COT):
        raise ValueError(f"baseline kind must be IO or CoT, got {kind.value}")
    results = []
    for record in records:
        ledger = CostLedger()
        try:
            predicted = agent.complete(
                render_prompt(kind, {"question": record.question}), kind, ledger
            )
            error = ""
        except KgTrailError as exc:
            predicted = ""
            error = str(exc)
            logger.warning("record %s failed: %s", record.record_id, exc)
        results.append(
            RecordResult(
                record=record,
                predicted=predicted,
                hit=hits_at_1(predicted, record.gold_answers),
                ledger=ledger,
                error=error,
            )
        )
    return EvalResult(label=kind.value, results=tuple(results))


def _run_one(
    record: QARecord,
    agent: AgentGateway,
    backend: KnowledgeBackend,
    settings: EngineSettings,
    strict: bool,
) -> RecordResult:
    ledger = CostLedger()
    try:
        outcome = answer_question(
            record.question, record.topic_entities, agent, backend, settings, ledger
        )
    except KgTrailError as exc:
        logger.warning("record %s failed: %s", record.record_id, exc)
        return RecordResult(
            record=record, predicted="", hit=False, ledger=ledger, error=str(exc)
        )
    return RecordResult(
        record=record,
        predicted=outcome.answer_text,
        hit=hits_at_1(outcome.answer_text, record.gold_answers, strict),
        ledger=ledger,
        outcome=outcome,
    )


def run_engine(
    records: Sequence[QARecord],
    agent: AgentGateway,
    backend: KnowledgeBackend,
    settings: EngineSettings | None = None,
    workers: int = 4,
    strict: bool = False,
    label: str = "engine",
) -> EvalResult:
    """Run the full engine over a dataset.

    Records run in a thread pool except under a scripted agent, whose
    ordered script only makes sense sequentially.  A record that dies with a
    package error scores zero and keeps its partial ledger; the run itself
    always completes.
    """
    settings = settings or EngineSettings()
    results: list[RecordResult]
    if isinstance(agent, ScriptedAgent) or workers <= 1:
        results = [_run_one(record, agent, backend, settings, strict) for record in records]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda r: _run_one(r, agent, backend, settings, strict), records)
            )
    return EvalResult(label=label, results=tuple(results))


def render_hits_table(runs: Sequence[EvalResult]) -> str:
    """Aligned Hits@1 summary, one row per run."""
    table = [["Method", "Hits@1", "Records"]]
    for run in runs:
        table.append([run.label, f"{run.hits_percent:.1f}", str(len(run.results))])
    widths = [max(len(row[i]) for row in table) for i in range(3)]
    return "\n".join(
        "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
        for row in table
    )


def render_hits_csv(runs: Sequence[EvalResult]) -> str:
    """Machine-readable Hits@1 rows."""
    lines = ["method,hits_at_1,records"]
    for run in runs:
        lines.append(f"{run.label},{run.hits_percent:.1f},{len(run.results)}")
    return "\n".join(lines)
