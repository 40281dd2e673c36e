"""Information extraction agent: prompt assembly, chat backends, two-stage flow."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Protocol

import httpx

from .documents import PaperDocument
from .prompts import (
    BLOCK_LABELS,
    CANONICAL_TEMPLATE,
    NO_CONTENT_SENTINEL,
    build_harvest_prompt,
    build_single_stage_prompt,
)
from .records import (
    SYSTEM_ROLE_TEXT,
    AgentVariant,
    ExtractionOutcome,
    NegativeSentinel,
    ParseError,
    StrainQuery,
    Strategy,
    parse_extraction_output,
)

DEFAULT_GATE_MIN_CHARS = 80
PART_SEPARATOR = "\n--- (from another part of the paper) ---\n"


class BackendError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"backend failed during {stage}: {cause}")


class ExtractionFailure(RuntimeError):
    """The model produced output that is neither a record nor the sentinel."""

    def __init__(self, stage: str, parse_error: ParseError):
        self.stage = stage
        self.parse_error = parse_error
        super().__init__(f"unparseable completion in {stage}: {parse_error}")


class ChatBackend(Protocol):
    def complete(
        self, system_text: str, user_text: str, model_id: str, temperature: float
    ) -> str: ...


def completion_key(system_text: str, user_text: str, model_id: str, temperature: float) -> str:
    """Stable hash of all completion inputs, used by the replay backend."""
    payload = json.dumps(
        [system_text, user_text, model_id, round(float(temperature), 6)],
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ReplayBackend:
    """Deterministic mock backend keyed by the hash of all completion inputs."""

    def __init__(self, fixtures: dict[str, str], default: Optional[str] = None):
        self.fixtures = dict(fixtures)
        self.default = default
        self.calls = 0

    @classmethod
    def from_file(cls, path: Path, default: Optional[str] = None) -> "ReplayBackend":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")), default)

    def record(
        self, system_text: str, user_text: str, model_id: str, temperature: float, completion: str
    ) -> None:
        self.fixtures[completion_key(system_text, user_text, model_id, temperature)] = completion

    def complete(
        self, system_text: str, user_text: str, model_id: str, temperature: float
    ) -> str:
        self.calls += 1
        key = completion_key(system_text, user_text, model_id, temperature)
        if key in self.fixtures:
            return self.fixtures[key]
        if self.default is not None:
            return self.default
        raise KeyError(f"no fixture completion for input hash {key[:12]}")


class OpenAIChatBackend:
    """HTTP backend speaking the OpenAI-compatible chat-completions API."""

    def __init__(
        self,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        timeout: float = 120.0,
    ):
        self.base_url = (
            base_url or os.environ.get("LLM_BASE_URL") or "https://api.openai.com/v1"
        ).rstrip("/")
        self.api_key = api_key or os.environ.get("LLM_API_KEY")
        self._http = httpx.Client(timeout=timeout)

    def complete(
        self, system_text: str, user_text: str, model_id: str, temperature: float
    ) -> str:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        resp = self._http.post(
            f"{self.base_url}/chat/completions",
            headers=headers,
            json={
                "model": model_id,
                "temperature": temperature,
                "messages": [
                    {"role": "system", "content": system_text},
                    {"role": "user", "content": user_text},
                ],
            },
        )
        resp.raise_for_status()
        return resp.json()["choices"][0]["message"]["content"]


@dataclass(frozen=True)
class FieldBlocks:
    protein_block: str = NO_CONTENT_SENTINEL
    trophic_block: str = NO_CONTENT_SENTINEL
    substrate_block: str = NO_CONTENT_SENTINEL
    substrate_class_block: str = NO_CONTENT_SENTINEL

    def blocks(self) -> tuple[str, str, str, str]:
        return (
            self.protein_block,
            self.trophic_block,
            self.substrate_block,
            self.substrate_class_block,
        )

    def sentinel_count(self) -> int:
        return sum(1 for b in self.blocks() if b == NO_CONTENT_SENTINEL)

    def harvested_chars(self) -> int:
        return sum(len(b) for b in self.blocks() if b != NO_CONTENT_SENTINEL)


class GateVerdict(str, Enum):
    PROCEED = "proceed"
    HALT_NEGATIVE = "halt_negative"


@dataclass(frozen=True)
class GateDecision:
    verdict: GateVerdict
    sparse_blocks: int
    harvested_chars: int


def parse_field_blocks(raw: str) -> FieldBlocks:
    """Split a stage-1 completion on the four block labels; total, never raises."""
    lowered = raw.lower()
    hits: list[tuple[int, int, int]] = []  # (start, end-of-label, field index)
    for i, label in enumerate(BLOCK_LABELS):
        idx = lowered.find(label.lower())
        if idx >= 0:
            hits.append((idx, idx + len(label), i))
    hits.sort()

    values = [NO_CONTENT_SENTINEL] * 4
    for j, (_, content_start, i) in enumerate(hits):
        content_end = hits[j + 1][0] if j + 1 < len(hits) else len(raw)
        content = raw[content_start:content_end].strip().strip(":").strip()
        if content and content != NO_CONTENT_SENTINEL:
            values[i] = content
    return FieldBlocks(*values)


def merge_field_blocks(per_part: list[FieldBlocks]) -> FieldBlocks:
    """Concatenate non-sentinel evidence per field across document parts."""
    merged = []
    for i in range(4):
        pieces = [fb.blocks()[i] for fb in per_part if fb.blocks()[i] != NO_CONTENT_SENTINEL]
        merged.append(PART_SEPARATOR.join(pieces) if pieces else NO_CONTENT_SENTINEL)
    return FieldBlocks(*merged)


def early_exit_gate(fb: FieldBlocks, min_chars: int = DEFAULT_GATE_MIN_CHARS) -> GateDecision:
    """Halt the chain when harvested evidence is demonstrably sparse."""
    if min_chars < 1:
        raise ValueError("min_chars must be >= 1")
    sparse = fb.sentinel_count()
    chars = fb.harvested_chars()
    halt = sparse >= 3 or chars < min_chars
    return GateDecision(
        GateVerdict.HALT_NEGATIVE if halt else GateVerdict.PROCEED, sparse, chars
    )


def build_canonical_prompt(fb: FieldBlocks) -> tuple[str, str]:
    """Stage-2 constrained-generation prompt embedding the evidence blocks."""
    blocks_text = "\n\n".join(
        f"{label}\n{content}" for label, content in zip(BLOCK_LABELS, fb.blocks())
    )
    return SYSTEM_ROLE_TEXT, CANONICAL_TEMPLATE.format(blocks=blocks_text)


def _part_texts(doc: PaperDocument) -> list[str]:
    if len(doc.parts) == 1:
        return [doc.parts[0].text]
    return [
        f"[PART 1 — START]\n\n{doc.parts[0].text}",
        f"[PART 2 — END]\n\n{doc.parts[1].text}",
    ]


def run_two_stage(
    query: StrainQuery,
    doc: PaperDocument,
    backend: ChatBackend,
    variant: AgentVariant,
    gate_min_chars: int = DEFAULT_GATE_MIN_CHARS,
) -> ExtractionOutcome:
    """Harvest evidence per part, merge, gate, then extract canonical values."""
    if variant.strategy is not Strategy.TWO_STAGE_PROMPTED:
        raise ValueError("run_two_stage requires the two_stage_prompted strategy")

    harvested: list[FieldBlocks] = []
    for paper_text in _part_texts(doc):
        system, user = build_harvest_prompt(query, paper_text)
        try:
            completion = backend.complete(system, user, variant.model_id, variant.temperature)
        except Exception as exc:  # noqa: BLE001 - annotate with the failing stage
            raise BackendError("stage-1 harvest", exc) from exc
        harvested.append(parse_field_blocks(completion))

    merged = merge_field_blocks(harvested)
    decision = early_exit_gate(merged, gate_min_chars)
    if decision.verdict is GateVerdict.HALT_NEGATIVE:
        return NegativeSentinel()

    system, user = build_canonical_prompt(merged)
    try:
        completion = backend.complete(system, user, variant.model_id, variant.temperature)
    except Exception as exc:  # noqa: BLE001
        raise BackendError("stage-2 extraction", exc) from exc
    try:
        return parse_extraction_output(completion)
    except ParseError as exc:
        raise ExtractionFailure("stage-2 extraction", exc) from exc


def run_single_stage(
    query: StrainQuery,
    doc: PaperDocument,
    backend: ChatBackend,
    variant: AgentVariant,
) -> ExtractionOutcome:
    """One completion per part; the first parseable record wins."""
    if variant.strategy is Strategy.TWO_STAGE_PROMPTED:
        raise ValueError("run_single_stage requires a single-stage strategy")

    outcomes: list[ExtractionOutcome] = []
    errors: list[ParseError] = []
    for paper_text in _part_texts(doc):
        system, user = build_single_stage_prompt(query, paper_text)
        try:
            completion = backend.complete(system, user, variant.model_id, variant.temperature)
        except Exception as exc:  # noqa: BLE001
            raise BackendError("single-stage", exc) from exc
        try:
            outcomes.append(parse_extraction_output(completion))
        except ParseError as exc:
            errors.append(exc)

    for outcome in outcomes:
        if not isinstance(outcome, NegativeSentinel):
            return outcome
    if errors:
        raise ExtractionFailure("single-stage", errors[0])
    return NegativeSentinel()


@dataclass
class SpyBackend:
    """Wraps a backend and counts calls; used by tests and the sweep harness."""

    inner: ChatBackend
    calls: int = 0
    log: list[tuple[str, str, str, float]] = field(default_factory=list)

    def complete(
        self, system_text: str, user_text: str, model_id: str, temperature: float
    ) -> str:
        self.calls += 1
        self.log.append((system_text, user_text, model_id, temperature))
        return self.inner.complete(system_text, user_text, model_id, temperature)
