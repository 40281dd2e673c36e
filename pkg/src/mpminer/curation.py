"""Fine-tuning dataset curation: labeled examples, balance checks, strain-stratified
splitting and chat-format JSONL export."""

from __future__ import annotations

import csv
import json
import os
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

import httpx

from .prompts import build_single_stage_prompt
from .records import (
    NEGATIVE_SENTINEL_TEXT,
    SYSTEM_ROLE_TEXT,
    ExtractionRecord,
    NegativeSentinel,
    StrainQuery,
    parse_extraction_output,
    render_extraction_record,
)

REQUIRED_COLUMNS = (
    "genus",
    "species",
    "strain",
    "protein_pct_dry_mass",
    "trophic_mechanism",
    "reported_substrate",
    "substrate_class",
    "article_id",
    "paper_text_path",
)

SPLIT_FRACTIONS = (0.8, 0.1, 0.1)
PARTITION_NAMES = ("train", "validation", "test")


class SchemaError(ValueError):
    pass


class BalanceError(ValueError):
    def __init__(self, message: str, strains: Sequence[str] = (), categories: Sequence[str] = ()):
        self.strains = list(strains)
        self.categories = list(categories)
        super().__init__(message)


class TooFewStrains(ValueError):
    pass


class NegativeCategory(str, Enum):
    WRONG_SPECIES = "wrong_species"
    NOT_PROTEIN_PRODUCTION = "not_protein_production"
    UNRELATED_MICROBE = "unrelated_microbe"
    UNRELATED_TOPIC = "unrelated_topic"


@dataclass(frozen=True)
class LabeledExample:
    strain: StrainQuery
    article_id: str
    prompt_user_text: str
    ideal_output: str
    positive: bool
    category: Optional[NegativeCategory] = None

    def __post_init__(self) -> None:
        if self.positive:
            if self.category is not None:
                raise ValueError("positive examples carry no negative category")
            parsed = parse_extraction_output(self.ideal_output)
            if isinstance(parsed, NegativeSentinel):
                raise ValueError("positive ideal_output must parse as a record")
        else:
            if self.category is None:
                raise ValueError("negative examples require a category")
            if self.ideal_output != NEGATIVE_SENTINEL_TEXT:
                raise ValueError("negative ideal_output must be the canonical sentinel")

    @property
    def strain_key(self) -> str:
        return self.strain.display_form


@dataclass
class ImportResult:
    examples: list[LabeledExample]
    warnings: list[str] = field(default_factory=list)


def _open_rows(path: Path) -> tuple[list[str], list[dict]]:
    delimiter = "\t" if path.suffix.lower() in (".tsv", ".tab") else ","
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        header = reader.fieldnames or []
        rows = list(reader)
    return header, rows


def import_source_table(path: Path) -> ImportResult:
    """Load positive examples from the curated source table (CSV or TSV)."""
    path = Path(path)
    header, rows = _open_rows(path)
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"missing columns: {', '.join(missing)}")

    result = ImportResult(examples=[])
    for lineno, row in enumerate(rows, start=2):
        mandatory = {c: (row.get(c) or "").strip() for c in REQUIRED_COLUMNS}
        absent = [c for c in REQUIRED_COLUMNS if c != "strain" and not mandatory[c]]
        if absent:
            result.warnings.append(f"row {lineno}: missing {', '.join(absent)}; skipped")
            continue
        try:
            strain = StrainQuery(
                mandatory["genus"], mandatory["species"], mandatory["strain"] or None
            )
            record = ExtractionRecord(
                mandatory["protein_pct_dry_mass"],
                mandatory["trophic_mechanism"],
                mandatory["reported_substrate"],
                mandatory["substrate_class"],
            )
        except ValueError as exc:
            result.warnings.append(f"row {lineno}: {exc}; skipped")
            continue
        paper_path = Path(mandatory["paper_text_path"])
        if not paper_path.is_absolute():
            paper_path = path.parent / paper_path
        try:
            paper_text = paper_path.read_text(encoding="utf-8")
        except OSError as exc:
            result.warnings.append(f"row {lineno}: cannot read paper text ({exc}); skipped")
            continue
        if not paper_text.strip():
            result.warnings.append(f"row {lineno}: empty paper text; skipped")
            continue
        _, user_text = build_single_stage_prompt(strain, paper_text)
        result.examples.append(
            LabeledExample(
                strain=strain,
                article_id=mandatory["article_id"],
                prompt_user_text=user_text,
                ideal_output=render_extraction_record(record),
                positive=True,
            )
        )
    return result


@dataclass
class BalanceReport:
    per_strain: dict[str, tuple[int, int]]  # strain -> (positives, negatives)
    per_category: dict[str, int]

    def to_json(self) -> dict:
        return {
            "per_strain": {k: {"positives": p, "negatives": n} for k, (p, n) in self.per_strain.items()},
            "per_category": self.per_category,
        }


@dataclass
class Dataset:
    examples: list[LabeledExample]
    balance: BalanceReport

    def fingerprint(self) -> str:
        import hashlib

        digest = hashlib.sha256()
        for e in sorted(self.examples, key=lambda e: (e.article_id, not e.positive, e.strain_key)):
            digest.update(
                json.dumps(
                    [e.article_id, e.strain_key, e.positive, e.ideal_output],
                    ensure_ascii=False,
                ).encode("utf-8")
            )
        return digest.hexdigest()


def attach_negatives(
    positives: Iterable[LabeledExample], negatives: Iterable[LabeledExample]
) -> Dataset:
    """Combine examples, enforcing per-strain and per-category balance.

    Every strain that has positives must have at least as many negatives, and
    the four negative categories must be equally sized within a +-1 tolerance.
    """
    positives = list(positives)
    negatives = list(negatives)
    if any(e.positive for e in negatives) or any(not e.positive for e in positives):
        raise ValueError("examples passed to the wrong argument")

    per_strain: dict[str, tuple[int, int]] = {}
    for e in positives + negatives:
        p, n = per_strain.get(e.strain_key, (0, 0))
        per_strain[e.strain_key] = (p + (1 if e.positive else 0), n + (0 if e.positive else 1))

    offenders = [k for k, (p, n) in per_strain.items() if p >= 1 and n < p]
    if offenders:
        raise BalanceError(
            f"strains lacking negative counterparts: {', '.join(sorted(offenders))}",
            strains=sorted(offenders),
        )

    per_category = {c.value: 0 for c in NegativeCategory}
    for e in negatives:
        per_category[e.category.value] += 1
    counts = list(per_category.values())
    if max(counts) - min(counts) > 1:
        at_min = [c for c, n in per_category.items() if n == min(counts)]
        at_max = [c for c, n in per_category.items() if n == max(counts)]
        # Blame the smaller extreme group; it is the anomaly.
        if len(at_min) < len(at_max):
            off = at_min
        elif len(at_max) < len(at_min):
            off = at_max
        else:
            off = at_min + at_max
        raise BalanceError(
            f"negative categories unbalanced: {per_category}", categories=sorted(off)
        )

    return Dataset(positives + negatives, BalanceReport(per_strain, per_category))


@dataclass
class DatasetSplit:
    train: list[LabeledExample]
    validation: list[LabeledExample]
    test: list[LabeledExample]
    fractions: tuple[float, float, float] = SPLIT_FRACTIONS

    def partitions(self) -> dict[str, list[LabeledExample]]:
        return {"train": self.train, "validation": self.validation, "test": self.test}

    def strain_map(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for name, part in self.partitions().items():
            for e in part:
                out[e.strain_key] = name
        return out


def stratified_split(examples: Sequence[LabeledExample], seed: int = 0) -> DatasetSplit:
    """Greedy deficit-filling split keeping each strain in exactly one partition.

    Strains are processed largest-first; each is assigned to the partition whose
    achieved example fraction is furthest below its 0.8/0.1/0.1 target. The seed
    only permutes strains with equal example counts.
    """
    by_strain: dict[str, list[LabeledExample]] = {}
    for e in examples:
        by_strain.setdefault(e.strain_key, []).append(e)
    if len(by_strain) < 3:
        raise TooFewStrains(f"need >= 3 distinct strains, got {len(by_strain)}")

    # Canonical order: count desc, name asc; then shuffle within equal-count groups.
    rng = random.Random(seed)
    groups: dict[int, list[str]] = {}
    for name, exs in by_strain.items():
        groups.setdefault(len(exs), []).append(name)
    ordered: list[str] = []
    for count in sorted(groups, reverse=True):
        names = sorted(groups[count])
        rng.shuffle(names)
        ordered.extend(names)

    total = len(examples)
    parts: list[list[LabeledExample]] = [[], [], []]
    for name in ordered:
        deficits = [
            SPLIT_FRACTIONS[i] - len(parts[i]) / total for i in range(3)
        ]
        target = max(range(3), key=lambda i: (deficits[i], -i))
        parts[target].extend(by_strain[name])

    return DatasetSplit(parts[0], parts[1], parts[2])


def emit_finetune_jsonl(part: Sequence[LabeledExample]) -> bytes:
    """Serialize a partition as chat-format JSONL, deterministically ordered."""
    if not part:
        raise ValueError("cannot emit an empty partition")
    ordered = sorted(part, key=lambda e: (e.article_id, not e.positive))
    lines = []
    for e in ordered:
        payload = {
            "messages": [
                {"role": "system", "content": SYSTEM_ROLE_TEXT},
                {"role": "user", "content": e.prompt_user_text},
                {"role": "assistant", "content": e.ideal_output},
            ]
        }
        lines.append(json.dumps(payload, ensure_ascii=False, separators=(",", ":")))
    return ("\n".join(lines) + "\n").encode("utf-8")


class FineTuneClient:
    """Thin client for an OpenAI-compatible fine-tuning API; integration use only."""

    def __init__(
        self,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        timeout: float = 60.0,
    ):
        self.base_url = (
            base_url or os.environ.get("FINETUNE_BASE_URL") or "https://api.openai.com/v1"
        ).rstrip("/")
        self.api_key = api_key or os.environ.get("FINETUNE_API_KEY")
        self._http = httpx.Client(timeout=timeout)

    def _headers(self) -> dict:
        return {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}

    def upload_training_file(self, jsonl: bytes, filename: str = "train.jsonl") -> str:
        resp = self._http.post(
            f"{self.base_url}/files",
            headers=self._headers(),
            data={"purpose": "fine-tune"},
            files={"file": (filename, jsonl, "application/jsonl")},
        )
        resp.raise_for_status()
        return resp.json()["id"]

    def create_job(self, model_id: str, training_file: str, epochs: int = 10) -> str:
        resp = self._http.post(
            f"{self.base_url}/fine_tuning/jobs",
            headers=self._headers(),
            json={
                "model": model_id,
                "training_file": training_file,
                "hyperparameters": {"n_epochs": epochs},
            },
        )
        resp.raise_for_status()
        return resp.json()["id"]

    def get_job(self, job_id: str) -> dict:
        resp = self._http.get(
            f"{self.base_url}/fine_tuning/jobs/{job_id}", headers=self._headers()
        )
        resp.raise_for_status()
        return resp.json()

    def list_checkpoints(self, job_id: str) -> list[dict]:
        resp = self._http.get(
            f"{self.base_url}/fine_tuning/jobs/{job_id}/checkpoints",
            headers=self._headers(),
        )
        resp.raise_for_status()
        return resp.json().get("data", [])
