"""Embedding-cosine evaluation harness: scoring, aggregation, sweeps, comparisons."""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Optional, Protocol, Sequence

import httpx
import numpy as np

from .records import AgentVariant, Strategy

EXPECTED_PROVIDER_IDS = ("all-mpnet-base-v2", "all-MiniLM-L6-v2", "sentence-t5-base")

DEFAULT_TEMPERATURES = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)


class DimensionMismatch(ValueError):
    pass


class ZeroVector(ValueError):
    pass


class EmptyInput(ValueError):
    pass


class NonpositiveBase(ValueError):
    pass


class ProviderError(RuntimeError):
    pass


class PartitionMismatch(ValueError):
    pass


class EmbeddingProvider(Protocol):
    provider_id: str

    def embed(self, text: str) -> np.ndarray: ...


def cosine_similarity(u: Sequence[float], v: Sequence[float]) -> float:
    """dot(u, v) / (|u| * |v|), clamped to [-1, 1] against rounding spill."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise DimensionMismatch(f"{u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine similarity is undefined for the zero vector")
    return max(-1.0, min(1.0, float(np.dot(u, v)) / (nu * nv)))


@dataclass(frozen=True)
class ScoredPair:
    obtained: str
    ideal: str
    score: float


@dataclass(frozen=True)
class EvalAggregate:
    provider_id: str
    mean: float
    std: float
    n: int


def aggregate(scores: Sequence[float], provider_id: str = "") -> EvalAggregate:
    """Arithmetic mean and sample (n-1) standard deviation; std = 0 when n = 1."""
    if not scores:
        raise EmptyInput("cannot aggregate an empty score list")
    n = len(scores)
    mean = sum(scores) / n
    if n == 1:
        std = 0.0
    else:
        std = math.sqrt(sum((s - mean) ** 2 for s in scores) / (n - 1))
    return EvalAggregate(provider_id, mean, std, n)


def pct_improvement(base_mean: float, new_mean: float) -> int:
    """Percent change vs the base, rounded half-up to the nearest integer."""
    if base_mean <= 0:
        raise NonpositiveBase("base mean must be positive")
    pct = Decimal(100) * (Decimal(repr(new_mean)) - Decimal(repr(base_mean))) / Decimal(repr(base_mean))
    return int(pct.quantize(Decimal("1"), rounding=ROUND_HALF_UP))


class EmbeddingCache:
    """Disk cache of embeddings keyed by (provider_id, sha256 of text)."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, provider_id: str, text: str) -> Path:
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        safe = provider_id.replace("/", "_")
        return self.root / f"{safe}__{digest}.json"

    def get(self, provider_id: str, text: str) -> Optional[np.ndarray]:
        path = self._path(provider_id, text)
        if not path.exists():
            return None
        return np.asarray(json.loads(path.read_text(encoding="utf-8")), dtype=float)

    def put(self, provider_id: str, text: str, vector: np.ndarray) -> None:
        self._path(provider_id, text).write_text(
            json.dumps([float(x) for x in vector]), encoding="utf-8"
        )


@dataclass
class HashEmbeddingProvider:
    """Deterministic fake provider: text hashes seed a fixed-dimension vector.

    Identical texts map to identical embeddings, so obtained == ideal scores 1.0.
    """

    provider_id: str = "fake-hash-embed"
    dim: int = 32

    def embed(self, text: str) -> np.ndarray:
        digest = hashlib.sha256(f"{self.provider_id}\x00{text}".encode("utf-8")).digest()
        seed = int.from_bytes(digest[:8], "big")
        rng = np.random.default_rng(seed)
        vec = rng.standard_normal(self.dim)
        # Shift positive so scores concentrate in [0, 1], like sentence embeddings.
        return vec + 3.0


class HttpEmbeddingProvider:
    """Embedding service speaking POST {text} -> {vector}."""

    def __init__(
        self,
        provider_id: str,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        timeout: float = 60.0,
    ):
        self.provider_id = provider_id
        self.base_url = (base_url or os.environ.get("EMBED_BASE_URL") or "").rstrip("/")
        if not self.base_url:
            raise ValueError("embedding base URL required (EMBED_BASE_URL)")
        self.api_key = api_key or os.environ.get("EMBED_API_KEY")
        self._http = httpx.Client(timeout=timeout)

    def embed(self, text: str) -> np.ndarray:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self._http.post(
                f"{self.base_url}/embed",
                headers=headers,
                json={"model": self.provider_id, "text": text},
            )
            resp.raise_for_status()
            return np.asarray(resp.json()["vector"], dtype=float)
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise ProviderError(str(exc)) from exc


def score_pairs(
    pairs: Sequence[tuple[str, str]],
    provider: EmbeddingProvider,
    cache: Optional[EmbeddingCache] = None,
) -> list[ScoredPair]:
    """Score each (obtained, ideal) pair; each distinct text is embedded once."""
    if not pairs:
        return []
    embeddings: dict[str, np.ndarray] = {}
    errors: list[ProviderError] = []

    def embed(text: str) -> Optional[np.ndarray]:
        if text in embeddings:
            return embeddings[text]
        vec = cache.get(provider.provider_id, text) if cache else None
        if vec is None:
            try:
                vec = provider.embed(text)
            except ProviderError as exc:
                errors.append(exc)
                return None
            if cache:
                cache.put(provider.provider_id, text, vec)
        embeddings[text] = vec
        return vec

    out: list[ScoredPair] = []
    for obtained, ideal in pairs:
        u = embed(obtained)
        v = embed(ideal)
        if u is None or v is None:
            continue
        out.append(ScoredPair(obtained, ideal, cosine_similarity(u, v)))
    if not out and errors:
        raise ProviderError(f"all {len(pairs)} pairs failed; first error: {errors[0]}")
    return out


@dataclass
class SweepCell:
    model_id: str
    temperature: float
    provider_id: str
    aggregate: EvalAggregate
    scores: list[float] = field(default_factory=list)
    error: Optional[str] = None


@dataclass
class SweepGrid:
    models: list[str]
    temperatures: tuple[float, ...]
    cells: list[SweepCell] = field(default_factory=list)

    def cell(self, model_id: str, temperature: float, provider_id: str) -> Optional[SweepCell]:
        for c in self.cells:
            if (
                c.model_id == model_id
                and c.temperature == temperature
                and c.provider_id == provider_id
            ):
                return c
        return None

    def to_json(self) -> dict:
        return {
            "models": self.models,
            "temperatures": list(self.temperatures),
            "cells": [
                {
                    "model_id": c.model_id,
                    "temperature": c.temperature,
                    "provider_id": c.provider_id,
                    "mean": c.aggregate.mean,
                    "std": c.aggregate.std,
                    "n": c.aggregate.n,
                    "scores": c.scores,
                    "error": c.error,
                }
                for c in self.cells
            ],
        }

    def save(self, path: Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2), encoding="utf-8")


def temperature_sweep(
    models: Sequence[str],
    dataset: Sequence,
    backend,
    providers: Sequence[EmbeddingProvider],
    temperatures: Sequence[float] = DEFAULT_TEMPERATURES,
    cache: Optional[EmbeddingCache] = None,
) -> SweepGrid:
    """Run the single-stage agent over the dataset per (model, temperature) cell.

    Dataset entries must expose prompt_user_text and ideal_output (LabeledExample
    does). Per-cell failures are recorded on the cell; the sweep continues.
    """
    from .records import SYSTEM_ROLE_TEXT

    grid = SweepGrid(list(models), tuple(temperatures))
    for model_id in models:
        for temperature in temperatures:
            try:
                completions = [
                    backend.complete(
                        SYSTEM_ROLE_TEXT, e.prompt_user_text, model_id, temperature
                    )
                    for e in dataset
                ]
                pairs = [(c, e.ideal_output) for c, e in zip(completions, dataset)]
            except Exception as exc:  # noqa: BLE001 - recorded per cell
                for provider in providers:
                    grid.cells.append(
                        SweepCell(
                            model_id,
                            temperature,
                            provider.provider_id,
                            EvalAggregate(provider.provider_id, float("nan"), 0.0, 0),
                            error=str(exc),
                        )
                    )
                continue
            for provider in providers:
                scored = score_pairs(pairs, provider, cache)
                agg = aggregate([s.score for s in scored], provider.provider_id)
                grid.cells.append(
                    SweepCell(
                        model_id,
                        temperature,
                        provider.provider_id,
                        agg,
                        scores=[s.score for s in scored],
                    )
                )
    return grid


@dataclass
class VariantReport:
    variant: AgentVariant
    per_provider: dict[str, EvalAggregate]
    dataset_fingerprint: str


@dataclass
class ComparisonRow:
    variant_key: str
    provider_id: str
    mean: float
    std: float
    n: int
    pct_improvement_vs_base: int


@dataclass
class ComparisonTable:
    base_key: str
    rows: list[ComparisonRow]

    def to_json(self) -> dict:
        return {
            "base": self.base_key,
            "std_kind": "sample",
            "rows": [
                {
                    "variant": r.variant_key,
                    "provider": r.provider_id,
                    "mean": r.mean,
                    "std": r.std,
                    "n": r.n,
                    "pct_improvement_vs_base": r.pct_improvement_vs_base,
                }
                for r in self.rows
            ],
        }

    def to_csv(self) -> str:
        lines = ["variant,provider,mean,std,n,pct_improvement_vs_base"]
        for r in self.rows:
            lines.append(
                f"{r.variant_key},{r.provider_id},{r.mean:.6f},{r.std:.6f},{r.n},"
                f"{r.pct_improvement_vs_base}"
            )
        return "\n".join(lines) + "\n"


def compare_variants(
    reports: dict[str, VariantReport], base_key: str
) -> ComparisonTable:
    """Tabulate mean +- std per variant/provider with percent gains vs the base."""
    if base_key not in reports:
        raise KeyError(f"unknown base variant: {base_key}")
    fingerprints = {r.dataset_fingerprint for r in reports.values()}
    if len(fingerprints) > 1:
        raise PartitionMismatch("variants were scored on different test partitions")
    base = reports[base_key]

    rows: list[ComparisonRow] = []
    for key, report in reports.items():
        for provider_id, agg in report.per_provider.items():
            if provider_id not in base.per_provider:
                raise PartitionMismatch(f"provider {provider_id} missing from base report")
            base_mean = base.per_provider[provider_id].mean
            rows.append(
                ComparisonRow(
                    key,
                    provider_id,
                    agg.mean,
                    agg.std,
                    agg.n,
                    pct_improvement(base_mean, agg.mean),
                )
            )
    rows.sort(key=lambda r: (r.variant_key, r.provider_id))
    return ComparisonTable(base_key, rows)


def single_stage_variant(model_id: str, temperature: float = 0.0) -> AgentVariant:
    return AgentVariant(model_id, Strategy.SINGLE_STAGE_BASE, temperature)
