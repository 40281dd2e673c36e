"""End-to-end analysis pipeline: search -> curate -> extract -> consensus -> screen."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from ..documents import TokenBudget, curate_document
from ..extraction import (
    DEFAULT_GATE_MIN_CHARS,
    BackendError,
    ChatBackend,
    ExtractionFailure,
    run_single_stage,
    run_two_stage,
)
from ..records import (
    FIELD_NAMES,
    AgentVariant,
    NegativeSentinel,
    StrainQuery,
    Strategy,
)
from ..search import (
    AbstractOnly,
    BibliographicClient,
    SearchConfig,
    fetch_fulltext,
    run_search,
)
from ..toxicity import CompoundCache, PathwayDbClient, ToxDataset, UnknownOrganism, screen
from .store import JobState, JobStore

DEFAULT_TOKEN_BUDGET = 30_000


@dataclass
class Providers:
    """Pluggable external services consumed by the pipeline."""

    biblio: BibliographicClient
    chat: ChatBackend
    pathway: Optional[PathwayDbClient] = None
    tox: Optional[ToxDataset] = None
    search_config: SearchConfig = field(default_factory=SearchConfig)
    token_budget: TokenBudget = field(default_factory=lambda: TokenBudget(DEFAULT_TOKEN_BUDGET))
    model_id: str = "gpt-4.1-2025-04-14"
    gate_min_chars: int = DEFAULT_GATE_MIN_CHARS
    compound_cache: CompoundCache = field(default_factory=CompoundCache)


def _variant(providers: Providers, strategy: Strategy) -> AgentVariant:
    return AgentVariant(providers.model_id, strategy, temperature=0.0)


def consensus(per_paper: list[dict]) -> dict:
    """Per-field modal value over non-nan extracted records; ties all listed."""
    out: dict[str, dict] = {}
    for name in FIELD_NAMES:
        values = [
            p["record"][name]
            for p in per_paper
            if p.get("record") and p["record"][name] != "nan"
        ]
        counts = Counter(values)
        if not counts:
            out[name] = {"values": [], "support": 0}
            continue
        top = max(counts.values())
        modal = sorted(v for v, c in counts.items() if c == top)
        out[name] = {"values": modal, "support": top}
    return out


def run_pipeline(job_id: str, store: JobStore, providers: Providers) -> None:
    """Execute one analysis job, recording transitions, events and results."""
    job = store.get_job(job_id)
    assert job is not None
    try:
        _run(job_id, store, providers)
    except Exception as exc:  # noqa: BLE001 - any pipeline error fails the job
        current = store.get_job(job_id)
        if current and current.state not in (JobState.DONE, JobState.FAILED):
            store.transition(job_id, JobState.FAILED, str(exc) or type(exc).__name__)


def _run(job_id: str, store: JobStore, providers: Providers) -> None:
    job = store.get_job(job_id)
    strain = StrainQuery.from_display(job.species, max_papers=job.max_papers)
    strategy = Strategy(job.strategy)

    store.transition(job_id, JobState.SEARCHING, "searching literature")
    cfg = SearchConfig(
        keywords=providers.search_config.keywords,
        templates=providers.search_config.templates,
        threshold=providers.search_config.threshold,
        max_papers=job.max_papers,
        per_query_limit=providers.search_config.per_query_limit,
    )
    ranked = run_search(strain, cfg, providers.biblio)
    store.update_progress(
        job_id,
        message=f"{len(ranked.articles)} relevant articles",
        papers_found=len(ranked.articles),
    )

    store.transition(job_id, JobState.EXTRACTING, "extracting fields")
    variant = _variant(providers, strategy)
    per_paper: list[dict] = []
    fetched = 0
    extracted = 0
    for scored in ranked.articles:
        article_id = scored.meta.article_id
        entry: dict = {"article_id": article_id, "score": scored.score.value}
        try:
            fetched_doc = fetch_fulltext(scored.meta, providers.biblio)
        except Exception as exc:  # noqa: BLE001 - per-paper failure is not fatal
            entry["error"] = f"fetch failed: {exc}"
            ranked.history.fetch_outcomes[article_id] = False
            per_paper.append(entry)
            store.append_event(job_id, "paper", {"article_id": article_id, "status": "fetch_failed"})
            continue
        if isinstance(fetched_doc, AbstractOnly):
            raw_text = fetched_doc.abstract
            entry["source"] = "abstract"
        else:
            raw_text = fetched_doc.raw_text
            entry["source"] = "full_text"
        if not raw_text.strip():
            entry["error"] = "no text available"
            ranked.history.fetch_outcomes[article_id] = False
            per_paper.append(entry)
            store.append_event(job_id, "paper", {"article_id": article_id, "status": "empty"})
            continue
        fetched += 1
        ranked.history.fetch_outcomes[article_id] = True
        doc = curate_document(article_id, raw_text, providers.token_budget)
        try:
            if strategy is Strategy.TWO_STAGE_PROMPTED:
                outcome = run_two_stage(
                    strain, doc, providers.chat, variant, providers.gate_min_chars
                )
            else:
                outcome = run_single_stage(strain, doc, providers.chat, variant)
        except (BackendError, ExtractionFailure) as exc:
            entry["error"] = str(exc)
            per_paper.append(entry)
            store.append_event(
                job_id, "paper", {"article_id": article_id, "status": "extraction_failed"}
            )
            continue
        if isinstance(outcome, NegativeSentinel):
            entry["negative"] = True
        else:
            entry["record"] = outcome.to_json()
            extracted += 1
        per_paper.append(entry)
        store.append_event(
            job_id,
            "paper",
            {
                "article_id": article_id,
                "status": "extracted" if "record" in entry else "negative",
            },
        )
        store.update_progress(
            job_id,
            message=f"extracted {extracted} of {fetched} papers",
            papers_fetched=fetched,
            papers_extracted=extracted,
        )

    store.transition(job_id, JobState.SCREENING, "screening toxicity")
    toxicity_payload = None
    if providers.pathway is not None and providers.tox is not None and providers.tox.records:
        try:
            report = screen(
                strain.genus_species,
                providers.pathway,
                providers.tox,
                providers.compound_cache,
            )
            toxicity_payload = report.to_json()
        except UnknownOrganism:
            toxicity_payload = {"organism_id": strain.genus_species, "unknown_organism": True}

    results = {
        "species": strain.display_form,
        "max_papers": job.max_papers,
        "strategy": strategy.value,
        "consensus": consensus(per_paper),
        "papers": per_paper,
        "toxicity": toxicity_payload,
        "search_history": ranked.history.to_json(),
    }
    store.put_results(job_id, results)
    store.put_search_history(job_id, ranked.history.to_json())
    store.transition(job_id, JobState.DONE, "analysis complete")
