"""Command-line interface; the same entry point also serves the HTTP API."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import AppConfig, load_config
from .curation import emit_finetune_jsonl, import_source_table, stratified_split
from .documents import TokenBudget, curate_document
from .evaluation import (
    EmbeddingCache,
    HashEmbeddingProvider,
    aggregate,
    compare_variants,
    pct_improvement,
    score_pairs,
    temperature_sweep,
)
from .records import AgentVariant, StrainQuery, Strategy
from .search import FixtureBibliographicClient, PubMedClient, SearchConfig, run_search
from .toxicity import BioCycClient, FixturePathwayClient, load_tox_dataset, screen


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path), default=None)
@click.pass_context
def main(ctx: click.Context, config_path: Path | None) -> None:
    """Literature mining toolkit for microbial protein production research."""
    ctx.obj = load_config(config_path)


def _biblio_client(cfg: AppConfig):
    if cfg.fixtures_dir:
        return FixtureBibliographicClient.from_file(Path(cfg.fixtures_dir) / "biblio.json")
    return PubMedClient(cfg.pubmed_base_url, cfg.pubmed_api_key)


def _pathway_client(cfg: AppConfig):
    if cfg.fixtures_dir:
        return FixturePathwayClient.from_file(Path(cfg.fixtures_dir) / "pathway.json")
    return BioCycClient(cfg.biocyc_base_url, cfg.biocyc_user, cfg.biocyc_password)


@main.command()
@click.argument("species")
@click.option("--max-papers", default=10, show_default=True)
@click.pass_obj
def search(cfg: AppConfig, species: str, max_papers: int) -> None:
    """Run the literature search agent for SPECIES and print ranked articles."""
    query = StrainQuery.from_display(species, max_papers=max_papers)
    search_cfg = SearchConfig(threshold=cfg.relevance_threshold, max_papers=max_papers)
    ranked = run_search(query, search_cfg, _biblio_client(cfg))
    for scored in ranked.articles:
        click.echo(f"{scored.score.value:4d}  {scored.meta.article_id}  {scored.meta.title}")
    click.echo(f"-- {len(ranked.articles)} articles over {len(ranked.history.entries)} queries")


@main.command()
@click.argument("species")
@click.argument("paper_file", type=click.Path(exists=True, path_type=Path))
@click.option("--strategy", default=Strategy.TWO_STAGE_PROMPTED.value, show_default=True)
@click.pass_obj
def extract(cfg: AppConfig, species: str, paper_file: Path, strategy: str) -> None:
    """Extract the four canonical fields for SPECIES from a paper text file."""
    from .extraction import OpenAIChatBackend, run_single_stage, run_two_stage
    from .records import NegativeSentinel

    query = StrainQuery.from_display(species)
    doc = curate_document(
        paper_file.stem, paper_file.read_text(encoding="utf-8"), TokenBudget(cfg.token_budget)
    )
    backend = OpenAIChatBackend(cfg.llm_base_url, cfg.llm_api_key)
    chosen = Strategy(strategy)
    if chosen is Strategy.TWO_STAGE_PROMPTED:
        variant = AgentVariant(cfg.model_id, chosen)
        outcome = run_two_stage(query, doc, backend, variant, cfg.gate_min_chars)
    else:
        variant = AgentVariant(cfg.model_id, chosen)
        outcome = run_single_stage(query, doc, backend, variant)
    if isinstance(outcome, NegativeSentinel):
        click.echo(outcome.canonical_text)
    else:
        click.echo(json.dumps(outcome.to_json(), indent=2))


@main.group()
def curate() -> None:
    """Dataset curation commands."""


@curate.command("split")
@click.argument("table", type=click.Path(exists=True, path_type=Path))
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=Path("splits"))
def curate_split(table: Path, seed: int, out: Path) -> None:
    """Import the source table and write a strain-stratified 80/10/10 split."""
    result = import_source_table(table)
    for warning in result.warnings:
        click.echo(f"warning: {warning}", err=True)
    split = stratified_split(result.examples, seed=seed)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in split.partitions().items():
        if not part:
            continue
        (out / f"{name}.jsonl").write_bytes(emit_finetune_jsonl(part))
    click.echo(
        f"train/validation/test = {len(split.train)}/{len(split.validation)}/{len(split.test)}"
    )


@curate.command("jsonl")
@click.argument("table", type=click.Path(exists=True, path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), default=Path("dataset.jsonl"))
def curate_jsonl(table: Path, out: Path) -> None:
    """Emit the whole source table as fine-tuning JSONL."""
    result = import_source_table(table)
    for warning in result.warnings:
        click.echo(f"warning: {warning}", err=True)
    if not result.examples:
        raise click.ClickException("no usable rows in table")
    out.write_bytes(emit_finetune_jsonl(result.examples))
    click.echo(f"wrote {len(result.examples)} examples to {out}")


@main.group(name="eval")
def eval_group() -> None:
    """Evaluation commands."""


@eval_group.command("score")
@click.argument("pairs_file", type=click.Path(exists=True, path_type=Path))
@click.option("--provider-id", default="fake-hash-embed", show_default=True)
@click.pass_obj
def eval_score(cfg: AppConfig, pairs_file: Path, provider_id: str) -> None:
    """Score (obtained, ideal) pairs from a JSON list and print the aggregate."""
    pairs = [tuple(p) for p in json.loads(pairs_file.read_text(encoding="utf-8"))]
    provider = HashEmbeddingProvider(provider_id)
    cache = EmbeddingCache(Path(cfg.cache_dir) / "embeddings")
    scored = score_pairs(pairs, provider, cache)
    agg = aggregate([s.score for s in scored], provider.provider_id)
    click.echo(f"mean={agg.mean:.4f} std(sample)={agg.std:.4f} n={agg.n}")


@eval_group.command("sweep")
@click.argument("dataset_jsonl", type=click.Path(exists=True, path_type=Path))
@click.option("--model", "models", multiple=True, required=True)
@click.option("--out", type=click.Path(path_type=Path), default=Path("sweep.json"))
@click.pass_obj
def eval_sweep(cfg: AppConfig, dataset_jsonl: Path, models: tuple[str, ...], out: Path) -> None:
    """Temperature sweep of the single-stage agent over a chat-format JSONL dataset."""
    from dataclasses import dataclass

    from .extraction import OpenAIChatBackend

    @dataclass
    class Row:
        prompt_user_text: str
        ideal_output: str

    rows = []
    for line in dataset_jsonl.read_text(encoding="utf-8").splitlines():
        messages = json.loads(line)["messages"]
        by_role = {m["role"]: m["content"] for m in messages}
        rows.append(Row(by_role["user"], by_role["assistant"]))

    backend = OpenAIChatBackend(cfg.llm_base_url, cfg.llm_api_key)
    providers = [HashEmbeddingProvider()]
    grid = temperature_sweep(list(models), rows, backend, providers)
    grid.save(out)
    click.echo(f"wrote {len(grid.cells)} cells to {out}")


@eval_group.command("compare")
@click.argument("reports_file", type=click.Path(exists=True, path_type=Path))
@click.option("--base", required=True, help="variant key used as the comparison base")
def eval_compare(reports_file: Path, base: str) -> None:
    """Compare variant reports (JSON produced by the harness) against a base."""
    from .evaluation import EvalAggregate, VariantReport
    from .records import AgentVariant

    raw = json.loads(reports_file.read_text(encoding="utf-8"))
    reports = {}
    for key, body in raw.items():
        per_provider = {
            pid: EvalAggregate(pid, cell["mean"], cell["std"], cell["n"])
            for pid, cell in body["per_provider"].items()
        }
        variant = AgentVariant(body.get("model_id", key), Strategy.SINGLE_STAGE_BASE)
        reports[key] = VariantReport(variant, per_provider, body["dataset_fingerprint"])
    table = compare_variants(reports, base)
    click.echo(table.to_csv(), nl=False)


@main.group()
def tox() -> None:
    """Toxicity screening commands."""


@tox.command("screen")
@click.argument("organism_id")
@click.option("--dataset", type=click.Path(exists=True, path_type=Path), required=True)
@click.pass_obj
def tox_screen(cfg: AppConfig, organism_id: str, dataset: Path) -> None:
    """Screen ORGANISM_ID's metabolome against an Ames mutagenicity CSV."""
    tox_data = load_tox_dataset(dataset)
    for err in tox_data.row_errors:
        click.echo(f"warning: {err}", err=True)
    report = screen(organism_id, _pathway_client(cfg), tox_data)
    click.echo(json.dumps(report.to_json(), indent=2))


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--demo", is_flag=True, help="serve with fully offline demo providers")
@click.option("--static-dir", type=click.Path(exists=True, path_type=Path), default=None)
@click.pass_obj
def serve(cfg: AppConfig, port: int, host: str, demo: bool, static_dir: Path | None) -> None:
    """Run the HTTP service consumed by the web UI."""
    import uvicorn

    from .extraction import OpenAIChatBackend
    from .service.app import create_app
    from .service.pipeline import Providers

    if demo:
        from .testing import build_demo_providers

        providers = build_demo_providers()
    else:
        tox_data = None
        if cfg.tox_dataset_path:
            tox_data = load_tox_dataset(Path(cfg.tox_dataset_path))
        providers = Providers(
            biblio=_biblio_client(cfg),
            chat=OpenAIChatBackend(cfg.llm_base_url, cfg.llm_api_key),
            pathway=_pathway_client(cfg),
            tox=tox_data,
            search_config=SearchConfig(threshold=cfg.relevance_threshold),
            token_budget=TokenBudget(cfg.token_budget),
            model_id=cfg.model_id,
            gate_min_chars=cfg.gate_min_chars,
        )
    app = create_app(
        providers,
        db_path=cfg.db_path,
        max_papers_ceiling=cfg.max_papers_ceiling,
        static_dir=static_dir,
    )
    uvicorn.run(app, host=host, port=port)


@main.command(hidden=True)
@click.argument("base_mean", type=float)
@click.argument("new_mean", type=float)
def improvement(base_mean: float, new_mean: float) -> None:
    """Print the integer percent improvement between two mean scores."""
    click.echo(pct_improvement(base_mean, new_mean))


if __name__ == "__main__":
    sys.exit(main())
