#!/usr/bin/env python3
"""Temperature sweep of the single-stage agent over the demo fixtures.

Uses the deterministic rule-driven chat backend and the hash embedding
providers, so the sweep is fully offline. The expected outcome is a flat
grid: identical scores at every temperature.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

from mpminer.evaluation import EXPECTED_PROVIDER_IDS, HashEmbeddingProvider, temperature_sweep
from mpminer.prompts import build_single_stage_prompt
from mpminer.records import StrainQuery, render_extraction_record
from mpminer.testing import DEMO_BIBLIO_FIXTURE, DEMO_SPECIES, RuleChatBackend, demo_chat_rules


@dataclass
class Row:
    prompt_user_text: str
    ideal_output: str


def build_dataset() -> list[Row]:
    strain = StrainQuery.from_display(DEMO_SPECIES)
    rows = []
    rules = demo_chat_rules()
    for article_id, article in DEMO_BIBLIO_FIXTURE["articles"].items():
        record = rules.get(f"marker:{article_id}")
        if record is None:
            continue
        _, user = build_single_stage_prompt(strain, article["full_text"])
        rows.append(Row(user, render_extraction_record(record)))
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", default="demo-model")
    parser.add_argument("--out", type=Path, default=Path("sweep.json"))
    args = parser.parse_args()

    dataset = build_dataset()
    backend = RuleChatBackend(demo_chat_rules())
    providers = [HashEmbeddingProvider(pid) for pid in EXPECTED_PROVIDER_IDS]
    grid = temperature_sweep([args.model], dataset, backend, providers)
    grid.save(args.out)

    print(f"{len(grid.cells)} cells over {len(dataset)} examples -> {args.out}")
    for cell in grid.cells:
        print(
            f"  {cell.model_id} t={cell.temperature:.1f} {cell.provider_id}: "
            f"mean={cell.aggregate.mean:.4f} std={cell.aggregate.std:.4f}"
        )


if __name__ == "__main__":
    main()
