"""Deterministic fakes and demo fixtures for offline runs and tests."""

from __future__ import annotations

import io
from typing import Optional

from .prompts import BLOCK_LABELS, NO_CONTENT_SENTINEL
from .records import (
    NEGATIVE_SENTINEL_TEXT,
    ExtractionRecord,
    render_extraction_record,
)
from .search import FixtureBibliographicClient, SearchConfig
from .service.pipeline import Providers
from .toxicity import FixturePathwayClient, load_tox_dataset


class RuleChatBackend:
    """Deterministic chat backend driven by marker tokens in the prompt text.

    Rules map a marker substring (planted in fixture paper texts) to either an
    extraction record or a negative outcome. Temperature is accepted but has no
    effect, mirroring the observed null temperature sensitivity.
    """

    def __init__(self, rules: dict[str, Optional[ExtractionRecord]]):
        self.rules = dict(rules)
        self.calls = 0

    def _match(self, text: str) -> tuple[Optional[str], Optional[ExtractionRecord]]:
        for marker in sorted(self.rules):
            if marker in text:
                return marker, self.rules[marker]
        return None, None

    def complete(
        self, system_text: str, user_text: str, model_id: str, temperature: float
    ) -> str:
        self.calls += 1
        marker, record = self._match(user_text)

        if "expert microbiologist" in user_text:  # stage-1 harvest
            if marker is None or record is None:
                return "\n".join(f"{label}\n{NO_CONTENT_SENTINEL}" for label in BLOCK_LABELS)
            evidence = [
                f"protein content reached {record.protein_pct_dry_mass}% of dry mass "
                f"in repeated cultivations ({marker})",
                f"the organism grew via a {record.trophic_mechanism} trophic mechanism "
                f"({marker})",
                f"cultures were grown on {record.reported_substrate} as sole carbon "
                f"source ({marker})",
                f"the substrate belongs to the {record.substrate_class} class ({marker})",
            ]
            return "\n".join(
                f"{label}\n{text}" for label, text in zip(BLOCK_LABELS, evidence)
            )

        if "Evidence blocks:" in user_text:  # stage-2 canonical extraction
            if record is None:
                return NEGATIVE_SENTINEL_TEXT
            return render_extraction_record(record)

        # single-stage baseline prompt
        if record is None:
            return NEGATIVE_SENTINEL_TEXT
        return render_extraction_record(record)


DEMO_SPECIES = "Fusarium venenatum"

_DEMO_RECORD = ExtractionRecord("45", "heterotrophic", "glucose", "sugar")

DEMO_BIBLIO_FIXTURE = {
    "searches": {},
    "default_ids": ["fv001", "fv002", "fv003"],
    "articles": {
        "fv001": {
            "title": "Growth of Fusarium venenatum on glucose medium",
            "abstract": "Cultivation of Fusarium venenatum with controlled temperature and pH.",
            "full_text": (
                "Growth of Fusarium venenatum on glucose medium. marker:fv001\n\n"
                "Fermentation at 28 C yielded biomass with 45% protein of dry mass. "
                "The fungus is heterotrophic and was grown on glucose, a sugar substrate.\n\n"
                "References\n[1] earlier fermentation work."
            ),
        },
        "fv002": {
            "title": "Fermentation temperature and oxygen effects on Fusarium venenatum",
            "abstract": "Oxygen transfer during fermentation of Fusarium venenatum cultures.",
            "full_text": (
                "Fermentation study of Fusarium venenatum. marker:fv002\n\n"
                "Protein content of 45% dry mass was confirmed on glucose feeds under "
                "heterotrophic growth."
            ),
        },
        "fv003": {
            "title": "Deep sea microbes of hydrothermal vents",
            "abstract": "A survey of Fusarium venenatum mentions in unrelated growth and cultivation contexts.",
            "full_text": "Unrelated survey. marker:fv003\n\nNo protein production data here.",
        },
    },
}

DEMO_PATHWAY_FIXTURE = {
    "organisms": {
        "Fusarium venenatum": [
            {"compound_id": "CPD-FORM", "name": "formaldehyde", "cas": "50-00-0"},
            {"compound_id": "CPD-WATER", "name": "water", "cas": "7732-18-5"},
            {"compound_id": "CPD-MYST", "name": "uncharacterised metabolite"},
        ]
    }
}

DEMO_TOX_CSV = "cas,mutagenic\n50-00-0,1\n7732-18-5,0\n"


def demo_chat_rules() -> dict[str, Optional[ExtractionRecord]]:
    return {
        "marker:fv001": _DEMO_RECORD,
        "marker:fv002": _DEMO_RECORD,
        "marker:fv003": None,
    }


def build_demo_providers(**overrides) -> Providers:
    """Fully offline provider bundle for demos and end-to-end tests."""
    kwargs = dict(
        biblio=FixtureBibliographicClient(DEMO_BIBLIO_FIXTURE),
        chat=RuleChatBackend(demo_chat_rules()),
        pathway=FixturePathwayClient(DEMO_PATHWAY_FIXTURE),
        tox=load_tox_dataset(io.StringIO(DEMO_TOX_CSV)),
        search_config=SearchConfig(threshold=3),
    )
    kwargs.update(overrides)
    return Providers(**kwargs)
