"""Prompt templates for the extraction agent.

The strings here are part of the system's behavioural contract: tests assert
their exact wording, so edits must be deliberate and versioned.
"""

from __future__ import annotations

from .records import NEGATIVE_SENTINEL_TEXT, SYSTEM_ROLE_TEXT, StrainQuery

PROMPT_VERSION = "1"

SCHEMA_LINE = (
    "reported protein % dry mass: [answer], trophic mechanism: [answer], "
    "reported substrate: [answer], substrate class: [answer]"
)

ANSWER_FORMAT_INSTRUCTION = (
    f'Please give your answer in a concise "{SCHEMA_LINE}" format.'
)

SINGLE_STAGE_TEMPLATE = (
    "For the genus species {species_name}, please find the reported protein % dry mass, "
    "trophic mechanism, reported substrate and substrate class, from the following paper(s).\n"
    "\n"
    f"{ANSWER_FORMAT_INSTRUCTION}\n"
    "\n"
    'If the information cannot be found, then please respond with: "'
    f'{NEGATIVE_SENTINEL_TEXT}"\n'
    "\n"
    "Find the information from the PDF text of the following paper(s):\n"
    "\n"
    "{paper_text}"
)

NO_CONTENT_SENTINEL = "No relevant content found"

BLOCK_LABELS = (
    "[PROTEIN % DRY MASS]",
    "[TROPHIC MECHANISM]",
    "[REPORTED SUBSTRATE]",
    "[SUBSTRATE CLASS]",
)

HARVEST_INSTRUCTIONS = (
    "You are an expert microbiologist reviewing a research paper about {species_name}. "
    "Search the entire paper text exhaustively and list every passage that may report "
    "the protein % dry mass, the trophic mechanism, the reported substrate, or the "
    "substrate class for this organism; you must reproduce all quantitative values "
    "verbatim, exactly as written in the paper, together with their surrounding "
    "sentences, figure captions and table headers; do not summarise, paraphrase or "
    "condense any passage, and do not omit adjacent context. Report your findings as "
    "four labelled blocks, in this order: "
    f"{BLOCK_LABELS[0]}, {BLOCK_LABELS[1]}, {BLOCK_LABELS[2]}, {BLOCK_LABELS[3]}. "
    f'If a block has no supporting evidence, write exactly "{NO_CONTENT_SENTINEL}" '
    "for that block."
)

HARVEST_TEMPLATE = HARVEST_INSTRUCTIONS + "\n\nPaper text:\n\n{paper_text}"

PRECEDENCE_RULE = "strain-specific > genus-level"

POSITIVE_SCHEMA_EXAMPLE = (
    "reported protein % dry mass: 45, trophic mechanism: heterotrophic, "
    "reported substrate: glucose, substrate class: sugar"
)

NEGATIVE_SCHEMA_EXAMPLE = (
    "reported protein % dry mass: nan, trophic mechanism: nan, "
    "reported substrate: nan, substrate class: heterotrophic waste"
)

CANONICAL_TEMPLATE = (
    "From the evidence blocks below, extract one canonical value per field. "
    "Answer with the schema line only, with no extra commentary:\n"
    f'"{SCHEMA_LINE}"\n'
    "\n"
    f"Example of a valid answer: \"{POSITIVE_SCHEMA_EXAMPLE}\"\n"
    f"Example of a valid answer with missing fields: \"{NEGATIVE_SCHEMA_EXAMPLE}\"\n"
    "\n"
    'Write "nan" for any field whose evidence is absent. When evidence conflicts, '
    f"apply the precedence rule: {PRECEDENCE_RULE}.\n"
    "\n"
    "Evidence blocks:\n"
    "\n"
    "{blocks}"
)


def build_single_stage_prompt(query: StrainQuery, paper_text: str) -> tuple[str, str]:
    """Baseline one-shot prompt; user text follows the fixed template verbatim."""
    if not paper_text:
        raise ValueError("paper_text must be non-empty")
    user = SINGLE_STAGE_TEMPLATE.format(
        species_name=query.display_form, paper_text=paper_text
    )
    return SYSTEM_ROLE_TEXT, user


def build_harvest_prompt(query: StrainQuery, paper_text: str) -> tuple[str, str]:
    """Stage-1 exploratory-recall prompt producing four labelled evidence blocks."""
    if not paper_text:
        raise ValueError("paper_text must be non-empty")
    user = HARVEST_TEMPLATE.format(
        species_name=query.display_form, paper_text=paper_text
    )
    return SYSTEM_ROLE_TEXT, user
