"""Paper text curation: reference stripping, cleanup, token budgeting, splitting."""

from __future__ import annotations

import hashlib
import json
import math
import re
import subprocess
import tempfile
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Protocol


class ExtractionFailed(RuntimeError):
    """PDF text extraction could not produce any text."""


class PartKind(str, Enum):
    START = "start"
    END = "end"


@dataclass(frozen=True)
class TextPart:
    kind: PartKind
    text: str


@dataclass(frozen=True)
class TokenBudget:
    max_tokens: int

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


@dataclass(frozen=True)
class PaperDocument:
    article_id: str
    raw_text: str
    curated_text: str
    parts: tuple[TextPart, ...]

    def __post_init__(self) -> None:
        if not self.parts:
            raise ValueError("a document must have at least one part")
        if len(self.parts) == 2:
            kinds = tuple(p.kind for p in self.parts)
            if kinds != (PartKind.START, PartKind.END):
                raise ValueError("two-part documents must be (start, end)")
        if len(self.parts) > 2:
            raise ValueError("at most two parts")
        if re.search(r"\n{3,}", self.curated_text):
            raise ValueError("curated text must not contain 3+ consecutive newlines")

    @classmethod
    def from_raw(cls, article_id: str, raw_text: str) -> "PaperDocument":
        """Wrap raw text as an uncurated single-part document."""
        curated = clean_text(raw_text)
        return cls(article_id, raw_text, curated, (TextPart(PartKind.START, curated),))


# Heading that marks the start of the bibliography, optionally numbered.
_REFERENCE_HEADING = re.compile(
    r"^\s*(?:\d+\s*[.)]?\s*)?(references|bibliography|literature cited)\s*[:.]?\s*$",
    re.IGNORECASE,
)

_PAGE_NUMBER_LINE = re.compile(r"^\d+$")
_DOWNLOADED_LINE = re.compile(r"^downloaded from\b", re.IGNORECASE)
_DOI_LINE = re.compile(r"^(?:doi[:.]?\s*)?(?:https?://(?:dx\.)?doi\.org/)?10\.\d{4,9}/\S+$", re.IGNORECASE)


def strip_references(text: str) -> str:
    """Drop everything from the last reference-section heading in the final 40%.

    Headings earlier in the document are ignored so in-text mentions of
    "References" cannot truncate the body.
    """
    if not text:
        return text
    cutoff = 0.6 * len(text)
    best: Optional[int] = None
    offset = 0
    for line in text.splitlines(keepends=True):
        if offset >= cutoff and _REFERENCE_HEADING.match(line):
            best = offset
        offset += len(line)
    if best is None:
        return text
    return text[:best].rstrip()


def _is_junk_line(line: str) -> bool:
    stripped = line.strip()
    if not stripped:
        return False
    if _PAGE_NUMBER_LINE.match(stripped):
        return True
    if _DOWNLOADED_LINE.match(stripped):
        return True
    if _DOI_LINE.match(stripped):
        return True
    non_alnum = sum(1 for c in stripped if not c.isalnum() and not c.isspace())
    visible = sum(1 for c in stripped if not c.isspace())
    return visible > 0 and non_alnum / visible >= 0.8


def clean_text(text: str) -> str:
    """Normalise whitespace and drop header/footer artifacts; idempotent."""
    lines = []
    for line in text.split("\n"):
        line = re.sub(r"[ \t]+", " ", line).strip()
        if _is_junk_line(line):
            continue
        lines.append(line)
    joined = "\n".join(lines)
    joined = re.sub(r"\n{3,}", "\n\n", joined)
    return joined.strip("\n")


def estimate_tokens(text: str) -> int:
    """Tokenizer-free estimate: one token per 4 characters, rounded up."""
    return math.ceil(len(text) / 4)


# Positions after which a cut is considered "clean".
_BOUNDARY = re.compile(r"(?:[.!?][\"')\]]?(?=\s))|\n")


def _boundary_positions(text: str) -> list[int]:
    return [m.end() for m in _BOUNDARY.finditer(text)]


def split_for_budget(text: str, budget: TokenBudget) -> list[TextPart]:
    """Return the text whole, or as a budget-respecting start part and end part."""
    if estimate_tokens(text) <= budget.max_tokens:
        return [TextPart(PartKind.START, text)]

    limit = budget.max_tokens * 4
    boundaries = _boundary_positions(text)

    start_cut = max((b for b in boundaries if b <= limit), default=limit)
    start = text[:start_cut]

    suffix_start = len(text) - limit
    end_cut = min((b for b in boundaries if b >= suffix_start), default=suffix_start)
    end = text[end_cut:]

    return [TextPart(PartKind.START, start), TextPart(PartKind.END, end)]


def curate_document(article_id: str, raw_text: str, budget: TokenBudget) -> PaperDocument:
    """Full curation pipeline: strip references, clean, split to budget."""
    curated = clean_text(strip_references(raw_text))
    parts = tuple(split_for_budget(curated, budget))
    return PaperDocument(article_id, raw_text, curated, parts)


def save_document(doc: PaperDocument, directory: Path) -> Path:
    """Persist curated text as <id>.txt plus a JSON sidecar with part info."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    safe = re.sub(r"[^A-Za-z0-9._-]", "_", doc.article_id)
    text_path = directory / f"{safe}.txt"
    text_path.write_text(doc.curated_text, encoding="utf-8")
    sidecar = {
        "article_id": doc.article_id,
        "token_estimate": estimate_tokens(doc.curated_text),
        "parts": [
            {"kind": p.kind.value, "chars": len(p.text), "tokens": estimate_tokens(p.text)}
            for p in doc.parts
        ],
    }
    (directory / f"{safe}.json").write_text(
        json.dumps(sidecar, indent=2), encoding="utf-8"
    )
    return text_path


class TextExtractor(Protocol):
    def extract(self, pdf_bytes: bytes) -> str: ...


def extract_text(pdf_bytes: bytes, extractor: TextExtractor) -> str:
    """Extract linear reading-order text from a PDF byte stream."""
    if not pdf_bytes:
        raise ExtractionFailed("empty byte stream")
    text = extractor.extract(pdf_bytes)
    if not text or not text.strip():
        raise ExtractionFailed("extractor produced no text")
    return text


@dataclass
class FixtureExtractor:
    """Replay extractor: maps sha256 of the PDF bytes to a golden text."""

    golden: dict[str, str] = field(default_factory=dict)

    def add(self, pdf_bytes: bytes, text: str) -> None:
        self.golden[hashlib.sha256(pdf_bytes).hexdigest()] = text

    def extract(self, pdf_bytes: bytes) -> str:
        key = hashlib.sha256(pdf_bytes).hexdigest()
        if key not in self.golden:
            raise ExtractionFailed(f"no golden text for digest {key[:12]}")
        return self.golden[key]


@dataclass
class CommandExtractor:
    """Runs an external converter (default pdftotext) on a temp file."""

    command: tuple[str, ...] = ("pdftotext", "{input}", "-")
    timeout: float = 60.0

    def extract(self, pdf_bytes: bytes) -> str:
        with tempfile.NamedTemporaryFile(suffix=".pdf") as tmp:
            tmp.write(pdf_bytes)
            tmp.flush()
            argv = [part.format(input=tmp.name) for part in self.command]
            try:
                proc = subprocess.run(
                    argv, capture_output=True, timeout=self.timeout, check=False
                )
            except (OSError, subprocess.TimeoutExpired) as exc:
                raise ExtractionFailed(str(exc)) from exc
        if proc.returncode != 0:
            raise ExtractionFailed(proc.stderr.decode("utf-8", "replace")[:500])
        return proc.stdout.decode("utf-8", "replace")
