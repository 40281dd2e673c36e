"""Core vocabulary types shared across the pipeline.

Everything here is a plain value type or a pure function; no I/O.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

NAN_TOKEN = "nan"

NEGATIVE_SENTINEL_TEXT = (
    "The literature provided does not contain the requested information, "
    "for the microbial species specified."
)

SYSTEM_ROLE_TEXT = "You are a helpful assistant."

FIELD_LABELS = (
    "reported protein % dry mass:",
    "trophic mechanism:",
    "reported substrate:",
    "substrate class:",
)

FIELD_NAMES = (
    "protein_pct_dry_mass",
    "trophic_mechanism",
    "reported_substrate",
    "substrate_class",
)


class ParseError(ValueError):
    """Raised when a completion is neither the sentinel nor a well-formed answer."""

    def __init__(self, missing_labels: list[str]):
        self.missing_labels = list(missing_labels)
        super().__init__(f"missing field labels: {', '.join(missing_labels)}")


class Strategy(str, Enum):
    SINGLE_STAGE_BASE = "single_stage_base"
    TWO_STAGE_PROMPTED = "two_stage_prompted"
    FINE_TUNED_CHECKPOINT = "fine_tuned_checkpoint"


@dataclass(frozen=True)
class StrainQuery:
    """The user's target organism plus search configuration."""

    genus: str
    species: str
    strain_designation: Optional[str] = None
    max_papers: int = 10

    def __post_init__(self) -> None:
        object.__setattr__(self, "genus", self.genus.strip())
        object.__setattr__(self, "species", self.species.strip())
        if self.strain_designation is not None:
            designation = self.strain_designation.strip()
            object.__setattr__(self, "strain_designation", designation or None)
        if not self.genus or not self.species:
            raise ValueError("genus and species must be non-empty")
        if self.max_papers < 1:
            raise ValueError("max_papers must be >= 1")

    @property
    def display_form(self) -> str:
        parts = [self.genus, self.species]
        if self.strain_designation:
            parts.append(self.strain_designation)
        return " ".join(parts)

    @property
    def genus_species(self) -> str:
        return f"{self.genus} {self.species}"

    @classmethod
    def from_display(cls, text: str, max_papers: int = 10) -> "StrainQuery":
        """Parse a "genus species [strain]" display string."""
        tokens = text.split()
        if len(tokens) < 2:
            raise ValueError(f"cannot parse species name: {text!r}")
        designation = " ".join(tokens[2:]) or None
        return cls(tokens[0], tokens[1], designation, max_papers=max_papers)


@dataclass(frozen=True)
class NegativeSentinel:
    """The fixed refusal sentence an agent emits when evidence is absent."""

    canonical_text: str = NEGATIVE_SENTINEL_TEXT

    def __post_init__(self) -> None:
        if self.canonical_text != NEGATIVE_SENTINEL_TEXT:
            raise ValueError("sentinel text must be byte-identical to the canonical form")

    def to_json(self) -> dict:
        return {"negative": True}


@dataclass(frozen=True)
class ExtractionRecord:
    """The four canonical fields extracted for a strain.

    Each field is either a non-empty value or the literal "nan" token. A record
    with all four fields "nan" is invalid; that case is a NegativeSentinel.
    """

    protein_pct_dry_mass: str
    trophic_mechanism: str
    reported_substrate: str
    substrate_class: str

    def __post_init__(self) -> None:
        for name in FIELD_NAMES:
            value = getattr(self, name)
            if not isinstance(value, str):
                object.__setattr__(self, name, str(value))
        for name in FIELD_NAMES:
            if not getattr(self, name):
                raise ValueError(f"field {name} must be non-empty (use 'nan' for absence)")
        if all(getattr(self, name) == NAN_TOKEN for name in FIELD_NAMES):
            raise ValueError("all-nan record is not representable; use NegativeSentinel")

    def fields(self) -> tuple[str, str, str, str]:
        return (
            self.protein_pct_dry_mass,
            self.trophic_mechanism,
            self.reported_substrate,
            self.substrate_class,
        )

    def to_json(self) -> dict:
        return {name: getattr(self, name) for name in FIELD_NAMES}


@dataclass(frozen=True)
class AgentVariant:
    """One configuration of the extraction agent under evaluation."""

    model_id: str
    strategy: Strategy
    temperature: float = 0.0
    checkpoint_epoch: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0.0, 2.0]")
        has_epoch = self.checkpoint_epoch is not None
        if has_epoch != (self.strategy is Strategy.FINE_TUNED_CHECKPOINT):
            raise ValueError("checkpoint_epoch present iff strategy is fine_tuned_checkpoint")
        if has_epoch and self.checkpoint_epoch < 0:
            raise ValueError("checkpoint_epoch must be non-negative")

    @property
    def key(self) -> str:
        suffix = f"@ep{self.checkpoint_epoch}" if self.checkpoint_epoch is not None else ""
        return f"{self.model_id}/{self.strategy.value}{suffix}/t{self.temperature:g}"


ExtractionOutcome = Union[ExtractionRecord, NegativeSentinel]


def render_extraction_record(record: ExtractionRecord) -> str:
    """Emit the canonical one-line answer format."""
    return ", ".join(
        f"{label} {value}" for label, value in zip(FIELD_LABELS, record.fields())
    )


def _strip_value(value: str) -> str:
    return value.strip().rstrip(".,;").strip()


def parse_extraction_output(raw: str) -> ExtractionOutcome:
    """Parse a completion into a record or the negative sentinel.

    Sentinel detection is exact after trimming outer whitespace; field labels
    are located case-insensitively in canonical order, so field values may
    themselves contain commas.
    """
    trimmed = raw.strip()
    if trimmed == NEGATIVE_SENTINEL_TEXT:
        return NegativeSentinel()

    lowered = raw.lower()
    positions: list[tuple[int, int]] = []
    missing: list[str] = []
    cursor = 0
    for label in FIELD_LABELS:
        idx = lowered.find(label, cursor)
        if idx < 0:
            missing.append(label)
            continue
        positions.append((idx, idx + len(label)))
        cursor = idx + len(label)
    if missing:
        raise ParseError(missing)

    values = []
    for i, (_, value_start) in enumerate(positions):
        value_end = positions[i + 1][0] if i + 1 < len(positions) else len(raw)
        values.append(_strip_value(raw[value_start:value_end]))

    if all(v == NAN_TOKEN for v in values):
        return NegativeSentinel()
    if any(not v for v in values):
        # An empty field slot is indistinguishable from a malformed answer.
        raise ParseError([FIELD_LABELS[i] for i, v in enumerate(values) if not v])
    return ExtractionRecord(*values)


def outcome_to_json(outcome: ExtractionOutcome) -> dict:
    return outcome.to_json()


def outcome_from_json(payload: dict) -> ExtractionOutcome:
    if payload.get("negative"):
        return NegativeSentinel()
    return ExtractionRecord(**{name: payload[name] for name in FIELD_NAMES})
