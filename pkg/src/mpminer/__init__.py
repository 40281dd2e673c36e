"""mpminer: literature mining and information extraction for microbial protein research."""

from .records import (
    AgentVariant,
    ExtractionRecord,
    NegativeSentinel,
    ParseError,
    StrainQuery,
    Strategy,
    parse_extraction_output,
    render_extraction_record,
)

__version__ = "0.1.0"

__all__ = [
    "AgentVariant",
    "ExtractionRecord",
    "NegativeSentinel",
    "ParseError",
    "StrainQuery",
    "Strategy",
    "parse_extraction_output",
    "render_extraction_record",
    "__version__",
]
