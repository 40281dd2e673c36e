from __future__ import annotations

import pytest
from hypothesis import strategies as st

from mpminer.records import ExtractionRecord

# Field values that survive the render -> parse round trip: no commas or colons
# (label delimiters), no leading/trailing whitespace or trailing punctuation.
field_value = st.from_regex(
    r"[A-Za-z0-9][A-Za-z0-9 %/.\-]{0,30}[A-Za-z0-9%]|[A-Za-z0-9]", fullmatch=True
).map(lambda s: " ".join(s.split())).filter(lambda s: s and not s.endswith((".", ",", ";")))


@st.composite
def extraction_records(draw) -> ExtractionRecord:
    values = [draw(field_value) for _ in range(4)]
    if all(v == "nan" for v in values):
        values[0] = "45"
    return ExtractionRecord(*values)


@pytest.fixture
def demo_providers():
    from mpminer.testing import build_demo_providers

    return build_demo_providers()
