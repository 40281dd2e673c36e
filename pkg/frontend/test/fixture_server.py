"""Launches the analysis service against offline fixtures for the UI tests.

Extends the bundled demo corpus with one article whose text cannot be
fetched, so the history panel's failure marking is exercised end to end.
"""

from __future__ import annotations

import sys

import uvicorn

from mpminer.service import create_app
from mpminer.testing import build_demo_providers


def main() -> None:
    port = int(sys.argv[1])
    providers = build_demo_providers()
    fixture = providers.biblio.fixture
    fixture["articles"]["fv004"] = {
        "title": "Fusarium venenatum growth medium notes",
        "abstract": "",
    }
    fixture["default_ids"].append("fv004")
    app = create_app(providers)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")


if __name__ == "__main__":
    main()
