#!/usr/bin/env python3
"""Run the full analysis pipeline offline against the bundled demo fixtures.

Prints the per-paper outcomes, the consensus fields and the toxicity report
for the demo species, without touching any external service.
"""

from __future__ import annotations

import json

from mpminer.service import JobStore, run_pipeline
from mpminer.testing import DEMO_SPECIES, build_demo_providers


def main() -> None:
    providers = build_demo_providers()
    store = JobStore(":memory:")
    job_id = "demo"
    store.create_job(job_id, DEMO_SPECIES, 5, "two_stage_prompted")
    run_pipeline(job_id, store, providers)

    job = store.get_job(job_id)
    print(f"job state: {job.state.value} ({job.message})")
    for event in store.events_after(job_id, 0):
        print(f"  event {event.seq}: {event.type} {json.dumps(event.data)}")

    results = store.get_results(job_id)
    if results:
        print("\nconsensus:")
        print(json.dumps(results["consensus"], indent=2))
        print("\ntoxicity:")
        print(json.dumps(results["toxicity"], indent=2))
    store.close()


if __name__ == "__main__":
    main()
