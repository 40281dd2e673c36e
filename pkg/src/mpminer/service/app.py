"""HTTP service exposing the analysis pipeline to the web UI and CLI."""

from __future__ import annotations

import asyncio
import json
import uuid
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..records import Strategy, StrainQuery
from .pipeline import Providers, run_pipeline
from .store import TERMINAL_STATES, JobState, JobStore

DEFAULT_MAX_PAPERS_CEILING = 25
DEFAULT_QUEUE_CAPACITY = 8
DEFAULT_WORKERS = 2

SSE_POLL_INTERVAL = 0.05


class AnalysisRequest(BaseModel):
    species: str = Field(min_length=1)
    max_papers: int = 5
    strategy: Optional[str] = None


def create_app(
    providers: Providers,
    db_path: str | Path = ":memory:",
    max_papers_ceiling: int = DEFAULT_MAX_PAPERS_CEILING,
    queue_capacity: int = DEFAULT_QUEUE_CAPACITY,
    workers: int = DEFAULT_WORKERS,
    static_dir: Optional[Path] = None,
) -> FastAPI:
    app = FastAPI(title="mpminer")
    store = JobStore(db_path)
    # Crash safety: jobs left mid-flight by a previous process are not resumed.
    store.fail_interrupted()
    executor = ThreadPoolExecutor(max_workers=workers)
    app.state.store = store
    app.state.executor = executor

    def get_job_or_404(job_id: str):
        job = store.get_job(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail="unknown job")
        return job

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/api/analyses", status_code=202)
    def create_analysis(request: AnalysisRequest) -> dict:
        try:
            StrainQuery.from_display(request.species)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        if not 1 <= request.max_papers <= max_papers_ceiling:
            raise HTTPException(
                status_code=422,
                detail=f"max_papers must be in [1, {max_papers_ceiling}]",
            )
        strategy = request.strategy or Strategy.TWO_STAGE_PROMPTED.value
        try:
            Strategy(strategy)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=f"unknown strategy {strategy}") from exc
        if store.count_in_states((JobState.QUEUED,)) >= queue_capacity:
            raise HTTPException(status_code=429, detail="job queue is full")

        job_id = uuid.uuid4().hex
        store.create_job(job_id, request.species, request.max_papers, strategy)
        store.append_event(job_id, "state", {"state": "queued", "message": "queued"})
        executor.submit(run_pipeline, job_id, store, providers)
        return {"job_id": job_id, "state": JobState.QUEUED.value}

    @app.get("/api/analyses/{job_id}")
    def get_status(job_id: str) -> dict:
        job = get_job_or_404(job_id)
        return {
            "job_id": job.job_id,
            "species": job.species,
            "max_papers": job.max_papers,
            "strategy": job.strategy,
            "state": job.state.value,
            "message": job.message,
            "counts": job.counts,
            "created_at": job.created_at,
            "updated_at": job.updated_at,
        }

    @app.get("/api/analyses/{job_id}/events")
    async def stream_events(job_id: str, request: Request, last_event_id: int = 0):
        get_job_or_404(job_id)
        header_id = request.headers.get("last-event-id")
        start_seq = int(header_id) if header_id else last_event_id

        async def generator():
            cursor = start_seq
            while True:
                events = store.events_after(job_id, cursor)
                terminal = False
                for ev in events:
                    cursor = ev.seq
                    payload = json.dumps(ev.data, ensure_ascii=False)
                    yield f"id: {ev.seq}\nevent: {ev.type}\ndata: {payload}\n\n"
                    if ev.type == "state" and ev.data.get("state") in (
                        JobState.DONE.value,
                        JobState.FAILED.value,
                    ):
                        terminal = True
                if terminal:
                    return
                if await request.is_disconnected():
                    return
                await asyncio.sleep(SSE_POLL_INTERVAL)

        return StreamingResponse(generator(), media_type="text/event-stream")

    @app.get("/api/analyses/{job_id}/results")
    def get_results(job_id: str) -> dict:
        job = get_job_or_404(job_id)
        if job.state is not JobState.DONE:
            raise HTTPException(status_code=409, detail=f"job is {job.state.value}")
        payload = store.get_results(job_id)
        if payload is None:
            raise HTTPException(status_code=409, detail="results not persisted")
        return payload

    @app.get("/api/analyses/{job_id}/search-history")
    def get_search_history(job_id: str) -> dict:
        get_job_or_404(job_id)
        payload = store.get_search_history(job_id)
        return payload or {"entries": [], "fetch_outcomes": {}}

    @app.get("/api/analyses/{job_id}/toxicity")
    def get_toxicity(job_id: str) -> dict:
        job = get_job_or_404(job_id)
        if job.state is not JobState.DONE:
            raise HTTPException(status_code=409, detail=f"job is {job.state.value}")
        payload = store.get_results(job_id) or {}
        return {"toxicity": payload.get("toxicity")}

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
