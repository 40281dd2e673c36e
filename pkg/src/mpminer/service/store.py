"""Embedded sqlite persistence for jobs, events, results and search history."""

from __future__ import annotations

import json
import sqlite3
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional


class JobState(str, Enum):
    QUEUED = "queued"
    SEARCHING = "searching"
    EXTRACTING = "extracting"
    SCREENING = "screening"
    DONE = "done"
    FAILED = "failed"


# Forward transitions; FAILED is reachable from any non-terminal state.
_NEXT: dict[JobState, JobState] = {
    JobState.QUEUED: JobState.SEARCHING,
    JobState.SEARCHING: JobState.EXTRACTING,
    JobState.EXTRACTING: JobState.SCREENING,
    JobState.SCREENING: JobState.DONE,
}

TERMINAL_STATES = (JobState.DONE, JobState.FAILED)


class InvalidTransition(RuntimeError):
    pass


@dataclass
class JobRow:
    job_id: str
    species: str
    max_papers: int
    strategy: str
    state: JobState
    message: str
    counts: dict
    created_at: float
    updated_at: float


@dataclass
class EventRow:
    seq: int
    type: str
    data: dict


class JobStore:
    """Thread-safe store; every method opens a short transaction."""

    def __init__(self, path: Path | str):
        self.path = str(path)
        self._lock = threading.Lock()
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._conn.execute("PRAGMA journal_mode=WAL")
        self._init_schema()

    def _init_schema(self) -> None:
        with self._lock, self._conn:
            self._conn.executescript(
                """
                CREATE TABLE IF NOT EXISTS jobs (
                    job_id TEXT PRIMARY KEY,
                    species TEXT NOT NULL,
                    max_papers INTEGER NOT NULL,
                    strategy TEXT NOT NULL,
                    state TEXT NOT NULL,
                    message TEXT NOT NULL DEFAULT '',
                    counts TEXT NOT NULL DEFAULT '{}',
                    created_at REAL NOT NULL,
                    updated_at REAL NOT NULL
                );
                CREATE TABLE IF NOT EXISTS events (
                    job_id TEXT NOT NULL,
                    seq INTEGER NOT NULL,
                    type TEXT NOT NULL,
                    data TEXT NOT NULL,
                    created_at REAL NOT NULL,
                    PRIMARY KEY (job_id, seq)
                );
                CREATE TABLE IF NOT EXISTS results (
                    job_id TEXT PRIMARY KEY,
                    payload TEXT NOT NULL
                );
                CREATE TABLE IF NOT EXISTS search_history (
                    job_id TEXT PRIMARY KEY,
                    payload TEXT NOT NULL
                );
                """
            )

    # -- jobs ---------------------------------------------------------------

    def create_job(self, job_id: str, species: str, max_papers: int, strategy: str) -> None:
        now = time.time()
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO jobs (job_id, species, max_papers, strategy, state,"
                " message, counts, created_at, updated_at)"
                " VALUES (?, ?, ?, ?, ?, '', '{}', ?, ?)",
                (job_id, species, max_papers, strategy, JobState.QUEUED.value, now, now),
            )

    def get_job(self, job_id: str) -> Optional[JobRow]:
        with self._lock:
            row = self._conn.execute(
                "SELECT job_id, species, max_papers, strategy, state, message,"
                " counts, created_at, updated_at FROM jobs WHERE job_id = ?",
                (job_id,),
            ).fetchone()
        if row is None:
            return None
        return JobRow(
            job_id=row[0],
            species=row[1],
            max_papers=row[2],
            strategy=row[3],
            state=JobState(row[4]),
            message=row[5],
            counts=json.loads(row[6]),
            created_at=row[7],
            updated_at=row[8],
        )

    def count_in_states(self, states: tuple[JobState, ...]) -> int:
        marks = ",".join("?" for _ in states)
        with self._lock:
            row = self._conn.execute(
                f"SELECT COUNT(*) FROM jobs WHERE state IN ({marks})",
                tuple(s.value for s in states),
            ).fetchone()
        return int(row[0])

    def transition(self, job_id: str, new_state: JobState, message: str = "") -> None:
        """Advance the job's state machine, recording a state event atomically."""
        now = time.time()
        with self._lock, self._conn:
            row = self._conn.execute(
                "SELECT state FROM jobs WHERE job_id = ?", (job_id,)
            ).fetchone()
            if row is None:
                raise KeyError(job_id)
            current = JobState(row[0])
            legal = (
                new_state is JobState.FAILED and current not in TERMINAL_STATES
            ) or _NEXT.get(current) is new_state
            if not legal:
                raise InvalidTransition(f"{current.value} -> {new_state.value}")
            self._conn.execute(
                "UPDATE jobs SET state = ?, message = ?, updated_at = ? WHERE job_id = ?",
                (new_state.value, message, now, job_id),
            )
            self._append_event_locked(
                job_id, "state", {"state": new_state.value, "message": message}, now
            )

    def update_progress(self, job_id: str, message: str = "", **counts: int) -> None:
        now = time.time()
        with self._lock, self._conn:
            row = self._conn.execute(
                "SELECT counts FROM jobs WHERE job_id = ?", (job_id,)
            ).fetchone()
            if row is None:
                raise KeyError(job_id)
            merged = {**json.loads(row[0]), **counts}
            self._conn.execute(
                "UPDATE jobs SET counts = ?, message = ?, updated_at = ? WHERE job_id = ?",
                (json.dumps(merged), message, now, job_id),
            )

    def fail_interrupted(self) -> int:
        """Mark every non-terminal job Failed; called once at startup."""
        with self._lock, self._conn:
            rows = self._conn.execute(
                "SELECT job_id FROM jobs WHERE state NOT IN (?, ?)",
                (JobState.DONE.value, JobState.FAILED.value),
            ).fetchall()
            now = time.time()
            for (job_id,) in rows:
                self._conn.execute(
                    "UPDATE jobs SET state = ?, message = 'interrupted', updated_at = ?"
                    " WHERE job_id = ?",
                    (JobState.FAILED.value, now, job_id),
                )
                self._append_event_locked(
                    job_id, "state", {"state": "failed", "message": "interrupted"}, now
                )
        return len(rows)

    # -- events -------------------------------------------------------------

    def _append_event_locked(self, job_id: str, type_: str, data: dict, now: float) -> int:
        row = self._conn.execute(
            "SELECT COALESCE(MAX(seq), 0) FROM events WHERE job_id = ?", (job_id,)
        ).fetchone()
        seq = int(row[0]) + 1
        self._conn.execute(
            "INSERT INTO events (job_id, seq, type, data, created_at) VALUES (?, ?, ?, ?, ?)",
            (job_id, seq, type_, json.dumps(data, ensure_ascii=False), now),
        )
        return seq

    def append_event(self, job_id: str, type_: str, data: dict) -> int:
        with self._lock, self._conn:
            return self._append_event_locked(job_id, type_, data, time.time())

    def events_after(self, job_id: str, last_seq: int = 0) -> list[EventRow]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT seq, type, data FROM events WHERE job_id = ? AND seq > ?"
                " ORDER BY seq",
                (job_id, last_seq),
            ).fetchall()
        return [EventRow(seq=r[0], type=r[1], data=json.loads(r[2])) for r in rows]

    # -- payloads -----------------------------------------------------------

    def put_results(self, job_id: str, payload: dict) -> None:
        text = json.dumps(payload, ensure_ascii=False, sort_keys=True)
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT OR REPLACE INTO results (job_id, payload) VALUES (?, ?)",
                (job_id, text),
            )

    def get_results(self, job_id: str) -> Optional[dict]:
        with self._lock:
            row = self._conn.execute(
                "SELECT payload FROM results WHERE job_id = ?", (job_id,)
            ).fetchone()
        return json.loads(row[0]) if row else None

    def put_search_history(self, job_id: str, payload: dict) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT OR REPLACE INTO search_history (job_id, payload) VALUES (?, ?)",
                (job_id, json.dumps(payload, ensure_ascii=False)),
            )

    def get_search_history(self, job_id: str) -> Optional[dict]:
        with self._lock:
            row = self._conn.execute(
                "SELECT payload FROM search_history WHERE job_id = ?", (job_id,)
            ).fetchone()
        return json.loads(row[0]) if row else None

    def close(self) -> None:
        with self._lock:
            self._conn.close()
