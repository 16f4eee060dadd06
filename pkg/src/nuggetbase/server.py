"""HTTP surface for querying the store and adjudicating review items.

Reads run concurrently against the engine; every mutation is funneled
through a single writer thread behind a bounded queue. When the queue is
full the caller gets a 503 instead of piling up, so a burst of decisions
degrades loudly rather than stalling the process. Request and response
bodies are JSON throughout; errors use {"error", "detail"} with 400,
404, 409, or 503 status codes.
"""
from __future__ import annotations

import queue
import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Any, Callable, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .governance import (
    Decision,
    InvalidDecisionError,
    NotFoundError,
    ReviewConflictError,
)
from .index import NuggetEngine
from .model import View, record_to_dict
from .retrieval import Query, retrieve

WRITE_QUEUE_SIZE = 32
WRITE_TIMEOUT_S = 30.0

VALID_ACTIONS = ("confirm_active", "deprecate", "mark_preferred", "resolve_to")


def _error(status: int, error: str, detail: str) -> JSONResponse:
    return JSONResponse({"error": error, "detail": detail}, status_code=status)


def _outcome_dict(outcome) -> dict:
    return {
        "action": outcome.action,
        "nugget_id": outcome.nugget_id,
        "affected": [
            {
                "nugget_id": a.nugget_id,
                "status": a.status.value,
                "t_end": a.t_end.isoformat() if a.t_end else None,
            }
            for a in outcome.affected
        ],
        "note": outcome.note,
    }


@dataclass
class _WriteJob:
    fn: Callable[[], Any]
    done: threading.Event
    result: Any = None
    exc: Optional[BaseException] = None


class WriteFunnel:
    """Single consumer thread executing queued mutations in arrival order."""

    def __init__(self, maxsize: int = WRITE_QUEUE_SIZE):
        self._queue: queue.Queue[Optional[_WriteJob]] = queue.Queue(maxsize=maxsize)
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._started = False
        self._start_lock = threading.Lock()

    def start(self) -> None:
        with self._start_lock:
            if not self._started:
                self._started = True
                self._thread.start()

    def stop(self) -> None:
        if self._started:
            self._queue.put(None)
            self._thread.join(timeout=5.0)
            self._started = False

    def _run(self) -> None:
        while True:
            job = self._queue.get()
            if job is None:
                return
            try:
                job.result = job.fn()
            except BaseException as exc:  # handed back to the waiting request
                job.exc = exc
            finally:
                job.done.set()

    def submit(self, fn: Callable[[], Any]) -> Any:
        self.start()
        job = _WriteJob(fn=fn, done=threading.Event())
        self._queue.put_nowait(job)  # raises queue.Full under backpressure
        if not job.done.wait(WRITE_TIMEOUT_S):
            raise TimeoutError("write funnel stalled")
        if job.exc is not None:
            raise job.exc
        return job.result


def create_app(
    engine: NuggetEngine, console_dir: Optional[str] = None
) -> FastAPI:
    funnel = WriteFunnel()

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        funnel.start()
        yield
        funnel.stop()

    app = FastAPI(title="nuggetbase", docs_url=None, redoc_url=None, lifespan=lifespan)
    app.state.engine = engine
    app.state.funnel = funnel

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/api/stats")
    def stats() -> dict:
        return engine.stats()

    @app.get("/api/contested")
    def contested(limit: int = 50) -> dict:
        if limit < 1:
            limit = 1
        items = []
        for row in engine.contested_queue(limit):
            item = row["item"]
            items.append(
                {
                    "item": {
                        "nugget_id": item.nugget_id,
                        "reason": item.reason,
                        "queued_at": item.queued_at.isoformat(),
                        "resolved": item.resolved,
                    },
                    "record": record_to_dict(row["record"]),
                    "rivals": [record_to_dict(r) for r in row["rivals"]],
                }
            )
        return {"items": items}

    @app.get("/api/nuggets/{nugget_id}")
    def get_nugget(nugget_id: str):
        record = engine.get_record(nugget_id)
        if record is None:
            return _error(404, "not_found", f"no nugget {nugget_id}")
        return record_to_dict(record)

    @app.post("/api/nuggets/{nugget_id}/decision")
    async def post_decision(nugget_id: str, request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "bad_request", "body must be JSON")
        if not isinstance(body, dict):
            return _error(400, "bad_request", "body must be a JSON object")
        action = body.get("action")
        if action not in VALID_ACTIONS:
            return _error(400, "bad_request", f"unknown action {action!r}")
        winner_id = body.get("winner_id")
        note = body.get("note")
        if winner_id is not None and not isinstance(winner_id, str):
            return _error(400, "bad_request", "winner_id must be a string")
        if note is not None and not isinstance(note, str):
            return _error(400, "bad_request", "note must be a string")
        if action in ("deprecate", "resolve_to") and not note:
            return _error(400, "bad_request", f"{action} requires a note")
        decision = Decision(
            action=action,
            winner_id=winner_id,
            note=note,
            actor=body.get("actor") or "reviewer",
        )
        try:
            outcome = funnel.submit(
                lambda: engine.apply_decision(nugget_id, decision)
            )
        except queue.Full:
            return _error(503, "backpressure", "write queue is full, retry later")
        except NotFoundError as exc:
            return _error(404, "not_found", str(exc))
        except ReviewConflictError as exc:
            return _error(409, "conflict", str(exc))
        except InvalidDecisionError as exc:
            return _error(400, "bad_request", str(exc))
        return _outcome_dict(outcome)

    @app.get("/api/query")
    def api_query(
        text: str = "",
        at: str = "",
        view: str = "active",
        k: int = 20,
    ):
        if not text:
            return _error(400, "bad_request", "text parameter is required")
        try:
            t = date.fromisoformat(at)
        except ValueError:
            return _error(400, "bad_request", f"at must be an ISO date, got {at!r}")
        try:
            view_v = View(view)
        except ValueError:
            return _error(400, "bad_request", f"unknown view {view!r}")
        if k < 1:
            return _error(400, "bad_request", "k must be positive")
        result = retrieve(engine, Query(text=text, t=t, k=k, view=view_v))
        return {
            "query": {"text": text, "at": at, "view": view_v.value, "k": k},
            "results": [
                {
                    "record": record_to_dict(e.record),
                    "score": e.fused,
                    "lexical": e.lexical,
                    "dense": e.dense,
                    "metadata": e.meta,
                }
                for e in result.entries
            ],
            "context": result.context,
        }

    if console_dir:
        root = Path(console_dir)
        if root.is_dir():
            app.mount("/", StaticFiles(directory=str(root), html=True), name="console")

    return app


def serve(
    engine: NuggetEngine,
    host: str = "127.0.0.1",
    port: int = 8040,
    console_dir: Optional[str] = None,
) -> None:
    import uvicorn

    uvicorn.run(create_app(engine, console_dir), host=host, port=port, log_level="warning")
