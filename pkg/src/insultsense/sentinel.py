"""Scoring service: score comments with a trained model and raise flag events.

Flag events carry a SHA-256 digest of the comment, never the comment itself.
Delivery to the sink happens on a single background worker so a slow or
failing sink never holds up scoring.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
import uuid
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Protocol, Sequence

from pydantic import BaseModel

from .corpus import Label

log = logging.getLogger(__name__)


class ServiceUnavailable(RuntimeError):
    pass


class BatchTooLarge(ValueError):
    def __init__(self, size, limit):
        super().__init__(f"batch of {size} texts exceeds max_batch={limit}")
        self.size = size
        self.limit = limit


class Scorer(Protocol):
    def predict_proba(self, texts: Sequence[str]) -> list: ...


@dataclass(frozen=True)
class JsonlSink:
    path: Path

    def __post_init__(self):
        object.__setattr__(self, "path", Path(self.path))


@dataclass(frozen=True)
class WebhookSink:
    url: str
    timeout: float = 2.0


def parse_sink(spec: str) -> JsonlSink | WebhookSink:
    """``http(s)://...`` (or ``webhook:<url>``) is a webhook, anything else a JSONL path."""
    if spec.startswith("webhook:"):
        return WebhookSink(spec[len("webhook:"):])
    if spec.startswith(("http://", "https://")):
        return WebhookSink(spec)
    if spec.startswith("jsonl:"):
        spec = spec[len("jsonl:"):]
    return JsonlSink(Path(spec))


@dataclass(frozen=True)
class SentinelConfig:
    model_dir: Path
    sink: JsonlSink | WebhookSink
    threshold: float = 0.5
    max_batch: int = 64

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")
        object.__setattr__(self, "model_dir", Path(self.model_dir))

    @classmethod
    def from_env(cls, **overrides) -> SentinelConfig:
        env = os.environ
        values = {
            "model_dir": env.get("SENTINEL_MODEL_DIR"),
            "threshold": float(env["SENTINEL_THRESHOLD"]) if "SENTINEL_THRESHOLD" in env else 0.5,
            "sink": parse_sink(env.get("SENTINEL_SINK", "flags.jsonl")),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        if not values["model_dir"]:
            raise ValueError("model directory not set (SENTINEL_MODEL_DIR or --model-dir)")
        return cls(**values)


@dataclass(frozen=True)
class ScoreResult:
    request_id: str
    prob_insult: float
    label: Label
    threshold: float
    model_version: str
    latency_ms: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["label"] = self.label.name.lower()
        return d


@dataclass(frozen=True)
class Delivery:
    status: str  # "delivered" | "failed" | "pending"
    reason: str | None = None


@dataclass(frozen=True)
class FlagEvent:
    request_id: str
    text_digest: str
    prob_insult: float
    timestamp: str
    delivery: Delivery = field(default_factory=lambda: Delivery("pending"))

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.delivery.reason is None:
            d["delivery"].pop("reason")
        return d


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


_file_locks: dict[Path, threading.Lock] = {}
_file_locks_guard = threading.Lock()


def _lock_for(path: Path) -> threading.Lock:
    with _file_locks_guard:
        return _file_locks.setdefault(path.resolve(), threading.Lock())


def emit_flag(event: FlagEvent, sink: JsonlSink | WebhookSink) -> Delivery:
    """Deliver one event; failures come back as ``Delivery('failed', reason)``."""
    try:
        if isinstance(sink, JsonlSink):
            record = FlagEvent(event.request_id, event.text_digest, event.prob_insult, event.timestamp,
                               Delivery("delivered")).to_dict()
            line = (json.dumps(record, ensure_ascii=False) + "\n").encode("utf-8")
            sink.path.parent.mkdir(parents=True, exist_ok=True)
            with _lock_for(sink.path):
                fd = os.open(sink.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
                try:
                    os.write(fd, line)
                finally:
                    os.close(fd)
            return Delivery("delivered")
        import httpx

        resp = httpx.post(sink.url, json=event.to_dict(), timeout=sink.timeout)
        if 200 <= resp.status_code < 300:
            return Delivery("delivered")
        return Delivery("failed", f"http {resp.status_code}")
    except Exception as exc:  # any sink failure is recorded, never raised
        log.warning("flag delivery to %s failed: %s", sink, exc)
        return Delivery("failed", f"{type(exc).__name__}: {exc}")


class Sentinel:
    def __init__(self, model: Scorer | None, sink: JsonlSink | WebhookSink | None = None, threshold: float = 0.5,
                 model_version: str = "unknown", max_batch: int = 64):
        if not 0 < threshold < 1:
            raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
        self.model = model
        self.sink = sink
        self.threshold = threshold
        self.model_version = model_version
        self.max_batch = max_batch
        self.events: list[FlagEvent] = []
        self._pending: list[Future] = []
        self._lock = threading.Lock()
        self._worker = ThreadPoolExecutor(max_workers=1, thread_name_prefix="flag-sink")

    @classmethod
    def from_config(cls, config: SentinelConfig) -> Sentinel:
        from .models import load_model

        model = load_model(config.model_dir)
        return cls(model, config.sink, config.threshold, model.model_version, config.max_batch)

    def _results(self, texts: Sequence[str], request_ids: Sequence[str | None]) -> list[ScoreResult]:
        if self.model is None:
            raise ServiceUnavailable("no model loaded")
        start = time.perf_counter()
        preds = self.model.predict_proba(list(texts)) if texts else []
        latency = (time.perf_counter() - start) * 1000 / max(len(texts), 1)
        out = []
        for text, rid, pred in zip(texts, request_ids, preds):
            p = float(pred.insult)
            label = Label.INSULTING if p >= self.threshold else Label.NEUTRAL
            res = ScoreResult(rid or uuid.uuid4().hex, p, label, self.threshold, self.model_version, latency)
            if label is Label.INSULTING:
                self._flag(res, text)
            out.append(res)
        return out

    def score(self, text: str, request_id: str | None = None) -> ScoreResult:
        return self._results([text], [request_id])[0]

    def score_batch(self, texts: Sequence[str], request_ids: Sequence[str | None] | None = None) -> list[ScoreResult]:
        if len(texts) > self.max_batch:
            raise BatchTooLarge(len(texts), self.max_batch)
        return self._results(list(texts), list(request_ids) if request_ids else [None] * len(texts))

    def _flag(self, res: ScoreResult, text: str):
        event = FlagEvent(res.request_id, text_digest(text), res.prob_insult,
                          datetime.now(timezone.utc).isoformat(timespec="milliseconds"))
        with self._lock:
            idx = len(self.events)
            self.events.append(event)
        if self.sink is None:
            return
        fut = self._worker.submit(self._deliver, idx, event)
        with self._lock:
            self._pending.append(fut)

    def _deliver(self, idx: int, event: FlagEvent):
        # runs on the worker, so the record is updated before the future resolves
        delivery = emit_flag(event, self.sink)
        with self._lock:
            self.events[idx] = FlagEvent(event.request_id, event.text_digest, event.prob_insult, event.timestamp,
                                         delivery)

    def flush(self, timeout: float | None = None):
        """Wait for every queued delivery to finish."""
        with self._lock:
            pending, self._pending = self._pending, []
        for fut in pending:
            fut.result(timeout=timeout)

    def close(self):
        self.flush()
        self._worker.shutdown(wait=True)


# -- HTTP -------------------------------------------------------------------------


class ScoreRequest(BaseModel):
    text: str
    request_id: str | None = None


class BatchRequest(BaseModel):
    texts: list[str]


def create_app(sentinel: Sentinel):
    from contextlib import asynccontextmanager

    from fastapi import FastAPI, Request
    from fastapi.exceptions import RequestValidationError
    from fastapi.responses import JSONResponse
    @asynccontextmanager
    async def lifespan(app):
        yield
        sentinel.close()

    app = FastAPI(title="insultsense sentinel", lifespan=lifespan)

    @app.exception_handler(RequestValidationError)
    async def bad_request(request: Request, exc: RequestValidationError):
        errors = exc.errors()
        fields = [".".join(str(p) for p in e["loc"] if p != "body") for e in errors]
        fields = [f for f in fields if f]
        msg = "; ".join(f"{'.'.join(str(p) for p in e['loc'][1:]) or 'body'}: {e['msg']}" for e in errors)
        return JSONResponse(status_code=400, content={"error": msg, "fields": fields})

    @app.exception_handler(ServiceUnavailable)
    async def unavailable(request: Request, exc: ServiceUnavailable):
        return JSONResponse(status_code=503, content={"error": str(exc)})

    @app.exception_handler(BatchTooLarge)
    async def too_large(request: Request, exc: BatchTooLarge):
        return JSONResponse(status_code=413, content={"error": str(exc), "max_batch": exc.limit})

    @app.get("/healthz")
    def healthz():
        status = "ok" if sentinel.model is not None else "no_model"
        return {"status": status, "model_version": sentinel.model_version}

    @app.post("/v1/score")
    def score(req: ScoreRequest):
        return sentinel.score(req.text, req.request_id).to_dict()

    @app.post("/v1/score_batch")
    def score_batch(req: BatchRequest):
        return [r.to_dict() for r in sentinel.score_batch(req.texts)]

    return app


def run_server(config: SentinelConfig, host: str = "127.0.0.1", port: int = 8000):
    import uvicorn

    sentinel = Sentinel.from_config(config)
    log.info("serving %s on %s:%d (threshold %.3f)", sentinel.model_version, host, port, config.threshold)
    uvicorn.run(create_app(sentinel), host=host, port=port)
