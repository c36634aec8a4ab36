"""HTTP facade over a running mining engine.

Routes: GET /api/status, GET /api/queue?limit=N, POST /api/annotations, and
GET / for the static annotation UI.  All mutations funnel through a single
queue consumed by the engine thread between training steps, so request
handlers never touch engine state directly; reads serve published
snapshots.  Accepted decisions are appended to a JSONL log that can be
replayed against a fresh run.
"""

from __future__ import annotations

import json
import queue as queue_mod
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Iterable, Iterator, Optional
from urllib.parse import parse_qs, urlparse

from .core import Decision, REJECT
from .engine import MiningEngine, QueueItem

_FALLBACK_PAGE = b"""<!doctype html>
<html><head><meta charset="utf-8"><title>annotation service</title></head>
<body><h1>Annotation service is up</h1>
<p>No UI bundle was found. Point --ui-dir at a built frontend, or use the
JSON API: GET /api/status, GET /api/queue?limit=N, POST /api/annotations.</p>
</body></html>
"""

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


class ChannelAnnotationSource:
    """Feeds the engine decisions arriving over the service channel.

    collect() blocks (politely, in small ticks) until every queued item is
    resolved, the budget runs out, or the timeout expires; unresolved items
    simply expire with the round.
    """

    def __init__(self, channel: queue_mod.Queue, timeout: float = 600.0,
                 poll_interval: float = 0.05):
        self.channel = channel
        self.timeout = timeout
        self.poll_interval = poll_interval

    def collect(self, items: Iterable[QueueItem],
                budget_left: int) -> Iterator[tuple[int, Decision]]:
        pending = {item.sample_id for item in items}
        answered = 0
        deadline = time.monotonic() + self.timeout
        while pending and answered < budget_left:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return
            try:
                sample_id, decision = self.channel.get(
                    timeout=min(self.poll_interval, remaining))
            except queue_mod.Empty:
                continue
            if sample_id in pending:
                pending.discard(sample_id)
                answered += 1
            # out-of-queue decisions still reach the engine, which
            # deduplicates; only pending items gate the round's progress
            yield sample_id, decision


class ReplayAnnotationSource:
    """Replays a recorded decision log: queued items it knows get their
    logged decision, everything else expires."""

    def __init__(self, decisions: dict[int, Decision]):
        self.decisions = dict(decisions)

    @classmethod
    def from_log(cls, path) -> "ReplayAnnotationSource":
        return cls(load_decision_log(path))

    def collect(self, items, budget_left):
        answered = 0
        for item in items:
            if answered >= budget_left:
                return
            decision = self.decisions.get(item.sample_id)
            if decision is not None:
                answered += 1
                yield item.sample_id, decision


def decision_to_json(decision: Decision):
    return "reject" if decision.is_reject else {"label": decision.category}


def decision_from_json(raw) -> Decision:
    if raw == "reject":
        return REJECT
    if isinstance(raw, dict) and isinstance(raw.get("label"), int) \
            and not isinstance(raw.get("label"), bool):
        return Decision(category=raw["label"])
    raise ValueError(f"malformed decision: {raw!r}")


def load_decision_log(path) -> dict[int, Decision]:
    decisions: dict[int, Decision] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            decisions[int(entry["sample_id"])] = decision_from_json(
                entry["decision"])
    return decisions


class AnnotationService:
    """Runs the engine on a worker thread and serves the HTTP API."""

    def __init__(self, engine: MiningEngine, port: int = 8764,
                 ui_dir=None, decision_log=None, queue_timeout: float = 600.0):
        self.engine = engine
        self.channel: queue_mod.Queue = queue_mod.Queue()
        engine.attach_commit_channel(self.channel)
        self.source = ChannelAnnotationSource(self.channel, queue_timeout)
        self.ui_dir = Path(ui_dir) if ui_dir else None
        self.decision_log = Path(decision_log) if decision_log else None
        self.posted: dict[int, Decision] = {}
        self._posted_lock = threading.Lock()
        self._engine_thread: Optional[threading.Thread] = None
        self.metrics = None

        service = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):   # keep test output quiet
                pass

            def _send_json(self, payload, status=200):
                body = json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_GET(self):
                parsed = urlparse(self.path)
                if parsed.path == "/api/status":
                    self._send_json(service.status_document())
                elif parsed.path == "/api/queue":
                    params = parse_qs(parsed.query)
                    limit = int(params.get("limit", ["50"])[0])
                    self._send_json(service.queue_document(limit))
                else:
                    self._serve_static(parsed.path)

            def do_POST(self):
                if urlparse(self.path).path != "/api/annotations":
                    self._send_json({"error": "not found"}, 404)
                    return
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length)
                status, payload = service.post_annotation(raw)
                self._send_json(payload, status)

            def _serve_static(self, path):
                if path == "/":
                    path = "/index.html"
                if service.ui_dir is not None:
                    target = (service.ui_dir / path.lstrip("/")).resolve()
                    root = service.ui_dir.resolve()
                    if root in target.parents or target == root:
                        if target.is_file():
                            body = target.read_bytes()
                            ctype = _CONTENT_TYPES.get(target.suffix,
                                                       "application/octet-stream")
                            self.send_response(200)
                            self.send_header("Content-Type", ctype)
                            self.send_header("Content-Length", str(len(body)))
                            self.end_headers()
                            self.wfile.write(body)
                            return
                if path == "/index.html":
                    self.send_response(200)
                    self.send_header("Content-Type", "text/html; charset=utf-8")
                    self.send_header("Content-Length",
                                     str(len(_FALLBACK_PAGE)))
                    self.end_headers()
                    self.wfile.write(_FALLBACK_PAGE)
                    return
                self._send_json({"error": "not found"}, 404)

        self.server = ThreadingHTTPServer(("127.0.0.1", port), Handler)
        self.port = self.server.server_address[1]

    # -- request-side logic ---------------------------------------------------

    def status_document(self) -> dict:
        doc = self.engine.status()
        doc["state"] = doc["state"].upper()
        return doc

    def queue_document(self, limit: int) -> list[dict]:
        limit = max(1, limit)
        with self._posted_lock:
            posted = set(self.posted)
        items = [item for item in self.engine.queue_snapshot()
                 if item.sample_id not in posted]
        return [item.to_json_dict() for item in items[:limit]]

    def post_annotation(self, raw_body: bytes) -> tuple[int, dict]:
        try:
            body = json.loads(raw_body.decode("utf-8"))
            sample_id = body["sample_id"]
            if not isinstance(sample_id, int) or isinstance(sample_id, bool):
                raise ValueError("sample_id must be an integer")
            decision = decision_from_json(body["decision"])
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            return 400, {"accepted": False, "error": f"malformed body: {exc}"}
        if (not decision.is_reject
                and not 0 <= decision.category < self.engine.hyper.m):
            return 400, {"accepted": False,
                         "error": f"label {decision.category} out of range"}

        with self._posted_lock:
            prior = self.posted.get(sample_id)
            if prior is None:
                prior = self.engine.decision_for(sample_id)
            if prior is not None:
                if prior == decision:
                    return 200, {"accepted": True, "duplicate": True}
                return 409, {"accepted": False,
                             "error": "conflicting decision already recorded"}
            queued = {item.sample_id
                      for item in self.engine.queue_snapshot()}
            if sample_id not in queued:
                return 404, {"accepted": False,
                             "error": "sample not in the current queue"}
            uncommitted = sum(
                1 for sid in self.posted
                if self.engine.decision_for(sid) is None)
            if self.engine.budget_remaining - uncommitted <= 0:
                return 409, {"accepted": False,
                             "error": "annotation budget exhausted"}
            self.posted[sample_id] = decision
            self._append_log(sample_id, decision)
        self.channel.put((sample_id, decision))
        return 200, {"accepted": True}

    def _append_log(self, sample_id: int, decision: Decision) -> None:
        if self.decision_log is None:
            return
        self.decision_log.parent.mkdir(parents=True, exist_ok=True)
        with open(self.decision_log, "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"sample_id": sample_id,
                                 "decision": decision_to_json(decision)})
                     + "\n")

    # -- lifecycle -------------------------------------------------------------

    def start(self) -> None:
        self._engine_thread = threading.Thread(target=self._run_engine,
                                               daemon=True)
        self._engine_thread.start()
        self._server_thread = threading.Thread(
            target=self.server.serve_forever, daemon=True)
        self._server_thread.start()

    def _run_engine(self) -> None:
        self.metrics = self.engine.run(self.source)

    def run_forever(self) -> None:
        self._engine_thread = threading.Thread(target=self._run_engine,
                                               daemon=True)
        self._engine_thread.start()
        self.server.serve_forever()

    def join_engine(self, timeout: Optional[float] = None) -> None:
        if self._engine_thread is not None:
            self._engine_thread.join(timeout)

    def stop(self) -> None:
        self.server.shutdown()
        self.server.server_close()
