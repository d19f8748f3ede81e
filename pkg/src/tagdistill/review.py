"""Expert review service: validate or correct teacher annotations over HTTP.

State is event-sourced from an append-only JSON-lines log. Every verdict is
flushed and fsynced before the HTTP response goes out, so an acknowledged
verdict survives a hard kill.
"""

import json
import mimetypes
import os
import threading
import time
from dataclasses import dataclass, field, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import urlparse, parse_qs

from .corpus import Segment, validate_doc_segments, write_annotations
from .errors import (
    CorruptLogError,
    InvalidSegmentsError,
    NothingValidatedError,
    UnknownTaskError,
)

VALID_STATUSES = ("accepted", "corrected")


class EventLog:
    """Append-only JSON-lines log with flush-before-ack semantics."""

    def __init__(self, path):
        self.path = path
        self._lock = threading.Lock()
        self._seq = 0
        self._fh = None

    def replay(self):
        """Yield all events from disk; refuses to proceed past a corrupt line."""
        events = []
        if os.path.exists(self.path):
            with open(self.path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    if line.strip() == "":
                        continue
                    try:
                        event = json.loads(line)
                    except json.JSONDecodeError as exc:
                        raise CorruptLogError(lineno, str(exc)) from exc
                    if not isinstance(event, dict) or "seq" not in event:
                        raise CorruptLogError(lineno, "event missing 'seq'")
                    events.append(event)
        self._seq = events[-1]["seq"] if events else 0
        return events

    def append(self, payload):
        with self._lock:
            if self._fh is None:
                self._fh = open(self.path, "a", encoding="utf-8")
            self._seq += 1
            event = {"seq": self._seq, **payload}
            self._fh.write(json.dumps(event, ensure_ascii=False) + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
            return event

    def close(self):
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None


@dataclass
class ValidationTask:
    task_id: str
    doc_id: str
    scenario_id: str
    text: str
    teacher_segments: list
    status: str = "pending"
    verdict_segments: list = None
    reviewer: str = None
    timestamp: float = None

    def to_dict(self, include_text=True):
        def seg_dicts(segs):
            if segs is None:
                return None
            return [{"label": s.label, "start": s.start, "end": s.end} for s in segs]

        out = {
            "task_id": self.task_id,
            "doc_id": self.doc_id,
            "scenario_id": self.scenario_id,
            "status": self.status,
            "teacher_segments": seg_dicts(self.teacher_segments),
            "verdict_segments": seg_dicts(self.verdict_segments),
            "reviewer": self.reviewer,
            "timestamp": self.timestamp,
        }
        if include_text:
            out["text"] = self.text
        return out


class ReviewStore:
    """Task state reconstructed from (corpus, teacher annotations, event log)."""

    def __init__(self, scenario, documents, teacher_segments, log: EventLog,
                 subset_doc_ids=None, splits_manifest=None):
        self.scenario = scenario
        self.log = log
        self.splits_manifest = splits_manifest
        self._lock = threading.Lock()
        docs_by_id = {d.doc_id: d for d in documents}
        by_doc = {}
        for seg in teacher_segments:
            by_doc.setdefault(seg.doc_id, []).append(seg)
        self.tasks = {}
        for doc in documents:
            if subset_doc_ids is not None and doc.doc_id not in subset_doc_ids:
                continue
            segs = sorted(by_doc.get(doc.doc_id, []), key=lambda s: s.start)
            if not segs:
                continue
            self.tasks[doc.doc_id] = ValidationTask(
                task_id=doc.doc_id,
                doc_id=doc.doc_id,
                scenario_id=scenario.id,
                text=doc.text,
                teacher_segments=segs,
            )
        for event in log.replay():
            self._apply(event)

    def _apply(self, event):
        task = self.tasks.get(event["task_id"])
        if task is None:
            return  # verdict for a task outside the loaded corpus; keep the log intact
        task.status = event["status"]
        task.reviewer = event.get("reviewer")
        task.timestamp = event.get("timestamp")
        task.verdict_segments = [
            Segment(doc_id=task.doc_id, label=s["label"], start=s["start"],
                    end=s["end"], source="expert")
            for s in event["segments"]
        ]

    def submit_verdict(self, task_id, status, segments, reviewer=None):
        """Validate, persist, then apply one verdict. Last verdict wins."""
        with self._lock:
            task = self.tasks.get(task_id)
            if task is None:
                raise UnknownTaskError(task_id)
            if status not in VALID_STATUSES:
                raise InvalidSegmentsError([f"status must be one of {VALID_STATUSES}"])
            if status == "accepted":
                verdict = [replace(s, source="expert") for s in task.teacher_segments]
            else:
                if segments is None:
                    raise InvalidSegmentsError(["corrected verdict requires segments"])
                verdict = [
                    Segment(doc_id=task.doc_id, label=str(s["label"]),
                            start=int(s["start"]), end=int(s["end"]), source="expert")
                    for s in segments
                ]
                verdict.sort(key=lambda s: (s.start, s.end))
                problems = validate_doc_segments(task.text, self.scenario.label_set, verdict)
                if problems:
                    raise InvalidSegmentsError(problems)
            event = self.log.append({
                "task_id": task_id,
                "status": status,
                "segments": [{"label": s.label, "start": s.start, "end": s.end}
                             for s in verdict],
                "reviewer": reviewer,
                "timestamp": time.time(),
            })
            self._apply(event)
            return task

    def list_tasks(self, status=None, limit=None, offset=0):
        tasks = [t for t in self.tasks.values() if status is None or t.status == status]
        total = len(tasks)
        if limit is not None:
            tasks = tasks[offset:offset + limit]
        elif offset:
            tasks = tasks[offset:]
        return tasks, total

    def progress(self):
        by_status = {"pending": 0, "accepted": 0, "corrected": 0}
        per_label = {label: 0 for label in self.scenario.labels}
        for task in self.tasks.values():
            by_status[task.status] = by_status.get(task.status, 0) + 1
            if task.verdict_segments:
                for seg in task.verdict_segments:
                    per_label[seg.label] = per_label.get(seg.label, 0) + 1
        return {"by_status": by_status, "validated_per_label": per_label}

    def validated_segments(self, kind="all"):
        segments = []
        for task in self.tasks.values():
            if task.status == "pending" or not task.verdict_segments:
                continue
            segments.extend(task.verdict_segments)
        if not segments:
            raise NothingValidatedError("no task has been validated yet")
        if kind != "all":
            if self.splits_manifest is None:
                raise NothingValidatedError(
                    f"kind={kind!r} requires a splits manifest")
            wanted = set(getattr(self.splits_manifest,
                                 "in_context" if kind == "in_context" else "test"))
            segments = [s for s in segments if s.segment_id in wanted]
        return sorted(segments, key=lambda s: (s.doc_id, s.start))


def _error_status(exc):
    if isinstance(exc, UnknownTaskError):
        return 404
    if isinstance(exc, (InvalidSegmentsError, NothingValidatedError)):
        return 400
    return 500


class ReviewHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    store: ReviewStore = None
    static_dir: str = None

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, obj, status=200):
        body = json.dumps(obj, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_obj(self, kind, detail, status):
        self._send_json({"error_kind": kind, "detail": detail}, status)

    def _send_text(self, text, content_type="text/plain; charset=utf-8", status=200):
        body = text.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        parsed = urlparse(self.path)
        parts = [p for p in parsed.path.split("/") if p]
        query = {k: v[0] for k, v in parse_qs(parsed.query).items()}
        store = self.store
        try:
            if parts[:2] == ["api", "scenarios"] and len(parts) == 2:
                s = store.scenario
                self._send_json([{
                    "id": s.id, "name": s.name, "labels": list(s.labels),
                    "task_count": len(store.tasks),
                }])
            elif parts[:2] == ["api", "scenarios"] and len(parts) == 4 and parts[3] == "tasks":
                if parts[2] != store.scenario.id:
                    self._send_error_obj("UnknownScenario", parts[2], 404)
                    return
                limit = int(query["limit"]) if "limit" in query else None
                offset = int(query.get("offset", 0))
                tasks, total = store.list_tasks(query.get("status"), limit, offset)
                self._send_json({
                    "total": total,
                    "tasks": [t.to_dict(include_text=False) for t in tasks],
                })
            elif parts[:2] == ["api", "tasks"] and len(parts) == 3:
                task = store.tasks.get(parts[2])
                if task is None:
                    self._send_error_obj("UnknownTask", parts[2], 404)
                    return
                self._send_json(task.to_dict())
            elif parts[:2] == ["api", "scenarios"] and len(parts) == 4 and parts[3] == "progress":
                if parts[2] != store.scenario.id:
                    self._send_error_obj("UnknownScenario", parts[2], 404)
                    return
                self._send_json(store.progress())
            elif parts[:2] == ["api", "scenarios"] and len(parts) == 4 and parts[3] == "export":
                if parts[2] != store.scenario.id:
                    self._send_error_obj("UnknownScenario", parts[2], 404)
                    return
                kind = query.get("kind", "all")
                segments = store.validated_segments(kind)
                lines = []
                by_doc = {}
                for seg in segments:
                    by_doc.setdefault(seg.doc_id, []).append(seg)
                for doc_id in sorted(by_doc):
                    segs = sorted(by_doc[doc_id], key=lambda s: s.start)
                    lines.append(json.dumps({
                        "doc_id": doc_id, "source": "expert", "model_id": None,
                        "segments": [{"label": s.label, "start": s.start, "end": s.end}
                                     for s in segs],
                    }, ensure_ascii=False))
                self._send_text("\n".join(lines) + ("\n" if lines else ""),
                                "application/x-ndjson; charset=utf-8")
            else:
                self._serve_static(parsed.path)
        except Exception as exc:  # surface as structured errors
            kind = getattr(exc, "kind", type(exc).__name__)
            self._send_error_obj(kind, str(exc), _error_status(exc))

    def _serve_static(self, path):
        if self.static_dir is None:
            self._send_error_obj("NotFound", path, 404)
            return
        rel = path.lstrip("/") or "index.html"
        full = os.path.realpath(os.path.join(self.static_dir, rel))
        root = os.path.realpath(self.static_dir)
        if not full.startswith(root + os.sep) and full != root:
            self._send_error_obj("NotFound", path, 404)
            return
        if not os.path.isfile(full):
            self._send_error_obj("NotFound", path, 404)
            return
        ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
        with open(full, "rb") as fh:
            body = fh.read()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        parsed = urlparse(self.path)
        parts = [p for p in parsed.path.split("/") if p]
        if not (parts[:2] == ["api", "tasks"] and len(parts) == 4 and parts[3] == "verdict"):
            self._send_error_obj("NotFound", parsed.path, 404)
            return
        length = int(self.headers.get("Content-Length", 0))
        try:
            body = json.loads(self.rfile.read(length).decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            self._send_error_obj("NotJson", str(exc), 400)
            return
        try:
            task = self.store.submit_verdict(
                task_id=parts[2],
                status=body.get("status"),
                segments=body.get("segments"),
                reviewer=body.get("reviewer"),
            )
            self._send_json(task.to_dict())
        except Exception as exc:
            kind = getattr(exc, "kind", type(exc).__name__)
            self._send_error_obj(kind, str(exc), _error_status(exc))


def create_server(store: ReviewStore, port=0, host="127.0.0.1", static_dir=None):
    """Build (but do not start) the threaded HTTP server for a review store."""
    handler = type("BoundReviewHandler", (ReviewHandler,),
                   {"store": store, "static_dir": static_dir})
    try:
        return ThreadingHTTPServer((host, port), handler)
    except OSError as exc:
        raise OSError(f"PortInUse: {host}:{port}: {exc}") from exc


def export_validated_to_file(store: ReviewStore, path, kind="all"):
    segments = store.validated_segments(kind)
    write_annotations(segments, path)
    return len(segments)
