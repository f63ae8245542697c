"""HTTP transport for the demo target and the tracking endpoints.

Endpoints (all request/response bodies are JSON):

====================================  =========================================
``POST /api/<operation>``             one endpoint per server operation
                                      (signup, login, logout, list_users,
                                      follow, unfollow, post_tweet, retweet,
                                      like, unlike, get_feed, get_my_tweets,
                                      get_retweets_of, who_liked, get_alerts);
                                      body mirrors the operation's parameters
``POST /track/report-action``         the web UI posts completed actions:
                                      {session, state_before, state_after,
                                      action: {component, kind, payload?}};
                                      the tracker assigns seq and ts_ms
``POST /track/active-ids``            debug projection: {view, token?,
                                      context?} -> the actionable component
                                      ids a session showing that view has
``GET  /ui/contract.json``            the view catalog / navigation contract
``GET  /``, ``GET /static/...``       the bundled web client, when configured
====================================  =========================================

Error responses carry ``{ok: false, code, message}``; codes map to HTTP
status (auth 401, validation 400, conflict 409, bad_request 400,
not_found 404, internal 500). The target serializes request handling
internally, so the threading server is safe to use as-is.
"""

from __future__ import annotations

import json
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .clock import WallClock
from .errors import SynthUserError
from .target import InProcessTarget, OPERATIONS
from .traces import ActionEvent, ActionKind, TraceWriter, parse_component_id
from .views import session_at_view, view_catalog

_STATUS = {
    "auth": 401,
    "validation": 400,
    "bad_request": 400,
    "conflict": 409,
    "not_found": 404,
    "internal": 500,
}


class TrackerService:
    """Server-side tracker shared by all web sessions: assigns sequence
    numbers and timestamps, then appends to the shared trace log."""

    def __init__(self, writer: TraceWriter | None, clock=None):
        self.writer = writer
        self.clock = clock if clock is not None else WallClock()
        self._lock = threading.Lock()
        self._seqs: dict[str, int] = {}

    def report_action(self, body: dict) -> dict:
        if self.writer is None:
            return {"ok": False, "code": "validation",
                    "message": "recording is disabled (no trace file)"}
        try:
            session = body["session"]
            action = body["action"]
            component = parse_component_id(action["component"])
            kind = ActionKind(action["kind"])
            payload = action.get("payload")
            state_before = body["state_before"]
            state_after = body["state_after"]
        except (KeyError, TypeError, ValueError, SynthUserError) as e:
            return {"ok": False, "code": "validation", "message": str(e)}
        with self._lock:
            last = self.writer.last_seq(session)
            seq = 0 if last is None else last + 1
            event = ActionEvent(
                session=session,
                seq=seq,
                ts_ms=self.clock.now_ms(),
                state_before=state_before,
                component=component,
                kind=kind,
                payload=payload if kind is ActionKind.TEXT_INPUT else None,
                state_after=state_after,
            )
            try:
                self.writer.append(event)
            except OSError as e:
                return {"ok": False, "code": "internal", "message": str(e)}
        return {"ok": True, "seq": seq}


class AppServer:
    """The `serve` process: wire API + tracker endpoints + static web UI."""

    def __init__(
        self,
        target: InProcessTarget,
        writer: TraceWriter | None = None,
        web_dir: str | Path | None = None,
        host: str = "127.0.0.1",
        port: int = 8000,
    ):
        self.target = target
        self.tracker = TrackerService(writer)
        self.web_dir = Path(web_dir) if web_dir else None
        handler = self._make_handler()
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    def _make_handler(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args):  # quiet by default
                pass

            def _send_json(self, payload: dict, status: int = 200):
                body = json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def _send_error_json(self, code: str, message: str):
                self._send_json(
                    {"ok": False, "code": code, "message": message},
                    _STATUS.get(code, 400),
                )

            def _read_body(self) -> dict | None:
                length = int(self.headers.get("Content-Length") or 0)
                raw = self.rfile.read(length) if length else b"{}"
                try:
                    body = json.loads(raw or b"{}")
                except json.JSONDecodeError:
                    return None
                return body if isinstance(body, dict) else None

            def do_POST(self):
                body = self._read_body()
                if body is None:
                    self._send_error_json("bad_request", "body must be a JSON object")
                    return
                if self.path.startswith("/api/"):
                    op = self.path[len("/api/"):]
                    if op not in OPERATIONS:
                        self._send_error_json("not_found", f"unknown operation {op!r}")
                        return
                    response = server.target.request({"op": op, **body})
                    status = 200 if response.get("ok") else _STATUS.get(
                        response.get("code", "bad_request"), 400
                    )
                    self._send_json(response, status)
                elif self.path == "/track/report-action":
                    response = server.tracker.report_action(body)
                    status = 200 if response.get("ok") else _STATUS.get(
                        response.get("code", "bad_request"), 400
                    )
                    self._send_json(response, status)
                elif self.path == "/track/active-ids":
                    self._active_ids(body)
                else:
                    self._send_error_json("not_found", f"no such path {self.path}")

            def _active_ids(self, body: dict):
                view = body.get("view")
                if view is None:
                    self._send_error_json("bad_request", "missing field 'view'")
                    return
                try:
                    session = session_at_view(
                        server.target,
                        server.target.faults,
                        view,
                        token=body.get("token"),
                        context=body.get("context"),
                    )
                except SynthUserError as e:
                    self._send_error_json("validation", str(e))
                    return
                except AttributeError:
                    self._send_error_json("validation", f"unknown view {view!r}")
                    return
                ids = sorted(a.component_text for a in session.available_actions())
                self._send_json({"ok": True, "view": view, "ids": ids})

            def do_GET(self):
                if self.path == "/ui/contract.json":
                    catalog = view_catalog()
                    # the browser client implements the same seeded navigation
                    # bug as the headless one, so it needs the fault config
                    catalog["faults"] = {
                        "alert_nav_bug_enabled": server.target.faults.alert_nav_bug_enabled,
                        "alert_nav_bug_threshold": server.target.faults.alert_nav_bug_threshold,
                    }
                    self._send_json(catalog)
                    return
                self._serve_static()

            def _serve_static(self):
                if server.web_dir is None:
                    self._send_error_json(
                        "not_found",
                        "no web UI bundled; POST to /api/* or /track/*",
                    )
                    return
                path = self.path.split("?", 1)[0]
                relative = "index.html" if path == "/" else path.lstrip("/")
                file_path = (server.web_dir / relative).resolve()
                try:
                    file_path.relative_to(server.web_dir.resolve())
                except ValueError:
                    self._send_error_json("not_found", "path escapes web root")
                    return
                if not file_path.is_file():
                    self._send_error_json("not_found", f"no such file {relative}")
                    return
                content = file_path.read_bytes()
                ctype = mimetypes.guess_type(str(file_path))[0] or "application/octet-stream"
                self.send_response(200)
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(content)))
                self.end_headers()
                self.wfile.write(content)

        return Handler

    def start(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join()

    def serve_forever(self) -> None:
        self.httpd.serve_forever()
