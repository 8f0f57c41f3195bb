"""The stateless web tier: terminates HTTP, maps each route to exactly one
wire operation, and relays the response. No business state lives here; the
bearer token in the Authorization header is the only session artifact the
browser ever holds, and it is owned by the application tier.

HTTP status mapping: ok -> 200 (201 for creations); UnknownSession and
SessionExpired -> 401; Forbidden -> 403; Unknown* -> 404; Validation*/
Malformed* -> 422; Duplicate*/Already* -> 409; anything else -> 400;
application tier unreachable -> 502.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import re
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qsl, urlsplit

from .appclient import AppTierPool, AppTierUnavailable
from .config import Config
from .errors import APP_TIER_UNAVAILABLE, MALFORMED_PAYLOAD, PORT_IN_USE, UNKNOWN_OPERATION, CampusError

logger = logging.getLogger(__name__)

MAX_BODY_BYTES = 8 * 1024 * 1024

# Published alongside the import endpoint so clients can download a starter
# file; must stay identical to the importer's expected header.
COURSEWORK_CSV_HEADER = "student_id,assessment,score,max_score"


@dataclass(frozen=True)
class Route:
    method: str
    pattern: str
    operation: str
    creates: bool = False
    kind: str = "json"  # json | csv_in | csv_out

    def compile(self) -> "CompiledRoute":
        regex = re.sub(r"\{(\w+)\}", r"(?P<\1>[^/]+)", self.pattern)
        return CompiledRoute(self, re.compile(f"^{regex}$"))


@dataclass(frozen=True)
class CompiledRoute:
    route: Route
    regex: re.Pattern


ROUTES: list[Route] = [
    Route("GET", "/api/v1/ping", "ping"),
    Route("POST", "/api/v1/sessions", "login"),
    Route("DELETE", "/api/v1/sessions/current", "logout"),
    Route("GET", "/api/v1/profile", "view_profile"),
    Route("PATCH", "/api/v1/profile", "update_profile"),
    Route("GET", "/api/v1/access-matrix", "access_matrix"),
    Route("GET", "/api/v1/external-links", "external_links"),
    Route("GET", "/api/v1/terms", "list_terms"),
    Route("GET", "/api/v1/campuses", "list_campuses"),
    Route("GET", "/api/v1/units", "list_units"),
    Route("POST", "/api/v1/applications", "submit_application", creates=True),
    Route("GET", "/api/v1/applications", "list_pending_applications"),
    Route("POST", "/api/v1/applications/{id}/decision", "decide_application"),
    Route("GET", "/api/v1/students/{student_id}", "student_lookup"),
    Route("GET", "/api/v1/students/{student_id}/transcript", "view_transcript"),
    Route("GET", "/api/v1/students/{student_id}/program-details", "program_details"),
    Route("GET", "/api/v1/students/{student_id}/coursework", "view_coursework"),
    Route("GET", "/api/v1/students/{student_id}/invoices", "view_invoices"),
    Route("GET", "/api/v1/students/{student_id}/eligible-units", "eligible_units"),
    Route("GET", "/api/v1/students/{student_id}/enrollments", "list_student_enrollments"),
    Route("POST", "/api/v1/students/{student_id}/graduation", "apply_graduation", creates=True),
    Route("POST", "/api/v1/enrollments", "enroll", creates=True),
    Route("GET", "/api/v1/enrollments", "list_pending_enrollments"),
    Route("POST", "/api/v1/enrollments/{id}/decision", "decide_pending_enrollment"),
    Route("POST", "/api/v1/enrollments/{id}/drop", "drop_unit"),
    Route("POST", "/api/v1/enrollments/{id}/grade", "record_final_grade", creates=True),
    Route("POST", "/api/v1/offerings", "activate_offering", creates=True),
    Route("POST", "/api/v1/program-changes", "request_program_change", creates=True),
    Route("GET", "/api/v1/program-changes", "list_program_change_requests"),
    Route("POST", "/api/v1/program-changes/{id}/decision", "decide_program_change"),
    Route("GET", "/api/v1/graduation-requests", "list_graduation_requests"),
    Route("POST", "/api/v1/graduation-requests/{id}/decision", "decide_graduation"),
    Route("GET", "/api/v1/class-lists", "class_list"),
    Route("GET", "/api/v1/timetable", "view_timetable"),
    Route("POST", "/api/v1/coursework", "submit_coursework"),
    Route("POST", "/api/v1/coursework-imports", "import_coursework_csv", kind="csv_in"),
    Route("GET", "/api/v1/reports/{kind}", "generate_report", kind="csv_out"),
    Route("POST", "/api/v1/payments", "pay_invoice", creates=True),
]

_COMPILED = [r.compile() for r in ROUTES]


def bound_operations() -> list[str]:
    return [r.operation for r in ROUTES]


def http_status(error_code: str) -> int:
    if error_code in ("UnknownSession", "SessionExpired"):
        return 401
    if error_code == "Forbidden":
        return 403
    if error_code.startswith("Unknown"):
        return 404
    if error_code.startswith("Validation") or error_code.startswith("Malformed"):
        return 422
    if error_code.startswith("Duplicate") or error_code.startswith("Already"):
        return 409
    if error_code == APP_TIER_UNAVAILABLE:
        return 502
    return 400


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: "WebHTTPServer"

    # -- verb plumbing -----------------------------------------------------

    def do_GET(self) -> None:
        self._handle("GET")

    def do_POST(self) -> None:
        self._handle("POST")

    def do_PATCH(self) -> None:
        self._handle("PATCH")

    def do_DELETE(self) -> None:
        self._handle("DELETE")

    def log_message(self, fmt: str, *args) -> None:
        logger.debug("%s %s", self.address_string(), fmt % args)

    # -- request handling ---------------------------------------------------

    def _handle(self, method: str) -> None:
        try:
            parts = urlsplit(self.path)
            path = parts.path
            if path == "/api/v1/coursework-imports/template" and method == "GET":
                self._send_csv(200, COURSEWORK_CSV_HEADER + "\n", "coursework-template.csv")
                return
            if not path.startswith("/api/"):
                if method == "GET":
                    self._serve_static(path)
                else:
                    self._send_json(404, {"error_code": UNKNOWN_OPERATION,
                                          "message": "no such route"})
                return
            matched = None
            for compiled in _COMPILED:
                if compiled.route.method != method:
                    continue
                m = compiled.regex.match(path)
                if m:
                    matched = (compiled.route, m.groupdict())
                    break
            if matched is None:
                self._send_json(404, {"error_code": UNKNOWN_OPERATION,
                                      "message": f"no route for {method} {path}"})
                return
            route, params = matched
            payload = self._build_payload(route, params, parts.query)
            response = self.server.pool.call(
                route.operation, payload, self._bearer_token()
            )
            self._relay(route, response)
        except AppTierUnavailable:
            self._send_json(502, {"error_code": APP_TIER_UNAVAILABLE,
                                  "message": "application tier unavailable"})
        except _BadRequest as exc:
            self._send_json(exc.status, exc.body)
        except Exception:
            logger.exception("request handling failed")
            try:
                self._send_json(500, {"error_code": "InternalError", "message": "internal error"})
            except OSError:
                pass

    def _build_payload(self, route: Route, params: dict, query: str) -> dict:
        payload: dict = {}
        for key, value in parse_qsl(query):
            payload[key] = value
        body = self._read_body()
        if route.kind == "csv_in":
            try:
                payload["content"] = body.decode("utf-8")
            except UnicodeDecodeError:
                raise _BadRequest(422, {"error_code": "MalformedFile",
                                        "message": "file must be UTF-8"})
        elif body:
            try:
                parsed = json.loads(body.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError):
                raise _BadRequest(422, {"error_code": MALFORMED_PAYLOAD,
                                        "message": "body must be a JSON object"})
            if not isinstance(parsed, dict):
                raise _BadRequest(422, {"error_code": MALFORMED_PAYLOAD,
                                        "message": "body must be a JSON object"})
            payload.update(parsed)
        payload.update(params)  # path parameters win
        return payload

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        if length <= 0:
            return b""
        if length > MAX_BODY_BYTES:
            raise _BadRequest(422, {"error_code": MALFORMED_PAYLOAD,
                                    "message": "request body too large"})
        return self.rfile.read(length)

    def _bearer_token(self) -> str | None:
        header = self.headers.get("Authorization") or ""
        if header.startswith("Bearer "):
            return header[len("Bearer "):].strip()
        return None

    def _relay(self, route: Route, response: dict) -> None:
        payload = response.get("payload") or {}
        if response.get("status") == "ok":
            if route.kind == "csv_out":
                self._send_csv(200, payload.get("csv", ""),
                               payload.get("filename", "report.csv"))
            else:
                self._send_json(201 if route.creates else 200, payload)
            return
        code = str(response.get("error_code") or "InternalError")
        self._send_json(http_status(code), payload or {"error_code": code})

    # -- static assets -------------------------------------------------------

    def _serve_static(self, path: str) -> None:
        static_dir = self.server.static_dir
        if static_dir is None:
            self._send_json(404, {"error_code": UNKNOWN_OPERATION,
                                  "message": "no static assets configured"})
            return
        candidate = (static_dir / path.lstrip("/")).resolve()
        root = static_dir.resolve()
        if not str(candidate).startswith(str(root)):
            self._send_json(404, {"error_code": UNKNOWN_OPERATION, "message": "not found"})
            return
        if candidate.is_dir():
            candidate = candidate / "index.html"
        if not candidate.is_file():
            # client-side routes fall back to the app shell
            candidate = root / "index.html"
            if not candidate.is_file():
                self._send_json(404, {"error_code": UNKNOWN_OPERATION, "message": "not found"})
                return
        data = candidate.read_bytes()
        ctype = mimetypes.guess_type(str(candidate))[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    # -- responses -------------------------------------------------------------

    def _send_json(self, status: int, doc: dict) -> None:
        data = json.dumps(doc, sort_keys=True, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Cache-Control", "no-store")
        self.end_headers()
        self.wfile.write(data)

    def _send_csv(self, status: int, text: str, filename: str) -> None:
        data = text.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "text/csv; charset=utf-8")
        self.send_header("Content-Disposition", f'attachment; filename="{filename}"')
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Cache-Control", "no-store")
        self.end_headers()
        self.wfile.write(data)


class _BadRequest(Exception):
    def __init__(self, status: int, body: dict):
        super().__init__(body.get("message", ""))
        self.status = status
        self.body = body


class WebHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True
    # the load profile is many short-lived browser connections arriving at
    # once; the stdlib default backlog of 5 drops bursts
    request_queue_size = 512

    def __init__(self, addr: tuple[str, int], pool: AppTierPool, static_dir: Path | None):
        self.pool = pool
        self.static_dir = static_dir
        super().__init__(addr, _Handler)


class WebServer:
    """Lifecycle wrapper: bind, run in a background thread, shut down."""

    def __init__(self, config: Config):
        self.config = config
        self._httpd: WebHTTPServer | None = None
        self._thread: threading.Thread | None = None
        self.pool = AppTierPool(config.app_server_addr, config.web_pool_size)

    @property
    def address(self) -> tuple[str, int]:
        assert self._httpd is not None, "server not started"
        return self._httpd.server_address[:2]

    def start(self) -> None:
        static_dir = self.config.static_dir
        if static_dir is not None and not Path(static_dir).is_dir():
            logger.warning("static dir %s missing; serving API only", static_dir)
            static_dir = None
        try:
            self._httpd = WebHTTPServer(self.config.web_listen, self.pool,
                                        Path(static_dir) if static_dir else None)
        except OSError as exc:
            import errno
            if exc.errno == errno.EADDRINUSE:
                raise CampusError(
                    PORT_IN_USE,
                    f"address already in use: {self.config.web_listen[0]}:{self.config.web_listen[1]}",
                ) from exc
            raise
        self._thread = threading.Thread(target=self._httpd.serve_forever,
                                        name="web-http", daemon=True)
        self._thread.start()
        logger.info("web tier listening on %s:%s", *self.address)

    def shutdown(self) -> None:
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=10.0)
        self.pool.close()


def serve_forever(server: WebServer) -> None:
    """Run until SIGINT/SIGTERM. For the ops CLI."""
    import signal

    done = threading.Event()

    def _stop(_signum, _frame):
        done.set()

    signal.signal(signal.SIGINT, _stop)
    signal.signal(signal.SIGTERM, _stop)
    server.start()
    host, port = server.address
    print(f"web tier listening on {host}:{port}", flush=True)
    done.wait()
    server.shutdown()
