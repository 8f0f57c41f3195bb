"""The application-server tier: hosts every business operation behind the wire
protocol, owns sessions and storage, and serves requests through a bounded
worker pool.

Each connection gets a lightweight reader thread that frames requests onto a
bounded queue (backpressure: the queue blocks, nothing is dropped); a fixed
pool of workers executes at most `pool_size` requests concurrently. Shutdown
refuses new connections and drains what is queued or in flight.
"""

from __future__ import annotations

import errno
import json
import logging
import queue
import socket
import threading
import time
from dataclasses import dataclass
from typing import Callable

from .auth import Identity, PUBLIC_OPERATIONS
from .errors import (
    CampusError,
    INTERNAL_ERROR,
    MALFORMED_PAYLOAD,
    PORT_IN_USE,
    UNKNOWN_OPERATION,
)
from .service import CampusCore
from .wire import (
    FrameError,
    MAX_FRAME_BYTES,
    PROTOCOL_VERSION,
    error_response,
    ok_response,
    send_frame,
)

logger = logging.getLogger(__name__)

Handler = Callable[[CampusCore, Identity | None, dict, "str | None"], dict]


@dataclass(frozen=True)
class OpSpec:
    name: str
    handler: Handler
    required: tuple[str, ...] = ()
    public: bool = False
    # logout consumes the token itself rather than passing the authorize gate
    self_authorizing: bool = False


def _ops() -> dict[str, OpSpec]:
    specs = [
        OpSpec("ping", lambda c, i, p, t: {"pong": True}, public=True),
        OpSpec("login",
               lambda c, i, p, t: c.auth.login(str(p["username"]), str(p["password"])),
               required=("username", "password"), public=True),
        OpSpec("logout", lambda c, i, p, t: c.auth.logout(t or ""), self_authorizing=True),
        OpSpec("submit_application",
               lambda c, i, p, t: c.admissions.submit_application(p), public=True),
        OpSpec("view_profile", lambda c, i, p, t: c.auth.view_profile(i)),
        OpSpec("update_profile", lambda c, i, p, t: c.auth.update_profile(i, p)),
        OpSpec("access_matrix", lambda c, i, p, t: c.auth.matrix.describe()),
        OpSpec("external_links", lambda c, i, p, t: c.external_links()),
        OpSpec("list_terms", lambda c, i, p, t: c.list_terms()),
        OpSpec("list_campuses", lambda c, i, p, t: c.list_campuses()),
        OpSpec("list_units", lambda c, i, p, t: c.list_units()),
        OpSpec("list_pending_applications", lambda c, i, p, t: c.admissions.list_pending(i)),
        OpSpec("decide_application",
               lambda c, i, p, t: c.admissions.decide(i, str(p["id"]), str(p["decision"]),
                                                      p.get("reason")),
               required=("id", "decision")),
        OpSpec("activate_offering",
               lambda c, i, p, t: c.enrollment.activate_offering(
                   i, str(p["unit_code"]), str(p["campus"]), str(p["term"])),
               required=("unit_code", "campus", "term")),
        OpSpec("eligible_units",
               lambda c, i, p, t: c.enrollment.eligible_units(
                   i, str(p["student_id"]), str(p["campus"]), str(p["term"])),
               required=("student_id", "campus", "term")),
        OpSpec("enroll",
               lambda c, i, p, t: c.enrollment.enroll(
                   i, str(p["student_id"]), str(p["unit_code"]), str(p["campus"]),
                   str(p["term"])),
               required=("student_id", "unit_code", "campus", "term")),
        OpSpec("decide_pending_enrollment",
               lambda c, i, p, t: c.enrollment.decide_pending_enrollment(
                   i, str(p["id"]), str(p["decision"])),
               required=("id", "decision")),
        OpSpec("drop_unit",
               lambda c, i, p, t: c.enrollment.drop_unit(i, str(p["id"])),
               required=("id",)),
        OpSpec("list_student_enrollments",
               lambda c, i, p, t: c.enrollment.list_student_enrollments(i, str(p["student_id"])),
               required=("student_id",)),
        OpSpec("list_pending_enrollments",
               lambda c, i, p, t: c.enrollment.list_pending_enrollments(i)),
        OpSpec("request_program_change",
               lambda c, i, p, t: c.enrollment.request_program_change(
                   i, str(p["student_id"]),
                   str(p["new_program"]) if p.get("new_program") else None,
                   str(p["new_major"]) if p.get("new_major") else None),
               required=("student_id",)),
        OpSpec("decide_program_change",
               lambda c, i, p, t: c.enrollment.decide_program_change(
                   i, str(p["id"]), str(p["decision"])),
               required=("id", "decision")),
        OpSpec("list_program_change_requests",
               lambda c, i, p, t: c.enrollment.list_program_change_requests(i)),
        OpSpec("view_transcript",
               lambda c, i, p, t: c.records.view_transcript(i, str(p["student_id"])),
               required=("student_id",)),
        OpSpec("program_details",
               lambda c, i, p, t: c.records.program_details(i, str(p["student_id"])),
               required=("student_id",)),
        OpSpec("record_final_grade",
               lambda c, i, p, t: c.records.record_final_grade(i, str(p["id"]), str(p["grade"])),
               required=("id", "grade")),
        OpSpec("submit_coursework",
               lambda c, i, p, t: c.records.submit_coursework(
                   i, str(p["unit_code"]), str(p["term"]), str(p["campus"]),
                   _item_list(p.get("items"))),
               required=("unit_code", "term", "campus", "items")),
        OpSpec("import_coursework_csv",
               lambda c, i, p, t: c.records.import_coursework_csv(
                   i, str(p["unit_code"]), str(p["term"]), str(p["campus"]),
                   str(p["content"])),
               required=("unit_code", "term", "campus", "content")),
        OpSpec("view_coursework",
               lambda c, i, p, t: c.records.view_coursework(i, str(p["student_id"]),
                                                            str(p["term"])),
               required=("student_id", "term")),
        OpSpec("class_list",
               lambda c, i, p, t: c.records.class_list(
                   i, str(p["unit_code"]), str(p["term"]), p.get("year"), str(p["campus"])),
               required=("unit_code", "term", "campus")),
        OpSpec("student_lookup",
               lambda c, i, p, t: c.records.student_lookup(i, str(p["student_id"])),
               required=("student_id",)),
        OpSpec("view_timetable",
               lambda c, i, p, t: c.records.view_timetable(
                   i, str(p["campus"]), str(p["term"]), str(p["kind"])),
               required=("campus", "term", "kind")),
        OpSpec("apply_graduation",
               lambda c, i, p, t: c.records.apply_graduation(i, str(p["student_id"])),
               required=("student_id",)),
        OpSpec("decide_graduation",
               lambda c, i, p, t: c.records.decide_graduation(i, str(p["id"]),
                                                              str(p["decision"])),
               required=("id", "decision")),
        OpSpec("list_graduation_requests",
               lambda c, i, p, t: c.records.list_graduation_requests(i)),
        OpSpec("view_invoices",
               lambda c, i, p, t: c.finance.view_invoices(i, str(p["student_id"])),
               required=("student_id",)),
        OpSpec("pay_invoice",
               lambda c, i, p, t: c.finance.pay_invoice(i, str(p["invoice_id"]), p["amount"],
                                                        str(p["card_number"])),
               required=("invoice_id", "amount", "card_number")),
        OpSpec("generate_report",
               lambda c, i, p, t: c.reporting.generate(i, str(p["kind"]), {
                   "campus": p.get("campus"), "term": p.get("term"),
                   "program": p.get("program"),
               }),
               required=("kind",)),
    ]
    return {spec.name: spec for spec in specs}


def _item_list(items) -> list[dict]:
    if not isinstance(items, list) or any(not isinstance(x, dict) for x in items):
        raise CampusError(MALFORMED_PAYLOAD, "items must be a list of objects")
    return items


class Dispatcher:
    """Routes wire messages to operations, with the authorize gate in front of
    every non-public one."""

    def __init__(self, core: CampusCore):
        self.core = core
        self.ops = _ops()
        matrix_ops = set(self.core.auth.matrix.operations())
        if matrix_ops != set(self.ops):
            raise AssertionError(
                "access matrix and operation registry disagree: "
                f"{sorted(matrix_ops ^ set(self.ops))}"
            )
        assert PUBLIC_OPERATIONS <= set(self.ops)
        self._gauge_lock = threading.Lock()
        self._in_flight = 0
        self.max_in_flight = 0

    def operations(self) -> list[str]:
        return sorted(self.ops)

    def dispatch(self, message: dict) -> dict:
        request_id = str(message.get("request_id") or "")
        with self._gauge_lock:
            self._in_flight += 1
            self.max_in_flight = max(self.max_in_flight, self._in_flight)
        try:
            return self._dispatch_inner(request_id, message)
        except CampusError as exc:
            return error_response(request_id, exc.code, exc.message, exc.details)
        except Exception:
            logger.exception("operation failed unexpectedly")
            return error_response(request_id, INTERNAL_ERROR, "internal error")
        finally:
            with self._gauge_lock:
                self._in_flight -= 1

    def _dispatch_inner(self, request_id: str, message: dict) -> dict:
        if message.get("v", PROTOCOL_VERSION) != PROTOCOL_VERSION:
            raise CampusError(MALFORMED_PAYLOAD, "unsupported protocol version")
        operation = message.get("operation")
        if not isinstance(operation, str) or operation not in self.ops:
            raise CampusError(UNKNOWN_OPERATION, f"unknown operation {operation!r}")
        spec = self.ops[operation]
        payload = message.get("payload") or {}
        if not isinstance(payload, dict):
            raise CampusError(MALFORMED_PAYLOAD, "payload must be an object")
        token = message.get("session_token")
        identity: Identity | None = None
        if not spec.public and not spec.self_authorizing:
            identity = self.core.auth.authorize(token, operation)
        missing = [f for f in spec.required if f not in payload or payload[f] is None]
        if missing:
            raise CampusError(
                MALFORMED_PAYLOAD,
                f"missing payload fields: {', '.join(missing)}",
                {"fields": missing},
            )
        result = spec.handler(self.core, identity, payload, token)
        return ok_response(request_id, result)


@dataclass
class _Job:
    sock: socket.socket
    write_lock: threading.Lock
    message: dict


class AppServer:
    def __init__(self, core: CampusCore, listen: tuple[str, int] = ("127.0.0.1", 7001),
                 pool_size: int = 8, queue_size: int = 1024,
                 drain_grace: float = 0.5):
        self.dispatcher = Dispatcher(core)
        self._listen_addr = listen
        self.pool_size = pool_size
        self.drain_grace = drain_grace
        self._queue: queue.Queue[_Job] = queue.Queue(maxsize=queue_size)
        self._stopping = threading.Event()
        self._readers_done = threading.Event()
        self._stop_deadline = 0.0
        self._listener: socket.socket | None = None
        self._workers: list[threading.Thread] = []
        self._acceptor: threading.Thread | None = None
        self._readers: list[threading.Thread] = []
        self._conns: set[socket.socket] = set()
        self._conn_lock = threading.Lock()

    @property
    def address(self) -> tuple[str, int]:
        assert self._listener is not None, "server not started"
        return self._listener.getsockname()[:2]

    def start(self) -> None:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            listener.bind(self._listen_addr)
        except OSError as exc:
            listener.close()
            if exc.errno == errno.EADDRINUSE:
                raise CampusError(
                    PORT_IN_USE, f"address already in use: {self._listen_addr[0]}:{self._listen_addr[1]}"
                ) from exc
            raise
        listener.listen(128)
        listener.settimeout(0.2)
        self._listener = listener
        for n in range(self.pool_size):
            worker = threading.Thread(target=self._worker, name=f"app-worker-{n}", daemon=True)
            worker.start()
            self._workers.append(worker)
        self._acceptor = threading.Thread(target=self._accept_loop, name="app-accept", daemon=True)
        self._acceptor.start()
        logger.info("application server listening on %s:%s", *self.address)

    def shutdown(self) -> None:
        """Refuse new connections, drain queued and in-flight requests, stop.

        Order matters: readers retire first (giving already-sent frames a
        short grace window to arrive), and only then may workers exit on an
        empty queue. Otherwise a worker could quit while a reader still holds
        a frame it is about to enqueue.
        """
        self._stop_deadline = time.monotonic() + self.drain_grace
        self._stopping.set()
        if self._acceptor is not None:
            self._acceptor.join(timeout=10.0)
        for t in list(self._readers):
            t.join(timeout=10.0)
        self._readers_done.set()
        for t in self._workers:
            t.join(timeout=10.0)
        with self._conn_lock:
            conns = list(self._conns)
        for conn in conns:
            try:
                conn.close()
            except OSError:
                pass

    # -- threads ---------------------------------------------------------

    def _accept_loop(self) -> None:
        # Keeps accepting through the drain window so connections already in
        # the listen backlog (whose requests are on the wire) are not dropped;
        # closing the listener afterwards refuses anything newer.
        assert self._listener is not None
        while not (self._stopping.is_set() and time.monotonic() >= self._stop_deadline):
            try:
                conn, _addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            conn.settimeout(0.2)
            with self._conn_lock:
                self._conns.add(conn)
            reader = threading.Thread(target=self._reader, args=(conn,), daemon=True)
            reader.start()
            self._readers.append(reader)
        self._listener.close()

    def _reader(self, conn: socket.socket) -> None:
        write_lock = threading.Lock()
        try:
            while True:
                message = self._read_message(conn)
                if message is None:
                    break
                self._queue.put(_Job(conn, write_lock, message))
        except FrameError as exc:
            logger.debug("dropping connection: %s", exc)
        finally:
            with self._conn_lock:
                self._conns.discard(conn)
            try:
                conn.close()
            except OSError:
                pass

    def _read_message(self, conn: socket.socket) -> dict | None:
        """One frame, tolerating idle timeouts; once stopping, new frames get
        a short grace window and started frames always finish."""
        header = b""
        while len(header) < 4:
            try:
                chunk = conn.recv(4 - len(header))
            except socket.timeout:
                if self._stopping.is_set() and not header and time.monotonic() >= self._stop_deadline:
                    return None
                continue
            except OSError:
                return None
            if not chunk:
                if header:
                    raise FrameError("connection closed mid-frame")
                return None
            header += chunk
        length = int.from_bytes(header, "big")
        if length > MAX_FRAME_BYTES:
            raise FrameError(f"peer announced oversized frame of {length} bytes")
        body = b""
        while len(body) < length:
            try:
                chunk = conn.recv(length - len(body))
            except socket.timeout:
                continue
            except OSError:
                return None
            if not chunk:
                raise FrameError("connection closed mid-frame")
            body += chunk
        try:
            doc = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, ValueError) as exc:
            raise FrameError(f"frame is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise FrameError("frame root must be an object")
        return doc

    def _worker(self) -> None:
        while True:
            try:
                job = self._queue.get(timeout=0.1)
            except queue.Empty:
                if self._readers_done.is_set():
                    return
                continue
            try:
                response = self.dispatcher.dispatch(job.message)
                with job.write_lock:
                    send_frame(job.sock, response)
            except OSError:
                pass  # peer went away; nothing to report to
            finally:
                self._queue.task_done()


def serve_forever(server: AppServer) -> None:
    """Run until SIGINT/SIGTERM, then drain and exit. For the ops CLI."""
    import signal

    done = threading.Event()

    def _stop(_signum, _frame):
        done.set()

    signal.signal(signal.SIGINT, _stop)
    signal.signal(signal.SIGTERM, _stop)
    server.start()
    host, port = server.address
    print(f"app-server listening on {host}:{port}", flush=True)
    done.wait()
    server.shutdown()
