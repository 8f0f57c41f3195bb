"""Client side of the tier protocol: a single framed-TCP connection and a
bounded checkout pool for the web tier.

Requests are strictly one in flight per connection, so responses need no
reordering. Transport failures surface as AppTierUnavailable; a failed
connection is discarded, never reused.
"""

from __future__ import annotations

import queue
import socket
import threading

from .errors import APP_TIER_UNAVAILABLE, CampusError
from .ids import new_id
from .wire import FrameError, make_request, recv_frame, send_frame


class AppTierUnavailable(Exception):
    """The application tier cannot be reached or the connection broke."""


class AppTierClient:
    def __init__(self, addr: tuple[str, int], timeout: float = 30.0):
        self.addr = addr
        self.timeout = timeout
        self._sock: socket.socket | None = None

    def connect(self) -> None:
        if self._sock is not None:
            return
        try:
            self._sock = socket.create_connection(self.addr, timeout=self.timeout)
        except OSError as exc:
            raise AppTierUnavailable(f"cannot reach application tier at {self.addr}: {exc}") from exc

    def call(self, operation: str, payload: dict | None = None,
             session_token: str | None = None) -> dict:
        """Send one request and wait for its response document."""
        self.connect()
        assert self._sock is not None
        request_id = new_id()
        try:
            send_frame(self._sock, make_request(request_id, operation, payload, session_token))
            response = recv_frame(self._sock)
        except (OSError, FrameError) as exc:
            self.close()
            raise AppTierUnavailable(f"application tier connection failed: {exc}") from exc
        if response is None:
            self.close()
            raise AppTierUnavailable("application tier closed the connection")
        if response.get("request_id") != request_id:
            self.close()
            raise AppTierUnavailable("response does not match the request in flight")
        return response

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
            self._sock = None


class AppTierPool:
    """Fixed-capacity pool of connections, checked out per request."""

    def __init__(self, addr: tuple[str, int], size: int = 16, timeout: float = 30.0):
        self.addr = addr
        self.size = size
        self.timeout = timeout
        self._idle: queue.Queue[AppTierClient] = queue.Queue()
        self._created = 0
        self._lock = threading.Lock()

    def _checkout(self) -> AppTierClient:
        try:
            return self._idle.get_nowait()
        except queue.Empty:
            pass
        with self._lock:
            if self._created < self.size:
                self._created += 1
                return AppTierClient(self.addr, self.timeout)
        return self._idle.get()  # blocks until a connection frees up

    def _checkin(self, client: AppTierClient) -> None:
        self._idle.put(client)

    def _discard(self, client: AppTierClient) -> None:
        client.close()
        with self._lock:
            self._created -= 1

    def call(self, operation: str, payload: dict | None = None,
             session_token: str | None = None) -> dict:
        client = self._checkout()
        try:
            response = client.call(operation, payload, session_token)
        except AppTierUnavailable:
            self._discard(client)
            raise
        except BaseException:
            self._discard(client)
            raise
        self._checkin(client)
        return response

    def close(self) -> None:
        while True:
            try:
                self._idle.get_nowait().close()
            except queue.Empty:
                return


def unavailable_error() -> CampusError:
    return CampusError(APP_TIER_UNAVAILABLE, "application tier unavailable")
