"""The tier-boundary message protocol.

Frames are length-prefixed UTF-8 JSON documents over TCP: a 4-byte big-endian
payload length, then the document. Requests carry `v` (protocol version 1),
`request_id` (echoed verbatim in the response), `operation`, an optional
`session_token`, and a `payload` object. Responses carry `status` ("ok" or
"error"), the echoed `request_id`, and either a `payload` or an `error_code`
from the published catalog.
"""

from __future__ import annotations

import json
import socket
import struct

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 8 * 1024 * 1024

_HEADER = struct.Struct(">I")


class FrameError(Exception):
    """Transport-level failure: bad framing, oversized frame, or lost peer."""


def encode_frame(doc: dict) -> bytes:
    data = json.dumps(doc, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    if len(data) > MAX_FRAME_BYTES:
        raise FrameError(f"frame of {len(data)} bytes exceeds the {MAX_FRAME_BYTES} cap")
    return _HEADER.pack(len(data)) + data


def send_frame(sock: socket.socket, doc: dict) -> None:
    sock.sendall(encode_frame(doc))


def recv_exact(sock: socket.socket, n: int) -> bytes | None:
    """Read exactly n bytes; None on a clean EOF before the first byte."""
    chunks: list[bytes] = []
    got = 0
    while got < n:
        chunk = sock.recv(n - got)
        if not chunk:
            if got == 0:
                return None
            raise FrameError("connection closed mid-frame")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def recv_frame(sock: socket.socket) -> dict | None:
    """Read one frame; None on clean EOF at a frame boundary."""
    header = recv_exact(sock, _HEADER.size)
    if header is None:
        return None
    (length,) = _HEADER.unpack(header)
    if length > MAX_FRAME_BYTES:
        raise FrameError(f"peer announced oversized frame of {length} bytes")
    body = recv_exact(sock, length)
    if body is None:
        raise FrameError("connection closed mid-frame")
    try:
        doc = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FrameError(f"frame is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FrameError("frame root must be an object")
    return doc


def make_request(request_id: str, operation: str, payload: dict | None = None,
                 session_token: str | None = None) -> dict:
    doc: dict = {
        "v": PROTOCOL_VERSION,
        "request_id": request_id,
        "operation": operation,
        "payload": payload or {},
    }
    if session_token:
        doc["session_token"] = session_token
    return doc


def ok_response(request_id: str, payload: dict) -> dict:
    return {"v": PROTOCOL_VERSION, "request_id": request_id, "status": "ok",
            "payload": payload}


def error_response(request_id: str, error_code: str, message: str,
                   details: dict | None = None) -> dict:
    doc: dict = {
        "v": PROTOCOL_VERSION,
        "request_id": request_id,
        "status": "error",
        "error_code": error_code,
        "payload": {"error_code": error_code, "message": message},
    }
    if details:
        doc["payload"]["details"] = details
    return doc
