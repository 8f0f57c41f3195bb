import socket
import struct

import pytest

from campus_core import wire


def socket_pair():
    a, b = socket.socketpair()
    return a, b


class TestFraming:
    def test_round_trip(self):
        a, b = socket_pair()
        try:
            wire.send_frame(a, {"hello": "wörld", "n": 3})
            assert wire.recv_frame(b) == {"hello": "wörld", "n": 3}
        finally:
            a.close()
            b.close()

    def test_length_prefix_is_big_endian(self):
        data = wire.encode_frame({"a": 1})
        (length,) = struct.unpack(">I", data[:4])
        assert length == len(data) - 4

    def test_eof_at_boundary_is_none(self):
        a, b = socket_pair()
        a.close()
        try:
            assert wire.recv_frame(b) is None
        finally:
            b.close()

    def test_eof_mid_frame_raises(self):
        a, b = socket_pair()
        try:
            a.sendall(struct.pack(">I", 100) + b"short")
            a.close()
            with pytest.raises(wire.FrameError):
                wire.recv_frame(b)
        finally:
            b.close()

    def test_oversized_announcement_rejected(self):
        a, b = socket_pair()
        try:
            a.sendall(struct.pack(">I", wire.MAX_FRAME_BYTES + 1))
            with pytest.raises(wire.FrameError):
                wire.recv_frame(b)
        finally:
            a.close()
            b.close()

    def test_non_json_body_rejected(self):
        a, b = socket_pair()
        try:
            body = b"\xff\xfe not json"
            a.sendall(struct.pack(">I", len(body)) + body)
            with pytest.raises(wire.FrameError):
                wire.recv_frame(b)
        finally:
            a.close()
            b.close()

    def test_pipelined_frames_keep_order(self):
        a, b = socket_pair()
        try:
            for i in range(5):
                wire.send_frame(a, {"i": i})
            got = [wire.recv_frame(b)["i"] for _ in range(5)]
            assert got == list(range(5))
        finally:
            a.close()
            b.close()


class TestEnvelopes:
    def test_request_shape(self):
        doc = wire.make_request("r1", "login", {"username": "u"}, "tok")
        assert doc == {"v": 1, "request_id": "r1", "operation": "login",
                       "payload": {"username": "u"}, "session_token": "tok"}

    def test_request_without_token(self):
        doc = wire.make_request("r1", "ping")
        assert "session_token" not in doc

    def test_error_response_carries_code(self):
        doc = wire.error_response("r9", "Forbidden", "no", {"x": 1})
        assert doc["status"] == "error"
        assert doc["error_code"] == "Forbidden"
        assert doc["request_id"] == "r9"
        assert doc["payload"]["details"] == {"x": 1}
