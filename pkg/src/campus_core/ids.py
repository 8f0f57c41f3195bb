"""Sortable random identifiers: 48-bit millisecond timestamp + 80 random bits,
Crockford base32, 26 characters. Generated app-side so fixtures can pre-assign
stable ids."""

from __future__ import annotations

import secrets
import time

_ALPHABET = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"


def new_id(timestamp_ms: int | None = None) -> str:
    ts = int(time.time() * 1000) if timestamp_ms is None else timestamp_ms
    value = ((ts & (1 << 48) - 1) << 80) | secrets.randbits(80)
    return "".join(_ALPHABET[(value >> shift) & 31] for shift in range(125, -1, -5))
