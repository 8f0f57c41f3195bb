"""Deployment configuration for both tiers.

The config file is a flat two-level key/value document (`config/campus.toml`):
`[section]` headers with `key = value` lines, values being quoted strings,
integers, floats or booleans. That subset is parsed here directly; nested
tables, arrays and dates are not part of the contract.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from pathlib import Path

_SECTION_RE = re.compile(r"^\[([A-Za-z0-9_.-]+)\]$")
_KEY_RE = re.compile(r"^([A-Za-z0-9_-]+)\s*=\s*(.+)$")


def _parse_value(raw: str):
    raw = raw.strip()
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    if raw in ("true", "false"):
        return raw == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"unsupported config value: {raw!r}")


def load_key_values(path: Path) -> dict[str, object]:
    """Parse the config file into a flat {"section.key": value} mapping."""
    values: dict[str, object] = {}
    section = ""
    for lineno, raw_line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1)
            continue
        m = _KEY_RE.match(line)
        if not m:
            raise ValueError(f"{path}:{lineno}: cannot parse config line: {line!r}")
        key = f"{section}.{m.group(1)}" if section else m.group(1)
        values[key] = _parse_value(m.group(2))
    return values


def _parse_listen(value: str) -> tuple[str, int]:
    host, _, port = value.rpartition(":")
    return host, int(port)


@dataclass(frozen=True)
class Config:
    app_listen: tuple[str, int] = ("127.0.0.1", 7001)
    worker_pool_size: int = 8
    queue_size: int = 1024
    web_listen: tuple[str, int] = ("127.0.0.1", 7000)
    app_server_addr: tuple[str, int] = ("127.0.0.1", 7001)
    web_pool_size: int = 16
    data_dir: Path = Path("data")
    session_ttl_hours: float = 8.0
    letters_dir: Path = Path("config/letters")
    static_dir: Path | None = None
    hr_url: str = "https://hr.example.edu/"
    class_shares_url: str = "https://shares.example.edu/units/{unit_code}"

    @classmethod
    def from_file(cls, path: Path | str) -> "Config":
        kv = load_key_values(Path(path))
        cfg = cls()
        if "app_server.listen" in kv:
            cfg = replace(cfg, app_listen=_parse_listen(str(kv["app_server.listen"])))
        if "app_server.worker_pool_size" in kv:
            cfg = replace(cfg, worker_pool_size=int(kv["app_server.worker_pool_size"]))
        if "app_server.queue_size" in kv:
            cfg = replace(cfg, queue_size=int(kv["app_server.queue_size"]))
        if "web.listen" in kv:
            cfg = replace(cfg, web_listen=_parse_listen(str(kv["web.listen"])))
        if "web.app_server_addr" in kv:
            cfg = replace(cfg, app_server_addr=_parse_listen(str(kv["web.app_server_addr"])))
        if "web.pool_size" in kv:
            cfg = replace(cfg, web_pool_size=int(kv["web.pool_size"]))
        if "web.static_dir" in kv:
            cfg = replace(cfg, static_dir=Path(str(kv["web.static_dir"])))
        if "data.dir" in kv:
            cfg = replace(cfg, data_dir=Path(str(kv["data.dir"])))
        if "session.ttl_hours" in kv:
            cfg = replace(cfg, session_ttl_hours=float(kv["session.ttl_hours"]))  # type: ignore[arg-type]
        if "letters.dir" in kv:
            cfg = replace(cfg, letters_dir=Path(str(kv["letters.dir"])))
        if "links.hr_url" in kv:
            cfg = replace(cfg, hr_url=str(kv["links.hr_url"]))
        if "links.class_shares_url" in kv:
            cfg = replace(cfg, class_shares_url=str(kv["links.class_shares_url"]))
        return cfg
