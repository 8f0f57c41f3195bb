"""Launches the two tiers as real processes through the ops CLI, the way a
deployment would, and hands back base addresses plus kill/restart controls."""

from __future__ import annotations

import re
import socket
import subprocess
import sys
import time
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURE_FILE = REPO_ROOT / "fixtures" / "demo.json"
LETTERS_DIR = REPO_ROOT / "config" / "letters"

_LISTENING = re.compile(r"listening on ([0-9.]+):(\d+)")


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class TierProcess:
    def __init__(self, args: list[str], cwd: Path):
        self.args = args
        self.cwd = cwd
        self.proc: subprocess.Popen | None = None

    def start(self) -> tuple[str, int]:
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "campus_core.cli", *self.args],
            cwd=self.cwd, stdout=subprocess.PIPE, stderr=subprocess.DEVNULL, text=True,
        )
        assert self.proc.stdout is not None
        deadline = time.monotonic() + 30
        while time.monotonic() < deadline:
            line = self.proc.stdout.readline()
            if not line:
                raise RuntimeError(f"tier exited early: {self.args}")
            m = _LISTENING.search(line)
            if m:
                return m.group(1), int(m.group(2))
        raise RuntimeError(f"tier never reported its address: {self.args}")

    def kill(self) -> None:
        if self.proc is not None:
            self.proc.kill()
            self.proc.wait(timeout=10)
            self.proc = None

    def terminate(self) -> None:
        if self.proc is not None:
            self.proc.terminate()
            self.proc.wait(timeout=15)
            self.proc = None


class Deployment:
    """A full two-tier deployment in a scratch directory."""

    def __init__(self, root: Path, worker_pool_size: int = 8, web_pool_size: int = 16):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)
        self.app_port = free_port()
        self.web_port = free_port()
        self.app_config = root / "app.toml"
        self.web_config = root / "web.toml"
        self.app_config.write_text(
            "[app_server]\n"
            f'listen = "127.0.0.1:{self.app_port}"\n'
            f"worker_pool_size = {worker_pool_size}\n"
            "[data]\n"
            f'dir = "{root / "data"}"\n'
            "[letters]\n"
            f'dir = "{LETTERS_DIR}"\n'
        )
        self.web_config.write_text(
            "[web]\n"
            f'listen = "127.0.0.1:{self.web_port}"\n'
            f'app_server_addr = "127.0.0.1:{self.app_port}"\n'
            f"pool_size = {web_pool_size}\n"
        )
        self.app: TierProcess | None = None
        self.web: TierProcess | None = None

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self.web_port}"

    def cli(self, *args: str) -> subprocess.CompletedProcess:
        result = subprocess.run(
            [sys.executable, "-m", "campus_core.cli", "--config", str(self.app_config), *args],
            cwd=self.root, capture_output=True, text=True, timeout=120,
        )
        if result.returncode != 0:
            raise RuntimeError(f"cli {args} failed: {result.stderr}")
        return result

    def provision(self) -> None:
        self.cli("migrate")
        self.cli("load-fixture", str(FIXTURE_FILE))

    def reset_password(self, person_id: str) -> tuple[str, str]:
        out = self.cli("reset-password", person_id).stdout
        username = re.search(r"username: (\S+)", out).group(1)
        password = re.search(r"password: (\S+)", out).group(1)
        return username, password

    def start_app(self) -> None:
        self.app = TierProcess(["--config", str(self.app_config), "serve-app"], self.root)
        self.app.start()

    def start_web(self) -> None:
        self.web = TierProcess(["--config", str(self.web_config), "serve-web"], self.root)
        self.web.start()

    def start(self) -> None:
        self.start_app()
        self.start_web()

    def stop(self) -> None:
        for tier in (self.web, self.app):
            if tier is not None:
                try:
                    tier.terminate()
                except Exception:
                    tier.kill()
        self.web = self.app = None
