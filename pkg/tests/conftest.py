from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path

import pytest

from campus_core.auth import Identity
from campus_core.config import Config
from campus_core.domain import Role
from campus_core.fixtures import demo_fixture
from campus_core.service import CampusCore

REPO_ROOT = Path(__file__).resolve().parent.parent
LETTERS_DIR = REPO_ROOT / "config" / "letters"

# Mid change window of the demo dataset's current term (2011-T1).
FROZEN_NOW = datetime(2011, 2, 1, 12, 0, 0, tzinfo=timezone.utc)

S1 = Identity("S000001", Role.STUDENT)
S2 = Identity("S000002", Role.STUDENT)
ACADEMIC = Identity("L000001", Role.ACADEMIC_STAFF)
ADMIN = Identity("A000001", Role.ADMIN_STAFF)


class MutableClock:
    """Frozen clock the tests can move."""

    def __init__(self, now: datetime = FROZEN_NOW):
        self.now = now

    def __call__(self) -> datetime:
        return self.now


@pytest.fixture
def clock() -> MutableClock:
    return MutableClock()


@pytest.fixture
def bare_core(tmp_path, clock) -> CampusCore:
    """Migrated, empty store."""
    core = CampusCore(Config(data_dir=tmp_path / "data", letters_dir=LETTERS_DIR), clock=clock)
    core.migrate()
    core.auth.iterations = 1_000  # keep unit tests quick; production default stays 60k
    return core


@pytest.fixture
def core(bare_core) -> CampusCore:
    """Migrated store preloaded with the demo dataset."""
    bare_core.load_fixture(demo_fixture())
    return bare_core
