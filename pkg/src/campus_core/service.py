"""Composition root: wires storage and the business services together for the
application-server tier, and carries the small catalog reads that do not
belong to any one workflow."""

from __future__ import annotations

from pathlib import Path

from . import clock as clockmod
from .admissions import AdmissionsService
from .auth import AuthService
from .config import Config
from .enrollment import EnrollmentService
from .finance import FinanceService
from .fixtures import Fixture, from_json_file
from .records import RecordsService
from .reporting import ReportingService
from .storage import Store


class CampusCore:
    def __init__(self, config: Config | None = None,
                 clock: clockmod.Clock = clockmod.utc_now):
        self.config = config or Config()
        self.clock = clock
        self.store = Store(self.config.data_dir)
        self.auth = AuthService(self.store, self.config.session_ttl_hours, clock)
        self.finance = FinanceService(self.store, clock)
        self.enrollment = EnrollmentService(self.store, self.finance, clock)
        self.records = RecordsService(self.store, clock)
        self.admissions = AdmissionsService(self.store, self.auth,
                                            self.config.letters_dir, clock)
        self.reporting = ReportingService(self.store)

    def migrate(self) -> int:
        return self.store.migrate()

    def load_fixture(self, fixture: Fixture) -> dict[str, int]:
        return self.store.load_fixture(fixture)

    def load_fixture_file(self, path: Path | str) -> dict[str, int]:
        return self.store.load_fixture(from_json_file(path))

    # -- catalog reads -------------------------------------------------

    def list_terms(self) -> dict:
        with self.store.read() as tx:
            rows = tx.all("SELECT * FROM terms ORDER BY year, term_index")
            return {
                "terms": [
                    {
                        "id": r["id"],
                        "year": r["year"],
                        "index": r["term_index"],
                        "change_window_end": r["change_window_end"],
                        "is_current": bool(r["is_current"]),
                    }
                    for r in rows
                ]
            }

    def list_campuses(self) -> dict:
        with self.store.read() as tx:
            rows = tx.all(
                "SELECT campus FROM offerings UNION SELECT campus FROM timetable "
                "UNION SELECT campus FROM staff WHERE campus != '' ORDER BY campus"
            )
            return {"campuses": [r["campus"] for r in rows]}

    def list_units(self) -> dict:
        with self.store.read() as tx:
            units = self.store.unit_map(tx)
            return {
                "units": [
                    {
                        "code": u.code,
                        "name": u.name,
                        "prerequisites": sorted(u.prerequisites),
                    }
                    for u in sorted(units.values(), key=lambda u: u.code)
                ]
            }

    def external_links(self) -> dict:
        """Stub links to the separate legacy systems (HR, class materials)."""
        return {
            "hr_url": self.config.hr_url,
            "class_shares_url_template": self.config.class_shares_url,
        }
