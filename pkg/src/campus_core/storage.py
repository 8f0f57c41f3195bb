"""Embedded relational storage, owned exclusively by the application-server tier.

One SQLite file per deployment (`data/campus.db`, WAL journal) plus a
`data/schema_version` marker. All mutation goes through write transactions
(`BEGIN IMMEDIATE`), so conflicting writers serialize while readers proceed
against a committed snapshot. Connections are per-thread and never shared.
"""

from __future__ import annotations

import logging
import os
import sqlite3
import threading
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

from . import domain
from .errors import (
    CampusError,
    CORRUPT_SCHEMA,
    DUPLICATE_ENROLLMENT,
    DUPLICATE_KEY,
    INACTIVE_OFFERING,
    REFERENTIAL_VIOLATION,
    STORAGE_UNAVAILABLE,
    UNKNOWN_STUDENT,
)
from .fixtures import Fixture
from .ids import new_id

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DB_FILENAME = "campus.db"
VERSION_FILENAME = "schema_version"

_SCHEMA_V1 = """
CREATE TABLE schema_meta (key TEXT PRIMARY KEY, value TEXT NOT NULL);

CREATE TABLE units (
  code TEXT PRIMARY KEY,
  name TEXT NOT NULL
);

CREATE TABLE unit_prerequisites (
  unit_code TEXT NOT NULL REFERENCES units(code),
  requires_code TEXT NOT NULL REFERENCES units(code),
  PRIMARY KEY (unit_code, requires_code),
  CHECK (unit_code <> requires_code)
);

CREATE TABLE programs (
  id TEXT PRIMARY KEY,
  name TEXT NOT NULL
);

CREATE TABLE program_requirements (
  program_id TEXT NOT NULL REFERENCES programs(id),
  unit_code TEXT NOT NULL REFERENCES units(code),
  category TEXT NOT NULL CHECK (category IN ('Core','Major','Service')),
  seq INTEGER NOT NULL DEFAULT 0,
  PRIMARY KEY (program_id, unit_code)
);

CREATE TABLE terms (
  id TEXT PRIMARY KEY,
  year INTEGER NOT NULL,
  term_index TEXT NOT NULL CHECK (term_index IN ('T1','T2','T3')),
  change_window_end TEXT NOT NULL,
  is_current INTEGER NOT NULL DEFAULT 0,
  UNIQUE (year, term_index)
);

CREATE TABLE students (
  id TEXT PRIMARY KEY,
  name TEXT NOT NULL,
  postal_address TEXT NOT NULL DEFAULT '',
  residential_address TEXT NOT NULL DEFAULT '',
  home_phone TEXT NOT NULL DEFAULT '',
  mobile TEXT NOT NULL DEFAULT '',
  program_id TEXT NOT NULL REFERENCES programs(id),
  major TEXT,
  citizenship TEXT NOT NULL DEFAULT '',
  status TEXT NOT NULL CHECK (status IN ('Applicant','Active','Graduated','Withdrawn'))
);

CREATE TABLE staff (
  id TEXT PRIMARY KEY,
  name TEXT NOT NULL,
  role TEXT NOT NULL CHECK (role IN ('AcademicStaff','AdminStaff')),
  department TEXT NOT NULL DEFAULT '',
  campus TEXT NOT NULL DEFAULT '',
  postal_address TEXT NOT NULL DEFAULT '',
  residential_address TEXT NOT NULL DEFAULT '',
  home_phone TEXT NOT NULL DEFAULT '',
  mobile TEXT NOT NULL DEFAULT ''
);

CREATE TABLE offerings (
  unit_code TEXT NOT NULL REFERENCES units(code),
  campus TEXT NOT NULL,
  term_id TEXT NOT NULL REFERENCES terms(id),
  active INTEGER NOT NULL DEFAULT 1,
  PRIMARY KEY (unit_code, campus, term_id)
);

CREATE TABLE enrollments (
  id TEXT PRIMARY KEY,
  student_id TEXT NOT NULL REFERENCES students(id),
  unit_code TEXT NOT NULL REFERENCES units(code),
  campus TEXT NOT NULL,
  term_id TEXT NOT NULL REFERENCES terms(id),
  status TEXT NOT NULL CHECK (status IN ('PendingApproval','Approved','Rejected','Dropped','Completed')),
  prerequisite_met INTEGER NOT NULL,
  decided_by TEXT,
  created_at TEXT NOT NULL
);

-- The uniqueness contract: one live (non-terminal) enrollment per
-- (student, unit, term). Terminal rows do not block a retry.
CREATE UNIQUE INDEX ux_enrollments_live
  ON enrollments (student_id, unit_code, term_id)
  WHERE status IN ('PendingApproval','Approved');

CREATE TABLE grades (
  student_id TEXT NOT NULL REFERENCES students(id),
  unit_code TEXT NOT NULL REFERENCES units(code),
  grade TEXT NOT NULL CHECK (grade IN ('A','B+','B','C+','C','D','F')),
  campus TEXT NOT NULL,
  term_id TEXT NOT NULL REFERENCES terms(id),
  year INTEGER NOT NULL,
  PRIMARY KEY (student_id, unit_code, term_id)
);

CREATE TABLE applications (
  id TEXT PRIMARY KEY,
  applicant_name TEXT NOT NULL,
  contact TEXT NOT NULL DEFAULT '',
  proposed_program TEXT NOT NULL REFERENCES programs(id),
  citizenship TEXT NOT NULL DEFAULT '',
  funding TEXT NOT NULL DEFAULT '',
  qualifications TEXT NOT NULL DEFAULT '',
  work_experience TEXT NOT NULL DEFAULT '',
  attachments TEXT NOT NULL DEFAULT '[]',
  status TEXT NOT NULL CHECK (status IN ('Submitted','Approved','Rejected')),
  decision_reason TEXT,
  decided_by TEXT,
  student_id TEXT,
  created_at TEXT NOT NULL
);

CREATE TABLE graduation_requests (
  id TEXT PRIMARY KEY,
  student_id TEXT NOT NULL REFERENCES students(id),
  status TEXT NOT NULL CHECK (status IN ('Submitted','Approved','Rejected')),
  decided_by TEXT,
  created_at TEXT NOT NULL
);

CREATE TABLE program_change_requests (
  id TEXT PRIMARY KEY,
  student_id TEXT NOT NULL REFERENCES students(id),
  new_program TEXT,
  new_major TEXT,
  status TEXT NOT NULL CHECK (status IN ('Submitted','Approved','Rejected')),
  decided_by TEXT,
  created_at TEXT NOT NULL
);

CREATE TABLE coursework (
  student_id TEXT NOT NULL REFERENCES students(id),
  unit_code TEXT NOT NULL REFERENCES units(code),
  term_id TEXT NOT NULL REFERENCES terms(id),
  campus TEXT NOT NULL,
  assessment TEXT NOT NULL,
  score TEXT NOT NULL,
  max_score TEXT NOT NULL,
  PRIMARY KEY (student_id, unit_code, term_id, assessment)
);

CREATE TABLE invoices (
  id TEXT PRIMARY KEY,
  student_id TEXT NOT NULL REFERENCES students(id),
  term_id TEXT NOT NULL REFERENCES terms(id),
  status TEXT NOT NULL CHECK (status IN ('Open','Paid')),
  created_at TEXT NOT NULL
);

CREATE UNIQUE INDEX ux_invoices_open ON invoices (student_id, term_id) WHERE status = 'Open';

CREATE TABLE invoice_lines (
  invoice_id TEXT NOT NULL REFERENCES invoices(id),
  unit_code TEXT NOT NULL,
  amount TEXT NOT NULL,
  PRIMARY KEY (invoice_id, unit_code)
);

CREATE TABLE payments (
  id TEXT PRIMARY KEY,
  invoice_id TEXT NOT NULL REFERENCES invoices(id),
  amount TEXT NOT NULL,
  method TEXT NOT NULL DEFAULT 'SimulatedCard',
  card_last4 TEXT NOT NULL,
  recorded_at TEXT NOT NULL
);

CREATE TABLE fees (
  unit_code TEXT PRIMARY KEY REFERENCES units(code),
  amount TEXT NOT NULL
);

CREATE TABLE timetable (
  unit_code TEXT NOT NULL REFERENCES units(code),
  campus TEXT NOT NULL,
  term_id TEXT NOT NULL REFERENCES terms(id),
  kind TEXT NOT NULL CHECK (kind IN ('Class','FinalExam')),
  day TEXT NOT NULL,
  start_time TEXT NOT NULL,
  end_time TEXT NOT NULL,
  room TEXT NOT NULL DEFAULT ''
);

CREATE TABLE credentials (
  person_id TEXT PRIMARY KEY,
  username TEXT NOT NULL UNIQUE,
  password_hash TEXT NOT NULL,
  must_change INTEGER NOT NULL DEFAULT 1
);

CREATE TABLE sessions (
  token TEXT PRIMARY KEY,
  person_id TEXT NOT NULL,
  role TEXT NOT NULL,
  created_at TEXT NOT NULL,
  expires_at TEXT NOT NULL
);

CREATE TABLE letters (
  id TEXT PRIMARY KEY,
  kind TEXT NOT NULL CHECK (kind IN ('Offer','Decline')),
  recipient TEXT NOT NULL,
  body TEXT NOT NULL,
  rendered_at TEXT NOT NULL
);
"""

_MIGRATIONS: list[tuple[int, str]] = [(1, _SCHEMA_V1)]


class Tx:
    """A live transaction handle. Commit or rollback happens exactly once,
    managed by the Store context managers; writes stay invisible to other
    connections until commit."""

    isolation = "Serializable"

    def __init__(self, conn: sqlite3.Connection):
        self.id = new_id()
        self._conn = conn

    def execute(self, sql: str, params: tuple = ()) -> sqlite3.Cursor:
        return self._conn.execute(sql, params)

    def one(self, sql: str, params: tuple = ()) -> sqlite3.Row | None:
        return self._conn.execute(sql, params).fetchone()

    def all(self, sql: str, params: tuple = ()) -> list[sqlite3.Row]:
        return self._conn.execute(sql, params).fetchall()


class Store:
    def __init__(self, data_dir: Path | str):
        self.data_dir = Path(data_dir)
        self.db_path = self.data_dir / DB_FILENAME
        self._local = threading.local()

    # -- connections -------------------------------------------------

    def _conn(self) -> sqlite3.Connection:
        conn = getattr(self._local, "conn", None)
        if conn is None:
            try:
                conn = sqlite3.connect(self.db_path, timeout=30.0, isolation_level=None)
                conn.row_factory = sqlite3.Row
                conn.execute("PRAGMA journal_mode=WAL")
                conn.execute("PRAGMA foreign_keys=ON")
                conn.execute("PRAGMA busy_timeout=30000")
                conn.execute("PRAGMA synchronous=NORMAL")
            except sqlite3.DatabaseError as exc:
                raise CampusError(CORRUPT_SCHEMA, f"storage file unreadable: {exc}") from exc
            self._local.conn = conn
        return conn

    def close(self) -> None:
        conn = getattr(self._local, "conn", None)
        if conn is not None:
            conn.close()
            self._local.conn = None

    @contextmanager
    def read(self) -> Iterator[Tx]:
        """Read-only snapshot transaction."""
        conn = self._conn()
        conn.execute("BEGIN")
        try:
            yield Tx(conn)
            conn.execute("COMMIT")
        except BaseException:
            conn.execute("ROLLBACK")
            raise

    @contextmanager
    def write(self) -> Iterator[Tx]:
        """Exclusive-writer transaction; conflicting writers queue behind it."""
        conn = self._conn()
        conn.execute("BEGIN IMMEDIATE")
        try:
            yield Tx(conn)
            conn.execute("COMMIT")
        except BaseException:
            conn.execute("ROLLBACK")
            raise

    # -- migrations --------------------------------------------------

    def migrate(self) -> int:
        """Bring the schema to the latest version. Idempotent."""
        try:
            self.data_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise CampusError(STORAGE_UNAVAILABLE, f"cannot create data dir: {exc}") from exc
        if not os.access(self.data_dir, os.W_OK):
            raise CampusError(STORAGE_UNAVAILABLE, f"data dir not writable: {self.data_dir}")

        conn = self._conn()
        try:
            current = self._schema_version(conn)
        except sqlite3.DatabaseError as exc:
            raise CampusError(CORRUPT_SCHEMA, f"storage file unreadable: {exc}") from exc
        if current > SCHEMA_VERSION:
            raise CampusError(
                CORRUPT_SCHEMA,
                f"store is at schema version {current}, newer than supported {SCHEMA_VERSION}",
            )
        for version, ddl in _MIGRATIONS:
            if version <= current:
                continue
            conn.execute("BEGIN IMMEDIATE")
            try:
                for statement in _split_statements(ddl):
                    conn.execute(statement)
                conn.execute(
                    "INSERT INTO schema_meta (key, value) VALUES ('version', ?) "
                    "ON CONFLICT(key) DO UPDATE SET value = excluded.value",
                    (str(version),),
                )
                conn.execute("COMMIT")
            except BaseException:
                conn.execute("ROLLBACK")
                raise
        (self.data_dir / VERSION_FILENAME).write_text(f"{SCHEMA_VERSION}\n", encoding="utf-8")
        return SCHEMA_VERSION

    def _schema_version(self, conn: sqlite3.Connection) -> int:
        tables = {
            row[0]
            for row in conn.execute("SELECT name FROM sqlite_master WHERE type = 'table'")
        }
        if "schema_meta" not in tables:
            if tables:
                raise CampusError(CORRUPT_SCHEMA, "store has tables but no schema_meta")
            return 0
        row = conn.execute("SELECT value FROM schema_meta WHERE key = 'version'").fetchone()
        if row is None:
            raise CampusError(CORRUPT_SCHEMA, "schema_meta has no version row")
        try:
            return int(row[0])
        except ValueError as exc:
            raise CampusError(CORRUPT_SCHEMA, f"bad schema version: {row[0]!r}") from exc

    # -- fixture loading ---------------------------------------------

    def load_fixture(self, fixture: Fixture) -> dict[str, int]:
        """Persist a validated fixture atomically; returns per-entity counts."""
        fixture.validate()
        try:
            with self.write() as tx:
                self._insert_fixture(tx, fixture)
        except sqlite3.IntegrityError as exc:
            raise _integrity_to_error(exc) from exc
        counts = fixture.counts()
        logger.info("fixture loaded: %s", counts)
        self._warn_unpriced_offerings(fixture)
        return counts

    def _insert_fixture(self, tx: Tx, fixture: Fixture) -> None:
        for unit in fixture.units:
            tx.execute("INSERT INTO units (code, name) VALUES (?, ?)", (unit.code, unit.name))
        for unit in fixture.units:
            for code in sorted(unit.prerequisites):
                tx.execute(
                    "INSERT INTO unit_prerequisites (unit_code, requires_code) VALUES (?, ?)",
                    (unit.code, code),
                )
        for program in fixture.programs:
            tx.execute("INSERT INTO programs (id, name) VALUES (?, ?)", (program.id, program.name))
            for seq, req in enumerate(program.requirements):
                tx.execute(
                    "INSERT INTO program_requirements (program_id, unit_code, category, seq) "
                    "VALUES (?, ?, ?, ?)",
                    (program.id, req.unit_code, req.category.value, seq),
                )
        for term in fixture.terms:
            tx.execute(
                "INSERT INTO terms (id, year, term_index, change_window_end, is_current) "
                "VALUES (?, ?, ?, ?, ?)",
                (term.id, term.year, term.index.value, term.change_window_end.isoformat(),
                 int(term.is_current)),
            )
        for off in fixture.offerings:
            tx.execute(
                "INSERT INTO offerings (unit_code, campus, term_id, active) VALUES (?, ?, ?, ?)",
                (off.unit_code, off.campus, off.term_id, int(off.active)),
            )
        for s in fixture.students:
            tx.execute(
                "INSERT INTO students (id, name, postal_address, residential_address, home_phone,"
                " mobile, program_id, major, citizenship, status) VALUES (?,?,?,?,?,?,?,?,?,?)",
                (s.id, s.name, s.postal_address, s.residential_address, s.home_phone, s.mobile,
                 s.program_id, s.major, s.citizenship, s.status.value),
            )
        for m in fixture.staff:
            tx.execute(
                "INSERT INTO staff (id, name, role, department, campus) VALUES (?,?,?,?,?)",
                (m.id, m.name, m.role.value, m.department, m.campus),
            )
        for g in fixture.grades:
            tx.execute(
                "INSERT INTO grades (student_id, unit_code, grade, campus, term_id, year) "
                "VALUES (?,?,?,?,?,?)",
                (g.student_id, g.unit_code, g.grade.value, g.campus, g.term_id, g.year),
            )
        for e in fixture.timetable:
            tx.execute(
                "INSERT INTO timetable (unit_code, campus, term_id, kind, day, start_time, end_time, room) "
                "VALUES (?,?,?,?,?,?,?,?)",
                (e.unit_code, e.campus, e.term_id, e.kind.value, e.day, e.start, e.end, e.room),
            )
        for fee in fixture.fees:
            tx.execute("INSERT INTO fees (unit_code, amount) VALUES (?, ?)", (fee.unit_code, fee.amount))

    def _warn_unpriced_offerings(self, fixture: Fixture) -> None:
        priced = {f.unit_code for f in fixture.fees}
        unpriced = sorted({o.unit_code for o in fixture.offerings} - priced)
        if unpriced:
            logger.warning("offered units without a fee row: %s", ", ".join(unpriced))

    # -- enrollment uniqueness ---------------------------------------

    def atomic_check_and_insert_enrollment(
        self,
        tx: Tx,
        *,
        student_id: str,
        unit_code: str,
        campus: str,
        term_id: str,
        status: domain.EnrollmentStatus,
        prerequisite_met: bool,
        created_at: str,
        decided_by: str | None = None,
        enrollment_id: str | None = None,
    ) -> sqlite3.Row:
        """Insert an enrollment iff no live one exists for (student, unit, term).

        Check and insert ride in the caller's transaction, so the uniqueness
        decision is atomic; the partial unique index backstops any race.
        """
        student = tx.one("SELECT id FROM students WHERE id = ?", (student_id,))
        if student is None:
            raise CampusError(UNKNOWN_STUDENT, f"no student {student_id}")
        offering = tx.one(
            "SELECT active FROM offerings WHERE unit_code = ? AND campus = ? AND term_id = ?",
            (unit_code, campus, term_id),
        )
        if offering is None or not offering["active"]:
            raise CampusError(
                INACTIVE_OFFERING, f"no active offering for {unit_code} at {campus} in {term_id}"
            )
        live = tx.one(
            "SELECT id FROM enrollments WHERE student_id = ? AND unit_code = ? AND term_id = ? "
            "AND status IN ('PendingApproval','Approved')",
            (student_id, unit_code, term_id),
        )
        if live is not None:
            raise CampusError(
                DUPLICATE_ENROLLMENT,
                f"student {student_id} already has a live enrollment in {unit_code} for {term_id}",
            )
        enrollment_id = enrollment_id or new_id()
        try:
            tx.execute(
                "INSERT INTO enrollments (id, student_id, unit_code, campus, term_id, status,"
                " prerequisite_met, decided_by, created_at) VALUES (?,?,?,?,?,?,?,?,?)",
                (enrollment_id, student_id, unit_code, campus, term_id, status.value,
                 int(prerequisite_met), decided_by, created_at),
            )
        except sqlite3.IntegrityError as exc:
            raise CampusError(
                DUPLICATE_ENROLLMENT,
                f"student {student_id} already has a live enrollment in {unit_code} for {term_id}",
            ) from exc
        row = tx.one("SELECT * FROM enrollments WHERE id = ?", (enrollment_id,))
        assert row is not None
        return row

    def update_enrollment_status(
        self, tx: Tx, enrollment_id: str, target: domain.EnrollmentStatus,
        decided_by: str | None = None,
    ) -> sqlite3.Row:
        """Apply a status transition, refusing anything outside the machine."""
        row = tx.one("SELECT * FROM enrollments WHERE id = ?", (enrollment_id,))
        if row is None:
            raise ValueError(f"no enrollment {enrollment_id}")
        current = domain.EnrollmentStatus(row["status"])
        if not domain.enrollment_transition_allowed(current, target):
            raise ValueError(f"illegal enrollment transition {current.value} -> {target.value}")
        if decided_by is not None:
            tx.execute(
                "UPDATE enrollments SET status = ?, decided_by = ? WHERE id = ?",
                (target.value, decided_by, enrollment_id),
            )
        else:
            tx.execute(
                "UPDATE enrollments SET status = ? WHERE id = ?", (target.value, enrollment_id)
            )
        updated = tx.one("SELECT * FROM enrollments WHERE id = ?", (enrollment_id,))
        assert updated is not None
        return updated

    # -- shared row lookups -------------------------------------------

    def student_row(self, tx: Tx, student_id: str) -> sqlite3.Row | None:
        return tx.one("SELECT * FROM students WHERE id = ?", (student_id,))

    def staff_row(self, tx: Tx, staff_id: str) -> sqlite3.Row | None:
        return tx.one("SELECT * FROM staff WHERE id = ?", (staff_id,))

    def term_row(self, tx: Tx, term_id: str) -> sqlite3.Row | None:
        return tx.one("SELECT * FROM terms WHERE id = ?", (term_id,))

    def current_term_row(self, tx: Tx) -> sqlite3.Row | None:
        return tx.one("SELECT * FROM terms WHERE is_current = 1")

    def offering_row(self, tx: Tx, unit_code: str, campus: str, term_id: str) -> sqlite3.Row | None:
        return tx.one(
            "SELECT * FROM offerings WHERE unit_code = ? AND campus = ? AND term_id = ?",
            (unit_code, campus, term_id),
        )

    def grade_records(self, tx: Tx, student_id: str) -> list[domain.GradeRecord]:
        rows = tx.all(
            "SELECT * FROM grades WHERE student_id = ? ORDER BY year, term_id, unit_code",
            (student_id,),
        )
        return [
            domain.GradeRecord(
                student_id=row["student_id"],
                unit_code=row["unit_code"],
                grade=domain.Grade(row["grade"]),
                campus=row["campus"],
                term_id=row["term_id"],
                year=row["year"],
            )
            for row in rows
        ]

    def program_requirements(self, tx: Tx, program_id: str) -> list[sqlite3.Row]:
        return tx.all(
            "SELECT * FROM program_requirements WHERE program_id = ? ORDER BY seq, unit_code",
            (program_id,),
        )

    def unit_map(self, tx: Tx) -> dict[str, domain.Unit]:
        prereqs: dict[str, set[str]] = {}
        for row in tx.all("SELECT unit_code, requires_code FROM unit_prerequisites"):
            prereqs.setdefault(row["unit_code"], set()).add(row["requires_code"])
        return {
            row["code"]: domain.Unit(
                code=row["code"],
                name=row["name"],
                prerequisites=frozenset(prereqs.get(row["code"], ())),
            )
            for row in tx.all("SELECT code, name FROM units")
        }


def _split_statements(script: str) -> list[str]:
    # Statements in the DDL never contain semicolons in literals.
    return [s.strip() for s in script.split(";") if s.strip()]


def _integrity_to_error(exc: sqlite3.IntegrityError) -> CampusError:
    text = str(exc)
    if "FOREIGN KEY" in text:
        return CampusError(REFERENTIAL_VIOLATION, f"dangling reference: {text}")
    return CampusError(DUPLICATE_KEY, f"key collision: {text}")
