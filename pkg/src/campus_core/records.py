"""Transcripts, program checklists, grading, coursework (including CSV bulk
import), class lists, student lookup, timetable views, and graduation.

Coursework CSV contract, bit-exact: UTF-8, first line exactly
`student_id,assessment,score,max_score`, comma-separated, `.` decimal point,
no quoted fields, LF or CRLF line endings. Re-importing an identical file is
a no-op because rows upsert on (student, unit, term, assessment).
"""

from __future__ import annotations

import hashlib
import json
from decimal import Decimal, InvalidOperation

from . import clock as clockmod
from . import domain
from .auth import Identity, ensure_student_scope, student_payload
from .domain import EnrollmentStatus, Grade, RequestStatus, StudentStatus
from .enrollment import enrollment_payload
from .errors import (
    ALREADY_DECIDED,
    CampusError,
    DUPLICATE_REQUEST,
    GRADE_EXISTS,
    MALFORMED_FILE,
    NO_LONGER_ELIGIBLE,
    NOT_APPROVED,
    REQUIREMENTS_OUTSTANDING,
    STUDENT_NOT_ACTIVE,
    UNKNOWN_ENROLLMENT,
    UNKNOWN_OFFERING,
    UNKNOWN_REQUEST,
    UNKNOWN_STUDENT,
    UNKNOWN_TERM,
    validation_error,
)
from .ids import new_id
from .storage import Store, Tx

CSV_HEADER = "student_id,assessment,score,max_score"

_DAY_ORDER = {d: i for i, d in enumerate(("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"))}


class RecordsService:
    def __init__(self, store: Store, clock: clockmod.Clock = clockmod.utc_now):
        self.store = store
        self.clock = clock

    # -- transcripts and progress ------------------------------------------

    def view_transcript(self, identity: Identity | None, student_id: str) -> dict:
        ensure_student_scope(identity, student_id)
        with self.store.read() as tx:
            if self.store.student_row(tx, student_id) is None:
                raise CampusError(UNKNOWN_STUDENT, f"no student {student_id}")
            rows = tx.all(
                "SELECT g.*, u.name AS unit_name FROM grades g "
                "JOIN units u ON u.code = g.unit_code "
                "WHERE g.student_id = ? ORDER BY g.year, g.term_id, g.unit_code",
                (student_id,),
            )
            return {
                "student_id": student_id,
                "records": [
                    {
                        "unit_code": r["unit_code"],
                        "unit_name": r["unit_name"],
                        "grade": r["grade"],
                        "campus": r["campus"],
                        "term": r["term_id"],
                        "year": r["year"],
                    }
                    for r in rows
                ],
            }

    def program_details(self, identity: Identity | None, student_id: str) -> dict:
        """One checklist row per program requirement, flagged completed when a
        passing grade exists."""
        ensure_student_scope(identity, student_id)
        with self.store.read() as tx:
            student = self.store.student_row(tx, student_id)
            if student is None:
                raise CampusError(UNKNOWN_STUDENT, f"no student {student_id}")
            program = tx.one("SELECT * FROM programs WHERE id = ?", (student["program_id"],))
            units = self.store.unit_map(tx)
            passed = domain.passed_unit_codes(self.store.grade_records(tx, student_id))
            rows = [
                {
                    "unit_code": req["unit_code"],
                    "unit_name": units[req["unit_code"]].name,
                    "category": req["category"],
                    "completed": req["unit_code"] in passed,
                }
                for req in self.store.program_requirements(tx, student["program_id"])
            ]
            return {
                "student_id": student_id,
                "program_id": student["program_id"],
                "program_name": program["name"] if program else "",
                "requirements": rows,
            }

    def record_final_grade(self, identity: Identity | None, enrollment_id: str, grade: str) -> dict:
        """Close out an approved enrollment with its final grade."""
        try:
            final = Grade(grade)
        except ValueError:
            raise validation_error(["grade"], f"unknown grade {grade!r}")
        with self.store.write() as tx:
            row = tx.one("SELECT * FROM enrollments WHERE id = ?", (enrollment_id,))
            if row is None:
                raise CampusError(UNKNOWN_ENROLLMENT, f"no enrollment {enrollment_id}")
            existing = tx.one(
                "SELECT 1 FROM grades WHERE student_id = ? AND unit_code = ? AND term_id = ?",
                (row["student_id"], row["unit_code"], row["term_id"]),
            )
            if existing is not None:
                raise CampusError(GRADE_EXISTS, "a grade is already recorded for this enrollment")
            if row["status"] != EnrollmentStatus.APPROVED.value:
                raise CampusError(NOT_APPROVED, f"enrollment is {row['status']}, not Approved")
            term = self.store.term_row(tx, row["term_id"])
            self.store.update_enrollment_status(tx, enrollment_id, EnrollmentStatus.COMPLETED)
            tx.execute(
                "INSERT INTO grades (student_id, unit_code, grade, campus, term_id, year) "
                "VALUES (?,?,?,?,?,?)",
                (row["student_id"], row["unit_code"], final.value, row["campus"],
                 row["term_id"], term["year"]),
            )
            return {
                "student_id": row["student_id"],
                "unit_code": row["unit_code"],
                "grade": final.value,
                "campus": row["campus"],
                "term": row["term_id"],
                "year": term["year"],
                "enrollment_status": EnrollmentStatus.COMPLETED.value,
            }

    # -- coursework ----------------------------------------------------------

    def submit_coursework(self, identity: Identity | None, unit_code: str, term_id: str,
                          campus: str, items: list[dict]) -> dict:
        """Upsert coursework items; invalid items are reported, never applied."""
        digest = hashlib.sha256(
            json.dumps(items, sort_keys=True, separators=(",", ":")).encode("utf-8")
        ).hexdigest()
        with self.store.write() as tx:
            self._require_offering(tx, unit_code, campus, term_id)
            return self._apply_items(tx, unit_code, term_id, campus,
                                     list(enumerate(items, start=1)), digest)

    def import_coursework_csv(self, identity: Identity | None, unit_code: str, term_id: str,
                              campus: str, content: str) -> dict:
        """Bulk import per the CSV contract; line numbers refer to the file."""
        digest = hashlib.sha256(content.encode("utf-8")).hexdigest()
        lines = content.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines or lines[0].rstrip("\r") != CSV_HEADER:
            raise CampusError(
                MALFORMED_FILE, f"line 1: header must be exactly {CSV_HEADER!r}",
                {"line": 1},
            )
        numbered: list[tuple[int, dict]] = []
        for lineno, raw in enumerate(lines[1:], start=2):
            line = raw.rstrip("\r")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise CampusError(
                    MALFORMED_FILE,
                    f"line {lineno}: expected 4 columns, found {len(parts)}",
                    {"line": lineno},
                )
            numbered.append((lineno, {
                "student_id": parts[0],
                "assessment": parts[1],
                "score": parts[2],
                "max_score": parts[3],
            }))
        with self.store.write() as tx:
            self._require_offering(tx, unit_code, campus, term_id)
            return self._apply_items(tx, unit_code, term_id, campus, numbered, digest)

    def _apply_items(self, tx: Tx, unit_code: str, term_id: str, campus: str,
                     numbered: list[tuple[int, dict]], digest: str) -> dict:
        accepted = 0
        rejected: list[dict] = []
        for lineno, item in numbered:
            reason = self._item_problem(tx, unit_code, term_id, item)
            if reason is not None:
                rejected.append({"line": lineno, "reason": reason})
                continue
            tx.execute(
                "INSERT INTO coursework (student_id, unit_code, term_id, campus, assessment,"
                " score, max_score) VALUES (?,?,?,?,?,?,?) "
                "ON CONFLICT(student_id, unit_code, term_id, assessment) "
                "DO UPDATE SET score = excluded.score, max_score = excluded.max_score,"
                " campus = excluded.campus",
                (item["student_id"], unit_code, term_id, campus,
                 str(item["assessment"]), _plain(item["score"]), _plain(item["max_score"])),
            )
            accepted += 1
        return {"accepted": accepted, "rejected": rejected, "idempotency_key": digest}

    def _item_problem(self, tx: Tx, unit_code: str, term_id: str, item: dict) -> str | None:
        for field in ("student_id", "assessment", "score", "max_score"):
            if field not in item or str(item[field]) == "":
                return f"missing {field}"
        try:
            score = Decimal(str(item["score"]))
            max_score = Decimal(str(item["max_score"]))
        except InvalidOperation:
            return "score and max_score must be decimal numbers"
        if max_score <= 0:
            return "max_score must be positive"
        if score < 0:
            return "score must not be negative"
        if score > max_score:
            return "score exceeds max_score"
        student_id = str(item["student_id"])
        if self.store.student_row(tx, student_id) is None:
            return f"unknown student {student_id}"
        enrolled = tx.one(
            "SELECT 1 FROM enrollments WHERE student_id = ? AND unit_code = ? AND term_id = ? "
            "AND status IN ('Approved','Completed')",
            (student_id, unit_code, term_id),
        )
        if enrolled is None:
            return "not enrolled"
        return None

    def view_coursework(self, identity: Identity | None, student_id: str, term_id: str) -> dict:
        ensure_student_scope(identity, student_id)
        with self.store.read() as tx:
            if self.store.student_row(tx, student_id) is None:
                raise CampusError(UNKNOWN_STUDENT, f"no student {student_id}")
            rows = tx.all(
                "SELECT * FROM coursework WHERE student_id = ? AND term_id = ? "
                "ORDER BY unit_code, assessment",
                (student_id, term_id),
            )
            return {
                "student_id": student_id,
                "term": term_id,
                "items": [
                    {
                        "unit_code": r["unit_code"],
                        "assessment": r["assessment"],
                        "score": r["score"],
                        "max_score": r["max_score"],
                        "campus": r["campus"],
                    }
                    for r in rows
                ],
            }

    # -- class lists and lookup ------------------------------------------------

    def class_list(self, identity: Identity | None, unit_code: str, term: str,
                   year, campus: str) -> dict:
        """Students with a live-approved or completed enrollment in an offering.

        `term` accepts a term index (T1/T2/T3, combined with `year`) or a full
        term id.
        """
        term_id = _resolve_term_id(term, year)
        with self.store.read() as tx:
            if self.store.offering_row(tx, unit_code, campus, term_id) is None:
                raise CampusError(
                    UNKNOWN_OFFERING, f"no offering for {unit_code} at {campus} in {term_id}"
                )
            rows = tx.all(
                "SELECT e.student_id, s.name FROM enrollments e "
                "JOIN students s ON s.id = e.student_id "
                "WHERE e.unit_code = ? AND e.term_id = ? AND e.campus = ? "
                "AND e.status IN ('Approved','Completed') ORDER BY e.student_id",
                (unit_code, term_id, campus),
            )
            return {
                "unit_code": unit_code,
                "term": term_id,
                "campus": campus,
                "students": [{"student_id": r["student_id"], "name": r["name"]} for r in rows],
            }

    def student_lookup(self, identity: Identity | None, student_id: str) -> dict:
        """Profile, academic history, and live enrollments in one response."""
        with self.store.read() as tx:
            student = self.store.student_row(tx, student_id)
            if student is None:
                raise CampusError(UNKNOWN_STUDENT, f"no student {student_id}")
            enrollments = tx.all(
                "SELECT * FROM enrollments WHERE student_id = ? "
                "AND status IN ('PendingApproval','Approved') ORDER BY created_at, id",
                (student_id,),
            )
        transcript = self.view_transcript(identity, student_id)
        return {
            "profile": student_payload(student),
            "transcript": transcript["records"],
            "current_enrollments": [enrollment_payload(e) for e in enrollments],
        }

    # -- timetable ---------------------------------------------------------------

    def view_timetable(self, identity: Identity | None, campus: str, term_id: str,
                       kind: str) -> dict:
        try:
            wanted = domain.TimetableKind(kind)
        except ValueError:
            raise validation_error(["kind"], "kind must be Class or FinalExam")
        with self.store.read() as tx:
            if self.store.term_row(tx, term_id) is None:
                raise CampusError(UNKNOWN_TERM, f"no term {term_id}")
            rows = tx.all(
                "SELECT t.*, u.name AS unit_name FROM timetable t "
                "JOIN units u ON u.code = t.unit_code "
                "WHERE t.campus = ? AND t.term_id = ? AND t.kind = ?",
                (campus, term_id, wanted.value),
            )
            entries = sorted(
                (
                    {
                        "unit_code": r["unit_code"],
                        "unit_name": r["unit_name"],
                        "campus": r["campus"],
                        "term": r["term_id"],
                        "kind": r["kind"],
                        "day": r["day"],
                        "start": r["start_time"],
                        "end": r["end_time"],
                        "room": r["room"],
                    }
                    for r in rows
                ),
                key=lambda e: (_DAY_ORDER.get(e["day"], len(_DAY_ORDER)), e["day"],
                               e["start"], e["unit_code"]),
            )
            return {"entries": entries}

    # -- graduation ----------------------------------------------------------------

    def apply_graduation(self, identity: Identity | None, student_id: str) -> dict:
        """A student may request graduation only with nothing left outstanding."""
        ensure_student_scope(identity, student_id)
        with self.store.write() as tx:
            student = self.store.student_row(tx, student_id)
            if student is None:
                raise CampusError(UNKNOWN_STUDENT, f"no student {student_id}")
            if student["status"] != StudentStatus.ACTIVE.value:
                raise CampusError(STUDENT_NOT_ACTIVE, f"student {student_id} is {student['status']}")
            outstanding = self._outstanding(tx, student)
            if outstanding:
                raise CampusError(
                    REQUIREMENTS_OUTSTANDING,
                    f"units still outstanding: {', '.join(outstanding)}",
                    {"outstanding": outstanding},
                )
            open_request = tx.one(
                "SELECT id FROM graduation_requests WHERE student_id = ? AND status != 'Rejected'",
                (student_id,),
            )
            if open_request is not None:
                raise CampusError(DUPLICATE_REQUEST, "a graduation request is already on file")
            request_id = new_id()
            tx.execute(
                "INSERT INTO graduation_requests (id, student_id, status, created_at) "
                "VALUES (?,?, 'Submitted', ?)",
                (request_id, student_id, clockmod.iso(self.clock())),
            )
            return self._graduation_payload(
                tx.one("SELECT * FROM graduation_requests WHERE id = ?", (request_id,))
            )

    def decide_graduation(self, identity: Identity | None, request_id: str, decision: str) -> dict:
        """Approve re-verifies eligibility before marking the student Graduated."""
        if decision not in ("Approve", "Reject"):
            raise validation_error(["decision"], "decision must be Approve or Reject")
        decider = identity.person_id if identity is not None else None
        with self.store.write() as tx:
            row = tx.one("SELECT * FROM graduation_requests WHERE id = ?", (request_id,))
            if row is None:
                raise CampusError(UNKNOWN_REQUEST, f"no graduation request {request_id}")
            if row["status"] != RequestStatus.SUBMITTED.value:
                raise CampusError(ALREADY_DECIDED, "request is no longer pending")
            if decision == "Approve":
                student = self.store.student_row(tx, row["student_id"])
                outstanding = self._outstanding(tx, student)
                if outstanding:
                    raise CampusError(
                        NO_LONGER_ELIGIBLE,
                        f"units now outstanding: {', '.join(outstanding)}",
                        {"outstanding": outstanding},
                    )
                tx.execute(
                    "UPDATE students SET status = ? WHERE id = ?",
                    (StudentStatus.GRADUATED.value, row["student_id"]),
                )
                new_status = RequestStatus.APPROVED
            else:
                new_status = RequestStatus.REJECTED
            tx.execute(
                "UPDATE graduation_requests SET status = ?, decided_by = ? WHERE id = ?",
                (new_status.value, decider, request_id),
            )
            return self._graduation_payload(
                tx.one("SELECT * FROM graduation_requests WHERE id = ?", (request_id,))
            )

    def list_graduation_requests(self, identity: Identity | None) -> dict:
        with self.store.read() as tx:
            rows = tx.all(
                "SELECT g.*, s.name AS student_name FROM graduation_requests g "
                "JOIN students s ON s.id = g.student_id "
                "WHERE g.status = 'Submitted' ORDER BY g.created_at, g.id"
            )
            out = []
            for row in rows:
                payload = self._graduation_payload(row)
                payload["student_name"] = row["student_name"]
                out.append(payload)
            return {"requests": out}

    # -- helpers --------------------------------------------------------------------

    def _outstanding(self, tx: Tx, student) -> list[str]:
        required = {r["unit_code"] for r in self.store.program_requirements(tx, student["program_id"])}
        passed = domain.passed_unit_codes(self.store.grade_records(tx, student["id"]))
        return sorted(required - passed)

    def _require_offering(self, tx: Tx, unit_code: str, campus: str, term_id: str) -> None:
        if self.store.offering_row(tx, unit_code, campus, term_id) is None:
            raise CampusError(
                UNKNOWN_OFFERING, f"no offering for {unit_code} at {campus} in {term_id}"
            )

    @staticmethod
    def _graduation_payload(row) -> dict:
        return {
            "id": row["id"],
            "student_id": row["student_id"],
            "status": row["status"],
            "decided_by": row["decided_by"],
            "created_at": row["created_at"],
        }


def _plain(value) -> str:
    return str(Decimal(str(value)))


def _resolve_term_id(term: str, year) -> str:
    term = str(term)
    if term in ("T1", "T2", "T3"):
        if year in (None, ""):
            raise validation_error(["year"], "year is required with a term index")
        try:
            return f"{int(year)}-{term}"
        except (TypeError, ValueError):
            raise validation_error(["year"], f"bad year {year!r}")
    return term
