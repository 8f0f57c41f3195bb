"""Unit activation, eligibility, prerequisite-gated enrollment with
department-head escalation, the add/drop window, and program/major changes.

The gate rule: a student whose prerequisites are unmet lands in
PendingApproval for a department head to decide; staff enrolling on a
student's behalf cannot bypass the prerequisite at all.
"""

from __future__ import annotations

from datetime import date

from . import clock as clockmod
from . import domain
from .auth import Identity, ensure_student_scope
from .domain import EnrollmentStatus, RequestStatus, Role, StudentStatus, TermIndex
from .errors import (
    ALREADY_DECIDED,
    ALREADY_TERMINAL,
    CampusError,
    CHANGE_WINDOW_CLOSED,
    DUPLICATE_ENROLLMENT,
    EMPTY_REQUEST,
    FORBIDDEN,
    INACTIVE_OFFERING,
    NOT_ELIGIBLE,
    PREREQUISITE_NOT_MET,
    STUDENT_NOT_ACTIVE,
    TERM_NOT_OPEN,
    UNKNOWN_ENROLLMENT,
    UNKNOWN_PROGRAM,
    UNKNOWN_REQUEST,
    UNKNOWN_STUDENT,
    UNKNOWN_TERM,
    UNKNOWN_UNIT,
    validation_error,
)
from .finance import FinanceService
from .ids import new_id
from .storage import Store, Tx


def enrollment_payload(row) -> dict:
    return {
        "id": row["id"],
        "student_id": row["student_id"],
        "unit_code": row["unit_code"],
        "campus": row["campus"],
        "term": row["term_id"],
        "status": row["status"],
        "prerequisite_met": bool(row["prerequisite_met"]),
        "decided_by": row["decided_by"],
        "created_at": row["created_at"],
    }


class EnrollmentService:
    def __init__(self, store: Store, finance: FinanceService,
                 clock: clockmod.Clock = clockmod.utc_now):
        self.store = store
        self.finance = finance
        self.clock = clock

    # -- offerings -------------------------------------------------------

    def activate_offering(self, identity: Identity | None, unit_code: str,
                          campus: str, term_id: str) -> dict:
        """Activate a unit for delivery at a campus in a term. Idempotent."""
        if not campus:
            raise validation_error(["campus"], "campus is required")
        with self.store.write() as tx:
            if tx.one("SELECT code FROM units WHERE code = ?", (unit_code,)) is None:
                raise CampusError(UNKNOWN_UNIT, f"no unit {unit_code}")
            if self.store.term_row(tx, term_id) is None:
                raise CampusError(UNKNOWN_TERM, f"no term {term_id}")
            existing = self.store.offering_row(tx, unit_code, campus, term_id)
            if existing is None:
                tx.execute(
                    "INSERT INTO offerings (unit_code, campus, term_id, active) VALUES (?,?,?,1)",
                    (unit_code, campus, term_id),
                )
            elif not existing["active"]:
                tx.execute(
                    "UPDATE offerings SET active = 1 WHERE unit_code = ? AND campus = ? AND term_id = ?",
                    (unit_code, campus, term_id),
                )
            row = self.store.offering_row(tx, unit_code, campus, term_id)
            return {
                "unit_code": row["unit_code"],
                "campus": row["campus"],
                "term": row["term_id"],
                "active": bool(row["active"]),
            }

    # -- eligibility ------------------------------------------------------

    def eligible_units(self, identity: Identity | None, student_id: str,
                       campus: str, term_id: str) -> dict:
        """Units the student can enroll in at (campus, term): required by their
        program, not yet completed, not currently being taken, and actively
        offered there. Each row carries the prerequisite verdict."""
        ensure_student_scope(identity, student_id)
        with self.store.read() as tx:
            student = self._active_student(tx, student_id)
            self._ensure_term_open(tx, term_id)
            views = self._eligible_views(tx, student, campus, term_id)
            return {"units": views}

    def _eligible_views(self, tx: Tx, student, campus: str, term_id: str) -> list[dict]:
        units = self.store.unit_map(tx)
        history = self.store.grade_records(tx, student["id"])
        passed = domain.passed_unit_codes(history)
        live = {
            row["unit_code"]
            for row in tx.all(
                "SELECT unit_code FROM enrollments WHERE student_id = ? "
                "AND status IN ('PendingApproval','Approved')",
                (student["id"],),
            )
        }
        offered = {
            row["unit_code"]
            for row in tx.all(
                "SELECT unit_code FROM offerings WHERE campus = ? AND term_id = ? AND active = 1",
                (campus, term_id),
            )
        }
        views = []
        for req in self.store.program_requirements(tx, student["program_id"]):
            code = req["unit_code"]
            if code in passed or code in live or code not in offered:
                continue
            unit = units[code]
            views.append({
                "unit_code": code,
                "unit_name": unit.name,
                "category": req["category"],
                "prerequisite_codes": sorted(unit.prerequisites),
                "prerequisite_met": domain.prerequisites_met(history, unit, units),
            })
        views.sort(key=lambda v: v["unit_code"])
        return views

    # -- enrollment -------------------------------------------------------

    def enroll(self, identity: Identity | None, student_id: str, unit_code: str,
               campus: str, term_id: str) -> dict:
        """Enroll a student in an offered unit.

        Prerequisites met: approved outright and billed. Unmet: a student
        lands in PendingApproval for special approval; a staff-initiated
        attempt is refused with PrerequisiteNotMet.
        """
        staff_initiated = identity is not None and identity.role is not Role.STUDENT
        ensure_student_scope(identity, student_id)
        with self.store.write() as tx:
            student = self._active_student(tx, student_id)
            self._ensure_term_open(tx, term_id)
            offering = self.store.offering_row(tx, unit_code, campus, term_id)
            if offering is None or not offering["active"]:
                raise CampusError(
                    INACTIVE_OFFERING,
                    f"no active offering for {unit_code} at {campus} in {term_id}",
                )
            self._ensure_eligible(tx, student, unit_code, term_id)

            units = self.store.unit_map(tx)
            history = self.store.grade_records(tx, student_id)
            met = domain.prerequisites_met(history, units[unit_code], units)
            if met:
                status = EnrollmentStatus.APPROVED
            elif staff_initiated:
                raise CampusError(
                    PREREQUISITE_NOT_MET,
                    f"{student_id} has not passed the prerequisites for {unit_code}",
                )
            else:
                status = EnrollmentStatus.PENDING_APPROVAL
            row = self.store.atomic_check_and_insert_enrollment(
                tx,
                student_id=student_id,
                unit_code=unit_code,
                campus=campus,
                term_id=term_id,
                status=status,
                prerequisite_met=met,
                created_at=clockmod.iso(self.clock()),
            )
            if status is EnrollmentStatus.APPROVED:
                self.finance.on_enrollment_approved(tx, row)
            return enrollment_payload(row)

    def _ensure_eligible(self, tx: Tx, student, unit_code: str, term_id: str) -> None:
        # Duplicate check first so a repeat attempt reports DuplicateEnrollment
        # rather than the generic NotEligible.
        live = tx.one(
            "SELECT id FROM enrollments WHERE student_id = ? AND unit_code = ? AND term_id = ? "
            "AND status IN ('PendingApproval','Approved')",
            (student["id"], unit_code, term_id),
        )
        if live is not None:
            raise CampusError(
                DUPLICATE_ENROLLMENT,
                f"student {student['id']} already has a live enrollment in {unit_code} for {term_id}",
            )
        required = {r["unit_code"] for r in self.store.program_requirements(tx, student["program_id"])}
        if unit_code not in required:
            raise CampusError(NOT_ELIGIBLE, f"{unit_code} is not required by {student['program_id']}")
        history = self.store.grade_records(tx, student["id"])
        if unit_code in domain.passed_unit_codes(history):
            raise CampusError(NOT_ELIGIBLE, f"{unit_code} is already completed")
        other_live = tx.one(
            "SELECT id FROM enrollments WHERE student_id = ? AND unit_code = ? "
            "AND status IN ('PendingApproval','Approved')",
            (student["id"], unit_code),
        )
        if other_live is not None:
            raise CampusError(NOT_ELIGIBLE, f"{unit_code} is currently being taken")

    def decide_pending_enrollment(self, identity: Identity | None,
                                  enrollment_id: str, decision: str) -> dict:
        """Department-head decision on a prerequisite-unmet enrollment."""
        approve = _parse_decision(decision)
        decider = identity.person_id if identity is not None else None
        with self.store.write() as tx:
            row = tx.one("SELECT * FROM enrollments WHERE id = ?", (enrollment_id,))
            if row is None:
                raise CampusError(UNKNOWN_ENROLLMENT, f"no enrollment {enrollment_id}")
            if row["status"] != EnrollmentStatus.PENDING_APPROVAL.value:
                raise CampusError(ALREADY_DECIDED, "enrollment is no longer pending")
            target = EnrollmentStatus.APPROVED if approve else EnrollmentStatus.REJECTED
            updated = self.store.update_enrollment_status(tx, enrollment_id, target, decided_by=decider)
            if approve:
                self.finance.on_enrollment_approved(tx, updated)
            return enrollment_payload(updated)

    def drop_unit(self, identity: Identity | None, enrollment_id: str) -> dict:
        """Drop a live enrollment within the term's change window."""
        with self.store.write() as tx:
            row = tx.one("SELECT * FROM enrollments WHERE id = ?", (enrollment_id,))
            if row is None:
                raise CampusError(UNKNOWN_ENROLLMENT, f"no enrollment {enrollment_id}")
            if identity is not None and identity.role is Role.STUDENT:
                if row["student_id"] != identity.person_id:
                    raise CampusError(FORBIDDEN, "students may only drop their own enrollments")
            if row["status"] not in (
                EnrollmentStatus.APPROVED.value, EnrollmentStatus.PENDING_APPROVAL.value
            ):
                raise CampusError(ALREADY_TERMINAL, f"enrollment is {row['status']}")
            term = self.store.term_row(tx, row["term_id"])
            end = date.fromisoformat(term["change_window_end"])
            if self.clock().date() > end:
                raise CampusError(
                    CHANGE_WINDOW_CLOSED,
                    f"change window for {row['term_id']} closed on {end.isoformat()}",
                )
            was_approved = row["status"] == EnrollmentStatus.APPROVED.value
            updated = self.store.update_enrollment_status(tx, enrollment_id, EnrollmentStatus.DROPPED)
            if was_approved:
                self.finance.on_enrollment_dropped(tx, updated)
            return enrollment_payload(updated)

    def list_student_enrollments(self, identity: Identity | None, student_id: str) -> dict:
        """A student's enrollments across terms, newest first. Students see
        only their own; staff may pass any student."""
        ensure_student_scope(identity, student_id)
        with self.store.read() as tx:
            if self.store.student_row(tx, student_id) is None:
                raise CampusError(UNKNOWN_STUDENT, f"no student {student_id}")
            rows = tx.all(
                "SELECT * FROM enrollments WHERE student_id = ? "
                "ORDER BY created_at DESC, id DESC",
                (student_id,),
            )
            return {"enrollments": [enrollment_payload(r) for r in rows]}

    def list_pending_enrollments(self, identity: Identity | None) -> dict:
        with self.store.read() as tx:
            rows = tx.all(
                "SELECT e.*, s.name AS student_name FROM enrollments e "
                "JOIN students s ON s.id = e.student_id "
                "WHERE e.status = 'PendingApproval' ORDER BY e.created_at, e.id"
            )
            out = []
            for row in rows:
                payload = enrollment_payload(row)
                payload["student_name"] = row["student_name"]
                out.append(payload)
            return {"enrollments": out}

    # -- program / major changes -------------------------------------------

    def request_program_change(self, identity: Identity | None, student_id: str,
                               new_program: str | None = None,
                               new_major: str | None = None) -> dict:
        ensure_student_scope(identity, student_id)
        if not new_program and not new_major:
            raise CampusError(EMPTY_REQUEST, "give a new program, a new major, or both")
        with self.store.write() as tx:
            self._active_student(tx, student_id)
            if new_program and tx.one("SELECT id FROM programs WHERE id = ?", (new_program,)) is None:
                raise CampusError(UNKNOWN_PROGRAM, f"no program {new_program}")
            request_id = new_id()
            tx.execute(
                "INSERT INTO program_change_requests "
                "(id, student_id, new_program, new_major, status, decided_by, created_at) "
                "VALUES (?,?,?,?, 'Submitted', NULL, ?)",
                (request_id, student_id, new_program, new_major, clockmod.iso(self.clock())),
            )
            return self._change_request_payload(tx.one(
                "SELECT * FROM program_change_requests WHERE id = ?", (request_id,)
            ))

    def decide_program_change(self, identity: Identity | None, request_id: str,
                              decision: str) -> dict:
        """Approve updates the student's program/major atomically with the request."""
        approve = _parse_decision(decision)
        decider = identity.person_id if identity is not None else None
        with self.store.write() as tx:
            row = tx.one("SELECT * FROM program_change_requests WHERE id = ?", (request_id,))
            if row is None:
                raise CampusError(UNKNOWN_REQUEST, f"no program change request {request_id}")
            if row["status"] != RequestStatus.SUBMITTED.value:
                raise CampusError(ALREADY_DECIDED, "request is no longer pending")
            new_status = RequestStatus.APPROVED if approve else RequestStatus.REJECTED
            if approve:
                if row["new_program"]:
                    tx.execute(
                        "UPDATE students SET program_id = ? WHERE id = ?",
                        (row["new_program"], row["student_id"]),
                    )
                if row["new_major"]:
                    tx.execute(
                        "UPDATE students SET major = ? WHERE id = ?",
                        (row["new_major"], row["student_id"]),
                    )
            tx.execute(
                "UPDATE program_change_requests SET status = ?, decided_by = ? WHERE id = ?",
                (new_status.value, decider, request_id),
            )
            return self._change_request_payload(tx.one(
                "SELECT * FROM program_change_requests WHERE id = ?", (request_id,)
            ))

    def list_program_change_requests(self, identity: Identity | None) -> dict:
        with self.store.read() as tx:
            rows = tx.all(
                "SELECT r.*, s.name AS student_name FROM program_change_requests r "
                "JOIN students s ON s.id = r.student_id "
                "WHERE r.status = 'Submitted' ORDER BY r.created_at, r.id"
            )
            out = []
            for row in rows:
                payload = self._change_request_payload(row)
                payload["student_name"] = row["student_name"]
                out.append(payload)
            return {"requests": out}

    # -- helpers ----------------------------------------------------------

    def _active_student(self, tx: Tx, student_id: str):
        student = self.store.student_row(tx, student_id)
        if student is None:
            raise CampusError(UNKNOWN_STUDENT, f"no student {student_id}")
        if student["status"] != StudentStatus.ACTIVE.value:
            raise CampusError(STUDENT_NOT_ACTIVE, f"student {student_id} is {student['status']}")
        return student

    def _ensure_term_open(self, tx: Tx, term_id: str) -> None:
        """Enrollment actions are limited to the current term and its successor."""
        term = self.store.term_row(tx, term_id)
        if term is None:
            raise CampusError(UNKNOWN_TERM, f"no term {term_id}")
        current = self.store.current_term_row(tx)
        if current is None:
            raise CampusError(TERM_NOT_OPEN, "no current term is configured")
        if term["id"] == current["id"]:
            return
        next_year, next_index = domain.term_successor(
            current["year"], TermIndex(current["term_index"])
        )
        if (term["year"], term["term_index"]) == (next_year, next_index.value):
            return
        raise CampusError(
            TERM_NOT_OPEN, f"term {term_id} is not open for enrollment"
        )

    @staticmethod
    def _change_request_payload(row) -> dict:
        return {
            "id": row["id"],
            "student_id": row["student_id"],
            "new_program": row["new_program"],
            "new_major": row["new_major"],
            "status": row["status"],
            "decided_by": row["decided_by"],
            "created_at": row["created_at"],
        }


def _parse_decision(decision: str) -> bool:
    if decision == "Approve":
        return True
    if decision == "Reject":
        return False
    raise validation_error(["decision"], "decision must be Approve or Reject")
