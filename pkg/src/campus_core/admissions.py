"""Online application intake and the approve/reject decision workflow.

Approving an application is one atomic step: the student record, the
credential, and the offer letter all land together or not at all. Letters
are rendered from the plain-text templates in the configured letters
directory and persisted alongside the decision.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import clock as clockmod
from .auth import AuthService, Identity
from .domain import RequestStatus, StudentStatus
from .errors import (
    ALREADY_DECIDED,
    CampusError,
    INTERNAL_ERROR,
    MISSING_REASON,
    UNKNOWN_APPLICATION,
    UNKNOWN_PROGRAM,
    validation_error,
)
from .ids import new_id
from .storage import Store, Tx

REQUIRED_FORM_FIELDS = ("applicant_name", "proposed_program", "citizenship")
OPTIONAL_FORM_FIELDS = ("contact", "funding", "qualifications", "work_experience")

DEFAULT_OFFER_TEMPLATE = """Dear {{name}},

Congratulations. Your application for admission has been approved.

Your account details are:

    username: {{username}}
    password: {{password}}

Please log in and change your password at the first opportunity.

Admissions Office
"""

DEFAULT_DECLINE_TEMPLATE = """Dear {{name}},

We regret to inform you that your application for admission has been
declined for the following reason:

    {{reason}}

You are welcome to apply again in a future intake.

Admissions Office
"""


def _render(template: str, values: dict[str, str]) -> str:
    body = template
    for key, value in values.items():
        body = body.replace("{{" + key + "}}", value)
    return body


class AdmissionsService:
    def __init__(self, store: Store, auth: AuthService,
                 letters_dir: Path | None = None,
                 clock: clockmod.Clock = clockmod.utc_now):
        self.store = store
        self.auth = auth
        self.letters_dir = Path(letters_dir) if letters_dir else None
        self.clock = clock
        # Test seam: runs inside the approval transaction, between creating
        # the student and issuing credentials.
        self._mid_approval_fault = lambda: None

    # -- intake ------------------------------------------------------------

    def submit_application(self, form: dict) -> dict:
        """Public admission form. Validation reports every missing field at once."""
        missing = [f for f in REQUIRED_FORM_FIELDS if not str(form.get(f) or "").strip()]
        if missing:
            raise validation_error(missing)
        attachments = _normalize_attachments(form.get("attachments") or [])
        with self.store.write() as tx:
            program = tx.one("SELECT id FROM programs WHERE id = ?", (form["proposed_program"],))
            if program is None:
                raise CampusError(UNKNOWN_PROGRAM, f"no program {form['proposed_program']}")
            application_id = new_id()
            tx.execute(
                "INSERT INTO applications (id, applicant_name, contact, proposed_program,"
                " citizenship, funding, qualifications, work_experience, attachments, status,"
                " created_at) VALUES (?,?,?,?,?,?,?,?,?, 'Submitted', ?)",
                (
                    application_id,
                    str(form["applicant_name"]).strip(),
                    str(form.get("contact") or ""),
                    form["proposed_program"],
                    str(form["citizenship"]).strip(),
                    str(form.get("funding") or ""),
                    str(form.get("qualifications") or ""),
                    str(form.get("work_experience") or ""),
                    json.dumps(attachments),
                    clockmod.iso(self.clock()),
                ),
            )
        return {"application_id": application_id, "status": RequestStatus.SUBMITTED.value}

    def list_pending(self, identity: Identity | None) -> dict:
        with self.store.read() as tx:
            rows = tx.all(
                "SELECT * FROM applications WHERE status = 'Submitted' ORDER BY created_at, id"
            )
            return {"applications": [application_payload(r) for r in rows]}

    # -- decisions -----------------------------------------------------------

    def decide(self, identity: Identity | None, application_id: str,
               decision: str, reason: str | None = None) -> dict:
        """Approve or reject a submitted application.

        Approve: creates the Active student, issues credentials, and renders
        the offer letter carrying them, all in one transaction. Reject:
        requires a reason and renders the decline letter containing it.
        """
        if decision not in ("Approve", "Reject"):
            raise validation_error(["decision"], "decision must be Approve or Reject")
        decider = identity.person_id if identity is not None else None
        with self.store.write() as tx:
            row = tx.one("SELECT * FROM applications WHERE id = ?", (application_id,))
            if row is None:
                raise CampusError(UNKNOWN_APPLICATION, f"no application {application_id}")
            if row["status"] != RequestStatus.SUBMITTED.value:
                raise CampusError(ALREADY_DECIDED, "application has already been decided")

            if decision == "Reject":
                if not (reason or "").strip():
                    raise CampusError(MISSING_REASON, "a rejection requires a reason")
                letter = self._render_letter(
                    tx, "Decline", row["applicant_name"],
                    {"name": row["applicant_name"], "reason": reason.strip()},
                )
                tx.execute(
                    "UPDATE applications SET status = 'Rejected', decision_reason = ?,"
                    " decided_by = ? WHERE id = ?",
                    (reason.strip(), decider, application_id),
                )
                updated = tx.one("SELECT * FROM applications WHERE id = ?", (application_id,))
                return {"application": application_payload(updated), "letter": letter}

            student_id = self._next_student_id(tx)
            tx.execute(
                "INSERT INTO students (id, name, postal_address, citizenship, program_id, status) "
                "VALUES (?,?,?,?,?,?)",
                (student_id, row["applicant_name"], row["contact"], row["citizenship"],
                 row["proposed_program"], StudentStatus.ACTIVE.value),
            )
            self._mid_approval_fault()
            username, password = self.auth.issue_credentials(student_id, tx=tx)
            letter = self._render_letter(
                tx, "Offer", row["applicant_name"],
                {"name": row["applicant_name"], "username": username, "password": password},
                must_contain_once=(username, password),
            )
            tx.execute(
                "UPDATE applications SET status = 'Approved', decided_by = ?, student_id = ? "
                "WHERE id = ?",
                (decider, student_id, application_id),
            )
            updated = tx.one("SELECT * FROM applications WHERE id = ?", (application_id,))
            return {
                "application": application_payload(updated),
                "letter": letter,
                "student_id": student_id,
            }

    # -- internals -----------------------------------------------------------

    def _next_student_id(self, tx: Tx) -> str:
        row = tx.one(
            "SELECT MAX(CAST(substr(id, 2) AS INTEGER)) AS top FROM students WHERE id LIKE 'S%'"
        )
        candidate = (row["top"] or 0) + 1
        while True:
            student_id = f"S{candidate:06d}"
            taken = (
                self.store.student_row(tx, student_id) is not None
                or self.store.staff_row(tx, student_id) is not None
            )
            if not taken:
                return student_id
            candidate += 1

    def _template(self, kind: str) -> str:
        filename = "offer.txt" if kind == "Offer" else "decline.txt"
        if self.letters_dir is not None:
            path = self.letters_dir / filename
            if path.exists():
                return path.read_text(encoding="utf-8")
        return DEFAULT_OFFER_TEMPLATE if kind == "Offer" else DEFAULT_DECLINE_TEMPLATE

    def _render_letter(self, tx: Tx, kind: str, recipient: str, values: dict[str, str],
                       must_contain_once: tuple[str, ...] = ()) -> dict:
        body = _render(self._template(kind), values)
        for value in must_contain_once:
            if body.count(value) != 1:
                raise CampusError(
                    INTERNAL_ERROR,
                    f"{kind.lower()} letter template must mention each credential exactly once",
                )
        letter_id = new_id()
        rendered_at = clockmod.iso(self.clock())
        tx.execute(
            "INSERT INTO letters (id, kind, recipient, body, rendered_at) VALUES (?,?,?,?,?)",
            (letter_id, kind, recipient, body, rendered_at),
        )
        return {"id": letter_id, "kind": kind, "recipient": recipient,
                "body": body, "rendered_at": rendered_at}


def application_payload(row) -> dict:
    return {
        "id": row["id"],
        "applicant_name": row["applicant_name"],
        "contact": row["contact"],
        "proposed_program": row["proposed_program"],
        "citizenship": row["citizenship"],
        "funding": row["funding"],
        "qualifications": row["qualifications"],
        "work_experience": row["work_experience"],
        "attachments": json.loads(row["attachments"]),
        "status": row["status"],
        "decision_reason": row["decision_reason"],
        "decided_by": row["decided_by"],
        "student_id": row["student_id"],
        "created_at": row["created_at"],
    }


def _normalize_attachments(raw) -> list[dict]:
    if not isinstance(raw, list):
        raise validation_error(["attachments"], "attachments must be a list")
    out = []
    for item in raw:
        if not isinstance(item, dict) or not item.get("name"):
            raise validation_error(["attachments"], "each attachment needs a name")
        if item.get("digest"):
            digest = str(item["digest"])
        elif "content" in item:
            digest = hashlib.sha256(str(item["content"]).encode("utf-8")).hexdigest()
        else:
            raise validation_error(["attachments"], "attachment needs content or digest")
        out.append({"name": str(item["name"]), "digest": digest})
    return out
