"""Login, sessions, credentials, profile updates, and the role/operation
access matrix.

Sessions and credentials live behind the tier boundary with the rest of the
business state; the web tier only ever sees the opaque token. Password hashes
use salted PBKDF2-HMAC-SHA256 and raw passwords are never persisted or logged.
"""

from __future__ import annotations

import hashlib
import hmac
import logging
import secrets
from dataclasses import dataclass
from datetime import timedelta
from typing import Mapping

from . import clock as clockmod
from .domain import Role, StudentStatus
from .errors import (
    ACCOUNT_INACTIVE,
    CampusError,
    CREDENTIAL_EXISTS,
    FORBIDDEN,
    INVALID_CREDENTIALS,
    SESSION_EXPIRED,
    UNKNOWN_PERSON,
    UNKNOWN_SESSION,
    UNKNOWN_STUDENT,
    validation_error,
)
from .storage import Store, Tx

logger = logging.getLogger(__name__)

ALL_ROLES = frozenset({Role.STUDENT, Role.ACADEMIC_STAFF, Role.ADMIN_STAFF})
STAFF_ROLES = frozenset({Role.ACADEMIC_STAFF, Role.ADMIN_STAFF})
STUDENT_ONLY = frozenset({Role.STUDENT})
ACADEMIC_ONLY = frozenset({Role.ACADEMIC_STAFF})
ADMIN_ONLY = frozenset({Role.ADMIN_STAFF})

# Role assignments for every operation the application server exposes.
# Ownership restrictions (a student may only touch their own records) are
# enforced inside the operations; this table is the role-level gate.
OPERATION_ACCESS: dict[str, frozenset[Role]] = {
    "ping": ALL_ROLES,
    "login": ALL_ROLES,
    "logout": ALL_ROLES,
    "submit_application": ALL_ROLES,
    "view_profile": ALL_ROLES,
    "update_profile": ALL_ROLES,
    "access_matrix": ALL_ROLES,
    "external_links": ALL_ROLES,
    "list_terms": ALL_ROLES,
    "list_campuses": ALL_ROLES,
    "list_units": ALL_ROLES,
    "view_timetable": ALL_ROLES,
    "view_transcript": ALL_ROLES,
    "program_details": ALL_ROLES,
    "view_coursework": ALL_ROLES,
    "view_invoices": ALL_ROLES,
    "eligible_units": ALL_ROLES,
    "list_student_enrollments": ALL_ROLES,
    "enroll": ALL_ROLES,
    "drop_unit": ALL_ROLES,
    "pay_invoice": STUDENT_ONLY,
    "apply_graduation": STUDENT_ONLY,
    "request_program_change": STUDENT_ONLY,
    "submit_coursework": ACADEMIC_ONLY,
    "import_coursework_csv": ACADEMIC_ONLY,
    "record_final_grade": STAFF_ROLES,
    "class_list": STAFF_ROLES,
    "student_lookup": STAFF_ROLES,
    "activate_offering": ADMIN_ONLY,
    "list_pending_applications": ADMIN_ONLY,
    "decide_application": ADMIN_ONLY,
    "list_pending_enrollments": ADMIN_ONLY,
    "decide_pending_enrollment": ADMIN_ONLY,
    "list_graduation_requests": ADMIN_ONLY,
    "decide_graduation": ADMIN_ONLY,
    "list_program_change_requests": ADMIN_ONLY,
    "decide_program_change": ADMIN_ONLY,
    "generate_report": ADMIN_ONLY,
}

# Reachable without a session: the login form and the public admission form
# (plus the health probe).
PUBLIC_OPERATIONS = frozenset({"ping", "login", "submit_application"})

CONTACT_FIELDS = ("postal_address", "residential_address", "home_phone", "mobile")

_PASSWORD_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789"
_PASSWORD_LENGTH = 12
_TOKEN_BYTES = 24  # 192 bits
_UNIFORM_LOGIN_ERROR = "invalid username or password"


@dataclass(frozen=True)
class Identity:
    person_id: str
    role: Role


class AccessMatrix:
    """Total (role, operation) -> allow/deny map; absent means deny."""

    def __init__(self, access: Mapping[str, frozenset[Role]], public: frozenset[str]):
        self.entries: dict[tuple[Role, str], bool] = {}
        for op, roles in access.items():
            for role in ALL_ROLES:
                self.entries[(role, op)] = role in roles
        self.public = public

    def allows(self, role: Role, operation: str) -> bool:
        return self.entries.get((role, operation), False)

    def operations(self) -> list[str]:
        return sorted({op for _, op in self.entries})

    def describe(self) -> dict:
        ops = self.operations()
        return {
            "roles": sorted(r.value for r in ALL_ROLES),
            "operations": ops,
            "public_operations": sorted(self.public),
            "entries": {
                op: {role.value: self.entries[(role, op)] for role in ALL_ROLES}
                for op in ops
            },
        }


def build_access_matrix() -> AccessMatrix:
    return AccessMatrix(OPERATION_ACCESS, PUBLIC_OPERATIONS)


def hash_password(password: str, iterations: int, salt: bytes | None = None) -> str:
    salt = salt if salt is not None else secrets.token_bytes(16)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, iterations)
    return f"pbkdf2-sha256${iterations}${salt.hex()}${digest.hex()}"

_DUMMY_HASH = hash_password("*", 60_000, b"\x00" * 16)


def verify_password(password: str, stored: str) -> bool:
    try:
        scheme, iterations, salt_hex, digest_hex = stored.split("$")
        if scheme != "pbkdf2-sha256":
            return False
        expected = bytes.fromhex(digest_hex)
        actual = hashlib.pbkdf2_hmac(
            "sha256", password.encode("utf-8"), bytes.fromhex(salt_hex), int(iterations)
        )
    except (ValueError, TypeError):
        return False
    return hmac.compare_digest(actual, expected)


def ensure_student_scope(identity: Identity | None, student_id: str) -> None:
    """Students may only act on their own records; staff pass through."""
    if identity is not None and identity.role is Role.STUDENT and identity.person_id != student_id:
        raise CampusError(FORBIDDEN, "students may only access their own records")


class AuthService:
    def __init__(
        self,
        store: Store,
        session_ttl_hours: float = 8.0,
        clock: clockmod.Clock = clockmod.utc_now,
        pbkdf2_iterations: int = 60_000,
    ):
        self.store = store
        self.session_ttl = timedelta(hours=session_ttl_hours)
        self.clock = clock
        self.iterations = pbkdf2_iterations
        self.matrix = build_access_matrix()

    # -- login / logout ------------------------------------------------

    def login(self, username: str, password: str) -> dict:
        """Verify credentials and open a session.

        Unknown username and wrong password produce byte-identical errors so
        accounts cannot be enumerated.
        """
        with self.store.read() as tx:
            cred = tx.one("SELECT * FROM credentials WHERE username = ?", (username,))
            if cred is None:
                verify_password(password, _DUMMY_HASH)  # equalize timing
                raise CampusError(INVALID_CREDENTIALS, _UNIFORM_LOGIN_ERROR)
            if not verify_password(password, cred["password_hash"]):
                raise CampusError(INVALID_CREDENTIALS, _UNIFORM_LOGIN_ERROR)
            identity = self._resolve_person(tx, cred["person_id"])

        now = self.clock()
        token = secrets.token_urlsafe(_TOKEN_BYTES)
        expires = now + self.session_ttl
        with self.store.write() as tx:
            tx.execute(
                "INSERT INTO sessions (token, person_id, role, created_at, expires_at) "
                "VALUES (?,?,?,?,?)",
                (token, identity.person_id, identity.role.value,
                 clockmod.iso(now), clockmod.iso(expires)),
            )
        return {
            "token": token,
            "person_id": identity.person_id,
            "role": identity.role.value,
            "menu": _menu_for(identity.role),
            "must_change": bool(cred["must_change"]),
            "expires_at": clockmod.iso(expires),
        }

    def _resolve_person(self, tx: Tx, person_id: str) -> Identity:
        staff = self.store.staff_row(tx, person_id)
        if staff is not None:
            return Identity(person_id, Role(staff["role"]))
        student = self.store.student_row(tx, person_id)
        if student is None:
            raise CampusError(UNKNOWN_PERSON, f"credential references missing person {person_id}")
        if student["status"] in (StudentStatus.APPLICANT.value, StudentStatus.WITHDRAWN.value):
            raise CampusError(ACCOUNT_INACTIVE, "account is not active")
        return Identity(person_id, Role.STUDENT)

    def logout(self, token: str) -> dict:
        with self.store.write() as tx:
            row = tx.one("SELECT expires_at FROM sessions WHERE token = ?", (token,))
            if row is not None:
                tx.execute("DELETE FROM sessions WHERE token = ?", (token,))
        # an expired token is as good as gone
        if row is None or clockmod.parse_iso(row["expires_at"]) < self.clock():
            raise CampusError(UNKNOWN_SESSION, "no such session")
        return {"ok": True}

    # -- authorization ---------------------------------------------------

    def authorize(self, token: str | None, operation: str) -> Identity:
        """Resolve a session token and check the access matrix for `operation`.

        Valid sessions slide: each authorized call pushes expiry out by the
        configured TTL.
        """
        if not token:
            raise CampusError(UNKNOWN_SESSION, "missing session token")
        now = self.clock()
        with self.store.write() as tx:
            row = tx.one("SELECT * FROM sessions WHERE token = ?", (token,))
            if row is None:
                raise CampusError(UNKNOWN_SESSION, "no such session")
            if clockmod.parse_iso(row["expires_at"]) < now:
                tx.execute("DELETE FROM sessions WHERE token = ?", (token,))
                raise CampusError(SESSION_EXPIRED, "session expired")
            identity = Identity(row["person_id"], Role(row["role"]))
            if not self.matrix.allows(identity.role, operation):
                raise CampusError(
                    FORBIDDEN, f"role {identity.role.value} may not call {operation}"
                )
            tx.execute(
                "UPDATE sessions SET expires_at = ? WHERE token = ?",
                (clockmod.iso(now + self.session_ttl), token),
            )
        return identity

    # -- credentials -----------------------------------------------------

    def issue_credentials(self, person_id: str, tx: Tx | None = None) -> tuple[str, str]:
        """Create a credential; the plaintext password is returned exactly once."""
        if tx is not None:
            return self._issue_in_tx(tx, person_id)
        with self.store.write() as wtx:
            return self._issue_in_tx(wtx, person_id)

    def _issue_in_tx(self, tx: Tx, person_id: str) -> tuple[str, str]:
        if self.store.student_row(tx, person_id) is None and self.store.staff_row(tx, person_id) is None:
            raise CampusError(UNKNOWN_PERSON, f"no person {person_id}")
        if tx.one("SELECT person_id FROM credentials WHERE person_id = ?", (person_id,)):
            raise CampusError(CREDENTIAL_EXISTS, f"{person_id} already has a credential")
        username = person_id.lower()
        password = "".join(secrets.choice(_PASSWORD_ALPHABET) for _ in range(_PASSWORD_LENGTH))
        tx.execute(
            "INSERT INTO credentials (person_id, username, password_hash, must_change) "
            "VALUES (?,?,?,1)",
            (person_id, username, hash_password(password, self.iterations)),
        )
        return username, password

    def reset_password(self, person_id: str) -> tuple[str, str]:
        """Ops action: reissue (or first-issue) the credential for a person."""
        with self.store.write() as tx:
            existing = tx.one("SELECT username FROM credentials WHERE person_id = ?", (person_id,))
            if existing is None:
                return self._issue_in_tx(tx, person_id)
            password = "".join(
                secrets.choice(_PASSWORD_ALPHABET) for _ in range(_PASSWORD_LENGTH)
            )
            tx.execute(
                "UPDATE credentials SET password_hash = ?, must_change = 1 WHERE person_id = ?",
                (hash_password(password, self.iterations), person_id),
            )
            return existing["username"], password

    # -- profiles ----------------------------------------------------------

    def view_profile(self, identity: Identity) -> dict:
        with self.store.read() as tx:
            return self._profile(tx, identity)

    def update_profile(self, identity: Identity, fields: Mapping[str, object]) -> dict:
        """Update the caller's own contact fields, and nothing else."""
        extra = set(fields) - set(CONTACT_FIELDS)
        if extra:
            raise CampusError(
                FORBIDDEN, f"fields not updatable via profile: {', '.join(sorted(extra))}"
            )
        if "mobile" in fields and not str(fields["mobile"]).strip():
            raise validation_error(["mobile"], "mobile may not be empty")
        updates = {k: str(v) for k, v in fields.items()}
        table = "students" if identity.role is Role.STUDENT else "staff"
        with self.store.write() as tx:
            row = tx.one(f"SELECT id FROM {table} WHERE id = ?", (identity.person_id,))
            if row is None:
                raise CampusError(UNKNOWN_STUDENT, f"no record for {identity.person_id}")
            if updates:
                assignments = ", ".join(f"{k} = ?" for k in updates)
                tx.execute(
                    f"UPDATE {table} SET {assignments} WHERE id = ?",
                    (*updates.values(), identity.person_id),
                )
            return self._profile(tx, identity)

    def _profile(self, tx: Tx, identity: Identity) -> dict:
        if identity.role is Role.STUDENT:
            row = self.store.student_row(tx, identity.person_id)
            if row is None:
                raise CampusError(UNKNOWN_STUDENT, f"no student {identity.person_id}")
            return student_payload(row)
        row = self.store.staff_row(tx, identity.person_id)
        if row is None:
            raise CampusError(UNKNOWN_PERSON, f"no staff record {identity.person_id}")
        return staff_payload(row)


def student_payload(row) -> dict:
    return {
        "kind": "student",
        "id": row["id"],
        "name": row["name"],
        "postal_address": row["postal_address"],
        "residential_address": row["residential_address"],
        "home_phone": row["home_phone"],
        "mobile": row["mobile"],
        "program_id": row["program_id"],
        "major": row["major"],
        "citizenship": row["citizenship"],
        "status": row["status"],
    }


def staff_payload(row) -> dict:
    return {
        "kind": "staff",
        "id": row["id"],
        "name": row["name"],
        "role": row["role"],
        "department": row["department"],
        "campus": row["campus"],
        "postal_address": row["postal_address"],
        "residential_address": row["residential_address"],
        "home_phone": row["home_phone"],
        "mobile": row["mobile"],
    }


def _menu_for(role: Role) -> str:
    return {
        Role.STUDENT: "student",
        Role.ACADEMIC_STAFF: "academic",
        Role.ADMIN_STAFF: "admin",
    }[role]
