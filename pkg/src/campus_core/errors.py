"""Error catalog shared by every tier.

Every failure that crosses a module or tier boundary is a CampusError with a
stable code from CATALOG. The wire layer refuses to emit anything else, so
clients can rely on the code set being closed.
"""

from __future__ import annotations

# Authentication / sessions
INVALID_CREDENTIALS = "InvalidCredentials"
ACCOUNT_INACTIVE = "AccountInactive"
UNKNOWN_SESSION = "UnknownSession"
SESSION_EXPIRED = "SessionExpired"
FORBIDDEN = "Forbidden"
CREDENTIAL_EXISTS = "CredentialExists"
UNKNOWN_PERSON = "UnknownPerson"

# Validation / lookup
VALIDATION_ERROR = "ValidationError"
UNKNOWN_PROGRAM = "UnknownProgram"
UNKNOWN_UNIT = "UnknownUnit"
UNKNOWN_TERM = "UnknownTerm"
UNKNOWN_STUDENT = "UnknownStudent"
UNKNOWN_OFFERING = "UnknownOffering"
UNKNOWN_ENROLLMENT = "UnknownEnrollment"
UNKNOWN_APPLICATION = "UnknownApplication"
UNKNOWN_REQUEST = "UnknownRequest"
UNKNOWN_FILTER = "UnknownFilter"

# Admissions
ALREADY_DECIDED = "AlreadyDecided"
MISSING_REASON = "MissingReason"

# Enrollment
DUPLICATE_ENROLLMENT = "DuplicateEnrollment"
INACTIVE_OFFERING = "InactiveOffering"
NOT_ELIGIBLE = "NotEligible"
PREREQUISITE_NOT_MET = "PrerequisiteNotMet"
TERM_NOT_OPEN = "TermNotOpen"
CHANGE_WINDOW_CLOSED = "ChangeWindowClosed"
ALREADY_TERMINAL = "AlreadyTerminal"
EMPTY_REQUEST = "EmptyRequest"
STUDENT_NOT_ACTIVE = "StudentNotActive"

# Records / graduation
NOT_APPROVED = "NotApproved"
GRADE_EXISTS = "GradeExists"
MALFORMED_FILE = "MalformedFile"
REQUIREMENTS_OUTSTANDING = "RequirementsOutstanding"
DUPLICATE_REQUEST = "DuplicateRequest"
NO_LONGER_ELIGIBLE = "NoLongerEligible"

# Finance
MISSING_FEE = "MissingFee"
OVERPAYMENT = "Overpayment"
INVALID_CARD = "InvalidCard"
INVOICE_CLOSED = "InvoiceClosed"
UNKNOWN_INVOICE = "UnknownInvoice"

# Storage
STORAGE_UNAVAILABLE = "StorageUnavailable"
CORRUPT_SCHEMA = "CorruptSchema"
REFERENTIAL_VIOLATION = "ReferentialViolation"
DUPLICATE_KEY = "DuplicateKey"

# Tier protocol / transport
UNKNOWN_OPERATION = "UnknownOperation"
MALFORMED_PAYLOAD = "MalformedPayload"
PORT_IN_USE = "PortInUse"
APP_TIER_UNAVAILABLE = "AppTierUnavailable"
INTERNAL_ERROR = "InternalError"

CATALOG = frozenset({
    INVALID_CREDENTIALS, ACCOUNT_INACTIVE, UNKNOWN_SESSION, SESSION_EXPIRED,
    FORBIDDEN, CREDENTIAL_EXISTS, UNKNOWN_PERSON,
    VALIDATION_ERROR, UNKNOWN_PROGRAM, UNKNOWN_UNIT, UNKNOWN_TERM,
    UNKNOWN_STUDENT, UNKNOWN_OFFERING, UNKNOWN_ENROLLMENT,
    UNKNOWN_APPLICATION, UNKNOWN_REQUEST, UNKNOWN_FILTER,
    ALREADY_DECIDED, MISSING_REASON,
    DUPLICATE_ENROLLMENT, INACTIVE_OFFERING, NOT_ELIGIBLE,
    PREREQUISITE_NOT_MET, TERM_NOT_OPEN, CHANGE_WINDOW_CLOSED,
    ALREADY_TERMINAL, EMPTY_REQUEST, STUDENT_NOT_ACTIVE,
    NOT_APPROVED, GRADE_EXISTS, MALFORMED_FILE, REQUIREMENTS_OUTSTANDING,
    DUPLICATE_REQUEST, NO_LONGER_ELIGIBLE,
    MISSING_FEE, OVERPAYMENT, INVALID_CARD, INVOICE_CLOSED, UNKNOWN_INVOICE,
    STORAGE_UNAVAILABLE, CORRUPT_SCHEMA, REFERENTIAL_VIOLATION, DUPLICATE_KEY,
    UNKNOWN_OPERATION, MALFORMED_PAYLOAD, PORT_IN_USE, APP_TIER_UNAVAILABLE,
    INTERNAL_ERROR,
})


class CampusError(Exception):
    """A business or infrastructure failure with a stable, catalogued code.

    `details` is an optional JSON-able mapping with structured context
    (e.g. the missing field names for a ValidationError).
    """

    def __init__(self, code: str, message: str, details: dict | None = None):
        if code not in CATALOG:
            raise ValueError(f"error code not in catalog: {code}")
        super().__init__(message)
        self.code = code
        self.message = message
        self.details = details or {}

    def to_payload(self) -> dict:
        payload: dict = {"error_code": self.code, "message": self.message}
        if self.details:
            payload["details"] = self.details
        return payload


def validation_error(fields: list[str], message: str | None = None) -> CampusError:
    return CampusError(
        VALIDATION_ERROR,
        message or f"invalid or missing fields: {', '.join(fields)}",
        {"fields": fields},
    )
