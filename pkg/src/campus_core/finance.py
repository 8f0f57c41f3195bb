"""Per-term invoices fed by approved enrollments, and simulated card payments.

Amounts are decimal strings with two fraction digits end to end; arithmetic
happens in Decimal. Only the last four digits of a card number are ever
stored or returned.
"""

from __future__ import annotations

import logging
from decimal import Decimal, InvalidOperation

from . import clock as clockmod
from .auth import Identity, ensure_student_scope
from .domain import InvoiceStatus, Role
from .errors import (
    CampusError,
    FORBIDDEN,
    INVALID_CARD,
    INVOICE_CLOSED,
    OVERPAYMENT,
    UNKNOWN_INVOICE,
    UNKNOWN_STUDENT,
    validation_error,
)
from .ids import new_id
from .storage import Store, Tx

logger = logging.getLogger(__name__)

TWO_PLACES = Decimal("0.01")


def money(value) -> Decimal:
    try:
        amount = Decimal(str(value)).quantize(TWO_PLACES)
    except (InvalidOperation, ValueError) as exc:
        raise validation_error(["amount"], f"bad amount: {value!r}") from exc
    return amount


def money_str(amount: Decimal) -> str:
    return str(amount.quantize(TWO_PLACES))


def luhn_valid(number: str) -> bool:
    """Simulated gateway's single validation: digits 12-19 long, Luhn-clean."""
    if not number.isdigit() or not 12 <= len(number) <= 19:
        return False
    total = 0
    for i, ch in enumerate(reversed(number)):
        d = int(ch)
        if i % 2 == 1:
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return total % 10 == 0


class FinanceService:
    def __init__(self, store: Store, clock: clockmod.Clock = clockmod.utc_now):
        self.store = store
        self.clock = clock

    # -- enrollment hooks (run inside the enrollment transaction) -------

    def on_enrollment_approved(self, tx: Tx, enrollment) -> None:
        """Add the unit's fee to the student's open invoice for the term.

        A unit missing from the fee schedule does not fail the enrollment;
        it is logged for ops attention and no line is added.
        """
        fee = tx.one("SELECT amount FROM fees WHERE unit_code = ?", (enrollment["unit_code"],))
        if fee is None:
            logger.warning(
                "no fee row for unit %s; enrollment %s left unbilled",
                enrollment["unit_code"], enrollment["id"],
            )
            return
        invoice = tx.one(
            "SELECT * FROM invoices WHERE student_id = ? AND term_id = ? AND status = 'Open'",
            (enrollment["student_id"], enrollment["term_id"]),
        )
        if invoice is None:
            invoice_id = new_id()
            tx.execute(
                "INSERT INTO invoices (id, student_id, term_id, status, created_at) "
                "VALUES (?,?,?,'Open',?)",
                (invoice_id, enrollment["student_id"], enrollment["term_id"],
                 clockmod.iso(self.clock())),
            )
        else:
            invoice_id = invoice["id"]
        tx.execute(
            "INSERT INTO invoice_lines (invoice_id, unit_code, amount) VALUES (?,?,?) "
            "ON CONFLICT(invoice_id, unit_code) DO UPDATE SET amount = excluded.amount",
            (invoice_id, enrollment["unit_code"], fee["amount"]),
        )

    def on_enrollment_dropped(self, tx: Tx, enrollment) -> None:
        """Remove the unit's line from the open invoice, if conservation allows.

        Refunds are out of scope, so a line is only removed while recorded
        payments still fit under the reduced total.
        """
        invoice = tx.one(
            "SELECT * FROM invoices WHERE student_id = ? AND term_id = ? AND status = 'Open'",
            (enrollment["student_id"], enrollment["term_id"]),
        )
        if invoice is None:
            return
        line = tx.one(
            "SELECT * FROM invoice_lines WHERE invoice_id = ? AND unit_code = ?",
            (invoice["id"], enrollment["unit_code"]),
        )
        if line is None:
            return
        total = self._total(tx, invoice["id"]) - Decimal(line["amount"])
        paid = self._paid(tx, invoice["id"])
        if paid > total:
            logger.warning(
                "keeping billed line %s on invoice %s: %s already paid against reduced total %s",
                enrollment["unit_code"], invoice["id"], money_str(paid), money_str(total),
            )
            return
        tx.execute(
            "DELETE FROM invoice_lines WHERE invoice_id = ? AND unit_code = ?",
            (invoice["id"], enrollment["unit_code"]),
        )
        if total == 0 and paid == 0:
            tx.execute("DELETE FROM payments WHERE invoice_id = ?", (invoice["id"],))
            tx.execute("DELETE FROM invoices WHERE id = ?", (invoice["id"],))

    # -- student-facing operations ----------------------------------------

    def view_invoices(self, identity: Identity | None, student_id: str) -> dict:
        if identity is not None and identity.role is Role.STUDENT:
            ensure_student_scope(identity, student_id)
        with self.store.read() as tx:
            if self.store.student_row(tx, student_id) is None:
                raise CampusError(UNKNOWN_STUDENT, f"no student {student_id}")
            rows = tx.all(
                "SELECT i.* FROM invoices i JOIN terms t ON t.id = i.term_id "
                "WHERE i.student_id = ? "
                "ORDER BY (i.status = 'Open') DESC, t.year DESC, t.term_index DESC, i.id",
                (student_id,),
            )
            return {"invoices": [self._invoice_payload(tx, row) for row in rows]}

    def pay_invoice(self, identity: Identity | None, invoice_id: str, amount, card_number: str) -> dict:
        """Record a simulated card payment; the invoice closes at zero balance."""
        pay_amount = money(amount)
        if pay_amount <= 0:
            raise validation_error(["amount"], "payment amount must be positive")
        if not luhn_valid(str(card_number)):
            raise CampusError(INVALID_CARD, "card number failed validation")
        with self.store.write() as tx:
            invoice = tx.one("SELECT * FROM invoices WHERE id = ?", (invoice_id,))
            if invoice is None:
                raise CampusError(UNKNOWN_INVOICE, f"no invoice {invoice_id}")
            if identity is not None and identity.role is Role.STUDENT:
                if invoice["student_id"] != identity.person_id:
                    raise CampusError(FORBIDDEN, "students may only pay their own invoices")
            if invoice["status"] != InvoiceStatus.OPEN.value:
                raise CampusError(INVOICE_CLOSED, "invoice is already settled")
            balance = self._total(tx, invoice_id) - self._paid(tx, invoice_id)
            if pay_amount > balance:
                raise CampusError(
                    OVERPAYMENT,
                    f"payment {money_str(pay_amount)} exceeds balance {money_str(balance)}",
                )
            payment_id = new_id()
            tx.execute(
                "INSERT INTO payments (id, invoice_id, amount, method, card_last4, recorded_at) "
                "VALUES (?,?,?,'SimulatedCard',?,?)",
                (payment_id, invoice_id, money_str(pay_amount), str(card_number)[-4:],
                 clockmod.iso(self.clock())),
            )
            if balance == pay_amount:
                tx.execute("UPDATE invoices SET status = 'Paid' WHERE id = ?", (invoice_id,))
            payment = tx.one("SELECT * FROM payments WHERE id = ?", (payment_id,))
            invoice = tx.one("SELECT * FROM invoices WHERE id = ?", (invoice_id,))
            return {
                "payment": {
                    "id": payment["id"],
                    "invoice_id": payment["invoice_id"],
                    "amount": payment["amount"],
                    "method": payment["method"],
                    "card_last4": payment["card_last4"],
                    "recorded_at": payment["recorded_at"],
                },
                "invoice": self._invoice_payload(tx, invoice),
            }

    # -- helpers ---------------------------------------------------------

    def _total(self, tx: Tx, invoice_id: str) -> Decimal:
        rows = tx.all("SELECT amount FROM invoice_lines WHERE invoice_id = ?", (invoice_id,))
        return sum((Decimal(r["amount"]) for r in rows), Decimal("0.00"))

    def _paid(self, tx: Tx, invoice_id: str) -> Decimal:
        rows = tx.all("SELECT amount FROM payments WHERE invoice_id = ?", (invoice_id,))
        return sum((Decimal(r["amount"]) for r in rows), Decimal("0.00"))

    def _invoice_payload(self, tx: Tx, row) -> dict:
        lines = tx.all(
            "SELECT unit_code, amount FROM invoice_lines WHERE invoice_id = ? ORDER BY unit_code",
            (row["id"],),
        )
        total = self._total(tx, row["id"])
        paid = self._paid(tx, row["id"])
        return {
            "id": row["id"],
            "student_id": row["student_id"],
            "term": row["term_id"],
            "status": row["status"],
            "line_items": [{"unit_code": l["unit_code"], "amount": l["amount"]} for l in lines],
            "total": money_str(total),
            "paid": money_str(paid),
            "balance": money_str(total - paid),
            "created_at": row["created_at"],
        }
