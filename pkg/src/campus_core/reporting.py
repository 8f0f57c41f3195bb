"""Statistical reports for administration, rendered as deterministic CSV.

CSV contract: UTF-8, LF line endings, header first, data rows sorted
lexicographically column by column. Identical state yields byte-identical
output.
"""

from __future__ import annotations

from .auth import Identity
from .errors import CampusError, UNKNOWN_FILTER, validation_error
from .storage import Store, Tx

REPORT_KINDS = ("ApplicationsByStatus", "EnrollmentByUnit", "GradeDistribution")

_HEADERS = {
    "EnrollmentByUnit": ("unit_code", "campus", "term", "approved_count", "pending_count"),
    "ApplicationsByStatus": ("status", "count"),
    "GradeDistribution": ("unit_code", "grade", "count"),
}


def render_csv(header: tuple[str, ...], rows: list[tuple[str, ...]]) -> str:
    for row in rows:
        for cell in row:
            if any(ch in cell for ch in (",", "\n", "\r", '"')):
                raise ValueError(f"cell not representable in the CSV contract: {cell!r}")
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in sorted(rows))
    return "\n".join(lines) + "\n"


class ReportingService:
    def __init__(self, store: Store):
        self.store = store

    def generate(self, identity: Identity | None, kind: str, filters: dict | None = None) -> dict:
        if kind not in REPORT_KINDS:
            raise validation_error(["kind"], f"kind must be one of {', '.join(REPORT_KINDS)}")
        filters = {k: v for k, v in (filters or {}).items() if v not in (None, "")}
        with self.store.read() as tx:
            self._check_filters(tx, filters)
            if kind == "EnrollmentByUnit":
                rows = self._enrollment_by_unit(tx, filters)
            elif kind == "ApplicationsByStatus":
                rows = self._applications_by_status(tx, filters)
            else:
                rows = self._grade_distribution(tx, filters)
        csv_text = render_csv(_HEADERS[kind], rows)
        return {"kind": kind, "filename": f"{kind}.csv", "csv": csv_text}

    def _check_filters(self, tx: Tx, filters: dict) -> None:
        allowed = {"campus", "term", "program"}
        unknown = set(filters) - allowed
        if unknown:
            raise CampusError(
                UNKNOWN_FILTER, f"unsupported filters: {', '.join(sorted(unknown))}"
            )
        if "term" in filters and self.store.term_row(tx, str(filters["term"])) is None:
            raise CampusError(UNKNOWN_FILTER, f"no term {filters['term']}")
        if "program" in filters and tx.one(
            "SELECT id FROM programs WHERE id = ?", (str(filters["program"]),)
        ) is None:
            raise CampusError(UNKNOWN_FILTER, f"no program {filters['program']}")
        if "campus" in filters:
            campus = str(filters["campus"])
            known = tx.one(
                "SELECT 1 WHERE EXISTS (SELECT 1 FROM offerings WHERE campus = ?) "
                "OR EXISTS (SELECT 1 FROM staff WHERE campus = ?) "
                "OR EXISTS (SELECT 1 FROM timetable WHERE campus = ?)",
                (campus, campus, campus),
            )
            if known is None:
                raise CampusError(UNKNOWN_FILTER, f"no campus {campus}")

    def _enrollment_by_unit(self, tx: Tx, filters: dict) -> list[tuple[str, ...]]:
        sql = (
            "SELECT e.unit_code, e.campus, e.term_id, "
            "SUM(CASE WHEN e.status = 'Approved' THEN 1 ELSE 0 END) AS approved, "
            "SUM(CASE WHEN e.status = 'PendingApproval' THEN 1 ELSE 0 END) AS pending "
            "FROM enrollments e JOIN students s ON s.id = e.student_id"
        )
        where, params = self._where(filters, campus="e.campus", term="e.term_id",
                                    program="s.program_id")
        sql += where + " GROUP BY e.unit_code, e.campus, e.term_id"
        return [
            (r["unit_code"], r["campus"], r["term_id"], str(r["approved"]), str(r["pending"]))
            for r in tx.all(sql, params)
        ]

    def _applications_by_status(self, tx: Tx, filters: dict) -> list[tuple[str, ...]]:
        sql = "SELECT status, COUNT(*) AS n FROM applications"
        where, params = self._where(filters, program="proposed_program")
        sql += where + " GROUP BY status"
        return [(r["status"], str(r["n"])) for r in tx.all(sql, params)]

    def _grade_distribution(self, tx: Tx, filters: dict) -> list[tuple[str, ...]]:
        sql = (
            "SELECT g.unit_code, g.grade, COUNT(*) AS n "
            "FROM grades g JOIN students s ON s.id = g.student_id"
        )
        where, params = self._where(filters, campus="g.campus", term="g.term_id",
                                    program="s.program_id")
        sql += where + " GROUP BY g.unit_code, g.grade"
        return [(r["unit_code"], r["grade"], str(r["n"])) for r in tx.all(sql, params)]

    @staticmethod
    def _where(filters: dict, **columns: str) -> tuple[str, tuple]:
        # Filters without a matching dimension on this report are ignored;
        # they were validated for existence already.
        clauses, params = [], []
        for name, column in columns.items():
            if name in filters:
                clauses.append(f"{column} = ?")
                params.append(str(filters[name]))
        if not clauses:
            return "", ()
        return " WHERE " + " AND ".join(clauses), tuple(params)
