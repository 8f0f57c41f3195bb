"""Fixture documents: parsing, referential validation, and the demo dataset.

A fixture is one UTF-8 JSON document with top-level keys `programs, units,
offerings, students, staff, terms, timetable, fees` (plus optional `grades`
for pre-existing academic history). Field names match the domain types.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, timedelta
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any

from . import domain
from .domain import (
    Fee,
    Grade,
    GradeRecord,
    Program,
    Requirement,
    RequirementCategory,
    Role,
    StaffMember,
    Student,
    StudentStatus,
    Term,
    TermIndex,
    TimetableEntry,
    TimetableKind,
    Unit,
    UnitOffering,
)
from .errors import (
    CampusError,
    DUPLICATE_KEY,
    REFERENTIAL_VIOLATION,
    validation_error,
)

# change_window_end must fall inside the term; terms carry no explicit date
# range, so month windows stand in for one.
_TERM_MONTHS = {
    TermIndex.T1: range(1, 5),
    TermIndex.T2: range(5, 9),
    TermIndex.T3: range(9, 13),
}


@dataclass
class Fixture:
    programs: list[Program] = field(default_factory=list)
    units: list[Unit] = field(default_factory=list)
    offerings: list[UnitOffering] = field(default_factory=list)
    students: list[Student] = field(default_factory=list)
    staff: list[StaffMember] = field(default_factory=list)
    terms: list[Term] = field(default_factory=list)
    timetable: list[TimetableEntry] = field(default_factory=list)
    fees: list[Fee] = field(default_factory=list)
    grades: list[GradeRecord] = field(default_factory=list)

    def validate(self) -> None:
        """Check referential completeness and the domain invariants.

        Raises ReferentialViolation naming the dangling reference, DuplicateKey
        on key collisions, or ValidationError for invariant breaches.
        """
        unit_map = {u.code: u for u in self.units}
        if len(unit_map) != len(self.units):
            raise _duplicate("unit code", [u.code for u in self.units])
        program_ids = {p.id for p in self.programs}
        if len(program_ids) != len(self.programs):
            raise _duplicate("program id", [p.id for p in self.programs])
        term_ids = {t.id for t in self.terms}
        if len(term_ids) != len(self.terms):
            raise _duplicate("term id", [t.id for t in self.terms])

        person_ids: list[str] = [s.id for s in self.students] + [s.id for s in self.staff]
        if len(set(person_ids)) != len(person_ids):
            raise _duplicate("person id", person_ids)
        for pid in person_ids:
            if not domain.valid_person_id(pid):
                raise validation_error(["id"], f"invalid person id format: {pid}")

        try:
            domain.prerequisite_topo_order(unit_map)
        except ValueError as exc:
            raise validation_error(["prerequisites"], str(exc)) from exc
        for unit in self.units:
            for code in unit.prerequisites:
                if code not in unit_map:
                    raise _dangling(f"unit {unit.code} prerequisite", code)

        for program in self.programs:
            seen: set[str] = set()
            for req in program.requirements:
                if req.unit_code in seen:
                    raise _duplicate(
                        f"program {program.id} requirement", [req.unit_code, req.unit_code]
                    )
                seen.add(req.unit_code)
                if req.unit_code not in unit_map:
                    raise _dangling(f"program {program.id} requirement", req.unit_code)

        if sum(1 for t in self.terms if t.is_current) > 1:
            raise validation_error(["is_current"], "more than one current term")
        for term in self.terms:
            if term.change_window_end.year != term.year or (
                term.change_window_end.month not in _TERM_MONTHS[term.index]
            ):
                raise validation_error(
                    ["change_window_end"],
                    f"change window end {term.change_window_end} outside term {term.id}",
                )

        offering_keys = {(o.unit_code, o.campus, o.term_id) for o in self.offerings}
        if len(offering_keys) != len(self.offerings):
            raise _duplicate(
                "offering", [f"{o.unit_code}/{o.campus}/{o.term_id}" for o in self.offerings]
            )
        for off in self.offerings:
            if off.unit_code not in unit_map:
                raise _dangling("offering unit", off.unit_code)
            if off.term_id not in term_ids:
                raise _dangling("offering term", off.term_id)

        student_ids = {s.id for s in self.students}
        for student in self.students:
            if student.program_id not in program_ids:
                raise _dangling(f"student {student.id} program", student.program_id)
        for member in self.staff:
            if member.role not in (Role.ACADEMIC_STAFF, Role.ADMIN_STAFF):
                raise validation_error(["role"], f"invalid staff role: {member.role}")
            if member.role is Role.ADMIN_STAFF and not member.department:
                raise validation_error(["department"], f"admin staff {member.id} lacks department")

        term_years = {t.id: t.year for t in self.terms}
        grade_keys = set()
        for g in self.grades:
            if g.student_id not in student_ids:
                raise _dangling("grade student", g.student_id)
            if g.unit_code not in unit_map:
                raise _dangling("grade unit", g.unit_code)
            if g.term_id not in term_ids:
                raise _dangling("grade term", g.term_id)
            if g.year != term_years[g.term_id]:
                raise validation_error(
                    ["year"], f"grade year {g.year} disagrees with term {g.term_id}"
                )
            key = (g.student_id, g.unit_code, g.term_id)
            if key in grade_keys:
                raise _duplicate("grade", [str(key), str(key)])
            grade_keys.add(key)

        for entry in self.timetable:
            if entry.unit_code not in unit_map:
                raise _dangling("timetable unit", entry.unit_code)
            if entry.term_id not in term_ids:
                raise _dangling("timetable term", entry.term_id)
            if not entry.start < entry.end:
                raise validation_error(["start"], f"timetable entry ends before it starts: {entry}")

        fee_units = set()
        for fee in self.fees:
            if fee.unit_code not in unit_map:
                raise _dangling("fee unit", fee.unit_code)
            if fee.unit_code in fee_units:
                raise _duplicate("fee", [fee.unit_code, fee.unit_code])
            fee_units.add(fee.unit_code)
            try:
                if Decimal(fee.amount) < 0:
                    raise validation_error(["amount"], f"negative fee for {fee.unit_code}")
            except InvalidOperation:
                raise validation_error(["amount"], f"bad fee amount for {fee.unit_code}: {fee.amount}")

    def counts(self) -> dict[str, int]:
        out = {
            "programs": len(self.programs),
            "units": len(self.units),
            "offerings": len(self.offerings),
            "students": len(self.students),
            "staff": len(self.staff),
            "terms": len(self.terms),
            "timetable": len(self.timetable),
            "fees": len(self.fees),
        }
        if self.grades:
            out["grades"] = len(self.grades)
        return out

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "programs": [
                {
                    "id": p.id,
                    "name": p.name,
                    "requirements": [
                        {"unit_code": r.unit_code, "category": r.category.value}
                        for r in p.requirements
                    ],
                }
                for p in self.programs
            ],
            "units": [
                {"code": u.code, "name": u.name, "prerequisites": sorted(u.prerequisites)}
                for u in self.units
            ],
            "offerings": [
                {"unit_code": o.unit_code, "campus": o.campus, "term": o.term_id, "active": o.active}
                for o in self.offerings
            ],
            "students": [
                {
                    "id": s.id,
                    "name": s.name,
                    "postal_address": s.postal_address,
                    "residential_address": s.residential_address,
                    "home_phone": s.home_phone,
                    "mobile": s.mobile,
                    "program_id": s.program_id,
                    "major": s.major,
                    "citizenship": s.citizenship,
                    "status": s.status.value,
                }
                for s in self.students
            ],
            "staff": [
                {
                    "id": m.id,
                    "name": m.name,
                    "role": m.role.value,
                    "department": m.department,
                    "campus": m.campus,
                }
                for m in self.staff
            ],
            "terms": [
                {
                    "year": t.year,
                    "index": t.index.value,
                    "change_window_end": t.change_window_end.isoformat(),
                    "is_current": t.is_current,
                }
                for t in self.terms
            ],
            "timetable": [
                {
                    "unit_code": e.unit_code,
                    "campus": e.campus,
                    "term": e.term_id,
                    "kind": e.kind.value,
                    "day": e.day,
                    "start": e.start,
                    "end": e.end,
                    "room": e.room,
                }
                for e in self.timetable
            ],
            "fees": [{"unit_code": f.unit_code, "amount": f.amount} for f in self.fees],
        }
        if self.grades:
            doc["grades"] = [
                {
                    "student_id": g.student_id,
                    "unit_code": g.unit_code,
                    "grade": g.grade.value,
                    "campus": g.campus,
                    "term": g.term_id,
                    "year": g.year,
                }
                for g in self.grades
            ]
        return doc


def _dangling(context: str, ref: str) -> CampusError:
    return CampusError(
        REFERENTIAL_VIOLATION, f"{context} references missing entity: {ref}", {"reference": ref}
    )


def _duplicate(kind: str, values: list[str]) -> CampusError:
    seen, dup = set(), ""
    for v in values:
        if v in seen:
            dup = v
            break
        seen.add(v)
    return CampusError(DUPLICATE_KEY, f"duplicate {kind}: {dup}", {"key": dup})


def _require(doc: dict, key: str, entry_kind: str) -> Any:
    if key not in doc:
        raise validation_error([key], f"{entry_kind} entry missing field {key!r}")
    return doc[key]


def from_dict(doc: dict[str, Any]) -> Fixture:
    """Build and validate a Fixture from a parsed JSON document."""
    try:
        fixture = Fixture(
            programs=[
                Program(
                    id=_require(p, "id", "program"),
                    name=_require(p, "name", "program"),
                    requirements=tuple(
                        Requirement(r["unit_code"], RequirementCategory(r["category"]))
                        for r in p.get("requirements", [])
                    ),
                )
                for p in doc.get("programs", [])
            ],
            units=[
                Unit(
                    code=_require(u, "code", "unit"),
                    name=_require(u, "name", "unit"),
                    prerequisites=frozenset(u.get("prerequisites", [])),
                )
                for u in doc.get("units", [])
            ],
            offerings=[
                UnitOffering(
                    unit_code=_require(o, "unit_code", "offering"),
                    campus=_require(o, "campus", "offering"),
                    term_id=_require(o, "term", "offering"),
                    active=bool(o.get("active", True)),
                )
                for o in doc.get("offerings", [])
            ],
            students=[
                Student(
                    id=_require(s, "id", "student"),
                    name=_require(s, "name", "student"),
                    program_id=_require(s, "program_id", "student"),
                    citizenship=s.get("citizenship", ""),
                    postal_address=s.get("postal_address", ""),
                    residential_address=s.get("residential_address", ""),
                    home_phone=s.get("home_phone", ""),
                    mobile=s.get("mobile", ""),
                    major=s.get("major"),
                    status=StudentStatus(s.get("status", "Active")),
                )
                for s in doc.get("students", [])
            ],
            staff=[
                StaffMember(
                    id=_require(m, "id", "staff"),
                    name=_require(m, "name", "staff"),
                    role=Role(_require(m, "role", "staff")),
                    department=m.get("department", ""),
                    campus=m.get("campus", ""),
                )
                for m in doc.get("staff", [])
            ],
            terms=[
                Term(
                    year=int(_require(t, "year", "term")),
                    index=TermIndex(_require(t, "index", "term")),
                    change_window_end=date.fromisoformat(_require(t, "change_window_end", "term")),
                    is_current=bool(t.get("is_current", False)),
                )
                for t in doc.get("terms", [])
            ],
            timetable=[
                TimetableEntry(
                    unit_code=_require(e, "unit_code", "timetable"),
                    campus=_require(e, "campus", "timetable"),
                    term_id=_require(e, "term", "timetable"),
                    kind=TimetableKind(_require(e, "kind", "timetable")),
                    day=_require(e, "day", "timetable"),
                    start=_require(e, "start", "timetable"),
                    end=_require(e, "end", "timetable"),
                    room=e.get("room", ""),
                )
                for e in doc.get("timetable", [])
            ],
            fees=[
                Fee(unit_code=_require(f, "unit_code", "fee"), amount=str(_require(f, "amount", "fee")))
                for f in doc.get("fees", [])
            ],
            grades=[
                GradeRecord(
                    student_id=_require(g, "student_id", "grade"),
                    unit_code=_require(g, "unit_code", "grade"),
                    grade=Grade(_require(g, "grade", "grade")),
                    campus=g.get("campus", ""),
                    term_id=_require(g, "term", "grade"),
                    year=int(_require(g, "year", "grade")),
                )
                for g in doc.get("grades", [])
            ],
        )
    except (ValueError, TypeError) as exc:
        raise validation_error(["fixture"], f"cannot parse fixture: {exc}") from exc
    fixture.validate()
    return fixture


def from_json_file(path: Path | str) -> Fixture:
    return from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


_TERM_LAST_MONTH = {TermIndex.T1: 4, TermIndex.T2: 8, TermIndex.T3: 12}


def live_demo_fixture(today: date | None = None) -> Fixture:
    """The demo dataset re-anchored around `today` (default: the real date).

    The canonical dataset is fixed in 2011, which leaves its change window
    long closed for anyone running the system now. This variant puts the
    current term around today with the add/drop window still open, and moves
    the students' grade history to the preceding year.
    """
    today = today or date.today()
    target = today + timedelta(days=40)
    index = TermIndex(f"T{(target.month - 1) // 4 + 1}")
    current = Term(target.year, index,
                   date(target.year, _TERM_LAST_MONTH[index], 28), is_current=True)
    next_year, next_index = domain.term_successor(current.year, current.index)
    history_year = current.year - 1

    base = demo_fixture()
    old_current = "2011-T1"
    term_swap = {
        "2010-T1": f"{history_year}-T1",
        "2010-T2": f"{history_year}-T2",
        "2010-T3": f"{history_year}-T3",
        old_current: current.id,
    }
    base.terms = [
        Term(history_year, TermIndex.T1, date(history_year, 3, 15)),
        Term(history_year, TermIndex.T2, date(history_year, 7, 15)),
        Term(history_year, TermIndex.T3, date(history_year, 11, 15)),
        current,
        Term(next_year, next_index,
             date(next_year, _TERM_LAST_MONTH[next_index], 28)),
    ]
    base.offerings = [
        UnitOffering(o.unit_code, o.campus, term_swap[o.term_id], o.active)
        for o in base.offerings
    ]
    base.timetable = [
        TimetableEntry(e.unit_code, e.campus, term_swap[e.term_id], e.kind,
                       e.day, e.start, e.end, e.room)
        for e in base.timetable
    ]
    base.grades = [
        GradeRecord(g.student_id, g.unit_code, g.grade, g.campus,
                    term_swap[g.term_id], history_year)
        for g in base.grades
    ]
    base.validate()
    return base


def demo_fixture() -> Fixture:
    """The desk-scale demo dataset used by the test suite and the quickstart.

    One program (BSCS) over four units with a CS101 -> CS201 -> CS301
    prerequisite chain, two students (one mid-program, one finished), and
    three offerings activated at campus LTK for term 2011-T1.
    """
    return Fixture(
        programs=[
            Program(
                id="BSCS",
                name="Bachelor of Science in Computing Science",
                requirements=(
                    Requirement("CS101", RequirementCategory.CORE),
                    Requirement("CS201", RequirementCategory.CORE),
                    Requirement("CS301", RequirementCategory.MAJOR),
                    Requirement("MA101", RequirementCategory.SERVICE),
                ),
            )
        ],
        units=[
            Unit("CS101", "Introduction to Programming"),
            Unit("CS201", "Data Structures and Algorithms", frozenset({"CS101"})),
            Unit("CS301", "Software Engineering", frozenset({"CS201"})),
            Unit("MA101", "Foundation Mathematics"),
        ],
        offerings=[
            UnitOffering("CS201", "LTK", "2011-T1"),
            UnitOffering("CS301", "LTK", "2011-T1"),
            UnitOffering("MA101", "LTK", "2011-T1"),
        ],
        students=[
            Student(
                id="S000001",
                name="Alice Waqa",
                program_id="BSCS",
                citizenship="Domestic",
                postal_address="PO Box 101, Lakeside",
                residential_address="12 Shore St, Lakeside",
                home_phone="6650101",
                mobile="9990101",
                major="Software Engineering",
            ),
            Student(
                id="S000002",
                name="Ben Chand",
                program_id="BSCS",
                citizenship="Domestic",
                postal_address="PO Box 202, Lakeside",
                residential_address="34 Hill Rd, Lakeside",
                home_phone="6650202",
                mobile="9990202",
            ),
        ],
        staff=[
            StaffMember("L000001", "Paula Reed", Role.ACADEMIC_STAFF, "Computing", "LTK"),
            StaffMember("A000001", "Victor Hale", Role.ADMIN_STAFF, "Computing", "LTK"),
        ],
        terms=[
            Term(2010, TermIndex.T1, date(2010, 3, 15)),
            Term(2010, TermIndex.T2, date(2010, 7, 15)),
            Term(2010, TermIndex.T3, date(2010, 11, 15)),
            Term(2011, TermIndex.T1, date(2011, 3, 15), is_current=True),
            Term(2011, TermIndex.T2, date(2011, 7, 15)),
        ],
        timetable=[
            TimetableEntry("CS201", "LTK", "2011-T1", TimetableKind.CLASS, "Mon", "09:00", "11:00", "R101"),
            TimetableEntry("CS301", "LTK", "2011-T1", TimetableKind.CLASS, "Tue", "14:00", "16:00", "R202"),
            TimetableEntry("CS201", "LTK", "2011-T1", TimetableKind.FINAL_EXAM, "Fri", "09:00", "12:00", "HALL-A"),
        ],
        fees=[Fee("CS201", "450.00"), Fee("CS301", "300.00")],
        grades=[
            GradeRecord("S000001", "CS101", Grade.B, "LTK", "2010-T2", 2010),
            GradeRecord("S000001", "MA101", Grade.C, "LTK", "2010-T2", 2010),
            GradeRecord("S000002", "CS101", Grade.A, "LTK", "2010-T1", 2010),
            GradeRecord("S000002", "MA101", Grade.B, "LTK", "2010-T1", 2010),
            GradeRecord("S000002", "CS201", Grade.B_PLUS, "LTK", "2010-T2", 2010),
            GradeRecord("S000002", "CS301", Grade.A, "LTK", "2010-T3", 2010),
        ],
    )
