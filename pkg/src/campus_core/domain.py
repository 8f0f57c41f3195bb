"""Pure domain types and rules shared by every other module. No I/O here.

Values are immutable-by-convention dataclasses; all mutation happens inside
storage transactions owned by the application-server tier.
"""

from __future__ import annotations

import graphlib
import re
from dataclasses import dataclass
from datetime import date
from enum import Enum
from typing import Iterable, Mapping

from .errors import CampusError, UNKNOWN_UNIT

PERSON_ID_RE = re.compile(r"^[A-Z][0-9]{6}$")


class Role(str, Enum):
    STUDENT = "Student"
    ACADEMIC_STAFF = "AcademicStaff"
    ADMIN_STAFF = "AdminStaff"


class StudentStatus(str, Enum):
    APPLICANT = "Applicant"
    ACTIVE = "Active"
    GRADUATED = "Graduated"
    WITHDRAWN = "Withdrawn"


class Grade(str, Enum):
    A = "A"
    B_PLUS = "B+"
    B = "B"
    C_PLUS = "C+"
    C = "C"
    D = "D"
    F = "F"


class RequirementCategory(str, Enum):
    CORE = "Core"
    MAJOR = "Major"
    SERVICE = "Service"


class TermIndex(str, Enum):
    T1 = "T1"
    T2 = "T2"
    T3 = "T3"


class EnrollmentStatus(str, Enum):
    PENDING_APPROVAL = "PendingApproval"
    APPROVED = "Approved"
    REJECTED = "Rejected"
    DROPPED = "Dropped"
    COMPLETED = "Completed"


class RequestStatus(str, Enum):
    """Shared by applications, graduation and program-change requests."""

    SUBMITTED = "Submitted"
    APPROVED = "Approved"
    REJECTED = "Rejected"


class InvoiceStatus(str, Enum):
    OPEN = "Open"
    PAID = "Paid"


class TimetableKind(str, Enum):
    CLASS = "Class"
    FINAL_EXAM = "FinalExam"


# Pass threshold is C: D and F do not count as completing a unit.
PASSING_GRADES = frozenset({Grade.A, Grade.B_PLUS, Grade.B, Grade.C_PLUS, Grade.C})

# PendingApproval is droppable within the change window, hence the extra edge
# alongside the approve/reject decision pair.
ENROLLMENT_TRANSITIONS: dict[EnrollmentStatus, frozenset[EnrollmentStatus]] = {
    EnrollmentStatus.PENDING_APPROVAL: frozenset(
        {EnrollmentStatus.APPROVED, EnrollmentStatus.REJECTED, EnrollmentStatus.DROPPED}
    ),
    EnrollmentStatus.APPROVED: frozenset(
        {EnrollmentStatus.DROPPED, EnrollmentStatus.COMPLETED}
    ),
    EnrollmentStatus.REJECTED: frozenset(),
    EnrollmentStatus.DROPPED: frozenset(),
    EnrollmentStatus.COMPLETED: frozenset(),
}

NON_TERMINAL_ENROLLMENT = frozenset(
    {EnrollmentStatus.PENDING_APPROVAL, EnrollmentStatus.APPROVED}
)

STUDENT_TRANSITIONS: dict[StudentStatus, frozenset[StudentStatus]] = {
    StudentStatus.APPLICANT: frozenset({StudentStatus.ACTIVE}),
    StudentStatus.ACTIVE: frozenset({StudentStatus.GRADUATED, StudentStatus.WITHDRAWN}),
    StudentStatus.GRADUATED: frozenset(),
    StudentStatus.WITHDRAWN: frozenset(),
}


@dataclass(frozen=True)
class Unit:
    code: str
    name: str
    prerequisites: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Requirement:
    unit_code: str
    category: RequirementCategory


@dataclass(frozen=True)
class Program:
    id: str
    name: str
    requirements: tuple[Requirement, ...] = ()


@dataclass(frozen=True)
class Term:
    year: int
    index: TermIndex
    change_window_end: date
    is_current: bool = False

    @property
    def id(self) -> str:
        return f"{self.year}-{self.index.value}"

    def sort_key(self) -> tuple[int, int]:
        return (self.year, int(self.index.value[1]))


def term_successor(year: int, index: TermIndex) -> tuple[int, TermIndex]:
    """Calendar successor of a term: T1 -> T2 -> T3 -> next year's T1."""
    if index is TermIndex.T3:
        return year + 1, TermIndex.T1
    return year, TermIndex(f"T{int(index.value[1]) + 1}")


@dataclass(frozen=True)
class UnitOffering:
    unit_code: str
    campus: str
    term_id: str
    active: bool = True


@dataclass(frozen=True)
class Student:
    id: str
    name: str
    program_id: str
    citizenship: str = ""
    postal_address: str = ""
    residential_address: str = ""
    home_phone: str = ""
    mobile: str = ""
    major: str | None = None
    status: StudentStatus = StudentStatus.ACTIVE


@dataclass(frozen=True)
class StaffMember:
    id: str
    name: str
    role: Role
    department: str
    campus: str


@dataclass(frozen=True)
class GradeRecord:
    student_id: str
    unit_code: str
    grade: Grade
    campus: str
    term_id: str
    year: int


@dataclass(frozen=True)
class TimetableEntry:
    unit_code: str
    campus: str
    term_id: str
    kind: TimetableKind
    day: str
    start: str  # "HH:MM"
    end: str
    room: str


@dataclass(frozen=True)
class Fee:
    unit_code: str
    amount: str  # decimal string, 2 fraction digits


def passing_grade(grade: Grade | str) -> bool:
    """True iff the grade counts as passing (C or better)."""
    return Grade(grade) in PASSING_GRADES


def passed_unit_codes(history: Iterable[GradeRecord]) -> set[str]:
    return {g.unit_code for g in history if passing_grade(g.grade)}


def prerequisites_met(
    history: Iterable[GradeRecord],
    unit: Unit,
    units: Mapping[str, Unit],
) -> bool:
    """True iff every prerequisite of `unit` was passed in `history`.

    Prerequisites are conjunctive. Raises UnknownUnit if a prerequisite code
    references a unit missing from the catalogue.
    """
    for code in unit.prerequisites:
        if code not in units:
            raise CampusError(UNKNOWN_UNIT, f"prerequisite references unknown unit {code}")
    passed = passed_unit_codes(history)
    return all(code in passed for code in unit.prerequisites)


def outstanding_requirements(program: Program, history: Iterable[GradeRecord]) -> set[str]:
    """Unit codes required by the program and not yet passed."""
    required = {r.unit_code for r in program.requirements}
    return required - passed_unit_codes(history)


def enrollment_transition_allowed(
    current: EnrollmentStatus, target: EnrollmentStatus
) -> bool:
    return target in ENROLLMENT_TRANSITIONS[current]


def student_transition_allowed(current: StudentStatus, target: StudentStatus) -> bool:
    return target in STUDENT_TRANSITIONS[current]


def prerequisite_topo_order(units: Mapping[str, Unit]) -> list[str]:
    """Topological order of the prerequisite graph.

    Raises ValueError on a cycle or a self-prerequisite; callers treat either
    as an invalid curriculum.
    """
    graph = {code: set(unit.prerequisites) for code, unit in units.items()}
    for code, prereqs in graph.items():
        if code in prereqs:
            raise ValueError(f"unit {code} lists itself as a prerequisite")
    try:
        return list(graphlib.TopologicalSorter(graph).static_order())
    except graphlib.CycleError as exc:
        raise ValueError(f"prerequisite cycle: {exc.args[1]}") from exc


def valid_person_id(value: str) -> bool:
    return bool(PERSON_ID_RE.match(value))
