import pytest
from hypothesis import given, strategies as st

from campus_core import domain
from campus_core.domain import (
    ENROLLMENT_TRANSITIONS,
    EnrollmentStatus,
    Grade,
    GradeRecord,
    Program,
    Requirement,
    RequirementCategory,
    StudentStatus,
    TermIndex,
    Unit,
    outstanding_requirements,
    passing_grade,
    prerequisites_met,
)
from campus_core.errors import CampusError

# The demo curriculum, used by the worked examples below.
UNITS = {
    "CS101": Unit("CS101", "Intro", frozenset()),
    "CS201": Unit("CS201", "Data Structures", frozenset({"CS101"})),
    "CS301": Unit("CS301", "Software Eng", frozenset({"CS201"})),
    "MA101": Unit("MA101", "Maths", frozenset()),
}
BSCS = Program(
    "BSCS", "CS degree",
    (
        Requirement("CS101", RequirementCategory.CORE),
        Requirement("CS201", RequirementCategory.CORE),
        Requirement("CS301", RequirementCategory.MAJOR),
        Requirement("MA101", RequirementCategory.SERVICE),
    ),
)


def rec(unit: str, grade: Grade) -> GradeRecord:
    return GradeRecord("S000001", unit, grade, "LTK", "2010-T2", 2010)


class TestPassingGrade:
    # The full decision table: pass threshold is C.
    @pytest.mark.parametrize("grade,expected", [
        (Grade.A, True), (Grade.B_PLUS, True), (Grade.B, True),
        (Grade.C_PLUS, True), (Grade.C, True),
        (Grade.D, False), (Grade.F, False),
    ])
    def test_decision_table(self, grade, expected):
        assert passing_grade(grade) is expected

    def test_accepts_raw_strings(self):
        assert passing_grade("B+") is True
        assert passing_grade("F") is False


class TestPrerequisitesMet:
    def test_single_prerequisite_passed(self):
        assert prerequisites_met([rec("CS101", Grade.B)], UNITS["CS201"], UNITS) is True

    def test_no_prerequisites(self):
        assert prerequisites_met([], UNITS["CS101"], UNITS) is True

    def test_non_passing_grade_does_not_count(self):
        assert prerequisites_met([rec("CS101", Grade.D)], UNITS["CS201"], UNITS) is False

    def test_unknown_prerequisite_unit(self):
        bad = Unit("XX900", "Ghost", frozenset({"ZZ999"}))
        with pytest.raises(CampusError) as err:
            prerequisites_met([], bad, UNITS)
        assert err.value.code == "UnknownUnit"

    def test_all_prerequisites_required(self):
        multi = Unit("CS400", "Capstone", frozenset({"CS101", "MA101"}))
        catalogue = dict(UNITS, CS400=multi)
        assert prerequisites_met([rec("CS101", Grade.A)], multi, catalogue) is False
        history = [rec("CS101", Grade.A), rec("MA101", Grade.C)]
        assert prerequisites_met(history, multi, catalogue) is True


class TestOutstandingRequirements:
    def test_partial_history(self):
        history = [rec("CS101", Grade.B), rec("MA101", Grade.C)]
        assert outstanding_requirements(BSCS, history) == {"CS201", "CS301"}

    def test_complete_history(self):
        history = [rec(c, Grade.B) for c in ("CS101", "CS201", "CS301", "MA101")]
        assert outstanding_requirements(BSCS, history) == set()

    def test_failed_unit_still_outstanding(self):
        assert outstanding_requirements(BSCS, [rec("CS101", Grade.F)]) == {
            "CS101", "CS201", "CS301", "MA101"
        }


_unit_codes = st.sampled_from(["CS101", "CS201", "CS301", "MA101"])
_grades = st.sampled_from(list(Grade))
_histories = st.lists(
    st.tuples(_unit_codes, _grades), max_size=8
).map(lambda pairs: [rec(u, g) for u, g in pairs])


@given(history=_histories, extra_unit=_unit_codes)
def test_outstanding_monotone_under_passes(history, extra_unit):
    # Adding a passing grade never enlarges the outstanding set.
    before = outstanding_requirements(BSCS, history)
    after = outstanding_requirements(BSCS, history + [rec(extra_unit, Grade.B)])
    assert after <= before


@given(history=_histories, extra_unit=_unit_codes)
def test_prerequisites_met_monotone_under_passes(history, extra_unit):
    grown = history + [rec(extra_unit, Grade.A)]
    for unit in UNITS.values():
        if prerequisites_met(history, unit, UNITS):
            assert prerequisites_met(grown, unit, UNITS)


class TestEnrollmentMachine:
    def test_exhaustive_transition_table(self):
        S = EnrollmentStatus
        allowed = {
            (S.PENDING_APPROVAL, S.APPROVED),
            (S.PENDING_APPROVAL, S.REJECTED),
            (S.PENDING_APPROVAL, S.DROPPED),
            (S.APPROVED, S.DROPPED),
            (S.APPROVED, S.COMPLETED),
        }
        for src in S:
            for dst in S:
                assert domain.enrollment_transition_allowed(src, dst) == ((src, dst) in allowed)

    def test_terminal_states_have_no_exits(self):
        S = EnrollmentStatus
        for terminal in (S.REJECTED, S.DROPPED, S.COMPLETED):
            assert ENROLLMENT_TRANSITIONS[terminal] == frozenset()


class TestStudentMachine:
    def test_lifecycle(self):
        S = StudentStatus
        assert domain.student_transition_allowed(S.APPLICANT, S.ACTIVE)
        assert domain.student_transition_allowed(S.ACTIVE, S.GRADUATED)
        assert domain.student_transition_allowed(S.ACTIVE, S.WITHDRAWN)
        assert not domain.student_transition_allowed(S.GRADUATED, S.ACTIVE)
        assert not domain.student_transition_allowed(S.APPLICANT, S.GRADUATED)


class TestPrerequisiteGraph:
    def test_demo_curriculum_is_acyclic(self):
        order = domain.prerequisite_topo_order(UNITS)
        assert order.index("CS101") < order.index("CS201") < order.index("CS301")

    def test_cycle_detected(self):
        units = {
            "A1": Unit("A1", "a", frozenset({"B1"})),
            "B1": Unit("B1", "b", frozenset({"A1"})),
        }
        with pytest.raises(ValueError):
            domain.prerequisite_topo_order(units)

    def test_self_prerequisite_detected(self):
        units = {"A1": Unit("A1", "a", frozenset({"A1"}))}
        with pytest.raises(ValueError):
            domain.prerequisite_topo_order(units)


def test_term_successor_rolls_over_years():
    assert domain.term_successor(2011, TermIndex.T1) == (2011, TermIndex.T2)
    assert domain.term_successor(2011, TermIndex.T2) == (2011, TermIndex.T3)
    assert domain.term_successor(2011, TermIndex.T3) == (2012, TermIndex.T1)


def test_person_id_format():
    assert domain.valid_person_id("S000123")
    assert domain.valid_person_id("A999999")
    assert not domain.valid_person_id("s000123")
    assert not domain.valid_person_id("S00123")
    assert not domain.valid_person_id("SX00123")
