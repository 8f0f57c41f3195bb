import random
import threading
from datetime import timedelta

import pytest

from campus_core.config import Config
from campus_core.errors import CampusError
from campus_core.service import CampusCore

import randfix
from conftest import ACADEMIC, ADMIN, S1, S2


class TestActivateOffering:
    def test_activation(self, core):
        result = core.enrollment.activate_offering(ADMIN, "CS101", "LTK", "2011-T1")
        assert result == {"unit_code": "CS101", "campus": "LTK", "term": "2011-T1",
                          "active": True}

    def test_idempotent(self, core):
        core.enrollment.activate_offering(ADMIN, "CS101", "LTK", "2011-T1")
        core.enrollment.activate_offering(ADMIN, "CS101", "LTK", "2011-T1")
        with core.store.read() as tx:
            n = tx.one(
                "SELECT COUNT(*) AS n FROM offerings WHERE unit_code = 'CS101'"
            )["n"]
        assert n == 1

    def test_unknown_unit_and_term(self, core):
        with pytest.raises(CampusError) as err:
            core.enrollment.activate_offering(ADMIN, "XX999", "LTK", "2011-T1")
        assert err.value.code == "UnknownUnit"
        with pytest.raises(CampusError) as err:
            core.enrollment.activate_offering(ADMIN, "CS101", "LTK", "2019-T1")
        assert err.value.code == "UnknownTerm"


class TestEligibleUnits:
    def test_demo_dataset_view(self, core):
        result = core.enrollment.eligible_units(S1, "S000001", "LTK", "2011-T1")
        rows = {(v["unit_code"], v["prerequisite_met"]) for v in result["units"]}
        # MA101 is excluded as completed; CS101 is not offered here
        assert rows == {("CS201", True), ("CS301", False)}
        by_code = {v["unit_code"]: v for v in result["units"]}
        assert by_code["CS201"]["category"] == "Core"
        assert by_code["CS301"]["prerequisite_codes"] == ["CS201"]

    def test_fully_passed_student_sees_nothing(self, core):
        assert core.enrollment.eligible_units(S2, "S000002", "LTK", "2011-T1")["units"] == []

    def test_no_offerings_anywhere(self, core):
        assert core.enrollment.eligible_units(S1, "S000001", "SUV", "2011-T1")["units"] == []

    def test_currently_enrolled_unit_disappears(self, core):
        core.enrollment.enroll(S1, "S000001", "CS201", "LTK", "2011-T1")
        codes = [v["unit_code"] for v in
                 core.enrollment.eligible_units(S1, "S000001", "LTK", "2011-T1")["units"]]
        assert codes == ["CS301"]

    def test_scope_enforced(self, core):
        with pytest.raises(CampusError) as err:
            core.enrollment.eligible_units(S1, "S000002", "LTK", "2011-T1")
        assert err.value.code == "Forbidden"

    def test_closed_term(self, core):
        with pytest.raises(CampusError) as err:
            core.enrollment.eligible_units(S1, "S000001", "LTK", "2010-T2")
        assert err.value.code == "TermNotOpen"

    def test_next_term_is_open(self, core):
        # nothing offered there yet, but the term itself is queryable
        assert core.enrollment.eligible_units(S1, "S000001", "LTK", "2011-T2")["units"] == []

    def test_randomized_oracle_equivalence(self, tmp_path, clock):
        rng = random.Random(20110201)
        mismatches = 0
        for case in range(30):
            fixture = randfix.random_fixture(rng)
            core = CampusCore(Config(data_dir=tmp_path / f"case{case}"), clock=clock)
            core.migrate()
            core.load_fixture(fixture)
            for student in fixture.students:
                got = core.enrollment.eligible_units(
                    None, student.id, randfix.CAMPUS, randfix.TERM_ID
                )["units"]
                want = randfix.oracle_eligible(fixture, student.id,
                                               randfix.CAMPUS, randfix.TERM_ID)
                got_view = [
                    {"unit_code": v["unit_code"], "category": v["category"],
                     "prerequisite_met": v["prerequisite_met"]}
                    for v in got
                ]
                if got_view != want:
                    mismatches += 1
            core.store.close()
        assert mismatches == 0


class TestEnroll:
    def test_prerequisite_met_approves(self, core):
        result = core.enrollment.enroll(S1, "S000001", "CS201", "LTK", "2011-T1")
        assert result["status"] == "Approved"
        assert result["prerequisite_met"] is True
        assert result["decided_by"] is None

    def test_prerequisite_unmet_goes_pending(self, core):
        result = core.enrollment.enroll(S1, "S000001", "CS301", "LTK", "2011-T1")
        assert result["status"] == "PendingApproval"
        assert result["prerequisite_met"] is False

    def test_staff_cannot_bypass_prerequisite(self, core):
        with pytest.raises(CampusError) as err:
            core.enrollment.enroll(ACADEMIC, "S000001", "CS301", "LTK", "2011-T1")
        assert err.value.code == "PrerequisiteNotMet"
        with core.store.read() as tx:
            n = tx.one("SELECT COUNT(*) AS n FROM enrollments")["n"]
        assert n == 0

    def test_staff_assisted_enrollment_with_met_prerequisite(self, core):
        result = core.enrollment.enroll(ACADEMIC, "S000001", "CS201", "LTK", "2011-T1")
        assert result["status"] == "Approved"

    def test_duplicate(self, core):
        core.enrollment.enroll(S1, "S000001", "CS201", "LTK", "2011-T1")
        with pytest.raises(CampusError) as err:
            core.enrollment.enroll(S1, "S000001", "CS201", "LTK", "2011-T1")
        assert err.value.code == "DuplicateEnrollment"

    def test_not_required_unit(self, core):
        core.enrollment.activate_offering(ADMIN, "CS101", "LTK", "2011-T1")
        with pytest.raises(CampusError) as err:
            core.enrollment.enroll(S2, "S000002", "CS101", "LTK", "2011-T1")
        assert err.value.code == "NotEligible"  # S000002 already passed it

    def test_inactive_offering(self, core):
        with pytest.raises(CampusError) as err:
            core.enrollment.enroll(S1, "S000001", "CS201", "SUV", "2011-T1")
        assert err.value.code == "InactiveOffering"

    def test_student_cannot_enroll_someone_else(self, core):
        with pytest.raises(CampusError) as err:
            core.enrollment.enroll(S2, "S000001", "CS201", "LTK", "2011-T1")
        assert err.value.code == "Forbidden"

    def test_race_produces_single_row(self, core):
        barrier = threading.Barrier(8)
        outcomes = []

        def attempt():
            barrier.wait()
            try:
                core.enrollment.enroll(S1, "S000001", "CS201", "LTK", "2011-T1")
                outcomes.append("ok")
            except CampusError as exc:
                outcomes.append(exc.code)
            finally:
                core.store.close()

        threads = [threading.Thread(target=attempt) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert outcomes.count("ok") == 1
        with core.store.read() as tx:
            n = tx.one(
                "SELECT COUNT(*) AS n FROM enrollments WHERE student_id = 'S000001' "
                "AND unit_code = 'CS201' AND term_id = '2011-T1'"
            )["n"]
        assert n == 1


class TestPendingDecision:
    def test_approve_sets_decider(self, core):
        pending = core.enrollment.enroll(S1, "S000001", "CS301", "LTK", "2011-T1")
        decided = core.enrollment.decide_pending_enrollment(ADMIN, pending["id"], "Approve")
        assert decided["status"] == "Approved"
        assert decided["decided_by"] == "A000001"
        assert decided["prerequisite_met"] is False

    def test_reject_restores_eligibility(self, core):
        pending = core.enrollment.enroll(S1, "S000001", "CS301", "LTK", "2011-T1")
        core.enrollment.decide_pending_enrollment(ADMIN, pending["id"], "Reject")
        codes = [v["unit_code"] for v in
                 core.enrollment.eligible_units(S1, "S000001", "LTK", "2011-T1")["units"]]
        assert "CS301" in codes

    def test_double_decision(self, core):
        pending = core.enrollment.enroll(S1, "S000001", "CS301", "LTK", "2011-T1")
        core.enrollment.decide_pending_enrollment(ADMIN, pending["id"], "Approve")
        with pytest.raises(CampusError) as err:
            core.enrollment.decide_pending_enrollment(ADMIN, pending["id"], "Reject")
        assert err.value.code == "AlreadyDecided"

    def test_unknown_enrollment(self, core):
        with pytest.raises(CampusError) as err:
            core.enrollment.decide_pending_enrollment(ADMIN, "01JUNK", "Approve")
        assert err.value.code == "UnknownEnrollment"

    def test_queue_listing(self, core):
        pending = core.enrollment.enroll(S1, "S000001", "CS301", "LTK", "2011-T1")
        queue = core.enrollment.list_pending_enrollments(ADMIN)["enrollments"]
        assert [e["id"] for e in queue] == [pending["id"]]
        assert queue[0]["student_name"] == "Alice Waqa"


class TestStudentEnrollmentList:
    def test_own_history_including_terminal(self, core, clock):
        approved = core.enrollment.enroll(S1, "S000001", "CS201", "LTK", "2011-T1")
        core.enrollment.drop_unit(S1, approved["id"])
        clock.now += timedelta(minutes=5)
        pending = core.enrollment.enroll(S1, "S000001", "CS301", "LTK", "2011-T1")
        rows = core.enrollment.list_student_enrollments(S1, "S000001")["enrollments"]
        assert {(r["unit_code"], r["status"]) for r in rows} == {
            ("CS201", "Dropped"), ("CS301", "PendingApproval"),
        }
        assert rows[0]["id"] == pending["id"]  # newest first

    def test_scoped_to_self_for_students(self, core):
        with pytest.raises(CampusError) as err:
            core.enrollment.list_student_enrollments(S1, "S000002")
        assert err.value.code == "Forbidden"

    def test_staff_may_list_any(self, core):
        assert core.enrollment.list_student_enrollments(ACADEMIC, "S000002")["enrollments"] == []


class TestDrop:
    def test_drop_within_window(self, core):
        enrollment = core.enrollment.enroll(S1, "S000001", "CS201", "LTK", "2011-T1")
        dropped = core.enrollment.drop_unit(S1, enrollment["id"])
        assert dropped["status"] == "Dropped"
        codes = [v["unit_code"] for v in
                 core.enrollment.eligible_units(S1, "S000001", "LTK", "2011-T1")["units"]]
        assert "CS201" in codes  # reversibility

    def test_window_boundary(self, core, clock):
        enrollment = core.enrollment.enroll(S1, "S000001", "CS201", "LTK", "2011-T1")
        clock.now = clock.now.replace(month=3, day=15)  # last day still allowed
        assert core.enrollment.drop_unit(S1, enrollment["id"])["status"] == "Dropped"

    def test_window_closed(self, core, clock):
        enrollment = core.enrollment.enroll(S1, "S000001", "CS201", "LTK", "2011-T1")
        clock.now += timedelta(days=120)
        with pytest.raises(CampusError) as err:
            core.enrollment.drop_unit(S1, enrollment["id"])
        assert err.value.code == "ChangeWindowClosed"

    def test_pending_is_droppable(self, core):
        pending = core.enrollment.enroll(S1, "S000001", "CS301", "LTK", "2011-T1")
        assert core.enrollment.drop_unit(S1, pending["id"])["status"] == "Dropped"

    def test_terminal_enrollment(self, core):
        enrollment = core.enrollment.enroll(S1, "S000001", "CS201", "LTK", "2011-T1")
        core.enrollment.drop_unit(S1, enrollment["id"])
        with pytest.raises(CampusError) as err:
            core.enrollment.drop_unit(S1, enrollment["id"])
        assert err.value.code == "AlreadyTerminal"

    def test_owner_only_for_students(self, core):
        enrollment = core.enrollment.enroll(S1, "S000001", "CS201", "LTK", "2011-T1")
        with pytest.raises(CampusError) as err:
            core.enrollment.drop_unit(S2, enrollment["id"])
        assert err.value.code == "Forbidden"
        # staff may drop on a student's behalf
        assert core.enrollment.drop_unit(ACADEMIC, enrollment["id"])


class TestProgramChange:
    def _with_bnet(self, core):
        with core.store.write() as tx:
            tx.execute("INSERT INTO programs (id, name) VALUES ('BNET', 'Networks degree')")

    def test_request_and_approve(self, core):
        self._with_bnet(core)
        request = core.enrollment.request_program_change(S1, "S000001", new_program="BNET")
        assert request["status"] == "Submitted"
        decided = core.enrollment.decide_program_change(ADMIN, request["id"], "Approve")
        assert decided["status"] == "Approved"
        assert core.auth.view_profile(S1)["program_id"] == "BNET"
        # history survives the switch
        with core.store.read() as tx:
            n = tx.one("SELECT COUNT(*) AS n FROM grades WHERE student_id = 'S000001'")["n"]
        assert n == 2

    def test_major_change(self, core):
        request = core.enrollment.request_program_change(S1, "S000001", new_major="Networks")
        core.enrollment.decide_program_change(ADMIN, request["id"], "Approve")
        assert core.auth.view_profile(S1)["major"] == "Networks"

    def test_reject_leaves_student_alone(self, core):
        self._with_bnet(core)
        request = core.enrollment.request_program_change(S1, "S000001", new_program="BNET")
        core.enrollment.decide_program_change(ADMIN, request["id"], "Reject")
        assert core.auth.view_profile(S1)["program_id"] == "BSCS"

    def test_empty_request(self, core):
        with pytest.raises(CampusError) as err:
            core.enrollment.request_program_change(S1, "S000001")
        assert err.value.code == "EmptyRequest"

    def test_unknown_program(self, core):
        with pytest.raises(CampusError) as err:
            core.enrollment.request_program_change(S1, "S000001", new_program="BXYZ")
        assert err.value.code == "UnknownProgram"

    def test_double_decision(self, core):
        request = core.enrollment.request_program_change(S1, "S000001", new_major="AI")
        core.enrollment.decide_program_change(ADMIN, request["id"], "Approve")
        with pytest.raises(CampusError) as err:
            core.enrollment.decide_program_change(ADMIN, request["id"], "Approve")
        assert err.value.code == "AlreadyDecided"

    def test_eligibility_follows_new_program(self, core):
        self._with_bnet(core)
        with core.store.write() as tx:
            tx.execute("INSERT INTO units (code, name) VALUES ('NW101', 'Networking 1')")
            tx.execute(
                "INSERT INTO program_requirements (program_id, unit_code, category, seq) "
                "VALUES ('BNET', 'NW101', 'Core', 0)"
            )
            tx.execute(
                "INSERT INTO offerings (unit_code, campus, term_id, active) "
                "VALUES ('NW101', 'LTK', '2011-T1', 1)"
            )
        request = core.enrollment.request_program_change(S1, "S000001", new_program="BNET")
        core.enrollment.decide_program_change(ADMIN, request["id"], "Approve")
        codes = [v["unit_code"] for v in
                 core.enrollment.eligible_units(S1, "S000001", "LTK", "2011-T1")["units"]]
        assert codes == ["NW101"]
