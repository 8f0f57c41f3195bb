import re

import pytest

from campus_core.auth import Identity
from campus_core.domain import Role
from campus_core.errors import CampusError

from conftest import ADMIN

FORM = {
    "applicant_name": "Chris Vula",
    "contact": "PO Box 77, Nadi",
    "proposed_program": "BSCS",
    "citizenship": "Domestic",
    "funding": "self",
    "qualifications": "Year 13",
    "work_experience": "retail",
    "attachments": [{"name": "results.pdf", "content": "marks marks marks"}],
}


def submit(core, **overrides):
    form = dict(FORM)
    form.update(overrides)
    return core.admissions.submit_application(form)


class TestSubmit:
    def test_complete_form(self, core):
        result = submit(core)
        assert result["status"] == "Submitted"
        pending = core.admissions.list_pending(ADMIN)["applications"]
        assert [a["id"] for a in pending] == [result["application_id"]]

    def test_missing_fields_all_reported(self, core):
        with pytest.raises(CampusError) as err:
            submit(core, applicant_name="", citizenship=None)
        assert err.value.code == "ValidationError"
        assert set(err.value.details["fields"]) == {"applicant_name", "citizenship"}

    def test_unknown_program(self, core):
        with pytest.raises(CampusError) as err:
            submit(core, proposed_program="BXYZ")
        assert err.value.code == "UnknownProgram"

    def test_attachments_stored_as_digests(self, core):
        result = submit(core)
        app = core.admissions.list_pending(ADMIN)["applications"][0]
        assert app["id"] == result["application_id"]
        (att,) = app["attachments"]
        assert att["name"] == "results.pdf"
        assert re.fullmatch(r"[0-9a-f]{64}", att["digest"])
        assert "marks" not in str(att)


class TestPendingList:
    def test_filters_to_submitted_oldest_first(self, core, clock):
        from datetime import timedelta
        first = submit(core)
        clock.now += timedelta(minutes=1)
        second = submit(core, applicant_name="Dee Prasad")
        clock.now += timedelta(minutes=1)
        third = submit(core, applicant_name="Eroni Tui")
        core.admissions.decide(ADMIN, second["application_id"], "Reject", "incomplete")
        pending = core.admissions.list_pending(ADMIN)["applications"]
        assert [a["id"] for a in pending] == [first["application_id"], third["application_id"]]

    def test_empty(self, core):
        assert core.admissions.list_pending(ADMIN)["applications"] == []


class TestDecide:
    def test_approve_creates_student_with_working_login(self, core):
        app_id = submit(core)["application_id"]
        result = core.admissions.decide(ADMIN, app_id, "Approve")
        letter = result["letter"]
        assert letter["kind"] == "Offer"

        username = re.search(r"username: (\S+)", letter["body"]).group(1)
        password = re.search(r"password: (\S+)", letter["body"]).group(1)
        assert letter["body"].count(username) == 1
        assert letter["body"].count(password) == 1

        session = core.auth.login(username, password)
        assert session["role"] == "Student"
        profile = core.auth.view_profile(Identity(result["student_id"], Role.STUDENT))
        assert profile["status"] == "Active"
        assert profile["program_id"] == "BSCS"

    def test_reject_letter_contains_reason(self, core):
        app_id = submit(core)["application_id"]
        result = core.admissions.decide(
            ADMIN, app_id, "Reject", "does not meet entry requirements"
        )
        assert result["letter"]["kind"] == "Decline"
        assert "does not meet entry requirements" in result["letter"]["body"]
        assert result["application"]["status"] == "Rejected"

    def test_reject_without_reason(self, core):
        app_id = submit(core)["application_id"]
        with pytest.raises(CampusError) as err:
            core.admissions.decide(ADMIN, app_id, "Reject")
        assert err.value.code == "MissingReason"

    def test_double_decision(self, core):
        app_id = submit(core)["application_id"]
        core.admissions.decide(ADMIN, app_id, "Approve")
        with pytest.raises(CampusError) as err:
            core.admissions.decide(ADMIN, app_id, "Approve")
        assert err.value.code == "AlreadyDecided"
        with core.store.read() as tx:
            n = tx.one(
                "SELECT COUNT(*) AS n FROM students WHERE name = ?", (FORM["applicant_name"],)
            )["n"]
        assert n == 1

    def test_unknown_application(self, core):
        with pytest.raises(CampusError) as err:
            core.admissions.decide(ADMIN, "01NOPE", "Approve")
        assert err.value.code == "UnknownApplication"

    def test_new_student_ids_are_fresh_and_well_formed(self, core):
        ids = set()
        for name in ("P One", "P Two", "P Three"):
            app_id = submit(core, applicant_name=name)["application_id"]
            result = core.admissions.decide(ADMIN, app_id, "Approve")
            ids.add(result["student_id"])
        assert len(ids) == 3
        for student_id in ids:
            assert re.fullmatch(r"S\d{6}", student_id)
            assert student_id not in ("S000001", "S000002")


class TestAtomicity:
    def test_fault_between_student_and_credentials_rolls_back(self, core):
        app_id = submit(core)["application_id"]

        def boom():
            raise RuntimeError("injected fault")

        core.admissions._mid_approval_fault = boom
        with pytest.raises(RuntimeError):
            core.admissions.decide(ADMIN, app_id, "Approve")
        core.admissions._mid_approval_fault = lambda: None

        # nothing half-admitted: application still pending, no student, no credential
        pending = core.admissions.list_pending(ADMIN)["applications"]
        assert [a["id"] for a in pending] == [app_id]
        with core.store.read() as tx:
            students = tx.one(
                "SELECT COUNT(*) AS n FROM students WHERE name = ?", (FORM["applicant_name"],)
            )["n"]
            creds = tx.one("SELECT COUNT(*) AS n FROM credentials")["n"]
        assert students == 0
        assert creds == 0

        # and the retry still works
        result = core.admissions.decide(ADMIN, app_id, "Approve")
        assert result["application"]["status"] == "Approved"


class TestInvariants:
    def test_approved_maps_to_exactly_one_student_and_credential(self, core):
        decided = []
        for i in range(4):
            app_id = submit(core, applicant_name=f"Apgrp {i}")["application_id"]
            if i % 2 == 0:
                core.admissions.decide(ADMIN, app_id, "Approve")
            else:
                core.admissions.decide(ADMIN, app_id, "Reject", "no")
            decided.append(app_id)
        with core.store.read() as tx:
            rows = tx.all("SELECT * FROM applications")
            for row in rows:
                if row["status"] == "Approved":
                    assert row["student_id"]
                    student = tx.one("SELECT * FROM students WHERE id = ?", (row["student_id"],))
                    assert student["status"] == "Active"
                    cred = tx.one(
                        "SELECT * FROM credentials WHERE person_id = ?", (row["student_id"],)
                    )
                    assert cred is not None
                else:
                    assert row["student_id"] is None

    def test_pending_plus_decided_covers_everything(self, core):
        submitted = {submit(core, applicant_name=f"Person {i}")["application_id"] for i in range(5)}
        decided = set()
        pending = core.admissions.list_pending(ADMIN)["applications"]
        target = pending[0]["id"]
        core.admissions.decide(ADMIN, target, "Reject", "late")
        decided.add(target)
        still_pending = {a["id"] for a in core.admissions.list_pending(ADMIN)["applications"]}
        assert still_pending | decided == submitted
        assert still_pending & decided == set()
