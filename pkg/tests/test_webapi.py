import json
from collections import Counter

import pytest
import requests

from campus_core.appclient import AppTierClient
from campus_core.appserver import AppServer, Dispatcher
from campus_core.config import Config
from campus_core.records import CSV_HEADER
from campus_core.webapi import COURSEWORK_CSV_HEADER, ROUTES, WebServer, bound_operations, http_status

from conftest import LETTERS_DIR


@pytest.fixture
def stack(core, tmp_path):
    """Both tiers on ephemeral ports, plus a base URL."""
    app = AppServer(core, listen=("127.0.0.1", 0), pool_size=4)
    app.start()
    web = WebServer(Config(
        data_dir=core.config.data_dir,
        web_listen=("127.0.0.1", 0),
        app_server_addr=app.address,
        web_pool_size=4,
        letters_dir=LETTERS_DIR,
    ))
    web.start()
    base = "http://%s:%s" % web.address
    yield {"core": core, "app": app, "web": web, "base": base}
    web.shutdown()
    app.shutdown()


def login(stack, person_id):
    core = stack["core"]
    username, password = core.auth.reset_password(person_id)
    response = requests.post(f"{stack['base']}/api/v1/sessions",
                             json={"username": username, "password": password}, timeout=10)
    assert response.status_code == 200
    return response.json()["token"]


def auth_header(token):
    return {"Authorization": f"Bearer {token}"}


class TestRouteTable:
    def test_every_operation_bound_exactly_once(self, core):
        dispatcher = Dispatcher(core)
        bound = Counter(bound_operations())
        assert set(bound) == set(dispatcher.operations())
        assert all(count == 1 for count in bound.values())

    def test_methods_are_standard(self):
        assert {r.method for r in ROUTES} <= {"GET", "POST", "PATCH", "DELETE"}

    def test_template_matches_import_contract(self):
        assert COURSEWORK_CSV_HEADER == CSV_HEADER


class TestStatusMapping:
    @pytest.mark.parametrize("code,status", [
        ("UnknownSession", 401), ("SessionExpired", 401),
        ("Forbidden", 403),
        ("UnknownStudent", 404), ("UnknownOperation", 404), ("UnknownInvoice", 404),
        ("ValidationError", 422), ("MalformedPayload", 422), ("MalformedFile", 422),
        ("DuplicateEnrollment", 409), ("AlreadyDecided", 409), ("AlreadyTerminal", 409),
        ("AppTierUnavailable", 502),
        ("InvalidCredentials", 400), ("Overpayment", 400), ("PrerequisiteNotMet", 400),
    ])
    def test_mapping(self, code, status):
        assert http_status(code) == status


class TestHttpSurface:
    def test_login_and_transcript(self, stack):
        token = login(stack, "S000001")
        response = requests.get(f"{stack['base']}/api/v1/students/S000001/transcript",
                                headers=auth_header(token), timeout=10)
        assert response.status_code == 200
        assert [r["unit_code"] for r in response.json()["records"]] == ["CS101", "MA101"]

    def test_rbac_cross_student_transcript(self, stack):
        token = login(stack, "S000002")
        response = requests.get(f"{stack['base']}/api/v1/students/S000001/transcript",
                                headers=auth_header(token), timeout=10)
        assert response.status_code == 403

    def test_missing_token_is_401(self, stack):
        response = requests.get(f"{stack['base']}/api/v1/profile", timeout=10)
        assert response.status_code == 401
        assert response.json()["error_code"] == "UnknownSession"

    def test_route_miss_is_404(self, stack):
        response = requests.get(f"{stack['base']}/api/v1/nope", timeout=10)
        assert response.status_code == 404

    def test_enroll_created(self, stack):
        token = login(stack, "S000001")
        response = requests.post(
            f"{stack['base']}/api/v1/enrollments",
            json={"student_id": "S000001", "unit_code": "CS201",
                  "campus": "LTK", "term": "2011-T1"},
            headers=auth_header(token), timeout=10,
        )
        assert response.status_code == 201
        assert response.json()["status"] == "Approved"
        dup = requests.post(
            f"{stack['base']}/api/v1/enrollments",
            json={"student_id": "S000001", "unit_code": "CS201",
                  "campus": "LTK", "term": "2011-T1"},
            headers=auth_header(token), timeout=10,
        )
        assert dup.status_code == 409

    def test_bad_json_body(self, stack):
        response = requests.post(f"{stack['base']}/api/v1/sessions",
                                 data=b"{not json", timeout=10,
                                 headers={"Content-Type": "application/json"})
        assert response.status_code == 422

    def test_report_returns_csv(self, stack):
        token = login(stack, "A000001")
        response = requests.get(f"{stack['base']}/api/v1/reports/GradeDistribution",
                                headers=auth_header(token), timeout=10)
        assert response.status_code == 200
        assert response.headers["Content-Type"].startswith("text/csv")
        assert response.text.startswith("unit_code,grade,count\n")

    def test_csv_import_and_template(self, stack):
        template = requests.get(f"{stack['base']}/api/v1/coursework-imports/template",
                                timeout=10)
        assert template.status_code == 200
        assert template.text == CSV_HEADER + "\n"

        student_token = login(stack, "S000001")
        requests.post(
            f"{stack['base']}/api/v1/enrollments",
            json={"student_id": "S000001", "unit_code": "CS201",
                  "campus": "LTK", "term": "2011-T1"},
            headers=auth_header(student_token), timeout=10,
        )
        staff_token = login(stack, "L000001")
        body = CSV_HEADER + "\nS000001,Test1,18,20\n"
        response = requests.post(
            f"{stack['base']}/api/v1/coursework-imports"
            "?unit_code=CS201&term=2011-T1&campus=LTK",
            data=body.encode("utf-8"),
            headers={**auth_header(staff_token), "Content-Type": "text/csv"},
            timeout=10,
        )
        assert response.status_code == 200
        assert response.json()["accepted"] == 1

    def test_query_parameters_flow_through(self, stack):
        token = login(stack, "S000001")
        response = requests.get(
            f"{stack['base']}/api/v1/timetable?campus=LTK&term=2011-T1&kind=Class",
            headers=auth_header(token), timeout=10,
        )
        assert response.status_code == 200
        assert len(response.json()["entries"]) == 2

    def test_no_store_on_api_responses(self, stack):
        token = login(stack, "S000001")
        response = requests.get(f"{stack['base']}/api/v1/profile",
                                headers=auth_header(token), timeout=10)
        assert response.headers["Cache-Control"] == "no-store"

    def test_payload_fidelity_against_direct_wire_call(self, stack):
        token = login(stack, "S000001")
        http_doc = requests.get(f"{stack['base']}/api/v1/students/S000001/program-details",
                                headers=auth_header(token), timeout=10).json()
        client = AppTierClient(stack["app"].address)
        try:
            wire_doc = client.call("program_details", {"student_id": "S000001"},
                                   session_token=token)["payload"]
        finally:
            client.close()
        assert json.dumps(http_doc, sort_keys=True) == json.dumps(wire_doc, sort_keys=True)


class TestAppTierDown:
    def test_502_and_recovery(self, core, tmp_path):
        app = AppServer(core, listen=("127.0.0.1", 0), pool_size=2)
        app.start()
        app_addr = app.address
        web = WebServer(Config(
            data_dir=core.config.data_dir,
            web_listen=("127.0.0.1", 0),
            app_server_addr=app_addr,
            web_pool_size=2,
        ))
        web.start()
        base = "http://%s:%s" % web.address
        try:
            assert requests.get(f"{base}/api/v1/ping", timeout=10).status_code == 200
            app.shutdown()
            down = requests.get(f"{base}/api/v1/ping", timeout=10)
            assert down.status_code == 502
            assert down.json()["error_code"] == "AppTierUnavailable"
            revived = AppServer(core, listen=app_addr, pool_size=2)
            revived.start()
            try:
                assert requests.get(f"{base}/api/v1/ping", timeout=10).status_code == 200
            finally:
                revived.shutdown()
        finally:
            web.shutdown()


class TestStaticServing:
    def test_spa_shell_and_assets(self, core, tmp_path):
        static = tmp_path / "dist"
        static.mkdir()
        (static / "index.html").write_text("<html><body>shell</body></html>")
        (static / "app.js").write_text("console.log('x')")
        app = AppServer(core, listen=("127.0.0.1", 0))
        app.start()
        web = WebServer(Config(
            data_dir=core.config.data_dir,
            web_listen=("127.0.0.1", 0),
            app_server_addr=app.address,
            static_dir=static,
        ))
        web.start()
        base = "http://%s:%s" % web.address
        try:
            assert "shell" in requests.get(f"{base}/", timeout=10).text
            js = requests.get(f"{base}/app.js", timeout=10)
            assert js.headers["Content-Type"].startswith(("text/javascript", "application/javascript"))
            # unknown path falls back to the shell for client-side routing
            assert "shell" in requests.get(f"{base}/enrollment", timeout=10).text
            # traversal attempts stay inside the static root
            evil = requests.get(f"{base}/../../etc/passwd", timeout=10)
            assert "root:" not in evil.text
        finally:
            web.shutdown()
            app.shutdown()
