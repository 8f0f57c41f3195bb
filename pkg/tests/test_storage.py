import os
import signal
import subprocess
import sys
import textwrap
import threading

import pytest

from campus_core.domain import EnrollmentStatus
from campus_core.errors import CampusError
from campus_core.fixtures import Fixture, demo_fixture
from campus_core.storage import SCHEMA_VERSION, Store


@pytest.fixture
def store(tmp_path):
    s = Store(tmp_path / "data")
    s.migrate()
    return s


class TestMigrate:
    def test_fresh_directory(self, tmp_path):
        store = Store(tmp_path / "data")
        assert store.migrate() == SCHEMA_VERSION == 1
        assert (tmp_path / "data" / "campus.db").exists()
        assert (tmp_path / "data" / "schema_version").read_text().strip() == "1"

    def test_idempotent(self, tmp_path):
        store = Store(tmp_path / "data")
        assert store.migrate() == store.migrate() == 1
        # no change on a second run
        before = (tmp_path / "data" / "campus.db").stat().st_mtime_ns
        store.migrate()
        assert (tmp_path / "data" / "campus.db").stat().st_mtime_ns == before

    def test_unusable_location(self, tmp_path):
        (tmp_path / "blocked").write_text("a file where a directory should be")
        with pytest.raises(CampusError) as err:
            Store(tmp_path / "blocked" / "data").migrate()
        assert err.value.code == "StorageUnavailable"

    @pytest.mark.skipif(os.geteuid() == 0, reason="root ignores permission bits")
    def test_read_only_location(self, tmp_path):
        target = tmp_path / "data"
        target.mkdir()
        target.chmod(0o555)
        try:
            with pytest.raises(CampusError) as err:
                Store(target).migrate()
            assert err.value.code == "StorageUnavailable"
        finally:
            target.chmod(0o755)

    def test_corrupt_file(self, tmp_path):
        target = tmp_path / "data"
        target.mkdir()
        (target / "campus.db").write_bytes(b"this is not a database at all" * 100)
        with pytest.raises(CampusError) as err:
            Store(target).migrate()
        assert err.value.code == "CorruptSchema"

    def test_future_schema_rejected(self, store):
        with store.write() as tx:
            tx.execute("UPDATE schema_meta SET value = '99' WHERE key = 'version'")
        store.close()
        with pytest.raises(CampusError) as err:
            store.migrate()
        assert err.value.code == "CorruptSchema"


class TestLoadFixture:
    def test_demo_counts(self, store):
        counts = store.load_fixture(demo_fixture())
        assert counts["units"] == 4
        assert counts["programs"] == 1
        assert counts["students"] == 2
        assert counts["offerings"] == 3
        assert counts["grades"] == 6

    def test_empty_fixture(self, store):
        counts = store.load_fixture(Fixture())
        assert all(v == 0 for v in counts.values())

    def test_atomic_on_failure(self, store):
        # double-load collides on primary keys and must leave nothing behind
        store.load_fixture(demo_fixture())
        with pytest.raises(CampusError):
            store.load_fixture(demo_fixture())
        with store.read() as tx:
            n = tx.one("SELECT COUNT(*) AS n FROM units")["n"]
        assert n == 4


class TestEnrollmentInsert:
    def _insert(self, store, **overrides):
        defaults = dict(
            student_id="S000001", unit_code="CS201", campus="LTK", term_id="2011-T1",
            status=EnrollmentStatus.APPROVED, prerequisite_met=True,
            created_at="2011-02-01T00:00:00+00:00",
        )
        defaults.update(overrides)
        with store.write() as tx:
            return store.atomic_check_and_insert_enrollment(tx, **defaults)

    def test_first_insert_succeeds(self, store):
        store.load_fixture(demo_fixture())
        row = self._insert(store)
        assert row["status"] == "Approved"
        assert row["id"]

    def test_second_insert_same_key_rejected(self, store):
        store.load_fixture(demo_fixture())
        self._insert(store)
        with pytest.raises(CampusError) as err:
            self._insert(store)
        assert err.value.code == "DuplicateEnrollment"

    def test_terminal_row_does_not_block_retry(self, store):
        store.load_fixture(demo_fixture())
        row = self._insert(store)
        with store.write() as tx:
            store.update_enrollment_status(tx, row["id"], EnrollmentStatus.DROPPED)
        again = self._insert(store)
        assert again["id"] != row["id"]

    def test_unknown_student(self, store):
        store.load_fixture(demo_fixture())
        with pytest.raises(CampusError) as err:
            self._insert(store, student_id="S999999")
        assert err.value.code == "UnknownStudent"

    def test_inactive_offering(self, store):
        store.load_fixture(demo_fixture())
        with pytest.raises(CampusError) as err:
            self._insert(store, unit_code="CS101")  # not offered in the fixture
        assert err.value.code == "InactiveOffering"

    def test_concurrent_inserts_one_winner(self, store):
        store.load_fixture(demo_fixture())
        results: list[str] = []
        barrier = threading.Barrier(2)

        def attempt():
            barrier.wait()
            try:
                self._insert(store)
                results.append("ok")
            except CampusError as exc:
                results.append(exc.code)
            finally:
                store.close()

        threads = [threading.Thread(target=attempt) for _ in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(results) == ["DuplicateEnrollment", "ok"]
        with store.read() as tx:
            n = tx.one("SELECT COUNT(*) AS n FROM enrollments")["n"]
        assert n == 1


class TestTransitions:
    def test_illegal_transition_refused(self, store):
        store.load_fixture(demo_fixture())
        with store.write() as tx:
            row = store.atomic_check_and_insert_enrollment(
                tx, student_id="S000001", unit_code="CS201", campus="LTK",
                term_id="2011-T1", status=EnrollmentStatus.APPROVED,
                prerequisite_met=True, created_at="2011-02-01T00:00:00+00:00",
            )
        with pytest.raises(ValueError):
            with store.write() as tx:
                store.update_enrollment_status(tx, row["id"], EnrollmentStatus.PENDING_APPROVAL)


class TestCrashConsistency:
    def test_killed_mid_transaction_leaves_no_partial_rows(self, tmp_path):
        """SIGKILL between insert and commit must roll back on reopen."""
        data_dir = tmp_path / "data"
        store = Store(data_dir)
        store.migrate()
        store.load_fixture(demo_fixture())
        store.close()

        script = textwrap.dedent(f"""
            import sys, time
            from campus_core.storage import Store
            store = Store({str(data_dir)!r})
            conn = store._conn()
            conn.execute("BEGIN IMMEDIATE")
            conn.execute(
                "INSERT INTO enrollments (id, student_id, unit_code, campus, term_id,"
                " status, prerequisite_met, decided_by, created_at)"
                " VALUES ('ZZINFLIGHT', 'S000001', 'CS201', 'LTK', '2011-T1',"
                " 'Approved', 1, NULL, 'now')"
            )
            print("MIDTX", flush=True)
            time.sleep(30)
        """)
        proc = subprocess.Popen([sys.executable, "-c", script], stdout=subprocess.PIPE, text=True)
        assert proc.stdout is not None
        line = proc.stdout.readline().strip()
        assert line == "MIDTX"
        os.kill(proc.pid, signal.SIGKILL)
        proc.wait(timeout=10)

        reopened = Store(data_dir)
        assert reopened.migrate() == 1
        with reopened.read() as tx:
            n = tx.one("SELECT COUNT(*) AS n FROM enrollments")["n"]
        assert n == 0
