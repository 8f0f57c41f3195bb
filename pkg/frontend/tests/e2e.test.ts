// Drives the enrollment flow end to end against the real primary: both tiers
// run as child processes and every call goes through the same CampusClient
// the browser bundle uses. Skipped automatically when the primary's CLI is
// not importable in this environment.

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { ApiError, CampusClient, memoryTokenStore } from "../src/api";
import { coherenceViolations } from "../src/menu";

const here = dirname(fileURLToPath(import.meta.url));
const repoRoot = join(here, "..", "..");

function primaryAvailable(): boolean {
  try {
    execFileSync("python3", ["-c", "import campus_core"], { stdio: "ignore" });
    return true;
  } catch {
    return false;
  }
}

const canRun = primaryAvailable();

function cli(config: string, args: string[], cwd: string): string {
  return execFileSync(
    "python3", ["-m", "campus_core.cli", "--config", config, ...args],
    { cwd, encoding: "utf-8" },
  );
}

function waitListening(proc: ChildProcess): Promise<number> {
  return new Promise((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("tier never came up")), 30_000);
    let buffer = "";
    proc.stdout?.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const m = buffer.match(/listening on [0-9.]+:(\d+)/);
      if (m) {
        clearTimeout(timer);
        resolve(Number(m[1]));
      }
    });
    proc.on("exit", () => {
      clearTimeout(timer);
      reject(new Error(`tier exited early: ${buffer}`));
    });
  });
}

describe.skipIf(!canRun)("enrollment flow against a running primary", () => {
  let dir: string;
  let app: ChildProcess;
  let web: ChildProcess;
  let base: string;
  let credentials: Record<string, { username: string; password: string }>;

  beforeAll(async () => {
    dir = mkdtempSync(join(tmpdir(), "campus-ui-e2e-"));
    const appConfig = join(dir, "app.toml");
    const webConfig = join(dir, "web.toml");
    writeFileSync(appConfig, [
      "[app_server]",
      'listen = "127.0.0.1:0"',
      "[data]",
      `dir = "${join(dir, "data")}"`,
      "[letters]",
      `dir = "${join(repoRoot, "config", "letters")}"`,
      "",
    ].join("\n"));

    // the canonical dataset is fixed in 2011; anchor it around today so the
    // add/drop window is open for the drop step
    const fixturePath = join(dir, "live-demo.json");
    const fixtureJson = execFileSync("python3", ["-c",
      "import json; from campus_core.fixtures import live_demo_fixture; " +
      "print(json.dumps(live_demo_fixture().to_dict()))",
    ], { encoding: "utf-8" });
    writeFileSync(fixturePath, fixtureJson);

    cli(appConfig, ["migrate"], dir);
    cli(appConfig, ["load-fixture", fixturePath], dir);
    credentials = {};
    for (const pid of ["S000001", "A000001"]) {
      const out = cli(appConfig, ["reset-password", pid], dir);
      credentials[pid] = {
        username: /username: (\S+)/.exec(out)![1]!,
        password: /password: (\S+)/.exec(out)![1]!,
      };
    }

    app = spawn("python3", ["-m", "campus_core.cli", "--config", appConfig, "serve-app"],
                { cwd: dir, stdio: ["ignore", "pipe", "ignore"] });
    const appPort = await waitListening(app);

    writeFileSync(webConfig, [
      "[web]",
      'listen = "127.0.0.1:0"',
      `app_server_addr = "127.0.0.1:${appPort}"`,
      "",
    ].join("\n"));
    web = spawn("python3", ["-m", "campus_core.cli", "--config", webConfig, "serve-web"],
                { cwd: dir, stdio: ["ignore", "pipe", "ignore"] });
    const webPort = await waitListening(web);
    base = `http://127.0.0.1:${webPort}`;
  }, 60_000);

  afterAll(() => {
    web?.kill("SIGKILL");
    app?.kill("SIGKILL");
    if (dir) rmSync(dir, { recursive: true, force: true });
  });

  function client(): CampusClient {
    return new CampusClient({ baseUrl: base, tokens: memoryTokenStore() });
  }

  it("the served access matrix is coherent with the menu definitions", async () => {
    const student = client();
    await student.login(credentials["S000001"]!.username, credentials["S000001"]!.password);
    const matrix = await student.accessMatrix();
    expect(coherenceViolations(matrix)).toEqual([]);
  });

  it("walks pick-term, eligibility badges, confirm, escalation, and drop", async () => {
    const student = client();
    const session = await student.login(
      credentials["S000001"]!.username, credentials["S000001"]!.password);
    expect(session.role).toBe("Student");
    expect(session.menu).toBe("student");

    // the pickers' data
    const { terms } = await student.terms();
    const current = terms.find((t) => t.is_current);
    expect(current).toBeDefined();
    const term = current!.id;
    const { campuses } = await student.campuses();
    expect(campuses).toContain("LTK");

    // eligibility with prerequisite verdicts straight from the server
    const { units } = await student.eligibleUnits("S000001", "LTK", term);
    const byCode = Object.fromEntries(units.map((u) => [u.unit_code, u]));
    expect(byCode["CS201"]?.prerequisite_met).toBe(true);
    expect(byCode["CS301"]?.prerequisite_met).toBe(false);

    // confirm both: one approves outright, one escalates
    const approved = await student.enroll("S000001", "CS201", "LTK", term);
    expect(approved.status).toBe("Approved");
    const pending = await student.enroll("S000001", "CS301", "LTK", term);
    expect(pending.status).toBe("PendingApproval");

    // the enrollment page's own listing reflects both
    const mine = await student.studentEnrollments("S000001");
    expect(mine.map((e) => [e.unit_code, e.status]).sort()).toEqual([
      ["CS201", "Approved"], ["CS301", "PendingApproval"],
    ]);

    // billing followed the approval
    const { invoices } = await student.invoices("S000001");
    expect(invoices[0]?.total).toBe("450.00");

    // department head approves the escalated one; a second decision races to 409
    const admin = client();
    await admin.login(credentials["A000001"]!.username, credentials["A000001"]!.password);
    const queue = await admin.pendingEnrollments();
    expect(queue.enrollments.map((e) => e.id)).toContain(pending.id);
    const decided = await admin.decidePendingEnrollment(pending.id, "Approve");
    expect(decided.status).toBe("Approved");
    expect(decided.decided_by).toBe("A000001");
    const race = await admin.decidePendingEnrollment(pending.id, "Reject").catch((e) => e);
    expect(race).toBeInstanceOf(ApiError);
    expect((race as ApiError).status).toBe(409); // UI shows "handled by another user"

    // drop within the window restores eligibility and removes the charge
    await student.dropUnit(approved.id);
    const after = await student.eligibleUnits("S000001", "LTK", term);
    expect(after.units.map((u) => u.unit_code)).toContain("CS201");
    const rebilled = await student.invoices("S000001");
    expect(rebilled.invoices[0]?.total).toBe("300.00");
  }, 60_000);

  it("forbidden operations surface as 403 for the UI to hide", async () => {
    const student = client();
    await student.login(credentials["S000001"]!.username, credentials["S000001"]!.password);
    const err = await student.pendingApplications().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(403);
  });
});
