// Single-page shell: hash routing, session handling, and the thin controllers
// that glue API responses to the pure view renderers. The browser holds only
// the bearer token; every fact on screen originates server-side.

import { ApiError, browserTokenStore, CampusClient } from "./api";
import { MenuEntry, visibleMenu } from "./menu";
import type { AccessMatrixDoc, EligibleUnit, Enrollment, Profile, Session, Term } from "./types";
import * as adminViews from "./views/admin";
import { renderApplyForm, renderLogin } from "./views/login";
import { banner, esc } from "./views/shared";
import * as staffViews from "./views/staff";
import * as studentViews from "./views/student";

const REPORT_KINDS = ["EnrollmentByUnit", "ApplicationsByStatus", "GradeDistribution"];

interface EnrollmentContext {
  term: string;
  campus: string;
  eligible: EligibleUnit[] | null;
  notice: string;
}

export class App {
  client: CampusClient;
  root: HTMLElement;
  session: Session | null = null;
  profile: Profile | null = null;
  matrix: AccessMatrixDoc | null = null;
  enrollCtx: EnrollmentContext = { term: "", campus: "", eligible: null, notice: "" };

  constructor(root: HTMLElement, client?: CampusClient) {
    this.root = root;
    this.client = client ?? new CampusClient({
      tokens: browserTokenStore(),
      onUnauthorized: () => {
        this.session = null;
        window.location.hash = "#/login";
      },
    });
  }

  start(): void {
    window.addEventListener("hashchange", () => void this.route());
    void this.route();
  }

  // -- routing -------------------------------------------------------------

  async route(): Promise<void> {
    const hash = window.location.hash || "#/login";
    try {
      if (hash.startsWith("#/apply")) return this.showApply();
      if (hash.startsWith("#/login") || !this.client.tokens.get()) return this.showLogin();
      if (this.session === null) await this.restoreSession();
      switch (hash.split("?")[0]) {
        case "#/menu": return this.showMenu();
        case "#/profile": return await this.showProfile();
        case "#/program-details": return await this.showProgramDetails();
        case "#/graduation": return await this.showGraduation();
        case "#/enrollment": return await this.showEnrollment();
        case "#/timetable": return await this.showTimetable();
        case "#/transcript": return await this.showTranscript();
        case "#/coursework": return await this.showCoursework();
        case "#/class-shares": return await this.showExternal("Class Shares");
        case "#/finance": return await this.showFinance();
        case "#/assist-enrollment": return await this.showAssistEnrollment();
        case "#/student-details": return await this.showStudentDetails();
        case "#/staff-coursework": return await this.showStaffCoursework();
        case "#/class-list": return await this.showClassList();
        case "#/hr": return await this.showExternal("HR");
        case "#/applications": return await this.showApplications();
        case "#/pending-enrollments": return await this.showPendingEnrollments();
        case "#/graduations": return await this.showGraduations();
        case "#/program-updates": return await this.showProgramUpdates();
        case "#/unit-activation": return await this.showUnitActivation();
        case "#/reports": return await this.showReports();
        case "#/logout": return await this.doLogout();
        default: return this.showMenu();
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 401) return; // redirected already
      this.mount(banner("error", errorText(err)), false);
    }
  }

  private async restoreSession(): Promise<void> {
    // a token survived a reload; rebuild the session context around it
    const profile = await this.client.profile();
    const matrix = await this.client.accessMatrix();
    this.profile = profile;
    this.matrix = matrix;
    const role = profile.kind === "student" ? "Student" : profile.role;
    this.session = {
      token: this.client.tokens.get() ?? "",
      person_id: profile.id,
      role,
      menu: role === "Student" ? "student" : role === "AcademicStaff" ? "academic" : "admin",
      must_change: false,
      expires_at: "",
    };
  }

  // -- chrome ---------------------------------------------------------------

  private menuEntries(): MenuEntry[] {
    if (!this.session || !this.matrix) return [];
    return visibleMenu(this.session.role, this.matrix);
  }

  mount(content: string, withNav = true): void {
    if (!withNav || !this.session) {
      this.root.innerHTML = `<main class="bare">${content}</main>`;
      return;
    }
    const links = this.menuEntries()
      .map((e) => `<a href="${esc(e.route)}" data-menu="${esc(e.id)}">${esc(e.label)}</a>`)
      .join("");
    this.root.innerHTML = `
<header>
  <span class="brand">Campus Portal</span>
  <nav>${links}</nav>
  <span class="whoami">${esc(this.profile?.name ?? this.session.person_id)}</span>
</header>
<main>${content}</main>`;
  }

  // -- public pages ------------------------------------------------------------

  showLogin(errorText = ""): void {
    this.mount(renderLogin(errorText), false);
    this.form("#login-form", async (data) => {
      try {
        const session = await this.client.login(data["username"] ?? "", data["password"] ?? "");
        this.session = session;
        this.matrix = await this.client.accessMatrix();
        this.profile = await this.client.profile();
        window.location.hash = "#/menu";
      } catch (err) {
        // uniform message: the server never distinguishes bad user from bad password
        this.showLogin(errorText2(err));
      }
    });
  }

  showApply(notice = ""): void {
    this.mount(renderApplyForm(notice), false);
    this.form("#apply-form", async (data) => {
      try {
        await this.client.submitApplication(data);
        this.showApply(banner("ok",
          "Application submitted. You will receive a letter once it is decided."));
      } catch (err) {
        this.showApply(banner("error", errorText(err)));
      }
    });
  }

  showMenu(): void {
    const entries = this.menuEntries()
      .map((e) => `<li><a href="${esc(e.route)}">${esc(e.label)}</a></li>`)
      .join("");
    const changeHint = this.session?.must_change
      ? banner("warn", "You signed in with a one-time password; ask the admissions office to reset it after first use.")
      : "";
    this.mount(`${changeHint}<section class="page"><h2>Menu</h2><ul class="menu">${entries}</ul></section>`);
  }

  async doLogout(): Promise<void> {
    await this.client.logout().catch(() => undefined);
    this.session = null;
    this.profile = null;
    this.matrix = null;
    window.location.hash = "#/login";
  }

  // -- shared pages ----------------------------------------------------------------

  async showProfile(notice = ""): Promise<void> {
    const profile = await this.client.profile();
    this.profile = profile;
    this.mount(studentViews.renderProfile(profile, notice));
    this.form("#profile-form", async (data) => {
      try {
        await this.client.updateProfile(data);
        await this.showProfile(banner("ok", "Contact details updated."));
      } catch (err) {
        await this.showProfile(banner("error", errorText(err)));
      }
    });
  }

  async showExternal(title: "HR" | "Class Shares"): Promise<void> {
    const links = await this.client.externalLinks();
    const url = title === "HR" ? links.hr_url
      : links.class_shares_url_template.replace("{unit_code}", "");
    this.mount(studentViews.renderExternalLink(title, url));
  }

  // -- student pages ------------------------------------------------------------------

  private me(): string {
    return this.session?.person_id ?? "";
  }

  async showProgramDetails(): Promise<void> {
    this.mount(studentViews.renderProgramDetails(await this.client.programDetails(this.me())));
  }

  async showTranscript(): Promise<void> {
    const { records } = await this.client.transcript(this.me());
    this.mount(studentViews.renderTranscript(records));
  }

  async showGraduation(notice = ""): Promise<void> {
    this.mount(studentViews.renderGraduation(null, false, notice));
    this.form("#graduation-form", async () => {
      try {
        await this.client.applyGraduation(this.me());
        this.mount(studentViews.renderGraduation(null, true));
      } catch (err) {
        if (err instanceof ApiError && err.code === "RequirementsOutstanding") {
          const outstanding = (err.details?.["outstanding"] as string[]) ?? [];
          this.mount(studentViews.renderGraduation(outstanding, false));
        } else if (err instanceof ApiError && err.code === "DuplicateRequest") {
          this.mount(studentViews.renderGraduation(null, true));
        } else {
          await this.showGraduation(banner("error", errorText(err)));
        }
      }
    });
  }

  async showEnrollment(): Promise<void> {
    const [termsDoc, campusesDoc, lookupSelf] = await Promise.all([
      this.client.terms(), this.client.campuses(), this.client.studentEnrollments(this.me()),
    ]);
    const terms = termsDoc.terms;
    const current = terms.find((t) => t.is_current);
    if (!this.enrollCtx.term) this.enrollCtx.term = current?.id ?? terms[0]?.id ?? "";
    if (!this.enrollCtx.campus) this.enrollCtx.campus = campusesDoc.campuses[0] ?? "";

    const selected = terms.find((t) => t.id === this.enrollCtx.term);
    const dropOpen = selected ? todayIso() <= selected.change_window_end : false;
    this.mount(studentViews.renderEnrollment({
      terms,
      campuses: campusesDoc.campuses,
      selectedTerm: this.enrollCtx.term,
      selectedCampus: this.enrollCtx.campus,
      eligible: this.enrollCtx.eligible,
      current: lookupSelf,
      dropOpen,
      notice: this.enrollCtx.notice,
    }));
    this.enrollCtx.notice = "";

    this.form("#enrollment-picker", async (data) => {
      this.enrollCtx.term = data["term"] ?? "";
      this.enrollCtx.campus = data["campus"] ?? "";
      try {
        const { units } = await this.client.eligibleUnits(
          this.me(), this.enrollCtx.campus, this.enrollCtx.term);
        this.enrollCtx.eligible = units;
      } catch (err) {
        this.enrollCtx.eligible = null;
        this.enrollCtx.notice = banner("error", errorText(err));
      }
      await this.showEnrollment();
    });

    this.actions("[data-action=enroll]", async (el) => {
      const unit = el.dataset["unit"] ?? "";
      try {
        const enrollment = await this.client.enroll(
          this.me(), unit, this.enrollCtx.campus, this.enrollCtx.term);
        this.enrollCtx.notice = studentViews.enrollmentOutcomeNotice(enrollment);
      } catch (err) {
        this.enrollCtx.notice = banner("error", `${unit}: ${errorText(err)}`);
      }
      this.enrollCtx.eligible = null; // refetch: the set just changed
      await this.showEnrollment();
    });

    this.actions("[data-action=drop]", async (el) => {
      try {
        await this.client.dropUnit(el.dataset["enrollment"] ?? "");
        this.enrollCtx.notice = banner("ok", "Unit dropped.");
      } catch (err) {
        this.enrollCtx.notice = banner("error", errorText(err));
      }
      this.enrollCtx.eligible = null;
      await this.showEnrollment();
    });

    this.form("#program-change-form", async (data) => {
      try {
        await this.client.requestProgramChange(
          this.me(), data["new_program"] || null, data["new_major"] || null);
        this.enrollCtx.notice = banner("ok", "Change request submitted for approval.");
      } catch (err) {
        this.enrollCtx.notice = banner("error", errorText(err));
      }
      await this.showEnrollment();
    });
  }

  async showTimetable(): Promise<void> {
    const termsDoc = await this.client.terms();
    const campusesDoc = await this.client.campuses();
    const term = termsDoc.terms.find((t) => t.is_current)?.id ?? termsDoc.terms[0]?.id ?? "";
    const campus = campusesDoc.campuses[0] ?? "";
    const [classes, exams] = await Promise.all([
      this.client.timetable(campus, term, "Class"),
      this.client.timetable(campus, term, "FinalExam"),
    ]);
    this.mount(studentViews.renderTimetable(campus, term, classes.entries, exams.entries));
  }

  async showCoursework(): Promise<void> {
    const termsDoc = await this.client.terms();
    const term = termsDoc.terms.find((t) => t.is_current)?.id ?? "";
    const { items } = await this.client.coursework(this.me(), term);
    this.mount(studentViews.renderCoursework(term, items));
  }

  async showFinance(notice = ""): Promise<void> {
    const { invoices } = await this.client.invoices(this.me());
    this.mount(studentViews.renderFinance(invoices, notice));
    for (const form of Array.from(this.root.querySelectorAll<HTMLFormElement>(".pay-form"))) {
      form.addEventListener("submit", (event) => {
        event.preventDefault();
        const data = formData(form);
        void (async () => {
          try {
            await this.client.payInvoice(form.dataset["invoice"] ?? "",
                                         data["amount"] ?? "", data["card_number"] ?? "");
            await this.showFinance(banner("ok", "Payment recorded."));
          } catch (err) {
            await this.showFinance(banner("error", errorText(err)));
          }
        })();
      });
    }
  }

  // -- academic staff pages -------------------------------------------------------------

  private assistCtx = { studentId: "", eligible: null as EligibleUnit[] | null, notice: "" };

  async showAssistEnrollment(): Promise<void> {
    const [termsDoc, campusesDoc] = await Promise.all([this.client.terms(), this.client.campuses()]);
    const termOptions = termsDoc.terms.map((t) => ({ value: t.id, text: t.id }));
    const campusOptions = campusesDoc.campuses.map((c) => ({ value: c, text: c }));
    this.mount(staffViews.renderAssistEnrollment(
      termOptions, campusOptions, this.assistCtx.studentId, this.assistCtx.eligible,
      this.assistCtx.notice));
    this.assistCtx.notice = "";

    let pickedTerm = termsDoc.terms.find((t) => t.is_current)?.id ?? "";
    let pickedCampus = campusesDoc.campuses[0] ?? "";
    this.form("#assist-picker", async (data) => {
      this.assistCtx.studentId = data["student_id"] ?? "";
      pickedTerm = data["term"] ?? pickedTerm;
      pickedCampus = data["campus"] ?? pickedCampus;
      try {
        const { units } = await this.client.eligibleUnits(
          this.assistCtx.studentId, pickedCampus, pickedTerm);
        this.assistCtx.eligible = units;
      } catch (err) {
        this.assistCtx.eligible = null;
        this.assistCtx.notice = banner("error", errorText(err));
      }
      await this.showAssistEnrollment();
    });
    this.actions("[data-action=assist-enroll]", async (el) => {
      try {
        const enrollment = await this.client.enroll(
          this.assistCtx.studentId, el.dataset["unit"] ?? "", pickedCampus, pickedTerm);
        this.assistCtx.notice = banner("ok",
          `${enrollment.unit_code} enrolled for ${enrollment.student_id} (${enrollment.status}).`);
      } catch (err) {
        this.assistCtx.notice = banner("error", errorText(err));
      }
      this.assistCtx.eligible = null;
      await this.showAssistEnrollment();
    });
  }

  async showStudentDetails(notice = ""): Promise<void> {
    this.mount(staffViews.renderStudentDetails(null, "", notice));
    this.form("#lookup-form", async (data) => {
      try {
        const lookup = await this.client.studentLookup(data["student_id"] ?? "");
        this.mount(staffViews.renderStudentDetails(lookup, data["student_id"] ?? ""));
        this.bindLookupForm();
      } catch (err) {
        await this.showStudentDetails(banner("error", errorText(err)));
      }
    });
  }

  private bindLookupForm(): void {
    this.form("#lookup-form", async (data) => {
      try {
        const lookup = await this.client.studentLookup(data["student_id"] ?? "");
        this.mount(staffViews.renderStudentDetails(lookup, data["student_id"] ?? ""));
        this.bindLookupForm();
      } catch (err) {
        await this.showStudentDetails(banner("error", errorText(err)));
      }
    });
  }

  async showStaffCoursework(notice = "", report: import("./types").ImportReport | null = null): Promise<void> {
    const [termsDoc, campusesDoc] = await Promise.all([this.client.terms(), this.client.campuses()]);
    const termOptions = termsDoc.terms.map((t) => ({ value: t.id, text: t.id }));
    const campusOptions = campusesDoc.campuses.map((c) => ({ value: c, text: c }));
    this.mount(staffViews.renderStaffCoursework(termOptions, campusOptions, report, notice));
    const form = this.root.querySelector<HTMLFormElement>("#coursework-form");
    form?.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = formData(form);
      const fileInput = form.querySelector<HTMLInputElement>("input[type=file]");
      const file = fileInput?.files?.[0];
      if (!file) return;
      void file.text().then(async (text) => {
        try {
          const result = await this.client.importCourseworkCsv(
            data["unit_code"] ?? "", data["term"] ?? "", data["campus"] ?? "", text);
          await this.showStaffCoursework("", result);
        } catch (err) {
          await this.showStaffCoursework(banner("error", errorText(err)), null);
        }
      });
    });
  }

  async showClassList(notice = ""): Promise<void> {
    this.mount(staffViews.renderClassList(null, notice));
    this.form("#class-list-form", async (data) => {
      try {
        const { students } = await this.client.classList(
          data["unit_code"] ?? "", data["term"] ?? "", data["year"] ?? "", data["campus"] ?? "");
        this.mount(staffViews.renderClassList(students));
        this.form("#class-list-form", async () => this.showClassList());
      } catch (err) {
        await this.showClassList(banner("error", errorText(err)));
      }
    });
  }

  // -- admin pages -----------------------------------------------------------------------

  async showApplications(notice = "", letterText = ""): Promise<void> {
    const { applications } = await this.client.pendingApplications();
    this.mount(adminViews.renderApplicationsQueue(applications, notice, letterText));
    this.queueActions("application", async (id, decision, reason) => {
      const result = await this.client.decideApplication(id, decision, reason);
      const letter = result.letter.body;
      await this.showApplications(
        banner("ok", decision === "Approve"
          ? "Application approved; copy the offer letter below."
          : "Application rejected; decline letter below."),
        letter);
    }, () => this.showApplications());
  }

  async showPendingEnrollments(notice = ""): Promise<void> {
    const { enrollments } = await this.client.pendingEnrollments();
    this.mount(adminViews.renderPendingEnrollments(enrollments, notice));
    this.queueActions("enrollment", async (id, decision) => {
      await this.client.decidePendingEnrollment(id, decision);
      await this.showPendingEnrollments(banner("ok", `Enrollment ${decision.toLowerCase()}d.`));
    }, () => this.showPendingEnrollments());
  }

  async showGraduations(notice = ""): Promise<void> {
    const { requests } = await this.client.graduationRequests();
    this.mount(adminViews.renderGraduationQueue(requests, notice));
    this.queueActions("graduation", async (id, decision) => {
      await this.client.decideGraduation(id, decision);
      await this.showGraduations(banner("ok", `Graduation ${decision.toLowerCase()}d.`));
    }, () => this.showGraduations());
  }

  async showProgramUpdates(notice = ""): Promise<void> {
    const { requests } = await this.client.programChangeRequests();
    this.mount(adminViews.renderProgramChangeQueue(requests, notice));
    this.queueActions("program-change", async (id, decision) => {
      await this.client.decideProgramChange(id, decision);
      await this.showProgramUpdates(banner("ok", `Request ${decision.toLowerCase()}d.`));
    }, () => this.showProgramUpdates());
  }

  async showUnitActivation(notice = ""): Promise<void> {
    const [unitsDoc, termsDoc] = await Promise.all([this.client.units(), this.client.terms()]);
    const unitOptions = unitsDoc.units.map((u) => ({ value: u.code, text: `${u.code} ${u.name}` }));
    const termOptions = termsDoc.terms.map((t) => ({ value: t.id, text: t.id }));
    this.mount(adminViews.renderUnitActivation(unitOptions, termOptions, notice));
    this.form("#activation-form", async (data) => {
      try {
        const offering = await this.client.activateOffering(
          data["unit_code"] ?? "", data["campus"] ?? "", data["term"] ?? "");
        await this.showUnitActivation(banner("ok",
          `${offering.unit_code} active at ${offering.campus} for ${offering.term}.`));
      } catch (err) {
        await this.showUnitActivation(banner("error", errorText(err)));
      }
    });
  }

  async showReports(notice = "", csv = ""): Promise<void> {
    this.mount(adminViews.renderReports(REPORT_KINDS, csv, notice));
    this.form("#report-form", async (data) => {
      try {
        const text = await this.client.report(data["kind"] ?? REPORT_KINDS[0] ?? "", {
          campus: data["campus"] ?? "", term: data["term"] ?? "", program: data["program"] ?? "",
        });
        await this.showReports("", text);
      } catch (err) {
        await this.showReports(banner("error", errorText(err)), "");
      }
    });
  }

  // -- wiring helpers -----------------------------------------------------------------------

  private form(selector: string, handler: (data: Record<string, string>) => Promise<void>): void {
    const form = this.root.querySelector<HTMLFormElement>(selector);
    form?.addEventListener("submit", (event) => {
      event.preventDefault();
      void handler(formData(form));
    });
  }

  private actions(selector: string, handler: (el: HTMLElement) => Promise<void>): void {
    for (const el of Array.from(this.root.querySelectorAll<HTMLElement>(selector))) {
      el.addEventListener("click", (event) => {
        event.preventDefault();
        void handler(el);
      });
    }
  }

  /** Approve/reject wiring shared by the admin queues. Rejections that need a
   * reason are blocked client-side when the reason is empty; a 409 from a
   * racing decision shows as handled-by-another-user and the row goes away. */
  private queueActions(kind: string,
                       decide: (id: string, decision: "Approve" | "Reject", reason?: string) => Promise<void>,
                       reload: () => Promise<void> | void): void {
    const wire = (decision: "Approve" | "Reject") => {
      this.actions(`[data-action=${kind}-${decision.toLowerCase()}]`, async (el) => {
        const id = el.dataset["id"] ?? "";
        let reason: string | undefined;
        if (decision === "Reject") {
          const input = el.parentElement?.querySelector<HTMLInputElement>("input.reason");
          if (input !== null && input !== undefined) {
            reason = input.value.trim();
            if (!reason) {
              input.classList.add("invalid");
              input.placeholder = "a reason is required to reject";
              return; // block before submission
            }
          }
        }
        try {
          await decide(id, decision, reason);
        } catch (err) {
          if (err instanceof ApiError && err.status === 409) {
            el.closest("tr")?.remove();
            this.flash(banner("warn", "Already handled by another user."));
          } else {
            this.flash(banner("error", errorText(err)));
            await reload();
          }
        }
      });
    };
    wire("Approve");
    wire("Reject");
  }

  private flash(html: string): void {
    const main = this.root.querySelector("main");
    if (main) main.insertAdjacentHTML("afterbegin", html);
  }
}

function formData(form: HTMLFormElement): Record<string, string> {
  const data: Record<string, string> = {};
  new FormData(form).forEach((value, key) => {
    if (typeof value === "string") data[key] = value;
  });
  return data;
}

function todayIso(): string {
  return new Date().toISOString().slice(0, 10);
}

export function errorText(err: unknown): string {
  if (err instanceof ApiError) return `${err.message} [${err.code}]`;
  return err instanceof Error ? err.message : String(err);
}

function errorText2(err: unknown): string {
  if (err instanceof ApiError && err.code === "InvalidCredentials") {
    return "Invalid username or password.";
  }
  return errorText(err);
}

declare global {
  interface Window {
    campusApp?: App;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const app = new App(document.getElementById("app") as HTMLElement);
  window.campusApp = app;
  app.start();
}
