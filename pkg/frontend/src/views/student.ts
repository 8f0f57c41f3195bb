// Student pages. Every eligibility, approval, and money figure shown here
// came from an API response; nothing is computed client-side.

import type {
  CourseworkItem,
  EligibleUnit,
  Enrollment,
  Invoice,
  Profile,
  ProgramDetails,
  Term,
  TimetableEntry,
  TranscriptRecord,
} from "../types";
import { banner, esc, field, pageShell, select, table } from "./shared";

export function renderProfile(profile: Profile, notice = ""): string {
  const rows = profile.kind === "student"
    ? [
        ["Id", esc(profile.id)], ["Name", esc(profile.name)],
        ["Program", esc(profile.program_id)], ["Major", esc(profile.major ?? "")],
        ["Citizenship", esc(profile.citizenship)], ["Status", esc(profile.status)],
      ]
    : [
        ["Id", esc(profile.id)], ["Name", esc(profile.name)],
        ["Role", esc(profile.role)], ["Department", esc(profile.department)],
        ["Campus", esc(profile.campus)],
      ];
  const details = rows
    .map(([k, v]) => `<tr><th>${k}</th><td>${v}</td></tr>`)
    .join("");
  return pageShell("Profile", `
${notice}
<table class="kv">${details}</table>
<h3>Update contact details</h3>
<form id="profile-form">
  ${field("Postal address", "postal_address", { value: profile.postal_address })}
  ${field("Residential address", "residential_address", { value: profile.residential_address })}
  ${field("Home phone", "home_phone", { value: profile.home_phone })}
  ${field("Mobile", "mobile", { value: profile.mobile })}
  <button type="submit">Save</button>
</form>`);
}

export function renderProgramDetails(details: ProgramDetails): string {
  const rows = details.requirements.map((r) => [
    esc(r.unit_code), esc(r.unit_name), esc(r.category),
    r.completed ? '<span class="ok">completed</span>' : '<span class="todo">to complete</span>',
  ]);
  return pageShell(`Program Details: ${details.program_id}`,
    table(["Unit", "Name", "Category", "Status"], rows, "No requirements recorded."));
}

export function renderTranscript(records: TranscriptRecord[]): string {
  const rows = records.map((r) => [
    esc(r.unit_code), esc(r.unit_name), esc(r.grade), esc(r.campus),
    esc(r.term), esc(String(r.year)),
  ]);
  return pageShell("Transcript",
    table(["Unit", "Name", "Grade", "Campus", "Term", "Year"], rows,
          "No completed units yet."));
}

export interface EnrollmentPageData {
  terms: Term[];
  campuses: string[];
  selectedTerm: string;
  selectedCampus: string;
  eligible: EligibleUnit[] | null;
  current: Enrollment[];
  dropOpen: boolean;
  notice: string;
}

export function renderEnrollment(data: EnrollmentPageData): string {
  const termOptions = data.terms.map((t) => ({
    value: t.id,
    text: t.is_current ? `${t.id} (current)` : t.id,
  }));
  const campusOptions = data.campuses.map((c) => ({ value: c, text: c }));
  const picker = `
<form id="enrollment-picker" class="inline-form">
  ${select("Term of study", "term", termOptions, data.selectedTerm)}
  ${select("Campus", "campus", campusOptions, data.selectedCampus)}
  <button type="submit">Show available units</button>
</form>`;

  let eligibleBlock = "";
  if (data.eligible !== null) {
    const rows = data.eligible.map((u) => {
      const badge = u.prerequisite_met
        ? '<span class="ok">prerequisites met</span>'
        : `<span class="warn">needs approval (requires ${esc(u.prerequisite_codes.join(", ") || "none")})</span>`;
      return [
        esc(u.unit_code), esc(u.unit_name), esc(u.category), badge,
        `<button data-action="enroll" data-unit="${esc(u.unit_code)}">Enroll</button>`,
      ];
    });
    eligibleBlock = `<h3>Available units</h3>` +
      table(["Unit", "Name", "Category", "Prerequisites", ""], rows,
            "No eligible units at this campus and term.");
  }

  const currentRows = data.current.map((e) => {
    const drop = data.dropOpen && (e.status === "Approved" || e.status === "PendingApproval")
      ? `<button data-action="drop" data-enrollment="${esc(e.id)}">Drop</button>`
      : "";
    return [esc(e.unit_code), esc(e.term), esc(e.campus), esc(e.status), drop];
  });
  const currentBlock = `<h3>Your enrollments</h3>` +
    table(["Unit", "Term", "Campus", "Status", ""], currentRows, "No enrollments yet.");

  const changeBlock = `
<h3>Change program or major</h3>
<form id="program-change-form" class="inline-form">
  ${field("New program id", "new_program", { placeholder: "leave blank to keep" })}
  ${field("New major", "new_major", { placeholder: "leave blank to keep" })}
  <button type="submit">Request change</button>
</form>`;

  return pageShell("Enrollment", data.notice + picker + eligibleBlock + currentBlock + changeBlock);
}

export function enrollmentOutcomeNotice(enrollment: Enrollment): string {
  if (enrollment.status === "Approved") {
    return banner("ok", `Enrolled in ${enrollment.unit_code}: approved.`);
  }
  return banner("warn",
    `${enrollment.unit_code} sent for department head approval; you will see it as pending.`);
}

export function renderTimetable(campus: string, term: string,
                                classes: TimetableEntry[], exams: TimetableEntry[]): string {
  const toRows = (entries: TimetableEntry[]) => entries.map((e) => [
    esc(e.unit_code), esc(e.unit_name), esc(e.day),
    `${esc(e.start)}&ndash;${esc(e.end)}`, esc(e.room),
  ]);
  return pageShell(`Timetable: ${campus} ${term}`, `
<h3>Classes</h3>
${table(["Unit", "Name", "Day", "Time", "Room"], toRows(classes), "No classes scheduled.")}
<h3>Final exams</h3>
${table(["Unit", "Name", "Day", "Time", "Room"], toRows(exams), "No exams scheduled.")}`);
}

export function renderCoursework(term: string, items: CourseworkItem[]): string {
  const rows = items.map((i) => [
    esc(i.unit_code), esc(i.assessment), `${esc(i.score)} / ${esc(i.max_score)}`,
  ]);
  return pageShell(`Course Work (${term})`,
    table(["Unit", "Assessment", "Score"], rows, "No coursework recorded this term."));
}

export function renderFinance(invoices: Invoice[], notice = ""): string {
  const blocks = invoices.map((inv) => {
    const lines = inv.line_items
      .map((l) => `<tr><td>${esc(l.unit_code)}</td><td class="num">${esc(l.amount)}</td></tr>`)
      .join("");
    const payForm = inv.status === "Open"
      ? `<form class="inline-form pay-form" data-invoice="${esc(inv.id)}">
          ${field("Amount", "amount", { value: inv.balance })}
          ${field("Card number", "card_number", { placeholder: "4242424242424242" })}
          <button type="submit">Pay</button>
         </form>`
      : "";
    return `
<div class="invoice">
  <h3>Invoice ${esc(inv.term)} <span class="status-${inv.status.toLowerCase()}">${esc(inv.status)}</span></h3>
  <table><tbody>${lines}</tbody></table>
  <p>Total ${esc(inv.total)} &middot; Paid ${esc(inv.paid)} &middot; Balance ${esc(inv.balance)}</p>
  ${payForm}
</div>`;
  });
  return pageShell("Finance", notice + (blocks.join("") || '<p class="empty">No invoices.</p>'));
}

export function renderGraduation(outstanding: string[] | null, requested: boolean,
                                 notice = ""): string {
  let body: string;
  if (requested) {
    body = banner("info", "Your graduation request has been submitted and awaits a decision.");
  } else if (outstanding === null) {
    body = `<form id="graduation-form"><button type="submit">Apply to graduate</button></form>`;
  } else {
    body = banner("warn", `Units still to complete: ${outstanding.join(", ")}`);
  }
  return pageShell("Graduation", notice + body);
}

export function renderExternalLink(title: string, url: string): string {
  return pageShell(title,
    `<p>This service is provided by a separate system.</p>` +
    `<p><a href="${esc(url)}" target="_blank" rel="noopener">Open ${esc(title)}</a></p>`);
}
