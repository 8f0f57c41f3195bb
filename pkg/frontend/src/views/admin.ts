// Administration pages: the four decision queues, unit activation, reports.
// Queue rows act optimistically: a 409 from a racing decision elsewhere is
// shown as "handled by another user" and the row disappears.

import type {
  Application,
  Enrollment,
  GraduationRequest,
  ProgramChangeRequest,
} from "../types";
import { esc, field, pageShell, select, table } from "./shared";

function decisionButtons(kind: string, id: string, withReason: boolean): string {
  const reason = withReason
    ? `<input class="reason" name="reason" placeholder="reason (required to reject)">`
    : "";
  return `${reason}<button data-action="${kind}-approve" data-id="${esc(id)}">Approve</button>` +
    `<button data-action="${kind}-reject" data-id="${esc(id)}" class="danger">Reject</button>`;
}

export function renderApplicationsQueue(applications: Application[], notice = "",
                                        letterText = ""): string {
  const rows = applications.map((a) => [
    esc(a.applicant_name), esc(a.proposed_program), esc(a.citizenship),
    esc(a.created_at.slice(0, 10)),
    `<span data-row="${esc(a.id)}">${decisionButtons("application", a.id, true)}</span>`,
  ]);
  const letter = letterText
    ? `<h3>Letter</h3><pre class="letter">${esc(letterText)}</pre>`
    : "";
  return pageShell("Applications",
    notice + table(["Applicant", "Program", "Citizenship", "Submitted", "Decision"],
                   rows, "No applications waiting.") + letter);
}

export function renderPendingEnrollments(enrollments: Enrollment[], notice = ""): string {
  const rows = enrollments.map((e) => [
    esc(e.student_name ?? e.student_id), esc(e.unit_code), esc(e.campus), esc(e.term),
    `<span data-row="${esc(e.id)}">${decisionButtons("enrollment", e.id, false)}</span>`,
  ]);
  return pageShell("Pending Enrollment Approvals",
    notice + table(["Student", "Unit", "Campus", "Term", "Decision"], rows,
                   "Nothing awaiting special approval."));
}

export function renderGraduationQueue(requests: GraduationRequest[], notice = ""): string {
  const rows = requests.map((r) => [
    esc(r.student_name ?? r.student_id), esc(r.student_id), esc(r.created_at.slice(0, 10)),
    `<span data-row="${esc(r.id)}">${decisionButtons("graduation", r.id, false)}</span>`,
  ]);
  return pageShell("Graduation Requests",
    notice + table(["Student", "Id", "Requested", "Decision"], rows,
                   "No graduation requests."));
}

export function renderProgramChangeQueue(requests: ProgramChangeRequest[], notice = ""): string {
  const rows = requests.map((r) => [
    esc(r.student_name ?? r.student_id),
    esc(r.new_program ?? "(keep)"), esc(r.new_major ?? "(keep)"),
    `<span data-row="${esc(r.id)}">${decisionButtons("program-change", r.id, false)}</span>`,
  ]);
  return pageShell("Program Update Requests",
    notice + table(["Student", "New program", "New major", "Decision"], rows,
                   "No change requests."));
}

export function renderUnitActivation(units: { value: string; text: string }[],
                                     terms: { value: string; text: string }[],
                                     notice = ""): string {
  return pageShell("Unit Activation", notice + `
<p>Activate a unit for delivery at a campus in a term. Activation is idempotent.</p>
<form id="activation-form" class="inline-form">
  ${select("Unit", "unit_code", units)}
  ${field("Campus", "campus", { required: true, placeholder: "LTK" })}
  ${select("Term", "term", terms)}
  <button type="submit">Activate</button>
</form>`);
}

export function renderReports(kinds: string[], csv: string, notice = ""): string {
  const options = kinds.map((k) => ({ value: k, text: k }));
  const output = csv ? `<h3>Result</h3><pre class="csv">${esc(csv)}</pre>` : "";
  return pageShell("Reports", notice + `
<form id="report-form" class="inline-form">
  ${select("Report", "kind", options)}
  ${field("Campus filter", "campus", { placeholder: "optional" })}
  ${field("Term filter", "term", { placeholder: "optional" })}
  ${field("Program filter", "program", { placeholder: "optional" })}
  <button type="submit">Generate CSV</button>
</form>
${output}`);
}
