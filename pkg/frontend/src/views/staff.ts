// Academic staff pages: staff-assisted enrollment, student lookup, coursework
// submission (CSV upload with a downloadable template), and class lists.

import type { EligibleUnit, ImportReport, StudentLookup } from "../types";
import { esc, field, pageShell, select, table } from "./shared";

export function renderAssistEnrollment(terms: { value: string; text: string }[],
                                       campuses: { value: string; text: string }[],
                                       studentId: string,
                                       eligible: EligibleUnit[] | null,
                                       notice = ""): string {
  const picker = `
<form id="assist-picker" class="inline-form">
  ${field("Student id", "student_id", { value: studentId, required: true, placeholder: "S000001" })}
  ${select("Term", "term", terms)}
  ${select("Campus", "campus", campuses)}
  <button type="submit">Show eligible units</button>
</form>`;
  let listing = "";
  if (eligible !== null) {
    const rows = eligible.map((u) => [
      esc(u.unit_code), esc(u.unit_name),
      u.prerequisite_met
        ? '<span class="ok">prerequisites met</span>'
        : '<span class="warn">prerequisites NOT met</span>',
      u.prerequisite_met
        ? `<button data-action="assist-enroll" data-unit="${esc(u.unit_code)}">Enroll student</button>`
        : "",
    ]);
    listing = table(["Unit", "Name", "Prerequisites", ""], rows,
                    "No eligible units for that student here.");
  }
  return pageShell("Staff-Assisted Enrollment", notice + picker + listing);
}

export function renderStudentDetails(lookup: StudentLookup | null, queried: string,
                                     notice = ""): string {
  const form = `
<form id="lookup-form" class="inline-form">
  ${field("Student id", "student_id", { value: queried, required: true, placeholder: "S000001" })}
  <button type="submit">Look up</button>
</form>`;
  if (lookup === null) return pageShell("Student Details", notice + form);
  const p = lookup.profile;
  const history = lookup.transcript.map((r) => [
    esc(r.unit_code), esc(r.grade), esc(r.term), esc(String(r.year)),
  ]);
  const current = lookup.current_enrollments.map((e) => [
    esc(e.unit_code), esc(e.term), esc(e.status),
  ]);
  return pageShell("Student Details", notice + form + `
<h3>${esc(p.name)} (${esc(p.id)})</h3>
<p>Program ${esc(p.program_id)} &middot; Status ${esc(p.status)} &middot; Mobile ${esc(p.mobile)}</p>
<h3>Academic history</h3>
${table(["Unit", "Grade", "Term", "Year"], history, "No grades yet.")}
<h3>Current enrollments</h3>
${table(["Unit", "Term", "Status"], current, "None.")}`);
}

export function renderStaffCoursework(terms: { value: string; text: string }[],
                                      campuses: { value: string; text: string }[],
                                      report: ImportReport | null,
                                      notice = ""): string {
  let reportBlock = "";
  if (report !== null) {
    const rejects = report.rejected.map((r) => [esc(String(r.line)), esc(r.reason)]);
    reportBlock = `
<h3>Import result</h3>
<p>${report.accepted} row(s) accepted, ${report.rejected.length} rejected.</p>
${table(["Line", "Reason"], rejects, "No rejected rows.")}`;
  }
  return pageShell("Course Work Submission", notice + `
<p>Upload marks as CSV. <a href="/api/v1/coursework-imports/template" download>Download the
header template</a>; columns are <code>student_id,assessment,score,max_score</code>.</p>
<form id="coursework-form" class="inline-form">
  ${field("Unit code", "unit_code", { required: true, placeholder: "CS201" })}
  ${select("Term", "term", terms)}
  ${select("Campus", "campus", campuses)}
  <label class="field"><span>CSV file</span><input type="file" name="file" accept=".csv,text/csv" required></label>
  <button type="submit">Import</button>
</form>
${reportBlock}`);
}

export function renderClassList(result: { student_id: string; name: string }[] | null,
                                notice = ""): string {
  const form = `
<form id="class-list-form" class="inline-form">
  ${field("Unit code", "unit_code", { required: true, placeholder: "CS201" })}
  ${field("Term", "term", { required: true, placeholder: "T1" })}
  ${field("Year", "year", { required: true, placeholder: "2011" })}
  ${field("Campus", "campus", { required: true, placeholder: "LTK" })}
  <button type="submit">Fetch class list</button>
</form>`;
  const listing = result === null ? "" :
    table(["Student id", "Name"], result.map((s) => [esc(s.student_id), esc(s.name)]),
          "No enrolled students for that offering.");
  return pageShell("Class List", notice + form + listing);
}
