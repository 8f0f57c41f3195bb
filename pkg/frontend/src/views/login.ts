import { banner, field } from "./shared";

export function renderLogin(errorText = "", username = ""): string {
  return `
<section class="login-card">
  <h1>Campus Portal</h1>
  <p class="subtitle">Sign in with your campus id and password.</p>
  ${errorText ? banner("error", errorText) : ""}
  <form id="login-form">
    ${field("Username", "username", { value: username, required: true, placeholder: "s000001" })}
    ${field("Password", "password", { type: "password", required: true })}
    <button type="submit">Sign in</button>
  </form>
  <p class="hint">Prospective students can <a href="#/apply">apply online</a> without an account.</p>
</section>`;
}

export function renderApplyForm(notice = ""): string {
  return `
<section class="login-card">
  <h1>Apply to Study</h1>
  ${notice}
  <form id="apply-form">
    ${field("Full name", "applicant_name", { required: true })}
    ${field("Contact (postal)", "contact")}
    ${field("Proposed program id", "proposed_program", { required: true, placeholder: "BSCS" })}
    ${field("Citizenship", "citizenship", { required: true })}
    ${field("Funding", "funding")}
    ${field("Qualifications", "qualifications")}
    ${field("Work experience", "work_experience")}
    <button type="submit">Submit application</button>
  </form>
  <p class="hint"><a href="#/login">Back to sign in</a></p>
</section>`;
}
