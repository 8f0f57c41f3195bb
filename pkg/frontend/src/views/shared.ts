// String-rendering helpers. Views are pure functions from data to markup so
// they can be tested without a browser.

export function esc(value: unknown): string {
  return String(value)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

export function banner(kind: "info" | "ok" | "warn" | "error", text: string): string {
  return `<div class="banner banner-${kind}">${esc(text)}</div>`;
}

export function pageShell(title: string, body: string): string {
  return `<section class="page"><h2>${esc(title)}</h2>${body}</section>`;
}

export function table(headers: string[], rows: string[][], emptyText: string): string {
  if (rows.length === 0) return `<p class="empty">${esc(emptyText)}</p>`;
  const head = headers.map((h) => `<th>${esc(h)}</th>`).join("");
  const body = rows
    .map((row) => `<tr>${row.map((cell) => `<td>${cell}</td>`).join("")}</tr>`)
    .join("");
  return `<table><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
}

export function field(label: string, name: string, options: {
  value?: string; type?: string; required?: boolean; placeholder?: string;
} = {}): string {
  const { value = "", type = "text", required = false, placeholder = "" } = options;
  return `<label class="field"><span>${esc(label)}</span>` +
    `<input name="${esc(name)}" type="${esc(type)}" value="${esc(value)}"` +
    `${required ? " required" : ""} placeholder="${esc(placeholder)}"></label>`;
}

export function select(label: string, name: string, values: { value: string; text: string }[],
                       selected = ""): string {
  const options = values
    .map((v) => `<option value="${esc(v.value)}"${v.value === selected ? " selected" : ""}>` +
      `${esc(v.text)}</option>`)
    .join("");
  return `<label class="field"><span>${esc(label)}</span>` +
    `<select name="${esc(name)}">${options}</select></label>`;
}
