// Typed client for the campus-core HTTP surface. All business decisions
// happen server-side; this layer only shapes requests and surfaces errors.

import type {
  AccessMatrixDoc,
  Application,
  ClassListEntry,
  CourseworkItem,
  EligibleUnit,
  Enrollment,
  ExternalLinks,
  GraduationRequest,
  ImportReport,
  Invoice,
  Letter,
  Profile,
  ProgramChangeRequest,
  ProgramDetails,
  Session,
  StudentLookup,
  Term,
  TimetableEntry,
  TranscriptRecord,
  UnitInfo,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public details?: Record<string, unknown>,
  ) {
    super(message);
  }
}

export interface TokenStore {
  get(): string | null;
  set(token: string | null): void;
}

export function memoryTokenStore(): TokenStore {
  let token: string | null = null;
  return { get: () => token, set: (t) => (token = t) };
}

export function browserTokenStore(): TokenStore {
  const KEY = "campus-core-token";
  return {
    get: () => window.localStorage.getItem(KEY),
    set: (t) => (t === null
      ? window.localStorage.removeItem(KEY)
      : window.localStorage.setItem(KEY, t)),
  };
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface ClientOptions {
  baseUrl?: string;
  tokens?: TokenStore;
  fetchImpl?: FetchLike;
  onUnauthorized?: () => void;
}

export class CampusClient {
  baseUrl: string;
  tokens: TokenStore;
  private fetchImpl: FetchLike;
  private onUnauthorized?: () => void;

  constructor(options: ClientOptions = {}) {
    this.baseUrl = options.baseUrl ?? "";
    this.tokens = options.tokens ?? memoryTokenStore();
    this.fetchImpl = options.fetchImpl ?? ((input, init) => fetch(input, init));
    this.onUnauthorized = options.onUnauthorized;
  }

  private async request<T>(method: string, path: string, body?: unknown,
                           contentType = "application/json"): Promise<T> {
    const headers: Record<string, string> = {};
    const token = this.tokens.get();
    if (token) headers["Authorization"] = `Bearer ${token}`;
    let payload: string | undefined;
    if (body !== undefined) {
      headers["Content-Type"] = contentType;
      payload = contentType === "application/json" ? JSON.stringify(body) : String(body);
    }
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: payload,
    });
    const text = await response.text();
    const isCsv = (response.headers.get("Content-Type") ?? "").includes("text/csv");
    const doc = isCsv || text === "" ? text : JSON.parse(text);
    if (!response.ok) {
      const err = (typeof doc === "object" && doc !== null ? doc : {}) as Record<string, unknown>;
      if (response.status === 401) this.onUnauthorized?.();
      throw new ApiError(
        response.status,
        String(err["error_code"] ?? "UnknownError"),
        String(err["message"] ?? `request failed with ${response.status}`),
        err["details"] as Record<string, unknown> | undefined,
      );
    }
    return doc as T;
  }

  // sessions ---------------------------------------------------------------
  async login(username: string, password: string): Promise<Session> {
    const session = await this.request<Session>("POST", "/api/v1/sessions",
                                                { username, password });
    this.tokens.set(session.token);
    return session;
  }

  async logout(): Promise<void> {
    try {
      await this.request("DELETE", "/api/v1/sessions/current");
    } finally {
      this.tokens.set(null);
    }
  }

  // shared reads -------------------------------------------------------------
  profile() { return this.request<Profile>("GET", "/api/v1/profile"); }

  updateProfile(fields: Record<string, string>) {
    return this.request<Profile>("PATCH", "/api/v1/profile", fields);
  }

  accessMatrix() { return this.request<AccessMatrixDoc>("GET", "/api/v1/access-matrix"); }

  externalLinks() { return this.request<ExternalLinks>("GET", "/api/v1/external-links"); }

  terms() {
    return this.request<{ terms: Term[] }>("GET", "/api/v1/terms");
  }

  campuses() {
    return this.request<{ campuses: string[] }>("GET", "/api/v1/campuses");
  }

  units() {
    return this.request<{ units: UnitInfo[] }>("GET", "/api/v1/units");
  }

  // student ------------------------------------------------------------------
  transcript(studentId: string) {
    return this.request<{ records: TranscriptRecord[] }>(
      "GET", `/api/v1/students/${studentId}/transcript`);
  }

  programDetails(studentId: string) {
    return this.request<ProgramDetails>(
      "GET", `/api/v1/students/${studentId}/program-details`);
  }

  eligibleUnits(studentId: string, campus: string, term: string) {
    return this.request<{ units: EligibleUnit[] }>(
      "GET",
      `/api/v1/students/${studentId}/eligible-units?campus=${encodeURIComponent(campus)}` +
      `&term=${encodeURIComponent(term)}`);
  }

  enroll(studentId: string, unitCode: string, campus: string, term: string) {
    return this.request<Enrollment>("POST", "/api/v1/enrollments", {
      student_id: studentId, unit_code: unitCode, campus, term,
    });
  }

  dropUnit(enrollmentId: string) {
    return this.request<Enrollment>("POST", `/api/v1/enrollments/${enrollmentId}/drop`);
  }

  async studentEnrollments(studentId: string): Promise<Enrollment[]> {
    const doc = await this.request<{ enrollments: Enrollment[] }>(
      "GET", `/api/v1/students/${studentId}/enrollments`);
    return doc.enrollments;
  }

  coursework(studentId: string, term: string) {
    return this.request<{ items: CourseworkItem[] }>(
      "GET", `/api/v1/students/${studentId}/coursework?term=${encodeURIComponent(term)}`);
  }

  timetable(campus: string, term: string, kind: "Class" | "FinalExam") {
    return this.request<{ entries: TimetableEntry[] }>(
      "GET",
      `/api/v1/timetable?campus=${encodeURIComponent(campus)}` +
      `&term=${encodeURIComponent(term)}&kind=${kind}`);
  }

  invoices(studentId: string) {
    return this.request<{ invoices: Invoice[] }>(
      "GET", `/api/v1/students/${studentId}/invoices`);
  }

  payInvoice(invoiceId: string, amount: string, cardNumber: string) {
    return this.request<{ invoice: Invoice }>("POST", "/api/v1/payments", {
      invoice_id: invoiceId, amount, card_number: cardNumber,
    });
  }

  applyGraduation(studentId: string) {
    return this.request<GraduationRequest>(
      "POST", `/api/v1/students/${studentId}/graduation`);
  }

  requestProgramChange(studentId: string, newProgram: string | null, newMajor: string | null) {
    const body: Record<string, string> = { student_id: studentId };
    if (newProgram) body["new_program"] = newProgram;
    if (newMajor) body["new_major"] = newMajor;
    return this.request<ProgramChangeRequest>("POST", "/api/v1/program-changes", body);
  }

  // staff ----------------------------------------------------------------------
  studentLookup(studentId: string) {
    return this.request<StudentLookup>("GET", `/api/v1/students/${studentId}`);
  }

  classList(unitCode: string, term: string, year: string, campus: string) {
    return this.request<{ students: ClassListEntry[] }>(
      "GET",
      `/api/v1/class-lists?unit_code=${encodeURIComponent(unitCode)}` +
      `&term=${encodeURIComponent(term)}&year=${encodeURIComponent(year)}` +
      `&campus=${encodeURIComponent(campus)}`);
  }

  importCourseworkCsv(unitCode: string, term: string, campus: string, fileText: string) {
    return this.request<ImportReport>(
      "POST",
      `/api/v1/coursework-imports?unit_code=${encodeURIComponent(unitCode)}` +
      `&term=${encodeURIComponent(term)}&campus=${encodeURIComponent(campus)}`,
      fileText, "text/csv");
  }

  recordFinalGrade(enrollmentId: string, grade: string) {
    return this.request<Record<string, unknown>>(
      "POST", `/api/v1/enrollments/${enrollmentId}/grade`, { grade });
  }

  // admin -------------------------------------------------------------------------
  pendingApplications() {
    return this.request<{ applications: Application[] }>("GET", "/api/v1/applications");
  }

  decideApplication(id: string, decision: "Approve" | "Reject", reason?: string) {
    const body: Record<string, string> = { decision };
    if (reason) body["reason"] = reason;
    return this.request<{ application: Application; letter: Letter; student_id?: string }>(
      "POST", `/api/v1/applications/${id}/decision`, body);
  }

  pendingEnrollments() {
    return this.request<{ enrollments: Enrollment[] }>("GET", "/api/v1/enrollments");
  }

  decidePendingEnrollment(id: string, decision: "Approve" | "Reject") {
    return this.request<Enrollment>(
      "POST", `/api/v1/enrollments/${id}/decision`, { decision });
  }

  graduationRequests() {
    return this.request<{ requests: GraduationRequest[] }>(
      "GET", "/api/v1/graduation-requests");
  }

  decideGraduation(id: string, decision: "Approve" | "Reject") {
    return this.request<GraduationRequest>(
      "POST", `/api/v1/graduation-requests/${id}/decision`, { decision });
  }

  programChangeRequests() {
    return this.request<{ requests: ProgramChangeRequest[] }>(
      "GET", "/api/v1/program-changes");
  }

  decideProgramChange(id: string, decision: "Approve" | "Reject") {
    return this.request<ProgramChangeRequest>(
      "POST", `/api/v1/program-changes/${id}/decision`, { decision });
  }

  activateOffering(unitCode: string, campus: string, term: string) {
    return this.request<{ unit_code: string; campus: string; term: string; active: boolean }>(
      "POST", "/api/v1/offerings", { unit_code: unitCode, campus, term });
  }

  report(kind: string, filters: Record<string, string> = {}) {
    const query = Object.entries(filters)
      .filter(([, v]) => v)
      .map(([k, v]) => `${k}=${encodeURIComponent(v)}`)
      .join("&");
    return this.request<string>("GET", `/api/v1/reports/${kind}${query ? "?" + query : ""}`);
  }

  submitApplication(form: Record<string, unknown>) {
    return this.request<{ application_id: string; status: string }>(
      "POST", "/api/v1/applications", form);
  }
}
