// Payload shapes as served by the campus-core API.

export type Role = "Student" | "AcademicStaff" | "AdminStaff";

export interface Session {
  token: string;
  person_id: string;
  role: Role;
  menu: "student" | "academic" | "admin";
  must_change: boolean;
  expires_at: string;
}

export interface StudentProfile {
  kind: "student";
  id: string;
  name: string;
  postal_address: string;
  residential_address: string;
  home_phone: string;
  mobile: string;
  program_id: string;
  major: string | null;
  citizenship: string;
  status: string;
}

export interface StaffProfile {
  kind: "staff";
  id: string;
  name: string;
  role: Role;
  department: string;
  campus: string;
  postal_address: string;
  residential_address: string;
  home_phone: string;
  mobile: string;
}

export type Profile = StudentProfile | StaffProfile;

export interface Term {
  id: string;
  year: number;
  index: string;
  change_window_end: string;
  is_current: boolean;
}

export interface EligibleUnit {
  unit_code: string;
  unit_name: string;
  category: string;
  prerequisite_codes: string[];
  prerequisite_met: boolean;
}

export interface Enrollment {
  id: string;
  student_id: string;
  unit_code: string;
  campus: string;
  term: string;
  status: string;
  prerequisite_met: boolean;
  decided_by: string | null;
  created_at: string;
  student_name?: string;
}

export interface TranscriptRecord {
  unit_code: string;
  unit_name: string;
  grade: string;
  campus: string;
  term: string;
  year: number;
}

export interface RequirementRow {
  unit_code: string;
  unit_name: string;
  category: string;
  completed: boolean;
}

export interface ProgramDetails {
  student_id: string;
  program_id: string;
  program_name: string;
  requirements: RequirementRow[];
}

export interface TimetableEntry {
  unit_code: string;
  unit_name: string;
  campus: string;
  term: string;
  kind: "Class" | "FinalExam";
  day: string;
  start: string;
  end: string;
  room: string;
}

export interface CourseworkItem {
  unit_code: string;
  assessment: string;
  score: string;
  max_score: string;
  campus: string;
}

export interface ImportReport {
  accepted: number;
  rejected: { line: number; reason: string }[];
  idempotency_key: string;
}

export interface InvoiceLine {
  unit_code: string;
  amount: string;
}

export interface Invoice {
  id: string;
  student_id: string;
  term: string;
  status: "Open" | "Paid";
  line_items: InvoiceLine[];
  total: string;
  paid: string;
  balance: string;
  created_at: string;
}

export interface Application {
  id: string;
  applicant_name: string;
  contact: string;
  proposed_program: string;
  citizenship: string;
  funding: string;
  qualifications: string;
  work_experience: string;
  status: string;
  decision_reason: string | null;
  student_id: string | null;
  created_at: string;
}

export interface Letter {
  id: string;
  kind: "Offer" | "Decline";
  recipient: string;
  body: string;
  rendered_at: string;
}

export interface GraduationRequest {
  id: string;
  student_id: string;
  status: string;
  decided_by: string | null;
  created_at: string;
  student_name?: string;
}

export interface ProgramChangeRequest {
  id: string;
  student_id: string;
  new_program: string | null;
  new_major: string | null;
  status: string;
  decided_by: string | null;
  created_at: string;
  student_name?: string;
}

export interface ClassListEntry {
  student_id: string;
  name: string;
}

export interface UnitInfo {
  code: string;
  name: string;
  prerequisites: string[];
}

export interface StudentLookup {
  profile: StudentProfile;
  transcript: TranscriptRecord[];
  current_enrollments: Enrollment[];
}

export interface AccessMatrixDoc {
  roles: Role[];
  operations: string[];
  public_operations: string[];
  entries: Record<string, Record<Role, boolean>>;
}

export interface ExternalLinks {
  hr_url: string;
  class_shares_url_template: string;
}
