// Menus for the three user groups. Each entry names the API operations it
// drives; an entry only renders when the access matrix allows every one of
// them for the session's role, so the menu can never lead somewhere the
// server would refuse.

import type { AccessMatrixDoc, Role } from "./types";

export interface MenuEntry {
  id: string;
  label: string;
  route: string;
  needs: string[];
  external?: boolean;
}

export const MENUS: Record<Role, MenuEntry[]> = {
  Student: [
    { id: "profile", label: "Profile", route: "#/profile", needs: ["view_profile", "update_profile"] },
    { id: "program-details", label: "Program Details", route: "#/program-details", needs: ["program_details"] },
    { id: "graduation", label: "Graduation", route: "#/graduation", needs: ["apply_graduation"] },
    { id: "enrollment", label: "Enrollment", route: "#/enrollment",
      needs: ["eligible_units", "enroll", "drop_unit", "request_program_change"] },
    { id: "timetable", label: "Timetable", route: "#/timetable", needs: ["view_timetable"] },
    { id: "transcript", label: "Transcript", route: "#/transcript", needs: ["view_transcript"] },
    { id: "coursework", label: "Course Work", route: "#/coursework", needs: ["view_coursework"] },
    { id: "class-shares", label: "Class Shares", route: "#/class-shares",
      needs: ["external_links"], external: true },
    { id: "finance", label: "Finance", route: "#/finance", needs: ["view_invoices", "pay_invoice"] },
    { id: "logout", label: "Log Out", route: "#/logout", needs: ["logout"] },
  ],
  AcademicStaff: [
    { id: "profile", label: "Profile", route: "#/profile", needs: ["view_profile", "update_profile"] },
    { id: "enrollment", label: "Enrollment", route: "#/assist-enrollment",
      needs: ["eligible_units", "enroll"] },
    { id: "student-details", label: "Student Details", route: "#/student-details",
      needs: ["student_lookup"] },
    { id: "coursework", label: "Course Work", route: "#/staff-coursework",
      needs: ["submit_coursework", "import_coursework_csv"] },
    { id: "class-list", label: "Class List", route: "#/class-list", needs: ["class_list"] },
    { id: "hr", label: "HR", route: "#/hr", needs: ["external_links"], external: true },
    { id: "logout", label: "Log Out", route: "#/logout", needs: ["logout"] },
  ],
  AdminStaff: [
    { id: "profile", label: "Profile", route: "#/profile", needs: ["view_profile", "update_profile"] },
    { id: "student-details", label: "Student Details", route: "#/student-details",
      needs: ["student_lookup"] },
    { id: "unit-activation", label: "Unit Activation", route: "#/unit-activation",
      needs: ["activate_offering"] },
    { id: "applications", label: "Applications", route: "#/applications",
      needs: ["list_pending_applications", "decide_application"] },
    { id: "graduations", label: "Graduations", route: "#/graduations",
      needs: ["list_graduation_requests", "decide_graduation"] },
    { id: "enrollment", label: "Enrollment", route: "#/pending-enrollments",
      needs: ["list_pending_enrollments", "decide_pending_enrollment"] },
    { id: "program-updates", label: "Program Update", route: "#/program-updates",
      needs: ["list_program_change_requests", "decide_program_change"] },
    { id: "reports", label: "Reports", route: "#/reports", needs: ["generate_report"] },
    { id: "logout", label: "Log Out", route: "#/logout", needs: ["logout"] },
  ],
};

export function allowedOperations(matrix: AccessMatrixDoc, role: Role): Set<string> {
  const allowed = new Set<string>();
  for (const op of matrix.operations) {
    if (matrix.entries[op]?.[role]) allowed.add(op);
  }
  return allowed;
}

export function visibleMenu(role: Role, matrix: AccessMatrixDoc): MenuEntry[] {
  const allowed = allowedOperations(matrix, role);
  return MENUS[role].filter((entry) => entry.needs.every((op) => allowed.has(op)));
}

/** Entries whose operations the matrix does NOT fully allow; [] means the
 * menu definitions and the served matrix agree. */
export function coherenceViolations(matrix: AccessMatrixDoc): { role: Role; entry: string }[] {
  const out: { role: Role; entry: string }[] = [];
  for (const role of Object.keys(MENUS) as Role[]) {
    const allowed = allowedOperations(matrix, role);
    for (const entry of MENUS[role]) {
      if (!entry.needs.every((op) => allowed.has(op))) {
        out.push({ role, entry: entry.id });
      }
    }
  }
  return out;
}
