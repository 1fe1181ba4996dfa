/** Payload shapes mirrored from the review service's JSON contract.
 *  The dashboard renders these verbatim; it never derives classifications,
 *  scores, ratings, or states on its own. */

export type SpreadsheetState =
  | "registered"
  | "in_depth_review_pending"
  | "in_use"
  | "change_review_pending"
  | "tool_eval_pending"
  | "restructure_required"
  | "redevelop_required"
  | "retired";

export type Decision = "approve" | "decline";
export type ItemStatus = "pass" | "fail" | "na";

export interface ChecklistTemplateItem {
  id: string;
  title: string;
  guidance: string;
  automatable: boolean;
}

export interface ChecklistTemplate {
  kind: "in_depth" | "change";
  items: ChecklistTemplateItem[];
}

export interface ChecklistItemResult {
  id: string;
  status: ItemStatus;
  note: string;
  machine: unknown | null;
}

export interface ChecklistInstance {
  kind: "in_depth" | "change";
  items: ChecklistItemResult[];
}

export interface ReviewRecord {
  entry: string;
  change: string | null;
  reviewer: string;
  decision: Decision;
  checklist: ChecklistInstance;
  note: string;
  statement: string | null;
  timestamp: string;
}

export interface InventoryEntry {
  id: string;
  name: string;
  owner: string;
  classification: string;
  state: SpreadsheetState;
  current: string;
  pending: string | null;
  pending_change: string | null;
  rules: unknown[];
  reviews: ReviewRecord[];
  evaluations: EvaluationReport[];
  links: Record<string, string>;
  created: string;
  updated: string;
}

export interface EntryDetail extends InventoryEntry {
  checklist_template?: ChecklistTemplate;
}

export interface CellDelta {
  address: string;
  kind: string;
  before: string | null;
  after: string | null;
  referenced: boolean;
}

export interface RankedChange {
  delta: CellDelta;
  score: number;
  rationale: Record<string, number>;
}

export interface ChangeDetail {
  changeset: {
    id: string;
    author: string;
    timestamp: string;
    description: string;
    base: string;
    result: string;
    deltas: CellDelta[];
  };
  classification: "structural" | "non_structural";
  ranked: RankedChange[];
}

export interface EvaluationIssue {
  metric: string;
  description: string;
  address: string | null;
  area: string | null;
}

export interface EvaluationReport {
  snapshot: string;
  ratings: Record<string, number>;
  issues: EvaluationIssue[];
  areas_to_improve: string[];
  recommendation: "approve" | "restructure" | "redevelop";
}

export interface AuditEvent {
  sequence: number;
  entry: string;
  kind: string;
  actor: string;
  timestamp: string;
  payload: Record<string, unknown>;
}

export interface ReviewPayload {
  reviewer: string;
  decision: Decision;
  checklist: ChecklistInstance;
  note: string;
}

export interface ReviewResponse {
  state: SpreadsheetState;
  review: number;
  record: ReviewRecord;
}

export interface EvaluationResponse {
  state: SpreadsheetState;
  report: EvaluationReport;
}

export interface StatementResponse {
  entry: string;
  review: number;
  statement: string;
}

export interface MetricsReport {
  snapshot: string;
  size: Record<string, number>;
  coupling: Record<string, unknown>;
  blocks: unknown[];
  inconsistent_cells: string[];
  endpoints: string[];
  max_formula_length: number;
  smells: {
    long_formulas: { address: string; length: number }[];
    magic_constants: { address: string; count: number }[];
  };
}

export interface ApiErrorBody {
  error: { code: string; message: string };
}
