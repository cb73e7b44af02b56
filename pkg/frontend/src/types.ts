// Mirrors of the server's JSON payloads. The UI never derives numbers on
// its own: everything displayed comes from these shapes as-is.

export interface PlanNodeJson {
  op: string;
  table?: string | null;
  cost: number;
  rows: number;
  children?: PlanNodeJson[];
}

export interface PlanJson {
  id: number;
  cost: number;
  root: PlanNodeJson;
}

export interface PlanMetrics {
  s_dist: number;
  c_dist: number;
  cost_dist: number;
  rel: number;
}

export interface SessionInfo {
  session_id: string;
  qep: PlanJson;
  plan_count: number;
  candidate_count: number;
  params: Record<string, number | null>;
}

export interface StepResponse {
  plan: PlanJson;
  metrics: PlanMetrics;
  viewed: number[];
}

export interface BatchItem {
  plan: PlanJson;
  metrics: PlanMetrics;
}

export interface BatchResponse {
  selected: BatchItem[];
  interestingness: number;
  viewed: number[];
}

export type DiffStatus =
  | "same"
  | "operator_changed"
  | "cost_changed"
  | "unmatched_a"
  | "unmatched_b";

export interface DiffNodeInfo {
  operator: string;
  table: string | null;
  token: string;
  cost: number;
  rows: number;
}

export interface DiffNode {
  path: string;
  a: DiffNodeInfo | null;
  b: DiffNodeInfo | null;
  status: DiffStatus;
}

export interface PairMetrics {
  s_dist: number;
  c_dist: number;
  cost_dist: number;
  dist: number;
  refined_dist: number;
}

export interface CompareResponse {
  a: PlanJson;
  b: PlanJson;
  nodes: DiffNode[];
  metrics: PairMetrics;
}

export interface ViewedResponse {
  viewed: number[];
}
