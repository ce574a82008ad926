/** Wire types mirroring the service's JSON documents. */

export type ParameterType =
  | "string"
  | "integer"
  | "number"
  | "boolean"
  | "string-list"
  | "file-reference";

export interface ParameterSpec {
  name: string;
  type: ParameterType;
  required: boolean;
  description: string;
  enum?: (string | number)[];
  minimum?: number;
  maximum?: number;
}

export interface OutputContract {
  kind: "text" | "number" | "json-object" | "file-reference";
  description: string;
  fields?: string[];
}

export interface AccuracySummary {
  accuracy: number;
  suite_size: number;
  evaluated_at: string;
}

export interface ToolCard {
  name: string;
  version: string;
  description: string;
  category: "program" | "api" | "prompting";
  arguments: ParameterSpec[];
  output: OutputContract;
  tags?: string[];
  accuracy_summary?: AccuracySummary;
}

export const EXPECTATION_KINDS = [
  "exact",
  "numeric_tolerance",
  "pattern",
  "property",
  "semantic",
] as const;

export type ExpectationKind = (typeof EXPECTATION_KINDS)[number];

export interface Expectation {
  kind: ExpectationKind;
  value?: string | number;
  abs_tol?: number;
  rel_tol?: number;
  regex?: string;
  predicate?: string;
  params?: Record<string, unknown>;
  reference?: string;
  judge_backend?: string;
}

/** Predicate catalog exposed by the verification layer. */
export const PREDICATES = [
  "is_valid_json",
  "length_between",
  "contains_all",
  "contains_any",
  "non_empty",
] as const;

export interface Observation {
  tool_name: string;
  arguments: Record<string, unknown>;
  output_kind: string;
  output_value: unknown;
  latency_ms: number;
  attempt_count: number;
}

export interface ToolErrorDoc {
  error_class: string;
  message: string;
  tool_name: string;
  attempt_count: number;
  violations?: { parameter: string; reason: string }[];
}

export type InvokeResponse =
  | { outcome: "observation"; observation: Observation }
  | { outcome: "tool_error"; error: ToolErrorDoc };

export interface ApiErrorDoc {
  status: number;
  code: string;
  message: string;
  violations?: { field: string; message: string }[];
}

export interface SubmissionDoc {
  id: string;
  kind: string;
  payload: Record<string, unknown>;
  submitter: string;
  submitted_at: string;
  status: "pending" | "accepted" | "rejected";
  review: { reviewer: string; decided_at: string; reason: string } | null;
}

export interface ReportToolEntry {
  name: string;
  category?: string;
  version?: string;
  status: "evaluated" | "unevaluated";
  accuracy?: number;
  availability?: number;
  n_cases?: number;
  history?: { round_id: number; accuracy: number | null; availability: number | null; n_cases: number }[];
  regressions?: { from_round: number; to_round: number; accuracy_drop: number; threshold: number }[];
}

export interface ReportDoc {
  round_id: number | null;
  suite_version: string | null;
  tools: ReportToolEntry[];
}

export const POLICY_KINDS = [
  "prompting_zero_shot",
  "prompting_cot",
  "react",
  "planner_executor",
  "multi_agent",
] as const;

export type PolicyKind = (typeof POLICY_KINDS)[number];

export interface AgentRunRequest {
  query: string;
  policy_config: {
    kind: PolicyKind;
    backend_id?: string;
    max_steps?: number;
    reliability_routing?: boolean;
  };
  tool_names?: string[];
  selection?: { k: number; mode: "lexical" | "llm_ranked" };
  mock_script?: unknown[];
}

export interface AgentRunResponse {
  run_id: string;
  answer: string;
  status: string;
  trace_url: string;
}

export interface TraceHeader {
  trace_id: string;
  run_id: string;
  created_at: number;
  finalized: boolean;
}

export interface TraceEvent {
  seq: number;
  ts: number;
  kind: string;
  payload: Record<string, unknown>;
  attribution?: "policy_error" | "tool_error";
}

export interface UiConfig {
  backends: string[];
  version: string;
}
