// Wire types for the service API. Field names mirror the JSON payloads.

export interface ChecklistItemDoc {
  id: string;
  question: string;
  weight?: number;
  dimension?: string;
  tags?: string[];
}

export interface ChecklistDoc {
  id: string;
  level: "instance" | "corpus";
  source: string;
  items: ChecklistItemDoc[];
  metadata: Record<string, unknown>;
}

export interface ItemResultDoc {
  item_id: string;
  answer: "YES" | "NO" | "INVALID";
  confidence?: number;
  reasoning?: string;
  yes_probability?: number;
}

export interface ReportDoc {
  item_results: ItemResultDoc[];
  pass_rate: number | null;
  weighted_score: number | null;
  normalized_score: number | null;
  primary_metric: string;
  primary_score: number | null;
  invalid_count: number;
  weighted_fallback: boolean;
}

export interface EvaluateResponse {
  pipeline: string;
  checklist: ChecklistDoc;
  report: ReportDoc;
}

/** One compare result: exactly one of (checklist+report, error) is present. */
export interface MethodCardDoc {
  method: string;
  checklist?: ChecklistDoc;
  report?: ReportDoc;
  error?: string;
}

export interface CompareResponse {
  results: MethodCardDoc[];
}

export interface PipelineInfo {
  name: string;
  generator: string;
  metric: string;
  mode: string;
  use_logprobs: boolean;
  uses_reference: boolean;
  refiners: string[];
  description: string;
}

export interface NamedDescription {
  name: string;
  description: string;
}

export interface RegistryResponse {
  pipelines: PipelineInfo[];
  generators: NamedDescription[];
  refiners: NamedDescription[];
  metrics: NamedDescription[];
}

export type Collection = "checklists" | "prompts" | "pipelines";

export interface LibraryListEntry {
  id: string;
  name: string;
  updated: number;
}

export interface ChecklistEntry {
  id: string;
  name: string;
  checklist: ChecklistDoc;
  updated: number;
}

export interface PromptEntry {
  id: string;
  name: string;
  body: string;
  requires: string[];
  placeholders: string[];
  updated: number;
}

export interface PipelineEntry {
  id: string;
  name: string;
  config: Record<string, unknown>;
  updated: number;
}

export interface BatchJobDoc {
  id: string;
  config_digest: string;
  state: "queued" | "running" | "done" | "failed" | "cancelled";
  progress: { completed: number; total: number };
  created: number;
  updated: number;
  result_path: string | null;
  error: string | null;
}

export interface AggregateDoc {
  macro_pass_rate: number | null;
  drfr: number | null;
  macro_primary: number | null;
  n_targets: number;
  n_items_scored: number;
  n_invalid: number;
}

export interface EvalRecordDoc {
  kind: "record";
  id: string;
  input: string;
  target: string;
  reference: string | null;
  checklist: ChecklistDoc | string | null;
  item_results: ItemResultDoc[];
  scores: Record<string, unknown> | null;
  status: "done" | "failed";
  error: string | null;
}

export interface BatchResultsResponse {
  job: BatchJobDoc;
  records: EvalRecordDoc[];
  aggregate: AggregateDoc | null;
  checklist?: ChecklistDoc | null;
}
