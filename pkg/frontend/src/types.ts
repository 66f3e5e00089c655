/** Wire types of the translation service JSON API. */

export interface Annotation {
  code: string;
  excerpt: string;
  suggestion: string | null;
}

export interface SegmentView {
  doc_id: string;
  seg_id: number;
  source: string;
  machine_translation: string | null;
  annotations: Annotation[];
  final: string | null;
  origin: string;
  version: number;
}

export interface DocumentSummary {
  doc_id: string;
  segments: number;
  edited: number;
}

export interface CodeInfo {
  code: string;
  category: string;
  description: string;
}

export type EditScope = "segment" | "replace-all-occurrences";

export interface EditRequest {
  doc_id: string;
  scope: EditScope;
  seg_id?: number;
  edited_translation?: string;
  editor_annotations?: Annotation[];
  base_version?: number;
  find?: string;
  replace?: string;
}

export interface ReplaceAllResult {
  doc_id: string;
  changed_segments: number;
  replacements: number;
}

export type JobState = "queued" | "running" | "done" | "failed";

export interface Job {
  job_id: string;
  doc_id: string;
  config_summary: string;
  state: JobState;
  total: number;
  done: number;
  failed_segments: number;
  error: string | null;
  created_at: number;
}

export interface RunRequest {
  doc_id: string;
  config: Record<string, unknown>;
  seg_ids?: number[];
  manual_annotations?: Record<number, string>;
}

export interface RunLogRecord {
  run_id: string;
  doc_id: string;
  segment: number;
  phase: string;
  prompt: string;
  response: string;
  warnings: string[];
  input_tokens: number;
  output_tokens: number;
  backend_id: string;
  estimated_usage: boolean;
  example_keys: [string, number][];
  timestamp: number;
}

export interface RunCost {
  job_id: string;
  doc_id: string;
  source_words: number;
  api_per_role: Record<string, string>;
  api_total: string;
  human_translation: string;
  human_editing: string;
  ratio_vs_human_translation?: number;
}

export interface SheetRow {
  segment_no: number;
  sentence_no: number;
  source: string;
  blinded_id: string;
  translation: string;
}

export interface Sheet {
  sheet_id: string;
  rows: SheetRow[];
}

export interface ScoreRow {
  segment_no: number;
  sentence_no: number;
  blinded_id: string;
  a: number;
  c: number;
  s: number;
}

export interface SystemScore {
  system_id: string;
  a: number;
  c: number;
  s: number;
  acs: number;
  deltas: Record<string, string> | null;
}
