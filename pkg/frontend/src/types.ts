/**
 * View-model types: straight mirrors of the server's JSON responses.
 *
 * The client never derives business state of its own; everything rendered
 * comes from the latest server payloads plus local unsent input.
 */

export interface TaskView {
  task_description: string;
  recipient_hint?: string | null;
  session_locale?: string | null;
}

export interface FactorPromptView {
  factor_id: string;
  name: string;
  category: "Persona" | "Situation";
  description: string;
  suggested_options: string[];
  rationale: string | null;
}

export interface SelectionView {
  factor_id: string;
  selected_option: string | null;
  elaboration: string | null;
  skipped: boolean;
}

export type AdaptationStatus = "kept" | "transformed";

export interface AppliedAnchorView {
  anchor_id: string;
  entries: {
    selection: SelectionView;
    status: AdaptationStatus;
    note: string;
  }[];
}

export interface DraftView {
  draft_id: string;
  body: string;
  revision: number;
  parent_revision: number | null;
}

export interface UnitView {
  unit_id: string;
  label: string;
  start: number;
  end: number;
  order_index: number;
}

export interface IntentView {
  intent_id: string;
  intent_type: string;
  current_value: string;
  alternative_values: string[];
  origin: "derived" | "user_modified";
  rendered: string;
}

export interface LinkView {
  unit_id: string;
  intent_id: string;
}

export interface SessionView {
  session_id: string;
  state: string;
  task: TaskView;
  factor_prompts: FactorPromptView[];
  curation_warnings: string[];
  selections: SelectionView[];
  applied_anchor: AppliedAnchorView | null;
  draft: DraftView | null;
  units: UnitView[];
  intents: IntentView[];
  links: LinkView[];
}

export interface EditInfo {
  edit_seq: number;
  record_id: string | null;
  rationale_requested: boolean;
}

export type EditResponse = SessionView & { edit: EditInfo };

export interface PreviewResponse {
  noop: boolean;
  preview_body: string;
  replacements: { start: number; end: number; new_text: string }[];
  affected_unit_ids: string[];
  rationale_summary: string;
}

export interface QuickFixSuggestionView {
  record_id: string;
  target_span: [number, number];
  similarity_score: number;
  proposed_text: string | null;
  modification_name: string | null;
}

export interface QuickFixQueryResponse {
  status: "ok" | "no_records" | "no_matches";
  suggestions: QuickFixSuggestionView[];
}

export interface AnchorView {
  anchor_id: string;
  kind: "Persona" | "Situation";
  name: string;
  factor_configuration: SelectionView[];
  source_task: TaskView;
  created_at: string;
}

export interface StylebookRecordView {
  record_id: string;
  modification_name: string;
  original_text: string;
  revised_text: string;
  rationale: string;
  rationale_origin: "user_provided" | "agent_inferred";
  receiver_description: string;
  occasion_description: string;
  created_at: string;
  usage_count: number;
  acceptance_count: number;
}

export interface FinalizeResponse {
  final_body: string;
  summary: {
    counts: Record<string, number>;
    timings: Record<string, number>;
    events: number;
  };
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details: Record<string, unknown>;
}
