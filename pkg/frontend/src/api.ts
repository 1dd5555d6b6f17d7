/**
 * Typed client for the composition service HTTP API.
 *
 * Every method maps 1:1 onto a documented endpoint; nothing else is ever
 * requested, which the contract tests enforce with a route-checking stub.
 */

import type {
  AnchorView,
  ApiErrorBody,
  EditResponse,
  FinalizeResponse,
  PreviewResponse,
  QuickFixQueryResponse,
  SelectionView,
  SessionView,
  StylebookRecordView,
  TaskView,
} from "./types.js";

export class ApiRequestError extends Error {
  readonly status: number;
  readonly code: string;
  readonly details: Record<string, unknown>;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.status = status;
    this.code = body.code;
    this.details = body.details ?? {};
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiRequestError(response.status, payload as ApiErrorBody);
    }
    return payload as T;
  }

  // -- sessions ------------------------------------------------------------

  createSession(task: TaskView): Promise<SessionView> {
    return this.request("POST", "/sessions", task);
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  applyAnchor(sessionId: string, anchorId: string): Promise<SessionView> {
    return this.request("POST", `/sessions/${sessionId}/anchor/${anchorId}`);
  }

  submitFactors(sessionId: string, selections: SelectionView[]): Promise<SessionView> {
    return this.request("POST", `/sessions/${sessionId}/factors`, { selections });
  }

  generate(sessionId: string): Promise<SessionView> {
    return this.request("POST", `/sessions/${sessionId}/generate`);
  }

  // -- intents ---------------------------------------------------------------

  previewIntent(sessionId: string, intentId: string,
                newValue: string): Promise<PreviewResponse> {
    return this.request("POST",
      `/sessions/${sessionId}/intents/${intentId}/preview`,
      { new_value: newValue });
  }

  applyIntent(sessionId: string, intentId: string,
              newValue: string): Promise<SessionView> {
    return this.request("POST",
      `/sessions/${sessionId}/intents/${intentId}/apply`,
      { new_value: newValue });
  }

  discardPreview(sessionId: string, intentId: string): Promise<SessionView> {
    return this.request("POST",
      `/sessions/${sessionId}/intents/${intentId}/discard`);
  }

  // -- quickfix ----------------------------------------------------------------

  quickfixQuery(sessionId: string, start: number,
                end: number): Promise<QuickFixQueryResponse> {
    return this.request("POST", `/sessions/${sessionId}/quickfix/query`,
      { start, end });
  }

  quickfixApply(sessionId: string, recordId: string, start: number,
                end: number): Promise<SessionView> {
    return this.request("POST", `/sessions/${sessionId}/quickfix/apply`,
      { record_id: recordId, start, end });
  }

  quickfixUndo(sessionId: string): Promise<SessionView> {
    return this.request("POST", `/sessions/${sessionId}/quickfix/undo`);
  }

  // -- edits -------------------------------------------------------------------

  manualEdit(sessionId: string, start: number, end: number, newText: string,
             rationale?: string): Promise<EditResponse> {
    return this.request("POST", `/sessions/${sessionId}/edits`,
      { start, end, new_text: newText, rationale: rationale ?? null });
  }

  attachRationale(sessionId: string, editSeq: number,
                  rationale: string): Promise<{ record_id: string }> {
    return this.request("POST",
      `/sessions/${sessionId}/edits/${editSeq}/rationale`, { rationale });
  }

  // -- anchors and stylebook ------------------------------------------------------

  saveAnchorFromSession(sessionId: string, kind: "Persona" | "Situation",
                        nameOverride?: string): Promise<AnchorView> {
    return this.request("POST", `/sessions/${sessionId}/anchors`,
      { kind, name_override: nameOverride ?? null });
  }

  finalize(sessionId: string): Promise<FinalizeResponse> {
    return this.request("POST", `/sessions/${sessionId}/finalize`);
  }

  listAnchors(): Promise<{ anchors: AnchorView[] }> {
    return this.request("GET", "/anchors");
  }

  renameAnchor(anchorId: string, name: string): Promise<AnchorView> {
    return this.request("PATCH", `/anchors/${anchorId}`, { name });
  }

  deleteAnchor(anchorId: string): Promise<{ deleted: boolean; found: boolean }> {
    return this.request("DELETE", `/anchors/${anchorId}`);
  }

  listRecords(): Promise<{ records: StylebookRecordView[] }> {
    return this.request("GET", "/stylebook");
  }

  deleteRecord(recordId: string): Promise<{ deleted: boolean; found: boolean }> {
    return this.request("DELETE", `/stylebook/${recordId}`);
  }
}
