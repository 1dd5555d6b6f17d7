/**
 * Actions: the only place that talks to the API.
 *
 * Each mutating action sets `busy` for its duration (the server serializes
 * per-session mutations; the client mirrors that with disabled controls)
 * and replaces state wholesale with the server's response.
 */

import { ApiClient, ApiRequestError } from "./api.js";
import type { Store } from "./state.js";
import type { SelectionView, SessionView, TaskView } from "./types.js";

export class Actions {
  constructor(private readonly api: ApiClient, private readonly store: Store) {}

  private async mutate<T>(work: () => Promise<T>): Promise<T> {
    const state = this.store.get();
    if (state.busy) {
      throw new Error("another request is in flight");
    }
    this.store.update({ busy: true, lastError: null });
    try {
      return await work();
    } catch (error) {
      const message = error instanceof ApiRequestError
        ? `${error.code}: ${error.message}`
        : String(error);
      this.store.update({ lastError: message });
      throw error;
    } finally {
      this.store.update({ busy: false });
    }
  }

  private setSession(session: SessionView): void {
    const draftSelections = new Map(this.store.get().draftSelections);
    for (const selection of session.selections) {
      draftSelections.set(selection.factor_id, selection);
    }
    this.store.update({ session, draftSelections });
  }

  // -- setup ------------------------------------------------------------------

  async createSession(task: TaskView): Promise<SessionView> {
    return this.mutate(async () => {
      const session = await this.api.createSession(task);
      this.store.update({ draftSelections: new Map() });
      this.setSession(session);
      return session;
    });
  }

  async refreshAnchors(): Promise<void> {
    const { anchors } = await this.api.listAnchors();
    this.store.update({ anchors });
  }

  async applyAnchor(anchorId: string): Promise<void> {
    await this.mutate(async () => {
      const session = await this.api.applyAnchor(this.sessionId(), anchorId);
      this.store.update({ draftSelections: new Map() });
      this.setSession(session);
    });
  }

  // -- factor panel --------------------------------------------------------------

  /** Record local (unsent) input for one factor. */
  stageSelection(selection: SelectionView): void {
    const draftSelections = new Map(this.store.get().draftSelections);
    draftSelections.set(selection.factor_id, selection);
    this.store.update({ draftSelections });
  }

  async submitFactors(): Promise<void> {
    await this.mutate(async () => {
      const selections = [...this.store.get().draftSelections.values()];
      this.setSession(await this.api.submitFactors(this.sessionId(), selections));
    });
  }

  async generate(): Promise<void> {
    await this.mutate(async () => {
      this.setSession(await this.api.generate(this.sessionId()));
    });
  }

  // -- editor ---------------------------------------------------------------------

  selectUnit(unitId: string | null): void {
    this.store.update({ selectedUnitId: unitId });
  }

  async previewIntent(intentId: string, newValue: string): Promise<void> {
    await this.mutate(async () => {
      const preview = await this.api.previewIntent(this.sessionId(), intentId,
        newValue);
      this.store.update({
        pendingPreview: { ...preview, intentId, newValue },
      });
    });
  }

  async applyPreviewedIntent(): Promise<void> {
    const pending = this.store.get().pendingPreview;
    if (!pending) {
      throw new Error("no pending preview to apply");
    }
    await this.mutate(async () => {
      const session = await this.api.applyIntent(this.sessionId(),
        pending.intentId, pending.newValue);
      this.store.update({ pendingPreview: null });
      this.setSession(session);
    });
  }

  async discardPreview(): Promise<void> {
    const pending = this.store.get().pendingPreview;
    if (!pending) {
      return;
    }
    await this.mutate(async () => {
      const session = await this.api.discardPreview(this.sessionId(),
        pending.intentId);
      this.store.update({ pendingPreview: null });
      this.setSession(session);
    });
  }

  async applyIntentDirect(intentId: string, newValue: string): Promise<void> {
    await this.mutate(async () => {
      const session = await this.api.applyIntent(this.sessionId(), intentId,
        newValue);
      this.store.update({ pendingPreview: null });
      this.setSession(session);
    });
  }

  async manualEdit(start: number, end: number, newText: string,
                   rationale?: string): Promise<void> {
    await this.mutate(async () => {
      const response = await this.api.manualEdit(this.sessionId(), start, end,
        newText, rationale);
      this.setSession(response);
      this.store.update({
        rationalePrompt: response.edit.rationale_requested ? response.edit : null,
      });
    });
  }

  async submitRationale(text: string): Promise<void> {
    const prompt = this.store.get().rationalePrompt;
    if (!prompt) {
      return;
    }
    await this.mutate(async () => {
      await this.api.attachRationale(this.sessionId(), prompt.edit_seq, text);
      this.store.update({ rationalePrompt: null });
    });
  }

  /** Dismiss the rationale banner; the edit itself is already saved. */
  skipRationale(): void {
    this.store.update({ rationalePrompt: null });
  }

  // -- quickfix ---------------------------------------------------------------------

  async queryQuickfix(start: number, end: number): Promise<void> {
    await this.mutate(async () => {
      const response = await this.api.quickfixQuery(this.sessionId(), start, end);
      this.store.update({
        quickfix: { span: [start, end], status: response.status,
                    suggestions: response.suggestions },
      });
    });
  }

  async acceptQuickfix(recordId: string): Promise<void> {
    const popover = this.store.get().quickfix;
    if (!popover) {
      throw new Error("no quickfix popover open");
    }
    await this.mutate(async () => {
      const session = await this.api.quickfixApply(this.sessionId(), recordId,
        popover.span[0], popover.span[1]);
      this.store.update({ quickfix: null });
      this.setSession(session);
    });
  }

  dismissQuickfix(): void {
    this.store.update({ quickfix: null });
  }

  async undoQuickfix(): Promise<void> {
    await this.mutate(async () => {
      this.setSession(await this.api.quickfixUndo(this.sessionId()));
    });
  }

  // -- anchors ---------------------------------------------------------------------

  async saveAnchor(kind: "Persona" | "Situation",
                   nameOverride?: string): Promise<string> {
    return this.mutate(async () => {
      const anchor = await this.api.saveAnchorFromSession(this.sessionId(), kind,
        nameOverride);
      await this.refreshAnchors();
      return anchor.anchor_id;
    });
  }

  /**
   * Save-from-session dialog flow: the server names the anchor; the dialog
   * shows that suggestion for editing. Confirming with a different name
   * renames; cancelling deletes the provisional anchor.
   */
  async openSaveAnchorDialog(kind: "Persona" | "Situation"): Promise<void> {
    await this.mutate(async () => {
      const anchor = await this.api.saveAnchorFromSession(this.sessionId(), kind);
      this.store.update({ anchorDialog: anchor });
    });
  }

  async confirmAnchorDialog(name: string): Promise<void> {
    const dialog = this.store.get().anchorDialog;
    if (!dialog) {
      return;
    }
    await this.mutate(async () => {
      if (name.trim() && name.trim() !== dialog.name) {
        await this.api.renameAnchor(dialog.anchor_id, name.trim());
      }
      this.store.update({ anchorDialog: null });
      await this.refreshAnchors();
    });
  }

  async cancelAnchorDialog(): Promise<void> {
    const dialog = this.store.get().anchorDialog;
    if (!dialog) {
      return;
    }
    await this.mutate(async () => {
      await this.api.deleteAnchor(dialog.anchor_id);
      this.store.update({ anchorDialog: null });
      await this.refreshAnchors();
    });
  }

  async renameAnchor(anchorId: string, name: string): Promise<void> {
    await this.mutate(async () => {
      await this.api.renameAnchor(anchorId, name);
      await this.refreshAnchors();
    });
  }

  async deleteAnchor(anchorId: string): Promise<void> {
    await this.mutate(async () => {
      await this.api.deleteAnchor(anchorId);
      await this.refreshAnchors();
    });
  }

  // -- finalize --------------------------------------------------------------------

  async finalize(): Promise<string> {
    return this.mutate(async () => {
      const result = await this.api.finalize(this.sessionId());
      this.store.update({ finalBody: result.final_body });
      const session = await this.api.getSession(this.sessionId());
      this.setSession(session);
      return result.final_body;
    });
  }

  private sessionId(): string {
    const session = this.store.get().session;
    if (!session) {
      throw new Error("no active session");
    }
    return session.session_id;
  }
}
