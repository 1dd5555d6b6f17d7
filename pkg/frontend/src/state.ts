/**
 * Application state: the latest server responses plus local unsent input.
 *
 * Draft text, previews, and suggestions are always server-returned strings;
 * the client adds only UI concerns (selection, focus, pending input).
 */

import type {
  AnchorView,
  EditInfo,
  PreviewResponse,
  QuickFixSuggestionView,
  SelectionView,
  SessionView,
} from "./types.js";

export interface PendingPreview extends PreviewResponse {
  intentId: string;
  newValue: string;
}

export interface QuickFixPopover {
  span: [number, number];
  status: "ok" | "no_records" | "no_matches";
  suggestions: QuickFixSuggestionView[];
}

export interface AppState {
  session: SessionView | null;
  anchors: AnchorView[];
  /** Local, unsent factor input keyed by factor_id. */
  draftSelections: Map<string, SelectionView>;
  selectedUnitId: string | null;
  pendingPreview: PendingPreview | null;
  quickfix: QuickFixPopover | null;
  rationalePrompt: EditInfo | null;
  /** Saved-but-unconfirmed anchor shown in the save dialog for renaming. */
  anchorDialog: AnchorView | null;
  finalBody: string | null;
  /** One mutation in flight at a time; buttons disable while true. */
  busy: boolean;
  lastError: string | null;
}

export function initialState(): AppState {
  return {
    session: null,
    anchors: [],
    draftSelections: new Map(),
    selectedUnitId: null,
    pendingPreview: null,
    quickfix: null,
    rationalePrompt: null,
    anchorDialog: null,
    finalBody: null,
    busy: false,
    lastError: null,
  };
}

export type Listener = (state: AppState) => void;

export class Store {
  private state: AppState = initialState();
  private listeners: Listener[] = [];

  get(): AppState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  update(patch: Partial<AppState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }
}
