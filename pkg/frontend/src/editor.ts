/**
 * Draft editor: the body with unit spans, a unit sidebar, intent chips with
 * alternative-value preview/apply, a manual-edit form, and the QuickFix
 * trigger. All displayed text is server-returned; the client never
 * synthesizes rewrites.
 */

import type { Actions } from "./actions.js";
import type { AppState } from "./state.js";
import type { IntentView, SessionView, UnitView } from "./types.js";

function unitSpans(container: HTMLElement, state: AppState,
                   actions: Actions, session: SessionView): void {
  const body = session.draft?.body ?? "";
  const pre = document.createElement("pre");
  pre.id = "draft-body";
  const ordered = [...session.units].sort((a, b) => a.order_index - b.order_index);
  if (ordered.length === 0) {
    pre.textContent = body;
  }
  for (const unit of ordered) {
    const span = document.createElement("span");
    span.className = "unit-span";
    span.dataset.unitId = unit.unit_id;
    span.dataset.label = unit.label;
    if (unit.unit_id === state.selectedUnitId) {
      span.classList.add("selected");
    }
    span.textContent = body.slice(unit.start, unit.end);
    span.addEventListener("click", () => actions.selectUnit(unit.unit_id));
    pre.appendChild(span);
  }
  container.appendChild(pre);
}

function sidebar(container: HTMLElement, state: AppState, actions: Actions,
                 session: SessionView): void {
  const list = document.createElement("ul");
  list.id = "unit-sidebar";
  for (const unit of [...session.units].sort((a, b) => a.order_index - b.order_index)) {
    const item = document.createElement("li");
    item.className = "unit-item";
    item.dataset.unitId = unit.unit_id;
    item.textContent = unit.label;
    if (unit.unit_id === state.selectedUnitId) {
      item.classList.add("selected");
    }
    item.addEventListener("click", () => actions.selectUnit(unit.unit_id));
    list.appendChild(item);
  }
  container.appendChild(list);
}

function intentsFor(session: SessionView, unit: UnitView): IntentView[] {
  const linked = new Set(session.links
    .filter((link) => link.unit_id === unit.unit_id)
    .map((link) => link.intent_id));
  return session.intents.filter((intent) => linked.has(intent.intent_id));
}

function intentChips(container: HTMLElement, state: AppState, actions: Actions,
                     session: SessionView): void {
  const panel = document.createElement("div");
  panel.id = "intent-panel";
  const unit = session.units.find((u) => u.unit_id === state.selectedUnitId);
  if (!unit) {
    panel.textContent = "Select a unit to see the intents shaping it.";
    container.appendChild(panel);
    return;
  }
  for (const intent of intentsFor(session, unit)) {
    const row = document.createElement("div");
    row.className = "intent-row";
    row.dataset.intentId = intent.intent_id;

    const chip = document.createElement("span");
    chip.className = "intent-chip";
    chip.textContent = intent.rendered;
    row.appendChild(chip);

    const picker = document.createElement("select");
    picker.className = "intent-alternatives";
    for (const value of intent.alternative_values) {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = value;
      picker.appendChild(option);
    }
    row.appendChild(picker);

    const preview = document.createElement("button");
    preview.type = "button";
    preview.className = "intent-preview";
    preview.textContent = "Preview";
    preview.disabled = state.busy;
    preview.addEventListener("click", () => {
      void actions.previewIntent(intent.intent_id, picker.value);
    });
    row.appendChild(preview);
    panel.appendChild(row);
  }
  container.appendChild(panel);
}

function previewPanel(container: HTMLElement, state: AppState,
                      actions: Actions): void {
  const pending = state.pendingPreview;
  if (!pending) {
    return;
  }
  const panel = document.createElement("div");
  panel.id = "preview-panel";

  const note = document.createElement("p");
  note.className = "preview-rationale";
  note.textContent = pending.rationale_summary;
  panel.appendChild(note);

  const body = document.createElement("pre");
  body.className = "preview-body";
  body.textContent = pending.preview_body;  // verbatim server text
  panel.appendChild(body);

  const apply = document.createElement("button");
  apply.type = "button";
  apply.id = "preview-apply";
  apply.textContent = "Apply";
  apply.disabled = state.busy;
  apply.addEventListener("click", () => {
    void actions.applyPreviewedIntent();
  });
  panel.appendChild(apply);

  const discard = document.createElement("button");
  discard.type = "button";
  discard.id = "preview-discard";
  discard.textContent = "Discard";
  discard.disabled = state.busy;
  discard.addEventListener("click", () => {
    void actions.discardPreview();
  });
  panel.appendChild(discard);

  container.appendChild(panel);
}

function editForm(container: HTMLElement, state: AppState,
                  actions: Actions): void {
  const form = document.createElement("div");
  form.id = "manual-edit-form";

  const start = document.createElement("input");
  start.type = "number";
  start.className = "edit-start";
  const end = document.createElement("input");
  end.type = "number";
  end.className = "edit-end";
  const text = document.createElement("input");
  text.type = "text";
  text.className = "edit-text";
  text.placeholder = "Replacement text";
  const rationale = document.createElement("input");
  rationale.type = "text";
  rationale.className = "edit-rationale";
  rationale.placeholder = "Why this change? (optional)";

  const submit = document.createElement("button");
  submit.type = "button";
  submit.id = "manual-edit-submit";
  submit.textContent = "Edit";
  submit.disabled = state.busy;
  submit.addEventListener("click", () => {
    void actions.manualEdit(Number(start.value), Number(end.value), text.value,
      rationale.value.trim() || undefined);
  });

  const quickfix = document.createElement("button");
  quickfix.type = "button";
  quickfix.id = "quickfix-open";
  quickfix.textContent = "QuickFix selection";
  quickfix.disabled = state.busy;
  quickfix.addEventListener("click", () => {
    void actions.queryQuickfix(Number(start.value), Number(end.value));
  });

  form.append(start, end, text, rationale, submit, quickfix);
  container.appendChild(form);
}

export function renderEditor(container: HTMLElement, state: AppState,
                             actions: Actions): void {
  container.innerHTML = "";
  const session = state.session;
  if (!session || !session.draft) {
    return;
  }
  const layout = document.createElement("div");
  layout.className = "editor-layout";
  const main = document.createElement("div");
  main.className = "editor-main";
  const side = document.createElement("div");
  side.className = "editor-side";

  unitSpans(main, state, actions, session);
  previewPanel(main, state, actions);
  editForm(main, state, actions);
  sidebar(side, state, actions, session);
  intentChips(side, state, actions, session);

  layout.append(main, side);
  container.appendChild(layout);

  const finalize = document.createElement("button");
  finalize.type = "button";
  finalize.id = "finalize-session";
  finalize.textContent = "Finalize";
  finalize.disabled = state.busy || session.state !== "Analyzed";
  finalize.addEventListener("click", () => {
    void actions.finalize();
  });
  container.appendChild(finalize);

  if (state.finalBody !== null) {
    const final = document.createElement("pre");
    final.id = "final-body";
    final.textContent = state.finalBody;  // verbatim server text
    container.appendChild(final);
  }
}
