/**
 * Factor exploration panel: curated factors with quick-select option chips
 * and free-text elaboration, plus kept/transformed badges after an anchor
 * has been applied.
 */

import type { Actions } from "./actions.js";
import type { AppState } from "./state.js";
import type { FactorPromptView, SelectionView } from "./types.js";

function staged(state: AppState, factorId: string): SelectionView {
  return state.draftSelections.get(factorId) ?? {
    factor_id: factorId,
    selected_option: null,
    elaboration: null,
    skipped: false,
  };
}

function anchorStatus(state: AppState, factorId: string) {
  const applied = state.session?.applied_anchor;
  if (!applied) {
    return null;
  }
  return applied.entries.find((e) => e.selection.factor_id === factorId) ?? null;
}

function renderFactor(state: AppState, actions: Actions,
                      prompt: FactorPromptView): HTMLElement {
  const row = document.createElement("div");
  row.className = "factor-row";
  row.dataset.factorId = prompt.factor_id;
  const selection = staged(state, prompt.factor_id);

  const header = document.createElement("div");
  header.className = "factor-header";
  const name = document.createElement("span");
  name.className = "factor-name";
  name.textContent = prompt.name;
  header.appendChild(name);

  const status = anchorStatus(state, prompt.factor_id);
  if (status) {
    const badge = document.createElement("span");
    badge.className = `anchor-status anchor-${status.status}`;
    badge.textContent = status.status;
    badge.title = status.note;
    header.appendChild(badge);
  }
  row.appendChild(header);

  const description = document.createElement("p");
  description.className = "factor-description";
  description.textContent = prompt.description;
  row.appendChild(description);

  const chips = document.createElement("div");
  chips.className = "factor-chips";
  for (const option of prompt.suggested_options) {
    const chip = document.createElement("button");
    chip.type = "button";
    chip.className = "factor-chip";
    chip.dataset.option = option;
    chip.textContent = option;
    chip.disabled = state.busy;
    if (!selection.skipped && selection.selected_option === option) {
      chip.classList.add("selected");
    }
    chip.addEventListener("click", () => {
      actions.stageSelection({
        factor_id: prompt.factor_id,
        selected_option: selection.selected_option === option ? null : option,
        elaboration: selection.elaboration,
        skipped: false,
      });
    });
    chips.appendChild(chip);
  }
  row.appendChild(chips);

  const elaboration = document.createElement("input");
  elaboration.type = "text";
  elaboration.className = "factor-elaboration";
  elaboration.placeholder = "Add nuance in your own words";
  elaboration.value = selection.elaboration ?? "";
  elaboration.addEventListener("change", () => {
    actions.stageSelection({
      factor_id: prompt.factor_id,
      selected_option: selection.selected_option,
      elaboration: elaboration.value.trim() ? elaboration.value : null,
      skipped: false,
    });
  });
  row.appendChild(elaboration);

  const skipLabel = document.createElement("label");
  skipLabel.className = "factor-skip-label";
  const skip = document.createElement("input");
  skip.type = "checkbox";
  skip.className = "factor-skip";
  skip.checked = selection.skipped;
  skip.addEventListener("change", () => {
    actions.stageSelection(skip.checked
      ? { factor_id: prompt.factor_id, selected_option: null,
          elaboration: null, skipped: true }
      : { factor_id: prompt.factor_id, selected_option: null,
          elaboration: null, skipped: false });
  });
  skipLabel.append(skip, document.createTextNode(" skip this factor"));
  row.appendChild(skipLabel);

  return row;
}

export function renderFactorPanel(container: HTMLElement, state: AppState,
                                  actions: Actions): void {
  container.innerHTML = "";
  const session = state.session;
  if (!session) {
    return;
  }

  for (const warning of session.curation_warnings) {
    const note = document.createElement("p");
    note.className = "curation-warning";
    note.textContent = warning;
    container.appendChild(note);
  }

  for (const prompt of session.factor_prompts) {
    container.appendChild(renderFactor(state, actions, prompt));
  }

  const submit = document.createElement("button");
  submit.type = "button";
  submit.id = "submit-factors";
  submit.textContent = "Use these factors";
  submit.disabled = state.busy || session.draft !== null;
  submit.addEventListener("click", () => {
    void actions.submitFactors();
  });
  container.appendChild(submit);

  const generate = document.createElement("button");
  generate.type = "button";
  generate.id = "generate-draft";
  generate.textContent = "Generate draft";
  generate.disabled = state.busy || session.state !== "FactorsSubmitted";
  generate.addEventListener("click", () => {
    void actions.generate();
  });
  container.appendChild(generate);
}
