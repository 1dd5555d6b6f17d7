/**
 * QuickFix popover: ranked stylebook suggestions for the current selection.
 * Order comes straight from the API; accept applies via the server, dismiss
 * just closes and logs locally.
 */

import type { Actions } from "./actions.js";
import type { AppState } from "./state.js";

export function renderQuickfix(container: HTMLElement, state: AppState,
                               actions: Actions): void {
  container.innerHTML = "";
  const popover = state.quickfix;
  if (!popover) {
    return;
  }
  const panel = document.createElement("div");
  panel.id = "quickfix-popover";

  if (popover.status === "no_records") {
    const empty = document.createElement("p");
    empty.className = "quickfix-empty";
    empty.textContent = "No saved patterns yet - your edits will teach the stylebook.";
    panel.appendChild(empty);
  } else if (popover.status === "no_matches") {
    const none = document.createElement("p");
    none.className = "quickfix-empty";
    none.textContent = "No saved pattern matches this selection.";
    panel.appendChild(none);
  } else {
    const list = document.createElement("ol");
    list.id = "quickfix-suggestions";
    for (const suggestion of popover.suggestions) {
      const item = document.createElement("li");
      item.className = "quickfix-suggestion";
      item.dataset.recordId = suggestion.record_id;

      const name = document.createElement("span");
      name.className = "quickfix-name";
      name.textContent = suggestion.modification_name ?? suggestion.record_id;
      item.appendChild(name);

      const score = document.createElement("span");
      score.className = "quickfix-score";
      score.textContent = suggestion.similarity_score.toFixed(2);
      item.appendChild(score);

      const accept = document.createElement("button");
      accept.type = "button";
      accept.className = "quickfix-accept";
      accept.textContent = "Accept";
      accept.disabled = state.busy;
      accept.addEventListener("click", () => {
        void actions.acceptQuickfix(suggestion.record_id);
      });
      item.appendChild(accept);
      list.appendChild(item);
    }
    panel.appendChild(list);
  }

  const dismiss = document.createElement("button");
  dismiss.type = "button";
  dismiss.id = "quickfix-dismiss";
  dismiss.textContent = "Dismiss";
  dismiss.addEventListener("click", () => {
    console.info("quickfix dismissed", popover.span);
    actions.dismissQuickfix();
  });
  panel.appendChild(dismiss);

  container.appendChild(panel);
}
