/**
 * Anchor manager: saved tone configurations with rename/delete, plus the
 * save-from-session dialog. The dialog shows the server-suggested name and
 * lets the user edit it before confirming; cancelling discards the
 * provisional anchor.
 */

import type { Actions } from "./actions.js";
import type { AppState } from "./state.js";

export function renderAnchorManager(container: HTMLElement, state: AppState,
                                    actions: Actions): void {
  container.innerHTML = "";
  const panel = document.createElement("div");
  panel.id = "anchor-manager";

  const list = document.createElement("ul");
  list.id = "anchor-list";
  for (const anchor of state.anchors) {
    const item = document.createElement("li");
    item.className = "anchor-item";
    item.dataset.anchorId = anchor.anchor_id;

    const kind = document.createElement("span");
    kind.className = "anchor-kind";
    kind.textContent = anchor.kind;
    item.appendChild(kind);

    const name = document.createElement("input");
    name.type = "text";
    name.className = "anchor-name";
    name.value = anchor.name;
    item.appendChild(name);

    const rename = document.createElement("button");
    rename.type = "button";
    rename.className = "anchor-rename";
    rename.textContent = "Rename";
    rename.disabled = state.busy;
    rename.addEventListener("click", () => {
      void actions.renameAnchor(anchor.anchor_id, name.value);
    });
    item.appendChild(rename);

    const remove = document.createElement("button");
    remove.type = "button";
    remove.className = "anchor-delete";
    remove.textContent = "Delete";
    remove.disabled = state.busy;
    remove.addEventListener("click", () => {
      void actions.deleteAnchor(anchor.anchor_id);
    });
    item.appendChild(remove);

    const apply = document.createElement("button");
    apply.type = "button";
    apply.className = "anchor-apply";
    apply.textContent = "Apply to session";
    apply.disabled = state.busy || state.session?.state !== "FactorsCurated";
    apply.addEventListener("click", () => {
      void actions.applyAnchor(anchor.anchor_id);
    });
    item.appendChild(apply);

    list.appendChild(item);
  }
  panel.appendChild(list);

  const canSave = state.session?.state === "Analyzed" ||
    state.session?.state === "Finalized";
  for (const kind of ["Persona", "Situation"] as const) {
    const save = document.createElement("button");
    save.type = "button";
    save.className = "anchor-save";
    save.dataset.kind = kind;
    save.textContent = `Save as ${kind} anchor`;
    save.disabled = state.busy || !canSave;
    save.addEventListener("click", () => {
      void actions.openSaveAnchorDialog(kind);
    });
    panel.appendChild(save);
  }

  if (state.anchorDialog) {
    const dialog = document.createElement("div");
    dialog.id = "anchor-save-dialog";

    const label = document.createElement("p");
    label.textContent = "Suggested name (edit before confirming):";
    dialog.appendChild(label);

    const name = document.createElement("input");
    name.type = "text";
    name.id = "anchor-dialog-name";
    name.value = state.anchorDialog.name;  // server-suggested, pre-filled
    dialog.appendChild(name);

    const confirm = document.createElement("button");
    confirm.type = "button";
    confirm.id = "anchor-dialog-confirm";
    confirm.textContent = "Confirm";
    confirm.disabled = state.busy;
    confirm.addEventListener("click", () => {
      void actions.confirmAnchorDialog(name.value);
    });
    dialog.appendChild(confirm);

    const cancel = document.createElement("button");
    cancel.type = "button";
    cancel.id = "anchor-dialog-cancel";
    cancel.textContent = "Cancel";
    cancel.disabled = state.busy;
    cancel.addEventListener("click", () => {
      void actions.cancelAnchorDialog();
    });
    dialog.appendChild(cancel);

    panel.appendChild(dialog);
  }

  container.appendChild(panel);
}
