/**
 * Application shell: wires the store, actions, and components together and
 * re-renders everything on each state change. The session is bootstrapped
 * from the ?session= URL parameter or from the task form.
 */

import { Actions } from "./actions.js";
import { ApiClient } from "./api.js";
import { renderAnchorManager } from "./anchors.js";
import { renderEditor } from "./editor.js";
import { renderFactorPanel } from "./factorPanel.js";
import { renderQuickfix } from "./quickfix.js";
import { renderRationaleBanner } from "./rationale.js";
import { Store } from "./state.js";

export interface App {
  store: Store;
  actions: Actions;
  render: () => void;
}

const SECTIONS = ["task-section", "factor-section", "editor-section",
                  "quickfix-section", "rationale-section",
                  "anchor-section", "error-section"] as const;

function section(root: HTMLElement, id: string): HTMLElement {
  let element = root.querySelector<HTMLElement>(`#${id}`);
  if (!element) {
    element = document.createElement("section");
    element.id = id;
    root.appendChild(element);
  }
  return element;
}

function renderTaskForm(container: HTMLElement, actions: Actions,
                        busy: boolean, hasSession: boolean): void {
  container.innerHTML = "";
  if (hasSession) {
    return;
  }
  const task = document.createElement("textarea");
  task.id = "task-input";
  task.placeholder = "What is this email for?";
  const recipient = document.createElement("input");
  recipient.id = "recipient-input";
  recipient.placeholder = "Who receives it? (optional)";
  const start = document.createElement("button");
  start.type = "button";
  start.id = "start-session";
  start.textContent = "Start";
  start.disabled = busy;
  start.addEventListener("click", () => {
    void actions.createSession({
      task_description: task.value,
      recipient_hint: recipient.value.trim() || null,
    });
  });
  container.append(task, recipient, start);
}

export function createApp(root: HTMLElement, baseUrl = ""): App {
  const store = new Store();
  const actions = new Actions(new ApiClient(baseUrl), store);

  const render = () => {
    const state = store.get();
    for (const id of SECTIONS) {
      section(root, id);
    }
    renderTaskForm(section(root, "task-section"), actions, state.busy,
      state.session !== null);
    renderFactorPanel(section(root, "factor-section"), state, actions);
    renderEditor(section(root, "editor-section"), state, actions);
    renderQuickfix(section(root, "quickfix-section"), state, actions);
    renderRationaleBanner(section(root, "rationale-section"), state, actions);
    renderAnchorManager(section(root, "anchor-section"), state, actions);

    const errors = section(root, "error-section");
    errors.innerHTML = "";
    if (state.lastError) {
      const note = document.createElement("p");
      note.className = "error-note";
      note.textContent = state.lastError;
      errors.appendChild(note);
    }
  };

  store.subscribe(render);
  render();
  return { store, actions, render };
}

export async function bootstrap(root: HTMLElement, baseUrl = ""): Promise<App> {
  const app = createApp(root, baseUrl);
  await app.actions.refreshAnchors().catch(() => undefined);
  const params = new URLSearchParams(window.location.search);
  const sessionId = params.get("session");
  if (sessionId) {
    const session = await new ApiClient(baseUrl).getSession(sessionId);
    app.store.update({ session });
  }
  return app;
}
