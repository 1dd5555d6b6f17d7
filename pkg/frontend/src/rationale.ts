/**
 * Rationale banner: shown after a manual edit, asking why the change was
 * made. It is a plain banner, never a modal - typing and every other
 * control keep working while it is visible, and skipping is always allowed
 * (the edit itself is already saved server-side).
 */

import type { Actions } from "./actions.js";
import type { AppState } from "./state.js";

export function renderRationaleBanner(container: HTMLElement, state: AppState,
                                      actions: Actions): void {
  container.innerHTML = "";
  const prompt = state.rationalePrompt;
  if (!prompt) {
    return;
  }
  const banner = document.createElement("div");
  banner.id = "rationale-banner";
  banner.setAttribute("role", "status");

  const question = document.createElement("span");
  question.className = "rationale-question";
  question.textContent = "Why did you make this change?";
  banner.appendChild(question);

  const input = document.createElement("input");
  input.type = "text";
  input.id = "rationale-input";
  input.placeholder = "Optional - helps future suggestions";
  banner.appendChild(input);

  const submit = document.createElement("button");
  submit.type = "button";
  submit.id = "rationale-submit";
  submit.textContent = "Save reason";
  submit.disabled = state.busy;
  submit.addEventListener("click", () => {
    if (input.value.trim()) {
      void actions.submitRationale(input.value.trim());
    }
  });
  banner.appendChild(submit);

  const skip = document.createElement("button");
  skip.type = "button";
  skip.id = "rationale-skip";
  skip.textContent = "Skip";
  skip.addEventListener("click", () => actions.skipRationale());
  banner.appendChild(skip);

  container.appendChild(banner);
}
