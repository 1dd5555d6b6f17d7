/**
 * Umbrella contract test: a full UI session issues only documented API
 * calls, and every piece of displayed text is the server's, verbatim.
 */

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { createApp, type App } from "../src/app.js";
import {
  DINNER_BODY,
  StubServer,
  analyzedSession,
  anchorView,
  curatedSession,
} from "./stubServer.js";

let stub: StubServer;
let app: App;
let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '<div id="root"></div>';
  root = document.getElementById("root")!;
  stub = new StubServer();
  stub.install();
  app = createApp(root);
});

afterEach(() => stub.uninstall());

const EDITED_BODY = DINNER_BODY.replace("I hope this email finds you well.",
  "Great seeing you at the seminar.");
const FIXED_BODY = EDITED_BODY.replace(
  "I hope the next invitation finds you equally well",
  "I look forward to the next invitation");

describe("API contract", () => {
  it("drives the whole workflow through documented endpoints only", async () => {
    stub.on("create_session", () => curatedSession());
    stub.on("submit_factors", () => ({ ...curatedSession(),
                                       state: "FactorsSubmitted" }));
    stub.on("generate", () => analyzedSession());
    stub.on("preview_intent", () => ({
      noop: false, preview_body: EDITED_BODY, replacements: [],
      affected_unit_ids: ["unit-0001"], rationale_summary: "personal opener",
    }));
    stub.on("apply_intent", () => analyzedSession(EDITED_BODY, 1));
    stub.on("manual_edit", () => ({
      ...analyzedSession(EDITED_BODY, 2),
      edit: { edit_seq: 9, record_id: "record-0001", rationale_requested: true },
    }));
    stub.on("attach_rationale", () => ({ record_id: "record-0001" }));
    stub.on("quickfix_query", () => ({
      status: "ok",
      suggestions: [{ record_id: "record-0001", target_span: [100, 140],
                      similarity_score: 0.71, proposed_text: null,
                      modification_name: "open with a personal greeting" }],
    }));
    stub.on("quickfix_apply", () => analyzedSession(FIXED_BODY, 3));
    stub.on("save_anchor", () => anchorView("anchor-0009", "Suggested"));
    stub.on("rename_anchor", (_, body) =>
      anchorView("anchor-0009", (body as { name: string }).name));
    stub.on("list_anchors", () => ({ anchors: [anchorView("anchor-0009")] }));
    stub.on("finalize", () => ({
      final_body: FIXED_BODY,
      summary: { counts: {}, timings: {}, events: 12 },
    }));
    stub.on("get_session", () => ({ ...analyzedSession(FIXED_BODY, 3),
                                    state: "Finalized" }));

    // Task entry.
    root.querySelector<HTMLTextAreaElement>("#task-input")!.value =
      "Cancel Friday's dinner politely";
    root.querySelector<HTMLButtonElement>("#start-session")!.click();
    await flush();

    // Factor panel: pick one option, submit, generate.
    root.querySelector<HTMLButtonElement>(
      '.factor-row[data-factor-id="familiarity"] .factor-chip')!.click();
    root.querySelector<HTMLButtonElement>("#submit-factors")!.click();
    await flush();
    root.querySelector<HTMLButtonElement>("#generate-draft")!.click();
    await flush();
    expect(root.querySelector("#draft-body")!.textContent).toBe(DINNER_BODY);

    // Intent preview + apply.
    root.querySelector<HTMLElement>('.unit-item[data-unit-id="unit-0001"]')!
      .click();
    root.querySelector<HTMLButtonElement>(".intent-preview")!.click();
    await flush();
    expect(root.querySelector(".preview-body")!.textContent).toBe(EDITED_BODY);
    root.querySelector<HTMLButtonElement>("#preview-apply")!.click();
    await flush();
    expect(root.querySelector("#draft-body")!.textContent).toBe(EDITED_BODY);

    // Manual edit, then answer the rationale banner.
    const form = root.querySelector("#manual-edit-form")!;
    form.querySelector<HTMLInputElement>(".edit-start")!.value = "21";
    form.querySelector<HTMLInputElement>(".edit-end")!.value = "50";
    form.querySelector<HTMLInputElement>(".edit-text")!.value = "Great seeing you.";
    form.querySelector<HTMLButtonElement>("#manual-edit-submit")!.click();
    await flush();
    root.querySelector<HTMLInputElement>("#rationale-input")!.value = "warmer";
    root.querySelector<HTMLButtonElement>("#rationale-submit")!.click();
    await flush();

    // QuickFix query + accept.
    const editForm = root.querySelector("#manual-edit-form")!;
    editForm.querySelector<HTMLInputElement>(".edit-start")!.value = "100";
    editForm.querySelector<HTMLInputElement>(".edit-end")!.value = "140";
    editForm.querySelector<HTMLButtonElement>("#quickfix-open")!.click();
    await flush();
    root.querySelector<HTMLButtonElement>(".quickfix-accept")!.click();
    await flush();
    expect(root.querySelector("#draft-body")!.textContent).toBe(FIXED_BODY);

    // Save anchor from session, keep the suggested name.
    root.querySelector<HTMLButtonElement>('.anchor-save[data-kind="Persona"]')!
      .click();
    await flush();
    root.querySelector<HTMLButtonElement>("#anchor-dialog-confirm")!.click();
    await flush();

    // Finalize.
    root.querySelector<HTMLButtonElement>("#finalize-session")!.click();
    await flush();
    expect(root.querySelector("#final-body")!.textContent).toBe(FIXED_BODY);

    // The whole run used documented routes exclusively.
    expect(stub.undocumented).toEqual([]);
    expect(stub.calls.length).toBeGreaterThanOrEqual(12);
  });

  it("renders server text without any client-side transformation", () => {
    const oddBody = "Spacing  preserved\n\n\ttabs too — and émojis ✉ and <tags> & amp;";
    const session = analyzedSession(oddBody);
    session.units = [{ unit_id: "unit-0001", label: "Statement_of_Purpose",
                       start: 0, end: oddBody.length, order_index: 0 }];
    session.links = session.links.filter((l) => l.unit_id === "unit-0001");
    app.store.update({ session });
    expect(root.querySelector("#draft-body")!.textContent).toBe(oddBody);
  });
});

function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
