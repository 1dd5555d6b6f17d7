/** Editor: unit spans, intent chips, preview diff with apply/discard. */

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { createApp, type App } from "../src/app.js";
import {
  DINNER_BODY,
  StubServer,
  analyzedSession,
  dinnerUnits,
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
  app.store.update({ session: analyzedSession() });
});

afterEach(() => stub.uninstall());

describe("editor", () => {
  it("renders the body verbatim as ordered unit spans", () => {
    const pre = root.querySelector("#draft-body")!;
    expect(pre.textContent).toBe(DINNER_BODY);
    const spans = [...root.querySelectorAll(".unit-span")];
    expect(spans.length).toBe(5);
    expect(spans.map((s) => (s as HTMLElement).dataset.label)).toEqual(
      dinnerUnits().map((u) => u.label));
  });

  it("selecting Justification lists its two intents", () => {
    root.querySelector<HTMLElement>(
      '.unit-item[data-unit-id="unit-0003"]')!.click();
    const chips = [...root.querySelectorAll(".intent-chip")]
      .map((chip) => chip.textContent);
    expect(chips.length).toBeGreaterThanOrEqual(2);
    expect(chips).toContain("[Excuse Strategy, Unavoidable circumstance, legitimizing]");
    expect(chips).toContain("[Relationship Preservation, High priority, future-oriented]");
    const highlighted = root.querySelector(".unit-span.selected")!;
    expect((highlighted as HTMLElement).dataset.unitId).toBe("unit-0003");
  });

  it("preview shows server text; discard leaves the body unchanged", async () => {
    const previewBody = DINNER_BODY.replace(
      "An unavoidable family matter requires me to travel out of town that evening.",
      "A personal emergency has come up that evening.");
    stub.on("preview_intent", () => ({
      noop: false,
      preview_body: previewBody,
      replacements: [],
      affected_unit_ids: ["unit-0003"],
      rationale_summary: "briefer excuse",
    }));
    stub.on("discard_preview", () => analyzedSession());

    root.querySelector<HTMLElement>('.unit-item[data-unit-id="unit-0003"]')!.click();
    const row = root.querySelector('.intent-row[data-intent-id="intent-0002"]')!;
    row.querySelector<HTMLSelectElement>(".intent-alternatives")!.value =
      "Personal emergency, brief";
    row.querySelector<HTMLButtonElement>(".intent-preview")!.click();
    await new Promise((resolve) => setTimeout(resolve));

    expect(root.querySelector(".preview-body")!.textContent).toBe(previewBody);
    expect(root.querySelector("#draft-body")!.textContent).toBe(DINNER_BODY);

    root.querySelector<HTMLButtonElement>("#preview-discard")!.click();
    await new Promise((resolve) => setTimeout(resolve));
    expect(root.querySelector("#draft-body")!.textContent).toBe(DINNER_BODY);
    expect(stub.callsTo("discard_preview").length).toBe(1);
    expect(stub.callsTo("apply_intent").length).toBe(0);
  });

  it("apply issues exactly one apply call and swaps in the server body", async () => {
    const newBody = DINNER_BODY.replace("I hope this email finds you well.",
      "Direct and to the point.");
    stub.on("preview_intent", () => ({
      noop: false, preview_body: newBody, replacements: [],
      affected_unit_ids: ["unit-0001"], rationale_summary: "direct",
    }));
    stub.on("apply_intent", () => analyzedSession(newBody, 1));

    root.querySelector<HTMLElement>('.unit-item[data-unit-id="unit-0001"]')!.click();
    const row = root.querySelector('.intent-row[data-intent-id="intent-0001"]')!;
    row.querySelector<HTMLButtonElement>(".intent-preview")!.click();
    await new Promise((resolve) => setTimeout(resolve));
    root.querySelector<HTMLButtonElement>("#preview-apply")!.click();
    await new Promise((resolve) => setTimeout(resolve));

    expect(stub.callsTo("apply_intent").length).toBe(1);
    expect(root.querySelector("#draft-body")!.textContent).toBe(newBody);
    expect(root.querySelector("#preview-panel")).toBeNull();
  });
});
