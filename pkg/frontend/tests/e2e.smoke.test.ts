/**
 * End-to-end smoke: drive the real backend (served with the committed mock
 * transcript, no network beyond localhost) through the browser UI in jsdom,
 * covering create -> factors -> generate -> intent-apply -> quickfix ->
 * save-anchor -> finalize, and compare the final body with the CLI replay
 * of the same committed script.
 */

import { execFile, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { promisify } from "node:util";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { createApp, type App } from "../src/app.js";

const execFileAsync = promisify(execFile);

const REPO_ROOT = resolve(__dirname, "..", "..");
const FIXTURES = join(REPO_ROOT, "fixtures");
const PORT = 8900 + (process.pid % 90);
const BASE = `http://127.0.0.1:${PORT}`;

interface Script {
  steps: {
    op: string;
    task?: { task_description: string; recipient_hint?: string };
    selections?: { factor_id: string; selected_option: string | null;
                   elaboration: string | null; skipped: boolean }[];
    intent_id?: string;
    new_value?: string;
    span?: [number, number];
    new_text?: string;
    rationale?: string;
    record_id?: string;
    kind?: string;
  }[];
}

let server: ChildProcess;
let script: Script;
let cliFinalBody: string;

async function waitForServer(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt += 1) {
    try {
      const response = await fetch(`${BASE}/anchors`);
      if (response.ok) {
        return;
      }
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error("backend server did not come up");
}

beforeAll(async () => {
  const workDir = mkdtempSync(join(tmpdir(), "tonemail-e2e-"));
  const config = {
    store_path: join(workDir, "server_store.json"),
    gateway: {
      mode: "mock",
      transcript_path: join(FIXTURES, "dinner_transcript.json"),
    },
  };
  const configPath = join(workDir, "config.json");
  writeFileSync(configPath, JSON.stringify(config));

  server = spawn("python3", ["-m", "tonemail.cli", "serve",
                             "--config", configPath,
                             "--host", "127.0.0.1", "--port", String(PORT)],
                 { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] });
  server.stderr?.on("data", (chunk) => {
    process.stderr.write(`[server] ${chunk}`);
  });
  await waitForServer();

  script = JSON.parse(
    readFileSync(join(FIXTURES, "dinner_script.json"), "utf-8")) as Script;

  const replay = await execFileAsync("python3", [
    "-m", "tonemail.cli", "run", join(FIXTURES, "dinner_script.json"),
    "--mock", join(FIXTURES, "dinner_transcript.json"),
    "--store", join(workDir, "cli_store.json"),
  ], { cwd: REPO_ROOT });
  cliFinalBody = replay.stdout.replace(/\n$/, "");
}, 60000);

afterAll(() => {
  server?.kill();
});

function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 25));
}

async function untilIdle(app: App): Promise<void> {
  for (let attempt = 0; attempt < 400; attempt += 1) {
    if (!app.store.get().busy) {
      return;
    }
    await flush();
  }
  throw new Error("UI stayed busy");
}

function step(op: string) {
  const found = script.steps.find((s) => s.op === op);
  if (!found) {
    throw new Error(`committed script has no ${op} step`);
  }
  return found;
}

describe("end-to-end smoke against the real backend", () => {
  it("completes the dinner flow with the same final body as the CLI replay",
     async () => {
    document.body.innerHTML = '<div id="root"></div>';
    const root = document.getElementById("root")!;
    const app = createApp(root, BASE);

    // Task entry, from the committed script.
    const task = step("create_session").task!;
    root.querySelector<HTMLTextAreaElement>("#task-input")!.value =
      task.task_description;
    root.querySelector<HTMLInputElement>("#recipient-input")!.value =
      task.recipient_hint ?? "";
    root.querySelector<HTMLButtonElement>("#start-session")!.click();
    await untilIdle(app);
    expect(app.store.get().session?.state).toBe("FactorsCurated");

    // Factor panel: click the chips the committed script selected.
    for (const selection of step("submit_factors").selections!) {
      const chip = root.querySelector<HTMLButtonElement>(
        `.factor-row[data-factor-id="${selection.factor_id}"] ` +
        `.factor-chip[data-option="${selection.selected_option}"]`);
      expect(chip, `chip for ${selection.factor_id}`).not.toBeNull();
      chip!.click();
    }
    root.querySelector<HTMLButtonElement>("#submit-factors")!.click();
    await untilIdle(app);
    root.querySelector<HTMLButtonElement>("#generate-draft")!.click();
    await untilIdle(app);

    const analyzed = app.store.get().session!;
    expect(analyzed.state).toBe("Analyzed");
    expect(analyzed.units.length).toBe(5);
    expect(analyzed.intents.length).toBe(3);
    // The committed link graph: Justification carries two intents.
    root.querySelector<HTMLElement>('.unit-item[data-unit-id="unit-0003"]')!
      .click();
    expect(root.querySelectorAll(".intent-chip").length).toBeGreaterThanOrEqual(2);

    // Intent preview + apply, per the committed script.
    const intentStep = step("apply_intent");
    const row = root.querySelector(
      `.intent-row[data-intent-id="${intentStep.intent_id}"]`)!;
    row.querySelector<HTMLSelectElement>(".intent-alternatives")!.value =
      intentStep.new_value!;
    row.querySelector<HTMLButtonElement>(".intent-preview")!.click();
    await untilIdle(app);
    expect(app.store.get().pendingPreview?.preview_body).toBeTruthy();
    root.querySelector<HTMLButtonElement>("#preview-apply")!.click();
    await untilIdle(app);
    expect(app.store.get().session?.draft?.revision).toBe(1);

    // Manual edit with rationale (teaches the stylebook).
    const editStep = step("manual_edit");
    const form = root.querySelector("#manual-edit-form")!;
    form.querySelector<HTMLInputElement>(".edit-start")!.value =
      String(editStep.span![0]);
    form.querySelector<HTMLInputElement>(".edit-end")!.value =
      String(editStep.span![1]);
    form.querySelector<HTMLInputElement>(".edit-text")!.value =
      editStep.new_text!;
    form.querySelector<HTMLInputElement>(".edit-rationale")!.value =
      editStep.rationale!;
    form.querySelector<HTMLButtonElement>("#manual-edit-submit")!.click();
    await untilIdle(app);
    expect(app.store.get().session?.draft?.revision).toBe(2);

    // QuickFix over the committed span; accept the learned record.
    const quickfixStep = step("quickfix_apply");
    const editForm = root.querySelector("#manual-edit-form")!;
    editForm.querySelector<HTMLInputElement>(".edit-start")!.value =
      String(quickfixStep.span![0]);
    editForm.querySelector<HTMLInputElement>(".edit-end")!.value =
      String(quickfixStep.span![1]);
    editForm.querySelector<HTMLButtonElement>("#quickfix-open")!.click();
    await untilIdle(app);
    const suggestion = root.querySelector<HTMLElement>(".quickfix-suggestion");
    expect(suggestion?.dataset.recordId).toBe(quickfixStep.record_id);
    suggestion!.querySelector<HTMLButtonElement>(".quickfix-accept")!.click();
    await untilIdle(app);
    expect(app.store.get().session?.draft?.revision).toBe(3);

    // Save the anchor (keep the server-suggested name), then finalize.
    root.querySelector<HTMLButtonElement>('.anchor-save[data-kind="Persona"]')!
      .click();
    await untilIdle(app);
    const suggestedName =
      root.querySelector<HTMLInputElement>("#anchor-dialog-name")!.value;
    expect(suggestedName).toBe("Familiar Senior Academic Mentors");
    root.querySelector<HTMLButtonElement>("#anchor-dialog-confirm")!.click();
    await untilIdle(app);

    root.querySelector<HTMLButtonElement>("#finalize-session")!.click();
    await untilIdle(app);

    const uiFinalBody = root.querySelector("#final-body")!.textContent;
    expect(uiFinalBody).toBe(cliFinalBody);
    const pinned = readFileSync(join(FIXTURES, "dinner_final_body.txt"), "utf-8");
    expect(uiFinalBody).toBe(pinned);
  }, 60000);
});
