/** Integration parity: the UI's controllers against a live service, compared
 * with the CLI on the same fixture. Spawns `tooldock serve` on a temp state
 * dir; requires the python package to be installed (pip install -e ..). */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { buildFormModel, collectForm } from "../src/forms.js";
import { runPlayground } from "../src/playground.js";
import { invocationCount, parseTraceJsonl } from "../src/tracelog.js";

const AUTH_TOKEN = "parity-token";
const PORT = 18_000 + Math.floor(Math.random() * 10_000);
const BASE = `http://127.0.0.1:${PORT}`;

const mockScript = JSON.parse(
  readFileSync(join(__dirname, "fixtures", "react_168.json"), "utf-8"),
) as unknown[];

let stateDir: string;
let server: ChildProcess;
const api = new ApiClient(BASE, AUTH_TOKEN);

async function waitForService(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt += 1) {
    try {
      const response = await fetch(`${BASE}/v1/tools`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error("service did not become ready");
}

beforeAll(async () => {
  stateDir = mkdtempSync(join(tmpdir(), "tooldock-ui-"));
  const init = spawnSync("tooldock", ["-s", stateDir, "init"], { encoding: "utf-8" });
  expect(init.status).toBe(0);
  server = spawn(
    "tooldock",
    ["-s", stateDir, "serve", "--port", String(PORT), "--auth-token", AUTH_TOKEN],
    { stdio: "ignore" },
  );
  await waitForService();
}, 30_000);

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("playground parity with the CLI", () => {
  it("renders the same answer and invocation count as the CLI run", async () => {
    // CLI side of the comparison
    const cli = spawnSync(
      "tooldock",
      [
        "-s", stateDir, "--format", "json",
        "agent", "run",
        "--policy", "react",
        "--query", "What is 24*7?",
        "--mock-script", join(__dirname, "fixtures", "react_168.json"),
      ],
      { encoding: "utf-8" },
    );
    expect(cli.status).toBe(0);
    const cliRun = JSON.parse(cli.stdout) as { answer: string; trace_id: string };
    const cliTrace = parseTraceJsonl(
      readFileSync(join(stateDir, "state", "traces", `${cliRun.trace_id}.jsonl`), "utf-8"),
    );

    // the same fixture through the playground controller
    const ui = await runPlayground(api, {
      query: "What is 24*7?",
      policyKind: "react",
      backendId: "mock",
      mockScript,
    });

    expect(ui.answer).toBe(cliRun.answer);
    expect(ui.answer).toBe("168");
    expect(ui.invocations).toBe(invocationCount(cliTrace.events));
    expect(ui.invocations).toBe(1);
    expect(ui.status).toBe("completed");
  }, 30_000);

  it("records the retrieval subset ahead of step events when enabled", async () => {
    const ui = await runPlayground(api, {
      query: "solve this maze",
      policyKind: "react",
      backendId: "mock",
      selection: { k: 3, mode: "lexical" },
      mockScript: [{ content: "FINAL ANSWER: ok" }],
    });
    expect(ui.selectedTools).not.toBeNull();
    expect(ui.selectedTools).toContain("maze_solver");
    const kinds = ui.events.map((event) => event.kind);
    expect(kinds[0]).toBe("policy_step"); // selection event leads the trace
  }, 30_000);
});

describe("contribution flow through the form pipeline", () => {
  it("submitted case turns up pending, and acceptance plus a round shifts accuracy", async () => {
    // build the argument map exactly as the generated form would
    const calculator = await api.getTool("calculator");
    const fields = buildFormModel(calculator);
    const collected = collectForm(fields, { expression: "6*7" });
    expect(collected.complete).toBe(true);

    // a deliberately failing expectation so the accuracy visibly moves
    const confirmation = await api.submitTest({
      tool_name: "calculator",
      input: collected.args,
      expect: { kind: "exact", value: "definitely not 42" },
      submitter: "ui-test",
    });
    expect(confirmation.status).toBe("pending");

    const pending = await api.listSubmissions("pending");
    expect(pending.map((submission) => submission.id)).toContain(confirmation.submission_id);

    // verifier accepts via the API, then a fresh round runs
    await api.reviewSubmission(confirmation.submission_id, "accept", "ui-verifier");
    await api.triggerRound(4);

    const card = await api.getTool("calculator");
    expect(card.accuracy_summary).toBeDefined();
    expect(card.accuracy_summary!.accuracy).toBeCloseTo(8 / 9, 10);
    expect(card.accuracy_summary!.suite_size).toBe(9);
  }, 60_000);

  it("server-side violations surface for the form to render", async () => {
    await expect(
      api.submitTest({
        tool_name: "calculator",
        input: { bogus: 1 },
        expect: { kind: "exact", value: "4" },
      }),
    ).rejects.toMatchObject({ doc: { code: "submission_rejected" } });
  });
});

describe("form completeness against the live schema", () => {
  it("every live tool's form matches its ArgumentSchema exactly", async () => {
    const tools = await api.listTools();
    expect(tools.length).toBeGreaterThanOrEqual(10);
    for (const tool of tools) {
      const fields = buildFormModel(tool);
      expect(fields.map((field) => field.name)).toEqual(tool.arguments.map((parameter) => parameter.name));
      for (const [index, parameter] of tool.arguments.entries()) {
        expect(fields[index]!.required).toBe(parameter.required);
      }
    }
  });
});
