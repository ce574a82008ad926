/** Agent playground: policy/backend pickers, optional tool retrieval,
 * answer panel, grouped execution log with failure attribution, feedback. */

import { ApiClient, ApiError } from "../api.js";
import { runPlayground, type PlaygroundResult } from "../playground.js";
import { attributionLabel, blobRef, failureEvents } from "../tracelog.js";
import type { PolicyKind, TraceEvent } from "../types.js";
import { POLICY_KINDS } from "../types.js";
import { badge, clear, el, errorBanner } from "./dom.js";
import { renderContributePage } from "./contribute_page.js";

const DEFAULT_MOCK_SCRIPT = [
  { tool_call: { tool_name: "calculator", arguments: { expression: "24*7" } } },
  { content: "The calculator returned 168.\nFINAL ANSWER: 168" },
];

function payloadView(event: TraceEvent): HTMLElement {
  const parts: (HTMLElement | string)[] = [];
  for (const [key, value] of Object.entries(event.payload)) {
    const ref = blobRef(value);
    if (ref) {
      parts.push(
        el(
          "details",
          { class: "blob" },
          el("summary", {}, `${key}: large value (${ref.size} bytes)`),
          el("code", {}, `sha256 ${ref.sha256}`),
        ),
      );
      continue;
    }
    const text = typeof value === "string" ? value : JSON.stringify(value);
    if (text.length > 600) {
      parts.push(el("details", {}, el("summary", {}, `${key} (${text.length} chars)`), el("pre", {}, text)));
    } else {
      parts.push(el("span", { class: "kv" }, el("b", {}, key), `: ${text}  `));
    }
  }
  return el("div", { class: "payload" }, ...parts);
}

function eventView(event: TraceEvent): HTMLElement {
  const attribution = attributionLabel(event);
  return el(
    "div",
    { class: `event event-${event.kind}` },
    el("span", { class: "seq" }, `#${event.seq}`),
    " ",
    attribution ? badge(attribution, event.attribution === "policy_error" ? "policy" : "tool") : null,
    payloadView(event),
  );
}

export async function renderPlaygroundPage(api: ApiClient, root: HTMLElement): Promise<void> {
  clear(root);
  root.append(el("h2", {}, "Agent playground"));

  let backends: string[] = ["default", "mock"];
  try {
    backends = (await api.uiConfig()).backends;
  } catch {
    // config endpoint is decorative; fall back silently
  }

  const policyPicker = el(
    "select",
    { name: "policy" },
    ...POLICY_KINDS.map((kind) => el("option", { value: kind, ...(kind === "react" ? { selected: true } : {}) }, kind)),
  ) as HTMLSelectElement;
  const backendPicker = el(
    "select",
    { name: "backend" },
    ...backends.map((backend) => el("option", { value: backend }, backend)),
  ) as HTMLSelectElement;
  const queryBox = el("textarea", { name: "query", rows: "3", placeholder: "Ask something…" }, "What is 24*7?") as HTMLTextAreaElement;
  const retrievalToggle = el("input", { type: "checkbox", name: "retrieval" }) as HTMLInputElement;
  const kInput = el("input", { type: "number", name: "k", value: "3", min: "1" }) as HTMLInputElement;
  const modePicker = el(
    "select",
    { name: "mode" },
    el("option", { value: "lexical" }, "lexical"),
    el("option", { value: "llm_ranked" }, "llm_ranked"),
  ) as HTMLSelectElement;
  const mockScriptBox = el(
    "textarea",
    { name: "mock-script", rows: "4" },
    JSON.stringify(DEFAULT_MOCK_SCRIPT, null, 2),
  ) as HTMLTextAreaElement;
  const mockRow = el("div", { class: "form-row" }, el("label", {}, "mock script (JSON): ", mockScriptBox));
  const runButton = el("button", {}, "run agent") as HTMLButtonElement;

  const answerPanel = el("div", { class: "answer-panel" }, el("p", { class: "muted" }, "no run yet"));
  const logPanel = el("div", { class: "log-panel" });
  const feedbackPanel = el("div", { class: "feedback-panel" });

  function syncMockVisibility(): void {
    mockRow.style.display = backendPicker.value === "mock" ? "" : "none";
  }
  backendPicker.addEventListener("change", syncMockVisibility);
  syncMockVisibility();

  function renderFeedback(result: PlaygroundResult): void {
    clear(feedbackPanel);
    const comment = el("input", { type: "text", placeholder: "optional comment" }) as HTMLInputElement;
    const status = el("span", { class: "muted" });

    async function send(scope: "tool_output" | "agent_response", rating: "positive" | "negative"): Promise<void> {
      try {
        const confirmation = await api.submitFeedback({
          scope,
          target_id: result.traceId,
          rating,
          comment: comment.value || undefined,
        });
        status.textContent = ` recorded as ${confirmation.submission_id}`;
        if (rating === "negative") {
          // observed failure -> offer to turn it into a test case
          const lastInvocation = [...result.events].reverse().find((event) => event.kind === "tool_invocation");
          if (lastInvocation) {
            feedbackPanel.append(
              el(
                "button",
                {
                  onclick: () =>
                    renderContributePage(api, root, {
                      tool: String(lastInvocation.payload["tool"] ?? ""),
                      args: (lastInvocation.payload["arguments"] as Record<string, unknown>) ?? {},
                    }),
                },
                "promote to test case",
              ),
            );
          }
        }
      } catch (error) {
        status.textContent =
          error instanceof ApiError ? ` feedback rejected: ${error.doc.message}` : ` feedback failed: ${String(error)}`;
      }
    }

    feedbackPanel.append(
      el("h4", {}, "Feedback"),
      el("button", { onclick: () => send("agent_response", "positive") }, "answer 👍"),
      " ",
      el("button", { onclick: () => send("agent_response", "negative") }, "answer 👎"),
      " ",
      el("button", { onclick: () => send("tool_output", "negative") }, "tool output 👎"),
      " ",
      comment,
      status,
    );
  }

  function renderResult(result: PlaygroundResult): void {
    clear(answerPanel);
    answerPanel.append(
      el("h3", {}, "Agent answer"),
      el("p", { class: "answer" }, result.answer || "(no answer)"),
      el(
        "p",
        { class: "muted" },
        `status: ${result.status} · tool invocations: ${result.invocations} · run ${result.runId}`,
      ),
    );
    if (result.selectedTools) {
      answerPanel.append(el("p", { class: "muted" }, `selected tools: ${result.selectedTools.join(", ")}`));
    }
    clear(logPanel);
    logPanel.append(el("h3", {}, "Execution log"));
    const failures = failureEvents(result.events);
    if (failures.length > 0) {
      logPanel.append(el("p", {}, badge(`${failures.length} failure(s)`, "tool"), " see attributed events below"));
    }
    for (const group of result.groups) {
      logPanel.append(
        el(
          "section",
          { class: "log-group" },
          el("h4", {}, `${group.kind} × ${group.events.length}`),
          ...group.events.map(eventView),
        ),
      );
    }
    renderFeedback(result);
  }

  runButton.addEventListener("click", async () => {
    runButton.disabled = true;
    clear(answerPanel).append(el("p", { class: "muted" }, "running…"));
    try {
      let mockScript: unknown[] | undefined;
      if (backendPicker.value === "mock") {
        mockScript = JSON.parse(mockScriptBox.value) as unknown[];
      }
      const result = await runPlayground(api, {
        query: queryBox.value,
        policyKind: policyPicker.value as PolicyKind,
        backendId: backendPicker.value,
        selection: retrievalToggle.checked
          ? { k: Number(kInput.value), mode: modePicker.value as "lexical" | "llm_ranked" }
          : undefined,
        mockScript,
      });
      renderResult(result);
    } catch (error) {
      clear(answerPanel);
      const message = error instanceof ApiError ? `${error.doc.code}: ${error.doc.message}` : String(error);
      answerPanel.append(errorBanner(message, () => runButton.click()));
    } finally {
      runButton.disabled = false;
    }
  });

  root.append(
    el(
      "div",
      { class: "playground-controls" },
      el("label", {}, "policy: ", policyPicker),
      el("label", {}, "backend: ", backendPicker),
      el("label", {}, "tool retrieval: ", retrievalToggle, " k=", kInput, " mode=", modePicker),
      mockRow,
      el("label", {}, "query: ", queryBox),
      runButton,
    ),
    answerPanel,
    logPanel,
    feedbackPanel,
  );
}
