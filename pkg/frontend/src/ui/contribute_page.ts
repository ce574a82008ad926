/** Test-case contribution: schema-generated input form, expectation builder
 * over the five kinds, run-before-submit bulk results, and submission. */

import { ApiClient, ApiError } from "../api.js";
import { buildFormModel, collectForm, type FormField } from "../forms.js";
import type { Expectation, ExpectationKind, ToolCard } from "../types.js";
import { EXPECTATION_KINDS, PREDICATES } from "../types.js";
import { provisionalVerdict } from "../verdict.js";
import { badge, clear, el, errorBanner } from "./dom.js";

interface BulkRow {
  args: Record<string, unknown>;
  output: string;
  verdict: string;
  detail: string;
}

export interface ContributePrefill {
  tool?: string;
  args?: Record<string, unknown>;
}

function fieldInput(field: FormField, values: Record<string, string | boolean>, onChange: () => void): HTMLElement {
  const shared: Record<string, string | ((event: Event) => void)> = {
    name: field.name,
    onchange: onChange,
    oninput: onChange,
  };
  const initial = values[field.name];
  if (field.widget === "checkbox") {
    return el("input", { ...shared, type: "checkbox", ...(initial === true ? { checked: true } : {}) });
  }
  if (field.widget === "select") {
    const blank = el("option", { value: "" }, field.required ? "choose…" : "(none)");
    const options = (field.options ?? []).map((option) =>
      el("option", { value: String(option), ...(String(initial ?? "") === String(option) ? { selected: true } : {}) }, String(option)),
    );
    return el("select", shared, blank, ...options);
  }
  if (field.widget === "textarea") {
    return el("textarea", { ...shared, rows: "3", placeholder: field.placeholder ?? "" }, String(initial ?? ""));
  }
  return el("input", {
    ...shared,
    type: field.widget === "number" ? "number" : "text",
    value: String(initial ?? ""),
    placeholder: field.placeholder ?? "",
    ...(field.required ? { required: true } : {}),
  });
}

function readValues(form: HTMLElement, fields: FormField[]): Record<string, string | boolean> {
  const values: Record<string, string | boolean> = {};
  for (const field of fields) {
    const node = form.querySelector<HTMLInputElement | HTMLTextAreaElement | HTMLSelectElement>(
      `[name="${field.name}"]`,
    );
    if (!node) continue;
    values[field.name] = field.widget === "checkbox" ? (node as HTMLInputElement).checked : node.value;
  }
  return values;
}

function expectationBuilder(onChange: () => void): { root: HTMLElement; read: () => Expectation | null } {
  const kindSelect = el(
    "select",
    { name: "expect-kind", onchange: () => rebuild() },
    ...EXPECTATION_KINDS.map((kind) => el("option", { value: kind }, kind)),
  ) as HTMLSelectElement;
  const payload = el("div", { class: "expect-payload" });
  const root = el("div", { class: "expect-builder" }, el("label", {}, "check kind: ", kindSelect), payload);

  const input = (name: string, placeholder = "", type = "text") =>
    el("input", { name, placeholder, type, oninput: onChange, onchange: onChange });

  function rebuild(): void {
    clear(payload as HTMLElement);
    const kind = kindSelect.value as ExpectationKind;
    if (kind === "exact") {
      payload.append(el("label", {}, "expected output: ", input("expect-value")));
    } else if (kind === "numeric_tolerance") {
      payload.append(
        el("label", {}, "expected number: ", input("expect-value", "", "number")),
        el("label", {}, "abs tolerance: ", input("expect-abs", "e.g. 0.001", "number")),
        el("label", {}, "rel tolerance: ", input("expect-rel", "e.g. 0.01", "number")),
      );
    } else if (kind === "pattern") {
      payload.append(el("label", {}, "regex (full match): ", input("expect-regex", "^[A-Z]{3}-\\d{4}$")));
    } else if (kind === "property") {
      payload.append(
        el(
          "label",
          {},
          "predicate: ",
          el(
            "select",
            { name: "expect-predicate", onchange: onChange },
            ...PREDICATES.map((predicate) => el("option", { value: predicate }, predicate)),
          ),
        ),
        el("label", {}, "params (JSON): ", input("expect-params", "{}")),
      );
    } else {
      payload.append(
        el("label", {}, "reference answer: ", input("expect-reference")),
        el("label", {}, "judge backend: ", input("expect-judge", "default")),
      );
    }
    onChange();
  }

  function read(): Expectation | null {
    const kind = kindSelect.value as ExpectationKind;
    const value = (name: string) => (root.querySelector(`[name="${name}"]`) as HTMLInputElement | null)?.value ?? "";
    if (kind === "exact") {
      return { kind, value: value("expect-value") };
    }
    if (kind === "numeric_tolerance") {
      const expected = Number(value("expect-value"));
      if (value("expect-value").trim() === "" || Number.isNaN(expected)) return null;
      const abs = value("expect-abs").trim();
      const rel = value("expect-rel").trim();
      if (abs === "" && rel === "") return null;
      const expectation: Expectation = { kind, value: expected };
      if (abs !== "") expectation.abs_tol = Number(abs);
      if (rel !== "") expectation.rel_tol = Number(rel);
      return expectation;
    }
    if (kind === "pattern") {
      const regex = value("expect-regex");
      if (regex.trim() === "") return null;
      try {
        new RegExp(regex, "u");
      } catch {
        return null;
      }
      return { kind, regex };
    }
    if (kind === "property") {
      const predicate = value("expect-predicate") || PREDICATES[0];
      let params: Record<string, unknown> = {};
      const raw = value("expect-params").trim();
      if (raw !== "") {
        try {
          params = JSON.parse(raw) as Record<string, unknown>;
        } catch {
          return null;
        }
      }
      return { kind, predicate, params };
    }
    const reference = value("expect-reference");
    if (reference.trim() === "") return null;
    return { kind, reference, judge_backend: value("expect-judge") || "default" };
  }

  rebuild();
  return { root, read };
}

export async function renderContributePage(
  api: ApiClient,
  root: HTMLElement,
  prefill: ContributePrefill = {},
): Promise<void> {
  clear(root);
  root.append(el("h2", {}, "Contribute a test case"));

  let tools: ToolCard[];
  try {
    tools = await api.listTools();
  } catch (error) {
    root.append(errorBanner(`failed to load tools: ${String(error)}`, () => renderContributePage(api, root, prefill)));
    return;
  }

  const picker = el(
    "select",
    { name: "tool-picker", onchange: () => mountForm() },
    ...tools.map((tool) =>
      el("option", { value: tool.name, ...(tool.name === prefill.tool ? { selected: true } : {}) }, tool.name),
    ),
  ) as HTMLSelectElement;

  const formHost = el("div", { class: "generated-form" });
  const expectHost = el("div", {});
  const resultsBody = el("tbody", {});
  const statusLine = el("p", { class: "muted" }, "fill the form; provisional verdicts are previews, the verifier decides");
  const runButton = el("button", { disabled: true }, "run tool (preview)") as HTMLButtonElement;
  const submitButton = el("button", { disabled: true }, "submit for review") as HTMLButtonElement;

  let fields: FormField[] = [];
  const builder = expectationBuilder(() => refreshButtons());

  function currentValues(): Record<string, string | boolean> {
    return readValues(formHost, fields);
  }

  function refreshButtons(): void {
    const collected = collectForm(fields, currentValues());
    const expectation = builder.read();
    runButton.disabled = !collected.complete;
    submitButton.disabled = !collected.complete || expectation === null;
  }

  function mountForm(): void {
    const tool = tools.find((candidate) => candidate.name === picker.value) ?? tools[0];
    if (!tool) return;
    fields = buildFormModel(tool);
    clear(formHost);
    for (const field of fields) {
      const values: Record<string, string | boolean> = {};
      const preset = prefill.tool === tool.name ? prefill.args?.[field.name] : undefined;
      if (preset !== undefined) {
        values[field.name] = Array.isArray(preset) ? preset.join("\n") : (preset as string | boolean);
      }
      formHost.append(
        el(
          "div",
          { class: "form-row" },
          el("label", {}, field.label, fieldInput(field, values, refreshButtons)),
          field.description ? el("small", { class: "muted" }, field.description) : null,
        ),
      );
    }
    refreshButtons();
  }

  runButton.addEventListener("click", async () => {
    const collected = collectForm(fields, currentValues());
    if (!collected.complete) return;
    const expectation = builder.read();
    try {
      const outcome = await api.invokeTool(picker.value, collected.args);
      const row: BulkRow =
        outcome.outcome === "observation"
          ? {
              args: collected.args,
              output:
                typeof outcome.observation.output_value === "string"
                  ? outcome.observation.output_value
                  : JSON.stringify(outcome.observation.output_value),
              verdict: "n/a",
              detail: "no expectation yet",
            }
          : {
              args: collected.args,
              output: `tool error (${outcome.error.error_class}): ${outcome.error.message}`,
              verdict: "error",
              detail: "tool did not produce an observation",
            };
      if (expectation && outcome.outcome === "observation") {
        const preview = provisionalVerdict(expectation, row.output);
        row.verdict = `${preview.verdict} (provisional)`;
        row.detail = preview.detail;
      }
      resultsBody.append(
        el(
          "tr",
          {},
          el("td", {}, el("code", {}, JSON.stringify(row.args))),
          el("td", {}, row.output),
          el("td", {}, row.verdict),
          el("td", {}, row.detail),
        ),
      );
    } catch (error) {
      statusLine.textContent = `invoke failed: ${String(error)}`;
    }
  });

  submitButton.addEventListener("click", async () => {
    const collected = collectForm(fields, currentValues());
    const expectation = builder.read();
    if (!collected.complete || expectation === null) return;
    try {
      const confirmation = await api.submitTest({
        tool_name: picker.value,
        input: collected.args,
        expect: expectation,
        submitter: "web",
      });
      statusLine.replaceChildren(
        badge("pending", "pending"),
        ` submission ${confirmation.submission_id} awaits verifier review`,
      );
    } catch (error) {
      if (error instanceof ApiError && error.doc.violations) {
        statusLine.textContent = error.doc.violations.map((violation) => `${violation.field}: ${violation.message}`).join("; ");
      } else {
        statusLine.textContent = `submission failed: ${String(error)}`;
      }
    }
  });

  root.append(
    el("label", {}, "tool: ", picker),
    formHost,
    expectHost,
    builder.root,
    el("div", { class: "actions" }, runButton, " ", submitButton),
    statusLine,
    el("h3", {}, "Bulk results"),
    el(
      "table",
      { class: "results-table" },
      el(
        "thead",
        {},
        el("tr", {}, el("th", {}, "input"), el("th", {}, "output"), el("th", {}, "verdict"), el("th", {}, "detail")),
      ),
      resultsBody,
    ),
  );
  mountForm();
}
