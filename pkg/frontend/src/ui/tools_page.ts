/** Tool browser: cards with category badge and current intrinsic accuracy. */

import type { ApiClient } from "../api.js";
import type { ToolCard } from "../types.js";
import { badge, clear, el, errorBanner } from "./dom.js";

function accuracyGauge(card: ToolCard): HTMLElement {
  const summary = card.accuracy_summary;
  if (!summary) return el("span", { class: "gauge gauge-none" }, "unevaluated");
  const percent = Math.round(summary.accuracy * 100);
  const wrapper = el(
    "span",
    { class: "gauge", title: `suite of ${summary.suite_size}, evaluated ${summary.evaluated_at}` },
    el("span", { class: "gauge-bar" }, el("span", { class: "gauge-fill", style: `width:${percent}%` } as never)),
    ` ${percent}%`,
  );
  return wrapper;
}

function schemaTable(card: ToolCard): HTMLElement {
  const rows = card.arguments.map((parameter) =>
    el(
      "tr",
      {},
      el("td", {}, el("code", {}, parameter.name), parameter.required ? " *" : ""),
      el("td", {}, parameter.type),
      el("td", {}, parameter.description || ""),
    ),
  );
  return el(
    "table",
    { class: "schema-table" },
    el("thead", {}, el("tr", {}, el("th", {}, "parameter"), el("th", {}, "type"), el("th", {}, "description"))),
    el("tbody", {}, ...rows),
  );
}

function toolCard(card: ToolCard): HTMLElement {
  const details = el(
    "details",
    {},
    el("summary", {}, "argument schema & output"),
    schemaTable(card),
    el("p", { class: "muted" }, `output: ${card.output.kind}${card.output.description ? " — " + card.output.description : ""}`),
    card.tags?.length ? el("p", { class: "muted" }, `tags: ${card.tags.join(", ")}`) : null,
  );
  return el(
    "article",
    { class: "card" },
    el("header", {}, el("h3", {}, card.name), badge(card.category, card.category)),
    el("p", {}, card.description),
    el("p", {}, "intrinsic accuracy: ", accuracyGauge(card)),
    details,
  );
}

export async function renderToolsPage(api: ApiClient, root: HTMLElement): Promise<void> {
  clear(root);
  root.append(el("h2", {}, "Toolbox"));
  try {
    const cards = await api.listTools();
    const grid = el("div", { class: "card-grid" }, ...cards.map(toolCard));
    root.append(grid);
  } catch (error) {
    root.append(errorBanner(`failed to load tools: ${String(error)}`, () => renderToolsPage(api, root)));
  }
}
