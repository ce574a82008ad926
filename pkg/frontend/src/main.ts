/** SPA entry point: hash routing between the three pages. */

import { ApiClient } from "./api.js";
import { clear, el } from "./ui/dom.js";
import { renderContributePage } from "./ui/contribute_page.js";
import { renderPlaygroundPage } from "./ui/playground_page.js";
import { renderToolsPage } from "./ui/tools_page.js";

const api = new ApiClient("");

const ROUTES: Record<string, (api: ApiClient, root: HTMLElement) => Promise<void>> = {
  "#tools": renderToolsPage,
  "#contribute": (client, root) => renderContributePage(client, root),
  "#playground": renderPlaygroundPage,
};

function navigate(): void {
  const root = document.getElementById("app");
  if (!root) return;
  const route = ROUTES[window.location.hash] ?? renderToolsPage;
  for (const link of document.querySelectorAll("nav a")) {
    link.classList.toggle("active", link.getAttribute("href") === (window.location.hash || "#tools"));
  }
  void route(api, root);
}

window.addEventListener("hashchange", navigate);
window.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (root) clear(root).append(el("p", { class: "muted" }, "loading…"));
  navigate();
});
