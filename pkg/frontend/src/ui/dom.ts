/** Minimal DOM helpers; no framework. */

type Child = Node | string | null | undefined;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | boolean | ((event: Event) => void)> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (typeof value === "function") {
      node.addEventListener(key.replace(/^on/, ""), value);
    } else if (typeof value === "boolean") {
      if (value) node.setAttribute(key, "");
      else node.removeAttribute(key);
    } else {
      node.setAttribute(key, value);
    }
  }
  for (const child of children) {
    if (child === null || child === undefined) continue;
    node.append(typeof child === "string" ? document.createTextNode(child) : child);
  }
  return node;
}

export function clear(node: HTMLElement): HTMLElement {
  node.replaceChildren();
  return node;
}

export function errorBanner(message: string, onRetry?: () => void): HTMLElement {
  const banner = el("div", { class: "banner banner-error" }, message);
  if (onRetry) {
    banner.append(" ", el("button", { class: "retry", onclick: () => onRetry() }, "retry"));
  }
  return banner;
}

export function badge(text: string, variant: string): HTMLElement {
  return el("span", { class: `badge badge-${variant}` }, text);
}
