/** Provisional verdict preview for the run-before-submit table.
 *
 * This is the single deliberate exception to "the UI computes nothing": a
 * client-side preview of how a case would score, always labeled provisional.
 * Semantic checks need the server-side judge and preview as "n/a".
 */

import type { Expectation } from "./types.js";

export interface ProvisionalVerdict {
  verdict: "pass" | "fail" | "n/a";
  detail: string;
  provisional: true;
}

function numericPreview(expect: Expectation, text: string): ProvisionalVerdict {
  const out = Number(text.trim());
  if (text.trim() === "" || Number.isNaN(out)) {
    return { verdict: "fail", detail: `output is not numeric: ${text}`, provisional: true };
  }
  const expected = Number(expect.value);
  const delta = Math.abs(out - expected);
  const absOk = expect.abs_tol !== undefined && delta <= expect.abs_tol;
  const relOk = expect.rel_tol !== undefined && delta <= expect.rel_tol * Math.abs(expected);
  if (absOk || relOk) return { verdict: "pass", detail: `|Δ| = ${delta}`, provisional: true };
  return { verdict: "fail", detail: `|Δ| = ${delta} outside tolerance`, provisional: true };
}

function propertyPreview(expect: Expectation, text: string): ProvisionalVerdict {
  const params = (expect.params ?? {}) as Record<string, unknown>;
  let holds: boolean | undefined;
  switch (expect.predicate) {
    case "is_valid_json":
      try {
        JSON.parse(text);
        holds = true;
      } catch {
        holds = false;
      }
      break;
    case "length_between": {
      const min = (params.min as number | undefined) ?? 0;
      const max = (params.max as number | undefined) ?? Number.POSITIVE_INFINITY;
      holds = text.length >= min && text.length <= max;
      break;
    }
    case "contains_all":
      holds = ((params.values as string[] | undefined) ?? []).every((needle) => text.includes(needle));
      break;
    case "contains_any":
      holds = ((params.values as string[] | undefined) ?? []).some((needle) => text.includes(needle));
      break;
    case "non_empty":
      holds = text.trim() !== "";
      break;
    default:
      return { verdict: "n/a", detail: `predicate ${expect.predicate} previews server-side`, provisional: true };
  }
  return {
    verdict: holds ? "pass" : "fail",
    detail: `property ${expect.predicate} ${holds ? "holds" : "violated"}`,
    provisional: true,
  };
}

export function provisionalVerdict(expect: Expectation, outputText: string): ProvisionalVerdict {
  switch (expect.kind) {
    case "exact": {
      const got = outputText.replace(/\s+$/u, "");
      const want = String(expect.value ?? "").replace(/\s+$/u, "");
      return got === want
        ? { verdict: "pass", detail: "exact match", provisional: true }
        : { verdict: "fail", detail: `expected ${JSON.stringify(want)}, got ${JSON.stringify(got)}`, provisional: true };
    }
    case "numeric_tolerance":
      return numericPreview(expect, outputText);
    case "pattern": {
      let matched: boolean;
      try {
        matched = new RegExp(`^(?:${expect.regex ?? ""})$`, "u").test(outputText);
      } catch {
        return { verdict: "n/a", detail: "regex not previewable in this browser", provisional: true };
      }
      return {
        verdict: matched ? "pass" : "fail",
        detail: matched ? `matched /${expect.regex}/` : `no full match for /${expect.regex}/`,
        provisional: true,
      };
    }
    case "property":
      return propertyPreview(expect, outputText);
    case "semantic":
      return { verdict: "n/a", detail: "semantic equivalence is judged server-side", provisional: true };
  }
}
