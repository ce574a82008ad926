import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import {
  attributionLabel,
  blobRef,
  failureEvents,
  finalAnswer,
  groupEvents,
  invocationCount,
  parseTraceJsonl,
  selectedToolSubset,
} from "../src/tracelog.js";
import type { TraceEvent } from "../src/types.js";

const sample = readFileSync(join(__dirname, "fixtures", "react_168_trace.jsonl"), "utf-8");

describe("trace parsing", () => {
  it("splits header from events", () => {
    const { header, events } = parseTraceJsonl(sample);
    expect(header.finalized).toBe(true);
    expect(events.length).toBe(8);
    expect(events[0]!.seq).toBe(1);
  });

  it("names the offending line on parse failure", () => {
    const lines = sample.trim().split("\n");
    lines[2] = "{broken";
    expect(() => parseTraceJsonl(lines.join("\n"))).toThrow(/line 3/);
  });

  it("counts invocations and extracts the final answer", () => {
    const { events } = parseTraceJsonl(sample);
    expect(invocationCount(events)).toBe(1);
    expect(finalAnswer(events)).toBe("168");
    expect(failureEvents(events)).toEqual([]);
  });

  it("groups consecutive events of one kind", () => {
    const { events } = parseTraceJsonl(sample);
    const groups = groupEvents(events);
    expect(groups.map((group) => group.kind)).toEqual([
      "policy_step",
      "backend_call",
      "tool_validation",
      "tool_invocation",
      "tool_result",
      "policy_step",
      "backend_call",
      "final_answer",
    ]);
  });
});

describe("attribution and payload helpers", () => {
  const failure: TraceEvent = {
    seq: 1,
    ts: 0,
    kind: "tool_error",
    payload: { tool: "calculator", error_class: "validation" },
    attribution: "policy_error",
  };

  it("labels failure sides for the log panel", () => {
    expect(attributionLabel(failure)).toContain("policy");
    expect(attributionLabel({ ...failure, attribution: "tool_error" })).toContain("intrinsic");
    expect(attributionLabel({ ...failure, attribution: undefined })).toBeNull();
  });

  it("recognizes oversized payload blob references", () => {
    expect(blobRef({ $blob: { sha256: "abc", size: 9000 } })).toEqual({ sha256: "abc", size: 9000 });
    expect(blobRef("inline text")).toBeNull();
  });

  it("finds the retrieval subset event when present", () => {
    const events: TraceEvent[] = [
      {
        seq: 1,
        ts: 0,
        kind: "policy_step",
        payload: { phase: "tool_selection", selected: ["calculator", "maze_solver"] },
      },
    ];
    expect(selectedToolSubset(events)).toEqual(["calculator", "maze_solver"]);
    expect(selectedToolSubset([])).toBeNull();
  });
});
