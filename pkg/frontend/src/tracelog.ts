/** Execution-trace parsing and presentation grouping.
 *
 * Traces arrive as JSONL: a header line followed by ordered events. The log
 * panel renders consecutive events of one kind as a group, with failure
 * events badged by their attribution (policy vs tool).
 */

import type { TraceEvent, TraceHeader } from "./types.js";

export interface ParsedTrace {
  header: TraceHeader;
  events: TraceEvent[];
}

export interface EventGroup {
  kind: string;
  events: TraceEvent[];
}

export interface BlobRef {
  sha256: string;
  size: number;
}

export function parseTraceJsonl(text: string): ParsedTrace {
  const lines = text.split("\n").filter((line) => line.trim() !== "");
  if (lines.length === 0) throw new Error("empty trace document");
  const header = JSON.parse(lines[0]!) as TraceHeader;
  const events = lines.slice(1).map((line, index) => {
    try {
      return JSON.parse(line) as TraceEvent;
    } catch (error) {
      throw new Error(`trace line ${index + 2}: ${String(error)}`);
    }
  });
  return { header, events };
}

/** Consecutive events of the same kind collapse into one display group. */
export function groupEvents(events: TraceEvent[]): EventGroup[] {
  const groups: EventGroup[] = [];
  for (const event of events) {
    const last = groups[groups.length - 1];
    if (last && last.kind === event.kind) {
      last.events.push(event);
    } else {
      groups.push({ kind: event.kind, events: [event] });
    }
  }
  return groups;
}

export function invocationCount(events: TraceEvent[]): number {
  return events.filter((event) => event.kind === "tool_invocation").length;
}

export function failureEvents(events: TraceEvent[]): TraceEvent[] {
  return events.filter((event) => event.attribution !== undefined && event.attribution !== null);
}

export function attributionLabel(event: TraceEvent): string | null {
  if (event.attribution === "policy_error") return "policy error (tool-use)";
  if (event.attribution === "tool_error") return "tool error (intrinsic)";
  return null;
}

/** Oversized payload values arrive as {$blob: {sha256, size}} references. */
export function blobRef(value: unknown): BlobRef | null {
  if (typeof value === "object" && value !== null && "$blob" in value) {
    const ref = (value as { $blob: BlobRef }).$blob;
    if (typeof ref?.sha256 === "string" && typeof ref?.size === "number") return ref;
  }
  return null;
}

export function selectedToolSubset(events: TraceEvent[]): string[] | null {
  for (const event of events) {
    if (event.kind === "policy_step" && event.payload["phase"] === "tool_selection") {
      return (event.payload["selected"] as string[]) ?? null;
    }
  }
  return null;
}

export function finalAnswer(events: TraceEvent[]): string | null {
  for (let i = events.length - 1; i >= 0; i -= 1) {
    const event = events[i]!;
    if (event.kind === "final_answer") return String(event.payload["answer"] ?? "");
  }
  return null;
}
