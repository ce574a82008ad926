/** DOM-free playground controller: run an agent, fetch its trace, and shape
 * everything the answer/log panels need. The browser page is a thin view
 * over this, which also lets the parity checks drive it headlessly. */

import type { ApiClient } from "./api.js";
import type { AgentRunRequest, PolicyKind, TraceEvent } from "./types.js";
import { groupEvents, invocationCount, parseTraceJsonl, selectedToolSubset, type EventGroup } from "./tracelog.js";

export interface PlaygroundRequest {
  query: string;
  policyKind: PolicyKind;
  backendId: string;
  maxSteps?: number;
  toolNames?: string[];
  selection?: { k: number; mode: "lexical" | "llm_ranked" };
  reliabilityRouting?: boolean;
  mockScript?: unknown[];
}

export interface PlaygroundResult {
  runId: string;
  answer: string;
  status: string;
  traceUrl: string;
  traceId: string;
  events: TraceEvent[];
  groups: EventGroup[];
  invocations: number;
  selectedTools: string[] | null;
}

export async function runPlayground(api: ApiClient, request: PlaygroundRequest): Promise<PlaygroundResult> {
  const body: AgentRunRequest = {
    query: request.query,
    policy_config: {
      kind: request.policyKind,
      backend_id: request.backendId,
      ...(request.maxSteps !== undefined ? { max_steps: request.maxSteps } : {}),
      ...(request.reliabilityRouting !== undefined ? { reliability_routing: request.reliabilityRouting } : {}),
    },
  };
  if (request.toolNames && request.toolNames.length > 0) body.tool_names = request.toolNames;
  if (request.selection) body.selection = request.selection;
  if (request.mockScript) body.mock_script = request.mockScript;

  const run = await api.runAgent(body);
  const traceText = await api.fetchTraceText(run.trace_url);
  const { header, events } = parseTraceJsonl(traceText);
  return {
    runId: run.run_id,
    answer: run.answer,
    status: run.status,
    traceUrl: run.trace_url,
    traceId: header.trace_id,
    events,
    groups: groupEvents(events),
    invocations: invocationCount(events),
    selectedTools: selectedToolSubset(events),
  };
}
