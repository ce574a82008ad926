/** Typed client for the service REST API. The UI never recomputes what the
 * service already decided; everything shown comes from these calls. */

import type {
  AgentRunRequest,
  AgentRunResponse,
  ApiErrorDoc,
  Expectation,
  InvokeResponse,
  ReportDoc,
  SubmissionDoc,
  ToolCard,
  UiConfig,
} from "./types.js";

export class ApiError extends Error {
  constructor(public readonly doc: ApiErrorDoc) {
    super(doc.message);
  }
}

async function parseError(response: Response): Promise<never> {
  let doc: ApiErrorDoc;
  try {
    doc = (await response.json()) as ApiErrorDoc;
  } catch {
    doc = { status: response.status, code: "unreadable_error", message: response.statusText };
  }
  throw new ApiError(doc);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly authToken?: string,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown, auth = false): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (auth && this.authToken) headers["Authorization"] = `Bearer ${this.authToken}`;
    const response = await fetch(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  listTools(): Promise<ToolCard[]> {
    return this.request("GET", "/v1/tools");
  }

  getTool(name: string): Promise<ToolCard> {
    return this.request("GET", `/v1/tools/${encodeURIComponent(name)}`);
  }

  invokeTool(name: string, args: Record<string, unknown>): Promise<InvokeResponse> {
    return this.request("POST", `/v1/tools/${encodeURIComponent(name)}/invoke`, args);
  }

  getReliability(name: string): Promise<Record<string, unknown>> {
    return this.request("GET", `/v1/tools/${encodeURIComponent(name)}/reliability`);
  }

  submitTest(payload: {
    tool_name: string;
    input: Record<string, unknown>;
    expect: Expectation;
    notes?: string;
    submitter?: string;
  }): Promise<{ submission_id: string; status: string }> {
    return this.request("POST", "/v1/tests", payload);
  }

  listSubmissions(status?: string): Promise<SubmissionDoc[]> {
    const suffix = status ? `?status=${encodeURIComponent(status)}` : "";
    return this.request("GET", `/v1/submissions${suffix}`);
  }

  reviewSubmission(id: string, decision: "accept" | "reject", reviewer: string, reason = ""): Promise<SubmissionDoc> {
    return this.request(
      "POST",
      `/v1/submissions/${encodeURIComponent(id)}/review`,
      { decision, reviewer, reason },
      true,
    );
  }

  triggerRound(parallelism = 4): Promise<Record<string, unknown>> {
    return this.request("POST", "/v1/eval/rounds", { parallelism }, true);
  }

  latestReport(): Promise<ReportDoc> {
    return this.request("GET", "/v1/reports/latest");
  }

  runAgent(request: AgentRunRequest): Promise<AgentRunResponse> {
    return this.request("POST", "/v1/agent/runs", request);
  }

  getRun(runId: string): Promise<Record<string, unknown>> {
    return this.request("GET", `/v1/agent/runs/${encodeURIComponent(runId)}`);
  }

  async fetchTraceText(traceUrl: string): Promise<string> {
    const response = await fetch(this.baseUrl + traceUrl);
    if (!response.ok) await parseError(response);
    return response.text();
  }

  submitFeedback(payload: {
    scope: "tool_output" | "agent_response";
    target_id: string;
    rating: "positive" | "negative";
    comment?: string;
  }): Promise<{ submission_id: string; status: string }> {
    return this.request("POST", "/v1/feedback", payload);
  }

  uiConfig(): Promise<UiConfig> {
    return this.request("GET", "/ui/config.json");
  }
}
