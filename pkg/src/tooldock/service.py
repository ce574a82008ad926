"""HTTP service exposing both workflows: tool browsing and invocation, test
submission and review, evaluation rounds, reliability reports, agent runs,
traces, and feedback.

Every non-2xx response body is an ApiError document.  Review and
round-trigger endpoints are privileged behind a shared token when one is
configured; read endpoints stay open.  Mutating endpoints validate fully
before touching persisted state, so a failed request leaves state unchanged.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import community, reliability
from .agents import PolicyConfig, PolicyConfigInvalid, new_run_id, run_agent, select_tools
from .llm import BackendRegistry, parse_script
from .runtime import Observation, ToolError, UnknownToolError, invoke
from .store import StateStore
from .trace import ExecutionTrace

ENV_STATE_DIR = "OPENTOOLS_STATE_DIR"
ENV_AUTH_TOKEN = "OPENTOOLS_AUTH_TOKEN"

DEFAULT_RUN_TIMEOUT_S = 120.0


@dataclass
class ServiceConfig:
    state_dir: str | Path
    auth_token: str | None = None
    run_timeout_s: float = DEFAULT_RUN_TIMEOUT_S
    ui_dir: str | Path | None = None
    backends: BackendRegistry | None = None

    @classmethod
    def from_env(cls, state_dir: str | Path | None = None) -> "ServiceConfig":
        return cls(
            state_dir=state_dir or os.environ.get(ENV_STATE_DIR, "state"),
            auth_token=os.environ.get(ENV_AUTH_TOKEN) or None,
        )


class ApiException(Exception):
    def __init__(self, status: int, code: str, message: str, violations: list | None = None):
        self.status = status
        self.code = code
        self.message = message
        self.violations = violations
        super().__init__(message)

    def body(self) -> dict:
        doc: dict = {"status": self.status, "code": self.code, "message": self.message}
        if self.violations is not None:
            doc["violations"] = self.violations
        return doc


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception:
        raise ApiException(400, "invalid_json", "request body is not valid JSON") from None
    if not isinstance(body, dict):
        raise ApiException(400, "invalid_body", "request body must be a JSON object")
    return body


def create_app(config: ServiceConfig) -> FastAPI:
    store = StateStore(config.state_dir)
    if not store.initialized():
        raise RuntimeError(f"state dir {config.state_dir} is not initialized (run `tooldock init` first)")
    registry = store.build_registry()
    base_backends = config.backends if config.backends is not None else BackendRegistry.from_env()

    app = FastAPI(title="tooldock", version="0.1.0")
    app.state.store = store
    app.state.registry = registry
    app.state.backends = base_backends
    app.state.config = config

    # -- error shaping -------------------------------------------------------

    @app.exception_handler(ApiException)
    async def handle_api_exception(_req: Request, exc: ApiException):
        return JSONResponse(status_code=exc.status, content=exc.body())

    @app.exception_handler(RequestValidationError)
    async def handle_validation(_req: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"status": 400, "code": "invalid_request", "message": str(exc)},
        )

    @app.exception_handler(StarletteHTTPException)
    async def handle_http_exception(_req: Request, exc: StarletteHTTPException):
        # unrouted paths and framework-raised errors keep the ApiError shape
        return JSONResponse(
            status_code=exc.status_code,
            content={"status": exc.status_code, "code": "http_error", "message": str(exc.detail)},
        )

    @app.exception_handler(Exception)
    async def handle_unexpected(_req: Request, exc: Exception):
        return JSONResponse(
            status_code=500,
            content={"status": 500, "code": "internal_error", "message": f"{type(exc).__name__}: {exc}"},
        )

    def require_token(request: Request) -> None:
        if config.auth_token is None:
            return
        supplied = request.headers.get("Authorization", "")
        if supplied != f"Bearer {config.auth_token}":
            raise ApiException(401, "unauthorized", "this endpoint requires the verifier token")

    # -- tools -----------------------------------------------------------------

    def tool_card(name: str) -> dict:
        descriptor = registry.descriptor(name)
        return descriptor.to_dict()

    @app.get("/v1/tools")
    async def list_tools():
        return [tool_card(name) for name in registry.names()]

    @app.get("/v1/tools/{name}")
    async def get_tool(name: str):
        if name not in registry:
            raise ApiException(404, "unknown_tool", f"no tool named {name!r}")
        return tool_card(name)

    @app.post("/v1/tools/{name}/invoke")
    async def invoke_tool(name: str, request: Request):
        if name not in registry:
            raise ApiException(404, "unknown_tool", f"no tool named {name!r}")
        args = await _json_body(request)
        try:
            outcome = invoke(registry, name, args, backends=base_backends)
        except UnknownToolError:
            raise ApiException(404, "unknown_tool", f"no tool named {name!r}") from None
        if isinstance(outcome, Observation):
            return {"outcome": "observation", "observation": outcome.to_dict()}
        return {"outcome": "tool_error", "error": outcome.to_dict()}

    @app.get("/v1/tools/{name}/reliability")
    async def tool_reliability(name: str):
        if name not in registry:
            raise ApiException(404, "unknown_tool", f"no tool named {name!r}")
        profiles = reliability.load_profiles(store)
        profile = profiles.get(name)
        if profile is None:
            return {"tool_name": name, "status": "unevaluated", "history": [], "regressions": []}
        doc = profile.to_dict()
        doc["status"] = "evaluated"
        return doc

    # -- community ---------------------------------------------------------------

    @app.post("/v1/tests", status_code=201)
    async def submit_test(request: Request):
        body = await _json_body(request)
        submitter = body.pop("submitter", "anonymous")
        try:
            submission = community.submit(store, registry, "test_case", body, submitter)
        except community.SubmissionRejected as exc:
            raise ApiException(400, "submission_rejected", "test case rejected", violations=exc.violations) from None
        return {"submission_id": submission["id"], "status": submission["status"]}

    @app.post("/v1/feedback", status_code=201)
    async def submit_feedback(request: Request):
        body = await _json_body(request)
        submitter = body.pop("submitter", "anonymous")
        try:
            submission = community.submit(store, registry, "feedback", body, submitter)
        except community.SubmissionRejected as exc:
            raise ApiException(400, "submission_rejected", "feedback rejected", violations=exc.violations) from None
        return {"submission_id": submission["id"], "status": submission["status"]}

    @app.get("/v1/submissions")
    async def list_submissions(status: str | None = None):
        if status is not None and status not in ("pending", "accepted", "rejected"):
            raise ApiException(400, "invalid_status", f"unknown status filter {status!r}")
        return store.list_submissions(status)

    @app.post("/v1/submissions/{submission_id}/review")
    async def review_submission(submission_id: str, request: Request):
        require_token(request)
        body = await _json_body(request)
        decision = body.get("decision")
        reviewer = body.get("reviewer", "")
        if decision not in ("accept", "reject"):
            raise ApiException(400, "invalid_decision", "decision must be accept or reject")
        if not reviewer:
            raise ApiException(400, "missing_reviewer", "reviewer is required")
        try:
            submission = community.review(
                store, registry, submission_id, decision, reviewer, body.get("reason", "")
            )
        except community.UnknownSubmission:
            raise ApiException(404, "unknown_submission", f"no submission {submission_id!r}") from None
        except community.ReviewConflict as exc:
            raise ApiException(409, "review_conflict", str(exc)) from None
        return submission

    # -- evaluation ----------------------------------------------------------------

    @app.post("/v1/eval/rounds", status_code=201)
    async def trigger_round(request: Request):
        require_token(request)
        body = await _json_body(request) if int(request.headers.get("content-length") or 0) else {}
        parallelism = body.get("parallelism", 4)
        if not isinstance(parallelism, int) or parallelism < 1:
            raise ApiException(400, "invalid_parallelism", "parallelism must be a positive integer")
        try:
            round_ = reliability.run_round(registry, store, parallelism, backends=base_backends)
        except reliability.RoundError as exc:
            raise ApiException(400, "round_failed", str(exc)) from None
        return round_.to_dict()

    @app.get("/v1/eval/rounds/{round_id}")
    async def get_round(round_id: int):
        for doc in store.load_rounds():
            if doc.get("round_id") == round_id:
                return doc
        raise ApiException(404, "unknown_round", f"no round {round_id}")

    @app.get("/v1/reports/latest")
    async def latest_report():
        round_ = reliability.latest_round(store)
        profiles = reliability.load_profiles(store)
        return reliability.generate_report(profiles, round_, registry)

    # -- agent runs ------------------------------------------------------------------

    @app.post("/v1/agent/runs")
    async def create_agent_run(request: Request):
        body = await _json_body(request)
        query = body.get("query")
        if not isinstance(query, str) or not query.strip():
            raise ApiException(400, "invalid_query", "query must be a non-empty string")
        try:
            policy = PolicyConfig.from_dict(body.get("policy_config") or {})
        except PolicyConfigInvalid as exc:
            raise ApiException(400, "invalid_policy", str(exc)) from None

        tool_names = body.get("tool_names")
        if tool_names is not None:
            if not isinstance(tool_names, list) or not all(isinstance(t, str) for t in tool_names):
                raise ApiException(400, "invalid_tools", "tool_names must be a list of strings")
            for name in tool_names:
                if name not in registry:
                    raise ApiException(400, "unknown_tool", f"tool_names references unknown tool {name!r}")

        backends = base_backends
        mock_script = body.get("mock_script")
        if mock_script is not None:
            if not isinstance(mock_script, list):
                raise ApiException(400, "invalid_mock_script", "mock_script must be a list of scripted responses")
            backends = base_backends.copy()
            try:
                backends.register(policy.backend_id, parse_script(mock_script))
            except (KeyError, TypeError) as exc:
                raise ApiException(400, "invalid_mock_script", f"malformed scripted response: {exc}") from None

        run_id = new_run_id()
        trace = ExecutionTrace(run_id=run_id)

        selection = body.get("selection")
        toolbox = tool_names
        if selection is not None and policy.uses_toolbox:
            if not isinstance(selection, dict):
                raise ApiException(400, "invalid_selection", "selection must be an object")
            k = selection.get("k")
            mode = selection.get("mode", "lexical")
            if not isinstance(k, int) or not 1 <= k <= len(registry):
                raise ApiException(400, "invalid_selection", f"selection.k must lie in [1, {len(registry)}]")
            if mode not in ("lexical", "llm_ranked"):
                raise ApiException(400, "invalid_selection", f"unknown selection mode {mode!r}")
            toolbox = select_tools(
                registry,
                query,
                k,
                mode,
                policy.reliability_routing,
                backends=backends,
                backend_id=policy.backend_id,
                trace=trace,
            )
            trace.append("policy_step", {"phase": "tool_selection", "mode": mode, "k": k, "selected": toolbox})

        holder: dict = {}

        def execute():
            try:
                run, _ = run_agent(
                    query, policy, registry, backends, toolbox, run_id=run_id, trace=trace
                )
                holder["run"] = run
            except Exception as exc:  # surfaced as a 500 after the join
                holder["error"] = exc

        worker = threading.Thread(target=execute, daemon=True)
        worker.start()
        worker.join(config.run_timeout_s)

        if worker.is_alive():
            store.save_run(
                {
                    "run_id": run_id,
                    "query": query,
                    "toolbox": list(toolbox or []),
                    "policy": policy.to_dict(),
                    "answer": "",
                    "trace_id": trace.trace_id,
                    "status": "failed",
                }
            )
            raise ApiException(
                504, "run_timeout", f"run {run_id} exceeded the {config.run_timeout_s}s ceiling"
            )
        if "error" in holder:
            exc = holder["error"]
            raise ApiException(500, "run_error", f"{type(exc).__name__}: {exc}")

        run = holder["run"]
        store.save_trace(trace)
        doc = run.to_dict()
        store.save_run(doc)
        trace_url = f"/v1/traces/{trace.trace_id}"
        if run.status == "failed":
            raise ApiException(
                502,
                "backend_unavailable",
                f"agent backend unavailable; run {run.run_id} persisted as failed (trace {trace_url})",
            )
        return {"run_id": run.run_id, "answer": run.answer, "status": run.status, "trace_url": trace_url}

    @app.get("/v1/agent/runs/{run_id}")
    async def get_agent_run(run_id: str):
        doc = store.load_run(run_id)
        if doc is None:
            raise ApiException(404, "unknown_run", f"no run {run_id!r}")
        doc["trace_url"] = f"/v1/traces/{doc['trace_id']}"
        return doc

    @app.get("/v1/traces/{trace_id}")
    async def get_trace(trace_id: str):
        text = store.trace_text(trace_id)
        if text is None:
            raise ApiException(404, "unknown_trace", f"no trace {trace_id!r}")
        return PlainTextResponse(text, media_type="application/x-ndjson")

    # -- web UI ------------------------------------------------------------------------

    @app.get("/ui/config.json")
    async def ui_config():
        ids = base_backends.ids()
        if "mock" not in ids:
            ids.append("mock")
        return {"backends": ids, "version": app.version}

    ui_dir = Path(config.ui_dir) if config.ui_dir else None
    if ui_dir and ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(config: ServiceConfig, host: str = "127.0.0.1", port: int = 8800) -> None:
    """Run the service under uvicorn until interrupted."""
    import uvicorn

    uvicorn.run(create_app(config), host=host, port=port, log_level="warning")
