from __future__ import annotations

import json
import random

import pytest
from fastapi.testclient import TestClient

from conftest import load_fixture_script
from tooldock.llm import BackendRegistry
from tooldock.runtime import Observation, invoke
from tooldock.service import ServiceConfig, create_app
from tooldock.store import seed_state


@pytest.fixture
def api(tmp_path):
    store = seed_state(tmp_path / "svc")
    config = ServiceConfig(state_dir=store.root, backends=BackendRegistry())
    app = create_app(config)
    client = TestClient(app, raise_server_exceptions=False)
    client.store = store
    return client


@pytest.fixture
def secured_api(tmp_path):
    store = seed_state(tmp_path / "svc-auth")
    config = ServiceConfig(state_dir=store.root, auth_token="sekrit", backends=BackendRegistry())
    client = TestClient(create_app(config), raise_server_exceptions=False)
    client.store = store
    return client


def assert_api_error(response, status: int, code: str | None = None):
    assert response.status_code == status
    body = response.json()
    assert body["status"] == status
    assert "code" in body and "message" in body
    if code is not None:
        assert body["code"] == code


class TestToolEndpoints:
    def test_list_tools_returns_cards(self, api):
        cards = api.get("/v1/tools").json()
        assert len(cards) == 13
        names = {c["name"] for c in cards}
        assert {"calculator", "wiki_lookup", "summarizer"} <= names
        calculator = next(c for c in cards if c["name"] == "calculator")
        assert calculator["category"] == "program"
        assert "arguments" in calculator and "output" in calculator

    def test_get_single_tool(self, api):
        card = api.get("/v1/tools/calculator").json()
        assert card["name"] == "calculator"
        assert_api_error(api.get("/v1/tools/ghost"), 404, "unknown_tool")

    def test_invoke_success(self, api):
        response = api.post("/v1/tools/calculator/invoke", json={"expression": "2+2"})
        assert response.status_code == 200
        body = response.json()
        assert body["outcome"] == "observation"
        assert body["observation"]["output_value"] == "4"

    def test_invoke_validation_failure_is_a_value(self, api):
        response = api.post("/v1/tools/calculator/invoke", json={})
        assert response.status_code == 200
        body = response.json()
        assert body["outcome"] == "tool_error"
        assert body["error"]["error_class"] == "validation"

    def test_invoke_unknown_tool_404(self, api):
        assert_api_error(api.post("/v1/tools/ghost/invoke", json={}), 404, "unknown_tool")

    def test_invoke_agrees_with_direct_runtime(self, api):
        rng = random.Random(42)
        registry = api.store.build_registry()
        pool = ["1+1", "2*3", "sqrt(16)", "10/4", "bad(", "7-?"]
        for _ in range(100):
            args = {}
            if rng.random() < 0.9:
                args["expression"] = rng.choice(pool)
            if rng.random() < 0.1:
                args["extra"] = 1
            direct = invoke(registry, "calculator", args)
            via_api = api.post("/v1/tools/calculator/invoke", json=args).json()
            if isinstance(direct, Observation):
                assert via_api["outcome"] == "observation"
                assert via_api["observation"]["output_value"] == direct.output_value
            else:
                assert via_api["outcome"] == "tool_error"
                assert via_api["error"]["error_class"] == direct.error_class

    def test_reliability_endpoint_unevaluated_then_evaluated(self, api):
        before = api.get("/v1/tools/calculator/reliability").json()
        assert before["status"] == "unevaluated"
        api.post("/v1/eval/rounds", json={"parallelism": 4})
        after = api.get("/v1/tools/calculator/reliability").json()
        assert after["status"] == "evaluated"
        assert after["current_accuracy"] == 1.0


class TestSubmissionEndpoints:
    CASE = {
        "tool_name": "calculator",
        "input": {"expression": "6*7"},
        "expect": {"kind": "exact", "value": "42"},
        "submitter": "web",
    }

    def test_submit_then_pending_listing(self, api):
        created = api.post("/v1/tests", json=self.CASE)
        assert created.status_code == 201
        submission_id = created.json()["submission_id"]
        pending = api.get("/v1/submissions", params={"status": "pending"}).json()
        assert [s["id"] for s in pending] == [submission_id]

    def test_invalid_submission_400_with_violations_and_no_state_change(self, api):
        before = api.store.state_hash()
        response = api.post("/v1/tests", json={"tool_name": "ghost", "input": {}, "expect": {}})
        assert_api_error(response, 400, "submission_rejected")
        assert response.json()["violations"]
        assert api.store.state_hash() == before

    def test_review_accept_then_conflict(self, api):
        submission_id = api.post("/v1/tests", json=self.CASE).json()["submission_id"]
        decided = api.post(
            f"/v1/submissions/{submission_id}/review",
            json={"decision": "accept", "reviewer": "verifier"},
        )
        assert decided.status_code == 200
        assert decided.json()["status"] == "accepted"
        again = api.post(
            f"/v1/submissions/{submission_id}/review",
            json={"decision": "reject", "reviewer": "verifier"},
        )
        assert_api_error(again, 409, "review_conflict")

    def test_review_unknown_submission_404_no_state_change(self, api):
        before = api.store.state_hash()
        assert_api_error(
            api.post("/v1/submissions/sub-none/review", json={"decision": "accept", "reviewer": "v"}),
            404,
        )
        assert api.store.state_hash() == before

    def test_accepted_case_shifts_accuracy_after_round(self, api):
        failing = {
            "tool_name": "calculator",
            "input": {"expression": "6*7"},
            "expect": {"kind": "exact", "value": "999"},
        }
        submission_id = api.post("/v1/tests", json=failing).json()["submission_id"]
        api.post(f"/v1/submissions/{submission_id}/review", json={"decision": "accept", "reviewer": "v"})
        api.post("/v1/eval/rounds", json={})
        card = api.get("/v1/tools/calculator").json()
        assert card["accuracy_summary"]["accuracy"] == pytest.approx(8 / 9)


class TestEvalEndpoints:
    def test_round_then_fetch_and_report(self, api):
        created = api.post("/v1/eval/rounds", json={"parallelism": 2})
        assert created.status_code == 201
        round_id = created.json()["round_id"]
        fetched = api.get(f"/v1/eval/rounds/{round_id}")
        assert fetched.status_code == 200
        assert fetched.json()["per_tool"]["calculator"]["accuracy"] == 1.0
        report = api.get("/v1/reports/latest").json()
        assert report["round_id"] == round_id
        by_name = {t["name"]: t for t in report["tools"]}
        assert by_name["calculator"]["accuracy"] == 1.0
        assert by_name["news_headlines"]["status"] == "unevaluated"

    def test_unknown_round_404(self, api):
        assert_api_error(api.get("/v1/eval/rounds/99"), 404)

    def test_invalid_parallelism_no_state_change(self, api):
        before = api.store.state_hash()
        assert_api_error(api.post("/v1/eval/rounds", json={"parallelism": 0}), 400)
        assert api.store.state_hash() == before


class TestAgentRunEndpoint:
    def test_react_168_fixture_end_to_end(self, api):
        response = api.post(
            "/v1/agent/runs",
            json={
                "query": "What is 24*7?",
                "policy_config": {"kind": "react", "backend_id": "mock"},
                "mock_script": load_fixture_script("react_168.json"),
            },
        )
        assert response.status_code == 200
        body = response.json()
        assert body["answer"] == "168"
        assert body["status"] == "completed"

        trace_text = api.get(body["trace_url"]).text
        lines = [json.loads(line) for line in trace_text.strip().splitlines()]
        invocations = [l for l in lines[1:] if l["kind"] == "tool_invocation"]
        assert len(invocations) == 1

        run_doc = api.get(f"/v1/agent/runs/{body['run_id']}").json()
        assert run_doc["answer"] == "168"

    def test_prompting_ignores_supplied_tools(self, api):
        response = api.post(
            "/v1/agent/runs",
            json={
                "query": "anything",
                "policy_config": {"kind": "prompting_zero_shot", "backend_id": "mock"},
                "tool_names": ["calculator", "maze_solver"],
                "mock_script": [{"content": "FINAL ANSWER: ok"}],
            },
        )
        assert response.status_code == 200
        trace_text = api.get(response.json()["trace_url"]).text
        assert '"tool_invocation"' not in trace_text

    def test_selection_recorded_in_trace(self, api):
        response = api.post(
            "/v1/agent/runs",
            json={
                "query": "solve this maze",
                "policy_config": {"kind": "react", "backend_id": "mock"},
                "selection": {"k": 3, "mode": "lexical"},
                "mock_script": [{"content": "FINAL ANSWER: ok"}],
            },
        )
        assert response.status_code == 200
        lines = [json.loads(l) for l in api.get(response.json()["trace_url"]).text.strip().splitlines()]
        selection_events = [
            l for l in lines[1:] if l["kind"] == "policy_step" and l["payload"].get("phase") == "tool_selection"
        ]
        assert len(selection_events) == 1
        assert len(selection_events[0]["payload"]["selected"]) == 3
        assert "maze_solver" in selection_events[0]["payload"]["selected"]

    def test_unknown_policy_kind_400(self, api):
        before = api.store.state_hash()
        assert_api_error(
            api.post("/v1/agent/runs", json={"query": "q", "policy_config": {"kind": "tree_search"}}),
            400,
            "invalid_policy",
        )
        assert api.store.state_hash() == before

    def test_backend_unavailable_502_run_persisted_failed(self, api):
        response = api.post(
            "/v1/agent/runs",
            json={"query": "q", "policy_config": {"kind": "react", "backend_id": "absent"}},
        )
        assert_api_error(response, 502, "backend_unavailable")
        runs_dir = api.store.state_dir / "runs"
        docs = [json.loads(p.read_text()) for p in runs_dir.glob("*.json")]
        assert len(docs) == 1
        assert docs[0]["status"] == "failed"

    def test_unknown_trace_404(self, api):
        assert_api_error(api.get("/v1/traces/nope"), 404)


class TestFeedbackEndpoint:
    def test_feedback_on_fresh_run_accepted(self, api):
        run = api.post(
            "/v1/agent/runs",
            json={
                "query": "q",
                "policy_config": {"kind": "prompting_zero_shot", "backend_id": "mock"},
                "mock_script": [{"content": "FINAL ANSWER: ok"}],
            },
        ).json()
        trace_id = run["trace_url"].rsplit("/", 1)[-1]
        response = api.post(
            "/v1/feedback",
            json={"scope": "agent_response", "target_id": trace_id, "rating": "positive"},
        )
        assert response.status_code == 201

    def test_feedback_on_missing_trace_rejected_no_state_change(self, api):
        before = api.store.state_hash()
        assert_api_error(
            api.post(
                "/v1/feedback",
                json={"scope": "agent_response", "target_id": "gone", "rating": "negative"},
            ),
            400,
        )
        assert api.store.state_hash() == before


class TestAuth:
    def test_privileged_endpoints_require_token(self, secured_api):
        assert_api_error(secured_api.post("/v1/eval/rounds", json={}), 401, "unauthorized")
        assert_api_error(
            secured_api.post("/v1/submissions/x/review", json={"decision": "accept", "reviewer": "v"}),
            401,
        )

    def test_reads_stay_open(self, secured_api):
        assert secured_api.get("/v1/tools").status_code == 200
        assert secured_api.get("/v1/reports/latest").status_code == 200

    def test_token_grants_access(self, secured_api):
        response = secured_api.post(
            "/v1/eval/rounds", json={}, headers={"Authorization": "Bearer sekrit"}
        )
        assert response.status_code == 201

    def test_401_leaves_state_unchanged(self, secured_api):
        before = secured_api.store.state_hash()
        secured_api.post("/v1/eval/rounds", json={})
        assert secured_api.store.state_hash() == before


class TestUiConfig:
    def test_backends_listing_includes_mock(self, api):
        body = api.get("/ui/config.json").json()
        assert "mock" in body["backends"]
