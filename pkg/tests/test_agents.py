from __future__ import annotations

import json

import pytest

from conftest import load_fixture_script
from tooldock.agents import PolicyConfig, run_agent, select_tools
from tooldock.agents.selection import lexical_score
from tooldock.llm import BackendRegistry, ScriptedBackend, ScriptedResponse, ToolCall, parse_script
from tooldock.schema import validate_manifest
from tooldock.trace import ExecutionTrace, attribute_failures, events_equal


def scripted_backends(entries: list, backend_id: str = "mock") -> tuple[BackendRegistry, ScriptedBackend]:
    backend = parse_script(entries)
    backends = BackendRegistry()
    backends.register(backend_id, backend)
    return backends, backend


def config(kind: str, **kwargs) -> PolicyConfig:
    return PolicyConfig(kind=kind, backend_id="mock", **kwargs)


def count(trace, kind: str, **payload_filter) -> int:
    total = 0
    for event in trace.events:
        if event.kind != kind:
            continue
        if all(event.payload.get(k) == v for k, v in payload_filter.items()):
            total += 1
    return total


def failures(trace) -> list:
    return [e for e in trace.events if e.attribution is not None]


class TestSelectTools:
    def test_maze_query_surfaces_maze_solver(self, seed_registry):
        chosen = select_tools(seed_registry, "solve this maze", k=3, mode="lexical")
        assert "maze_solver" in chosen

    def test_near_tie_breaks_toward_higher_accuracy(self):
        from tooldock.runtime import ProgramBinding, ToolRegistry

        def fetch_tool(name, accuracy):
            doc = {
                "name": name,
                "version": "1.0.0",
                "description": "Fetches records from the data service.",
                "category": "program",
                "arguments": [],
                "output": {"kind": "text", "description": ""},
                "accuracy_summary": {"accuracy": accuracy, "suite_size": 10, "evaluated_at": "t"},
            }
            return validate_manifest(json.dumps(doc))

        registry = ToolRegistry()
        registry.register(fetch_tool("alpha_fetch", 0.6), ProgramBinding("missing"))
        registry.register(fetch_tool("beta_fetch", 0.9), ProgramBinding("missing"))

        plain = select_tools(registry, "fetch the data", k=2, mode="lexical", reliability_routing=False)
        assert plain == ["alpha_fetch", "beta_fetch"]  # deterministic name order on exact tie
        routed = select_tools(registry, "fetch the data", k=2, mode="lexical", reliability_routing=True)
        assert routed == ["beta_fetch", "alpha_fetch"]  # 0.9 ranks first

    def test_unevaluated_ranks_below_evaluated_on_ties(self, seed_registry):
        # seed tools carry no accuracy summaries; give one of them a summary
        descriptor = seed_registry.descriptor("wiki_lookup")
        from tooldock.schema import AccuracySummary

        seed_registry.update_descriptor(
            descriptor.with_accuracy_summary(AccuracySummary(accuracy=0.8, suite_size=4, evaluated_at="t"))
        )
        chosen = select_tools(
            seed_registry, "zzz nothing overlaps zzz", k=len(seed_registry), mode="lexical",
            reliability_routing=True,
        )
        assert chosen[0] == "wiki_lookup"  # all scores 0: evaluated tool leads the tie

    def test_k_equal_to_registry_size_returns_all_deterministically(self, seed_registry):
        names = select_tools(seed_registry, "anything", k=len(seed_registry), mode="lexical")
        assert sorted(names) == seed_registry.names()
        assert names == select_tools(seed_registry, "anything", k=len(seed_registry), mode="lexical")

    def test_k_bounds_enforced(self, seed_registry):
        with pytest.raises(ValueError):
            select_tools(seed_registry, "q", k=0)
        with pytest.raises(ValueError):
            select_tools(seed_registry, "q", k=len(seed_registry) + 1)

    def test_argmax_invariance_under_positive_scaling(self, seed_registry, monkeypatch):
        query = "convert 3 km to miles and count the words"
        baseline = select_tools(seed_registry, query, k=5, mode="lexical")
        scale = 37.0
        original = lexical_score
        monkeypatch.setattr(
            "tooldock.agents.selection.lexical_score", lambda q, d: scale * original(q, d)
        )
        scaled = select_tools(seed_registry, query, k=5, mode="lexical")
        assert scaled == baseline

    def test_llm_ranked_uses_backend_scores(self, seed_registry):
        # score maze_solver 10, everything else 1
        responses = []
        for name in seed_registry.names():
            responses.append(ScriptedResponse(content="10" if name == "maze_solver" else "1"))
        backends = BackendRegistry()
        backends.register("mock", ScriptedBackend(responses))
        chosen = select_tools(
            seed_registry, "irrelevant", k=1, mode="llm_ranked", backends=backends, backend_id="mock"
        )
        assert chosen == ["maze_solver"]

    def test_llm_ranked_falls_back_to_lexical_with_warning(self, seed_registry):
        trace = ExecutionTrace()
        chosen = select_tools(
            seed_registry, "solve this maze", k=3, mode="llm_ranked",
            backends=BackendRegistry(), backend_id="missing", trace=trace,
        )
        assert "maze_solver" in chosen
        assert count(trace, "warning", warning="llm_ranking_unavailable") == 1


class TestPrompting:
    def test_zero_shot_extracts_final_answer(self, seed_registry):
        backends, _ = scripted_backends([{"content": "Sure.\nFINAL ANSWER: 42"}])
        run, trace = run_agent("meaning?", config("prompting_zero_shot"), seed_registry, backends)
        assert run.answer == "42"
        assert run.status == "completed"
        assert count(trace, "tool_invocation") == 0

    def test_cot_request_carries_instruction_template(self, seed_registry):
        backends, backend = scripted_backends([{"content": "FINAL ANSWER: ok"}])
        run_agent("q", config("prompting_cot"), seed_registry, backends)
        assert "step by step" in backend.requests[0].text()

    def test_zero_shot_request_lacks_cot_instruction(self, seed_registry):
        backends, backend = scripted_backends([{"content": "FINAL ANSWER: ok"}])
        run_agent("q", config("prompting_zero_shot"), seed_registry, backends)
        assert "step by step" not in backend.requests[0].text()

    def test_backend_exhaustion_fails_run_with_one_error_event(self, seed_registry):
        backends, _ = scripted_backends([])
        run, trace = run_agent("q", config("prompting_zero_shot"), seed_registry, backends)
        assert run.status == "failed"
        assert run.answer == ""
        assert count(trace, "warning", warning="backend_error") == 1

    def test_toolbox_ignored(self, seed_registry):
        backends, _ = scripted_backends([{"content": "FINAL ANSWER: ok"}])
        run, trace = run_agent(
            "q", config("prompting_zero_shot"), seed_registry, backends, toolbox=["calculator"]
        )
        assert count(trace, "tool_invocation") == 0


class TestReact:
    def test_168_episode(self, seed_registry):
        backends, _ = scripted_backends(load_fixture_script("react_168.json"))
        run, trace = run_agent("What is 24*7?", config("react"), seed_registry, backends)
        assert run.answer == "168"
        assert run.status == "completed"
        assert count(trace, "tool_invocation") == 1
        assert failures(trace) == []

    def test_step_budget_exhaustion(self, seed_registry):
        call = {"tool_call": {"tool_name": "calculator", "arguments": {"expression": "1+1"}}}
        backends, _ = scripted_backends([call] * 5)
        run, trace = run_agent("loop", config("react", max_steps=3), seed_registry, backends)
        assert run.status == "step_budget_exhausted"
        assert count(trace, "tool_invocation") == 3

    def test_unknown_tool_is_policy_error_and_run_completes(self, seed_registry):
        backends, _ = scripted_backends(
            [
                {"tool_call": {"tool_name": "nonexistent", "arguments": {}}},
                {"content": "FINAL ANSWER: done"},
            ]
        )
        run, trace = run_agent("q", config("react"), seed_registry, backends)
        assert run.status == "completed"
        summary = attribute_failures(trace)
        assert summary.n_policy_errors == 1
        assert summary.n_tool_errors == 0

    def test_tool_outside_toolbox_subset_is_unknown(self, seed_registry):
        backends, _ = scripted_backends(
            [
                {"tool_call": {"tool_name": "calculator", "arguments": {"expression": "1"}}},
                {"content": "FINAL ANSWER: x"},
            ]
        )
        run, trace = run_agent("q", config("react"), seed_registry, backends, toolbox=["maze_solver"])
        assert count(trace, "tool_invocation") == 0
        assert attribute_failures(trace).n_policy_errors == 1

    def test_tool_error_fed_back_as_observation(self, seed_registry):
        backends, backend = scripted_backends(
            [
                {"tool_call": {"tool_name": "calculator", "arguments": {"expression": "oops("}}},
                {"content": "FINAL ANSWER: recovered"},
            ]
        )
        run, trace = run_agent("q", config("react"), seed_registry, backends)
        assert run.answer == "recovered"
        assert "tool error (execution)" in backend.requests[1].text()

    def test_validation_preceded_every_invocation(self, seed_registry):
        backends, _ = scripted_backends(load_fixture_script("react_168.json"))
        _, trace = run_agent("q", config("react"), seed_registry, backends)
        kinds = [e.kind for e in trace.events]
        for index, kind in enumerate(kinds):
            if kind == "tool_invocation":
                assert kinds[index - 1] == "tool_validation"

    def test_reproducible_up_to_timestamps(self, seed_registry):
        script = load_fixture_script("react_168.json")
        backends_a, _ = scripted_backends(json.loads(json.dumps(script)))
        backends_b, _ = scripted_backends(json.loads(json.dumps(script)))
        _, trace_a = run_agent("q", config("react"), seed_registry, backends_a)
        _, trace_b = run_agent("q", config("react"), seed_registry, backends_b)
        assert events_equal(trace_a, trace_b)


class TestPlannerExecutor:
    def test_scripted_episode_four_phases_one_invocation(self, seed_registry):
        backends, _ = scripted_backends(load_fixture_script("planner_executor_168.json"))
        run, trace = run_agent("What is 24*7?", config("planner_executor"), seed_registry, backends)
        assert run.answer == "168"
        phases = [e.payload.get("phase") for e in trace.events if e.kind == "policy_step"]
        assert phases == ["planner", "executor", "verifier", "composer"]
        assert count(trace, "tool_invocation") == 1

    def test_immediate_stop_zero_invocations_composer_still_runs(self, seed_registry):
        backends, _ = scripted_backends(
            [
                {"content": "TOOL: STOP\nSUBGOAL: nothing left"},
                {"content": "FINAL ANSWER: nothing to do"},
            ]
        )
        run, trace = run_agent("q", config("planner_executor"), seed_registry, backends)
        assert run.status == "completed"
        assert run.answer == "nothing to do"
        assert count(trace, "tool_invocation") == 0

    def test_executor_schema_failures_twice_become_policy_failure(self, seed_registry):
        backends, _ = scripted_backends(
            [
                {"content": "TOOL: calculator\nSUBGOAL: compute"},
                {"content": '{"wrong_param": 1}'},
                {"content": '{"still_wrong": 2}'},
                {"content": "TOOL: STOP\nSUBGOAL: give up"},
                {"content": "FINAL ANSWER: incomplete"},
            ]
        )
        run, trace = run_agent("q", config("planner_executor"), seed_registry, backends)
        assert run.status == "completed"
        assert count(trace, "tool_invocation") == 2  # both invalid argument attempts
        assert attribute_failures(trace).n_policy_errors == 2
        assert count(trace, "warning", warning="policy_failure") == 1

    def test_malformed_planner_gets_one_corrective_reprompt(self, seed_registry):
        backends, backend = scripted_backends(
            [
                {"content": "no structure at all"},
                {"content": "TOOL: STOP\nSUBGOAL: fine"},
                {"content": "FINAL ANSWER: ok"},
            ]
        )
        run, trace = run_agent("q", config("planner_executor"), seed_registry, backends)
        assert run.status == "completed"
        assert "malformed" in backend.requests[1].text()


class TestMultiAgent:
    def test_two_subproblems_both_verified(self, seed_registry):
        backends, _ = scripted_backends(load_fixture_script("multi_agent_2sub.json"))
        run, trace = run_agent("compute things", config("multi_agent"), seed_registry, backends)
        assert run.answer == "168 and 42"
        assert len(run.memory.entries) == 2
        assert count(trace, "memory_write") == 2
        assert count(trace, "tool_invocation") == 2

    def test_rejected_subproblem_stays_out_of_memory(self, seed_registry):
        backends, _ = scripted_backends(
            [
                {"content": "- first\n- second"},
                {"tool_call": {"tool_name": "calculator", "arguments": {"expression": "1+1"}}},
                {"content": "VERDICT: ACCEPT"},
                {"tool_call": {"tool_name": "calculator", "arguments": {"expression": "2+2"}}},
                {"content": "VERDICT: REJECT bad scale"},
                {"content": "giving up"},  # generator yields after rejection
                {"content": "FINAL ANSWER: partial"},
            ]
        )
        run, trace = run_agent("q", config("multi_agent"), seed_registry, backends)
        assert len(run.memory.entries) == 1
        assert run.memory.entries[0].sub_problem == "first"
        assert count(trace, "warning", warning="no_validated_result") == 1

    def test_empty_decomposition_composes_directly(self, seed_registry):
        backends, _ = scripted_backends(
            [
                {"content": ""},
                {"content": "FINAL ANSWER: direct"},
            ]
        )
        run, trace = run_agent("q", config("multi_agent"), seed_registry, backends)
        assert run.answer == "direct"
        assert count(trace, "tool_invocation") == 0
        assert len(run.memory.entries) == 0

    def test_rule_based_verifier_accepts_nonempty_output(self, seed_registry):
        backends, _ = scripted_backends(
            [
                {"content": "- compute"},
                {"tool_call": {"tool_name": "calculator", "arguments": {"expression": "3*3"}}},
                {"content": "FINAL ANSWER: 9"},
            ]
        )
        run, trace = run_agent(
            "q", config("multi_agent", rule_based_verifier=True), seed_registry, backends
        )
        assert len(run.memory.entries) == 1
        assert run.memory.entries[0].result == "9"

    def test_memory_guardrail_random_subsets(self, seed_registry):
        import random

        rng = random.Random(13)
        for _ in range(20):
            n = rng.randint(1, 5)
            verdicts = [rng.random() < 0.5 for _ in range(n)]
            script = [{"content": "\n".join(f"- sub {i}" for i in range(n))}]
            for i, accept in enumerate(verdicts):
                script.append({"tool_call": {"tool_name": "calculator", "arguments": {"expression": f"{i}+1"}}})
                script.append({"content": "VERDICT: ACCEPT" if accept else "VERDICT: REJECT"})
            script.append({"content": "FINAL ANSWER: done"})
            backends, _ = scripted_backends(script)
            run, _ = run_agent(
                "q", config("multi_agent", sub_problem_steps=1), seed_registry, backends
            )
            expected = [f"sub {i}" for i, accept in enumerate(verdicts) if accept]
            assert [e.sub_problem for e in run.memory.entries] == expected


MATRIX_SCRIPTS = {
    "prompting_zero_shot": [{"content": "FINAL ANSWER: ok"}],
    "prompting_cot": [{"content": "FINAL ANSWER: ok"}],
    "react": [{"content": "FINAL ANSWER: ok"}],
    "planner_executor": [{"content": "TOOL: STOP\nSUBGOAL: done"}, {"content": "FINAL ANSWER: ok"}],
    "multi_agent": [{"content": ""}, {"content": "FINAL ANSWER: ok"}],
}


class TestPolicyToolboxMatrix:
    @pytest.mark.parametrize("kind", sorted(MATRIX_SCRIPTS))
    @pytest.mark.parametrize("toolbox", [None, ["calculator"]], ids=["full", "singleton"])
    def test_every_policy_runs_against_every_toolbox(self, seed_registry, kind, toolbox):
        backends, _ = scripted_backends(MATRIX_SCRIPTS[kind])
        run, trace = run_agent("q", config(kind), seed_registry, backends, toolbox=toolbox)
        assert run.status == "completed"
        assert run.answer == "ok"
        assert trace.finalized

    def test_unknown_toolbox_name_rejected_up_front(self, seed_registry):
        backends, _ = scripted_backends([{"content": "FINAL ANSWER: x"}])
        with pytest.raises(ValueError):
            run_agent("q", config("react"), seed_registry, backends, toolbox=["ghost"])


class TestStepBudgets:
    @pytest.mark.parametrize("kind", ["react", "planner_executor"])
    def test_budgets_are_hard(self, seed_registry, kind):
        # a script that would run forever: policies must stop at max_steps
        call = {"tool_call": {"tool_name": "calculator", "arguments": {"expression": "1+1"}}}
        if kind == "react":
            script = [call] * 50
        else:
            script = [
                {"content": "TOOL: calculator\nSUBGOAL: again"},
                {"content": '{"expression": "1+1"}'},
                {"content": "CONTINUE"},
            ] * 50 + [{"content": "FINAL ANSWER: capped"}]
        backends, backend = scripted_backends(script)
        run, trace = run_agent("q", config(kind, max_steps=4), seed_registry, backends)
        steps = [e for e in trace.events if e.kind == "policy_step" and e.payload.get("step") is not None]
        assert max(e.payload["step"] for e in steps) <= 4
