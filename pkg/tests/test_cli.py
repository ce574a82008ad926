from __future__ import annotations

import json
from pathlib import Path

import pytest

from tooldock.cli import main

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def run_cli(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def state(tmp_path, capsys) -> str:
    state_dir = str(tmp_path / "cli-state")
    code, _, _ = run_cli(capsys, "-s", state_dir, "init")
    assert code == 0
    return state_dir


class TestInitAndTools:
    def test_init_seeds_toolbox(self, state, capsys):
        code, out, _ = run_cli(capsys, "-s", state, "--format", "json", "tools", "list")
        assert code == 0
        cards = json.loads(out)
        assert len(cards) == 13

    def test_tools_validate_ok(self, state, capsys):
        manifest = Path(state) / "tools" / "calculator.json"
        code, _, _ = run_cli(capsys, "-s", state, "tools", "validate", str(manifest))
        assert code == 0

    def test_tools_validate_failure_exits_2(self, state, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"name": "x!", "category": "nope"}))
        code, _, err = run_cli(capsys, "-s", state, "tools", "validate", str(bad))
        assert code == 2
        assert "unknown category" in err

    def test_json_mode_emits_exactly_one_document(self, state, capsys):
        code, out, _ = run_cli(capsys, "-s", state, "--format", "json", "tools", "list")
        assert code == 0
        json.loads(out)  # a single parseable document


class TestExitCodes:
    def test_usage_error_is_1(self, capsys):
        code, _, _ = run_cli(capsys, "definitely-not-a-command")
        assert code == 1

    def test_uninitialized_state_is_usage_error(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "-s", str(tmp_path / "missing"), "tools", "list")
        assert code == 1
        assert "init" in err

    def test_review_requires_decision_flag(self, state, capsys):
        code, _, _ = run_cli(capsys, "-s", state, "review", "sub-x")
        assert code == 1

    def test_agent_run_failed_backend_is_3(self, state, capsys):
        code, _, _ = run_cli(
            capsys, "-s", state, "agent", "run", "--policy", "react", "--query", "q", "--backend", "ghost"
        )
        assert code == 3

    def test_state_corruption_is_4(self, state, capsys):
        (Path(state) / "bindings.json").write_text("{not json")
        code, _, err = run_cli(capsys, "-s", state, "tools", "list")
        assert code == 4
        assert "corruption" in err


class TestEvalAndReport:
    def test_eval_then_report(self, state, capsys):
        code, _, _ = run_cli(capsys, "-s", state, "eval", "run", "--parallelism", "2")
        assert code == 0
        code, out, _ = run_cli(capsys, "-s", state, "--format", "json", "report")
        assert code == 0
        report = json.loads(out)
        by_name = {t["name"]: t for t in report["tools"]}
        assert by_name["calculator"]["accuracy"] == 1.0
        assert by_name["wiki_lookup"]["status"] == "unevaluated"

    def test_reports_identical_across_fresh_seeds(self, tmp_path, capsys):
        outputs = []
        for sub in ("a", "b"):
            state_dir = str(tmp_path / sub)
            assert run_cli(capsys, "-s", state_dir, "init")[0] == 0
            assert run_cli(capsys, "-s", state_dir, "eval", "run")[0] == 0
            code, out, _ = run_cli(capsys, "-s", state_dir, "--format", "json", "report")
            assert code == 0
            outputs.append(out)
        assert outputs[0] == outputs[1]  # byte-identical reports

    def test_report_single_tool_filter(self, state, capsys):
        run_cli(capsys, "-s", state, "eval", "run")
        code, out, _ = run_cli(capsys, "-s", state, "--format", "json", "report", "--tool", "calculator")
        assert code == 0
        report = json.loads(out)
        assert [t["name"] for t in report["tools"]] == ["calculator"]

    def test_report_unknown_tool_is_usage_error(self, state, capsys):
        code, _, _ = run_cli(capsys, "-s", state, "report", "--tool", "ghost")
        assert code == 1


class TestSubmitReviewFlow:
    def test_submit_review_round_lifecycle(self, state, tmp_path, capsys):
        case_file = tmp_path / "case.json"
        case_file.write_text(
            json.dumps(
                {
                    "tool_name": "calculator",
                    "input": {"expression": "9*9"},
                    "expect": {"kind": "exact", "value": "81"},
                }
            )
        )
        code, out, _ = run_cli(capsys, "-s", state, "--format", "json", "tests", "submit", str(case_file))
        assert code == 0
        submission_id = json.loads(out)["submission_id"]

        code, _, _ = run_cli(capsys, "-s", state, "review", submission_id, "--accept", "--reviewer", "v")
        assert code == 0

        code, out, _ = run_cli(capsys, "-s", state, "--format", "json", "eval", "run")
        assert code == 0
        round_doc = json.loads(out)
        assert round_doc["per_tool"]["calculator"]["n_pass"] == 9

    def test_invalid_case_submission_exits_2(self, state, tmp_path, capsys):
        case_file = tmp_path / "bad_case.json"
        case_file.write_text(json.dumps({"tool_name": "ghost", "input": {}, "expect": {}}))
        code, _, _ = run_cli(capsys, "-s", state, "tests", "submit", str(case_file))
        assert code == 2


class TestAgentRun:
    def test_react_mock_script_prints_answer(self, state, capsys):
        code, out, _ = run_cli(
            capsys,
            "-s", state,
            "agent", "run",
            "--policy", "react",
            "--query", "What is 24*7?",
            "--mock-script", str(FIXTURES / "react_168.json"),
        )
        assert code == 0
        assert out.strip() == "168"

    def test_json_mode_includes_trace_id(self, state, capsys):
        code, out, _ = run_cli(
            capsys,
            "-s", state, "--format", "json",
            "agent", "run",
            "--policy", "react",
            "--query", "24*7?",
            "--mock-script", str(FIXTURES / "react_168.json"),
        )
        assert code == 0
        document = json.loads(out)
        assert document["answer"] == "168"
        trace_path = Path(state) / "state" / "traces" / f"{document['trace_id']}.jsonl"
        assert trace_path.exists()

    def test_select_flag_records_subset(self, state, capsys):
        code, out, _ = run_cli(
            capsys,
            "-s", state, "--format", "json",
            "agent", "run",
            "--policy", "react",
            "--query", "solve this maze",
            "--select", "k=3,mode=lexical",
            "--mock-script", str(FIXTURES / "prompting_42.json"),
        )
        assert code == 0
        document = json.loads(out)
        trace_path = Path(state) / "state" / "traces" / f"{document['trace_id']}.jsonl"
        lines = [json.loads(l) for l in trace_path.read_text().strip().splitlines()]
        selection = [
            l for l in lines[1:] if l["kind"] == "policy_step" and l["payload"].get("phase") == "tool_selection"
        ]
        assert len(selection) == 1
        assert "maze_solver" in selection[0]["payload"]["selected"]
