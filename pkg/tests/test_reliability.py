from __future__ import annotations

import json

import pytest

from tooldock.programs import PROGRAM_CATALOG
from tooldock.reliability import (
    EvaluationRound,
    HistoryPoint,
    RoundError,
    build_profiles,
    detect_regression,
    generate_report,
    latest_round,
    load_profiles,
    render_report,
    run_round,
)
from tooldock.runtime import ProgramBinding
from tooldock.schema import validate_manifest
from tooldock.verification import Expectation, TestCase


def point(round_id, accuracy, availability=1.0, n_cases=10) -> HistoryPoint:
    return HistoryPoint(round_id=round_id, accuracy=accuracy, availability=availability, n_cases=n_cases)


class TestDetectRegression:
    def test_single_drop(self):
        events = detect_regression([point(1, 0.9), point(2, 0.6)], threshold=0.1)
        assert len(events) == 1
        assert events[0].accuracy_drop == pytest.approx(0.3)
        assert events[0].from_round == 1 and events[0].to_round == 2

    def test_small_drop_no_event(self):
        assert detect_regression([point(1, 0.9), point(2, 0.85)], threshold=0.1) == []

    def test_absent_accuracy_skipped(self):
        events = detect_regression([point(1, 0.9), point(2, None), point(3, 0.5)], threshold=0.1)
        assert len(events) == 1
        assert (events[0].from_round, events[0].to_round) == (1, 3)
        assert events[0].accuracy_drop == pytest.approx(0.4)

    def test_drop_exactly_at_threshold_is_not_a_regression(self):
        assert detect_regression([point(1, 1.0), point(2, 0.9)], threshold=0.1) == []

    def test_pure_function_of_inputs(self):
        history = [point(1, 1.0), point(2, 0.7), point(3, 0.75), point(4, 0.3)]
        assert detect_regression(history, 0.1) == detect_regression(history, 0.1)

    def test_threshold_validated(self):
        with pytest.raises(ValueError):
            detect_regression([point(1, 1.0), point(2, 0.5)], threshold=0.0)


class TestRunRound:
    def test_seed_program_tools_all_pass(self, seed_store, seed_registry):
        round_ = run_round(seed_registry, seed_store, parallelism=4)
        for tool in ("calculator", "date_arithmetic", "maze_solver", "string_transformer", "unit_converter"):
            assert round_.per_tool[tool].accuracy == 1.0
            assert round_.per_tool[tool].availability == 1.0

    def test_two_rounds_identical_for_deterministic_tools(self, seed_store, seed_registry):
        first = run_round(seed_registry, seed_store, parallelism=4)
        second = run_round(seed_registry, seed_store, parallelism=4)
        assert first.per_tool == second.per_tool
        assert second.round_id == first.round_id + 1

    def test_round_ids_strictly_increase(self, seed_store, seed_registry):
        ids = [run_round(seed_registry, seed_store).round_id for _ in range(3)]
        assert ids == sorted(ids) and len(set(ids)) == 3

    def test_down_api_tool_does_not_affect_others(self, seed_store, seed_registry, monkeypatch, fast_backoff):
        monkeypatch.setenv("TOOLSTUB_BASE", "http://127.0.0.1:1")  # nothing listens
        seed_store.save_cases(
            "http_fetch",
            [
                TestCase(
                    id="hf-1",
                    tool_name="http_fetch",
                    input_args={"path": "/x"},
                    expectation=Expectation.from_dict({"kind": "exact", "value": "ok"}),
                    status="accepted",
                )
            ],
        )
        round_ = run_round(seed_registry, seed_store, parallelism=4)
        assert round_.per_tool["http_fetch"].availability == 0.0
        assert round_.per_tool["http_fetch"].accuracy is None
        assert round_.per_tool["calculator"].accuracy == 1.0

    def test_no_accepted_cases_aborts(self, tmp_path):
        from tooldock.store import StateStore

        store = StateStore(tmp_path / "empty").init_layout()
        from tooldock.runtime import ToolRegistry

        with pytest.raises(RoundError):
            run_round(ToolRegistry(), store)

    def test_atomicity_fault_injection(self, seed_store, seed_registry, monkeypatch):
        before = seed_store.state_hash()

        def explode(doc):
            raise OSError("disk full")

        monkeypatch.setattr(seed_store, "append_round", explode)
        with pytest.raises(OSError):
            run_round(seed_registry, seed_store)
        monkeypatch.undo()
        assert seed_store.state_hash() == before
        assert seed_store.load_rounds() == []

    def test_accuracy_summary_refreshed_to_profile_value(self, seed_store, seed_registry):
        run_round(seed_registry, seed_store)
        profiles = load_profiles(seed_store)
        for tool_name, profile in profiles.items():
            summary = seed_registry.descriptor(tool_name).accuracy_summary
            assert summary is not None
            assert summary.accuracy == profile.current_accuracy
            assert summary.suite_size == profile.current_n_cases
        # persisted manifests carry the refreshed summary too
        reloaded = seed_store.load_descriptors()["calculator"]
        assert reloaded.accuracy_summary.accuracy == 1.0

    def test_profile_history_counts_only_rounds_with_cases(self, seed_store, seed_registry):
        run_round(seed_registry, seed_store)
        seed_store.save_cases(
            "summarizer",
            [
                TestCase(
                    id="sum-1",
                    tool_name="summarizer",
                    input_args={"text": "abc"},
                    expectation=Expectation.from_dict({"kind": "property", "predicate": "non_empty"}),
                    status="accepted",
                )
            ],
        )
        run_round(seed_registry, seed_store)  # summarizer errors (no backend) but participates
        profiles = load_profiles(seed_store)
        assert len(profiles["calculator"].history) == 2
        assert len(profiles["summarizer"].history) == 1


DRIFT_MANIFEST = {
    "name": "drift_probe",
    "version": "1.0.0",
    "description": "Deterministic probe whose answers can be flipped between rounds.",
    "category": "program",
    "arguments": [{"name": "i", "type": "integer", "required": True}],
    "output": {"kind": "text", "description": ""},
}


@pytest.fixture
def drifting_tool(seed_store, monkeypatch):
    state = {"flip": False}

    def probe(args):
        if state["flip"] and args["i"] % 5 < 2:  # flips 20 of 50 answers: 40%
            return "wrong"
        return "right"

    monkeypatch.setitem(PROGRAM_CATALOG, "drift_probe", probe)
    descriptor = validate_manifest(json.dumps(DRIFT_MANIFEST))
    seed_store.save_descriptor(descriptor)
    seed_store.save_binding("drift_probe", ProgramBinding("drift_probe"))
    seed_store.save_cases(
        "drift_probe",
        [
            TestCase(
                id=f"drift-{i:03d}",
                tool_name="drift_probe",
                input_args={"i": i},
                expectation=Expectation.from_dict({"kind": "exact", "value": "right"}),
                status="accepted",
            )
            for i in range(50)
        ],
    )
    return state


class TestDriftInjection:
    def test_synthetic_drift_produces_one_regression(self, seed_store, drifting_tool):
        registry = seed_store.build_registry()
        run_round(registry, seed_store, parallelism=4)
        drifting_tool["flip"] = True
        run_round(registry, seed_store, parallelism=4)

        profiles = load_profiles(seed_store, threshold=0.1)
        probe = profiles["drift_probe"]
        assert probe.history[0].accuracy == 1.0
        assert probe.history[1].accuracy == pytest.approx(0.6)
        assert len(probe.regressions) == 1
        assert probe.regressions[0].accuracy_drop == pytest.approx(0.4, abs=0.05)

    def test_drop_of_exactly_five_points_is_quiet(self):
        assert detect_regression([point(1, 1.0), point(2, 0.95)], threshold=0.1) == []


class TestReport:
    def test_unevaluated_tool_marked_and_accuracy_absent(self, seed_store, seed_registry):
        run_round(seed_registry, seed_store)
        report = generate_report(load_profiles(seed_store), latest_round(seed_store), seed_registry)
        by_name = {t["name"]: t for t in report["tools"]}
        assert by_name["wiki_lookup"]["status"] == "unevaluated"
        assert "accuracy" not in by_name["wiki_lookup"]
        assert by_name["calculator"]["status"] == "evaluated"
        assert by_name["calculator"]["accuracy"] == 1.0

    def test_report_byte_identical_on_same_store(self, seed_store, seed_registry):
        run_round(seed_registry, seed_store)
        first = render_report(generate_report(load_profiles(seed_store), latest_round(seed_store), seed_registry))
        second = render_report(generate_report(load_profiles(seed_store), latest_round(seed_store), seed_registry))
        assert first == second

    def test_report_regression_entry_after_drift(self, seed_store, drifting_tool):
        registry = seed_store.build_registry()
        run_round(registry, seed_store)
        drifting_tool["flip"] = True
        run_round(registry, seed_store)
        report = generate_report(load_profiles(seed_store), latest_round(seed_store), registry)
        probe = next(t for t in report["tools"] if t["name"] == "drift_probe")
        assert len(probe["regressions"]) == 1
        assert abs(probe["regressions"][0]["accuracy_drop"] - 0.4) <= 0.05

    def test_round_log_round_trips(self, seed_store, seed_registry):
        round_ = run_round(seed_registry, seed_store)
        restored = EvaluationRound.from_dict(seed_store.load_rounds()[0])
        assert restored.per_tool == round_.per_tool
        assert restored.suite_version == round_.suite_version


class TestProfilesAreDerived:
    def test_profiles_pure_function_of_round_log(self, seed_store, seed_registry):
        run_round(seed_registry, seed_store)
        rounds = [EvaluationRound.from_dict(d) for d in seed_store.load_rounds()]
        assert build_profiles(rounds) == build_profiles(rounds)
