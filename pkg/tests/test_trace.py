from __future__ import annotations

import threading

import pytest

from tooldock.trace import (
    ATTRIBUTION_POLICY,
    ATTRIBUTION_TOOL,
    ExecutionTrace,
    TraceDecodeError,
    TraceFinalized,
    attribute_failures,
    attribution_for,
    deserialize_jsonl,
    events_equal,
    serialize_jsonl,
)


class TestAppend:
    def test_seq_increases_without_gaps(self):
        trace = ExecutionTrace()
        for _ in range(3):
            trace.append("policy_step", {"step": 1})
        assert [e.seq for e in trace.events] == [1, 2, 3]

    def test_append_after_finalize_errors(self):
        trace = ExecutionTrace()
        trace.append("policy_step", {})
        trace.finalize()
        with pytest.raises(TraceFinalized):
            trace.append("policy_step", {})

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            ExecutionTrace().append("telemetry", {})

    def test_concurrent_appends_observe_total_order(self):
        trace = ExecutionTrace()
        n_threads, per_thread = 8, 50

        def writer(worker: int):
            for i in range(per_thread):
                trace.append("policy_step", {"worker": worker, "i": i})

        threads = [threading.Thread(target=writer, args=(w,)) for w in range(n_threads)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        seqs = [e.seq for e in trace.events]
        assert seqs == list(range(1, n_threads * per_thread + 1))


class TestAttribution:
    def test_class_mapping(self):
        assert attribution_for("validation") == ATTRIBUTION_POLICY
        assert attribution_for("unknown_tool") == ATTRIBUTION_POLICY
        for cls in ("execution", "timeout", "rate_limited", "unavailable", "contract_violation"):
            assert attribution_for(cls) == ATTRIBUTION_TOOL

    def test_attribute_failures_counts(self):
        trace = ExecutionTrace()
        trace.append("tool_error", {"tool": "a", "error_class": "validation"}, ATTRIBUTION_POLICY)
        trace.append("tool_error", {"tool": "a", "error_class": "timeout"}, ATTRIBUTION_TOOL)
        trace.append("tool_result", {"tool": "a"})
        trace.finalize()
        summary = attribute_failures(trace)
        assert summary.n_policy_errors == 1
        assert summary.n_tool_errors == 1
        assert summary.per_tool == {"a": {"policy_errors": 1, "tool_errors": 1}}

    def test_failure_free_trace_is_all_zeros(self):
        trace = ExecutionTrace()
        trace.append("policy_step", {})
        trace.append("final_answer", {"answer": "ok"})
        trace.finalize()
        summary = attribute_failures(trace)
        assert (summary.n_policy_errors, summary.n_tool_errors) == (0, 0)
        assert summary.per_tool == {}


class TestSerialization:
    def test_round_trip_equality(self):
        trace = ExecutionTrace()
        trace.append("policy_step", {"step": 1})
        trace.append("tool_error", {"tool": "x", "error_class": "timeout"}, ATTRIBUTION_TOOL)
        trace.finalize()
        assert deserialize_jsonl(serialize_jsonl(trace)) == trace

    def test_empty_trace_is_header_only(self):
        trace = ExecutionTrace().finalize()
        document = serialize_jsonl(trace)
        assert document.count("\n") == 1
        assert deserialize_jsonl(document) == trace

    def test_tampered_line_names_line_number(self):
        trace = ExecutionTrace()
        for _ in range(4):
            trace.append("policy_step", {})
        trace.finalize()
        lines = serialize_jsonl(trace).splitlines()
        lines[2] = "{broken"
        with pytest.raises(TraceDecodeError) as excinfo:
            deserialize_jsonl("\n".join(lines))
        assert excinfo.value.line_number == 3

    def test_seq_gap_detected(self):
        trace = ExecutionTrace()
        trace.append("policy_step", {})
        trace.append("policy_step", {})
        trace.finalize()
        lines = serialize_jsonl(trace).splitlines()
        del lines[1]
        with pytest.raises(TraceDecodeError):
            deserialize_jsonl("\n".join(lines))


class TestBlobDigests:
    def test_oversized_value_becomes_digest(self):
        trace = ExecutionTrace()
        big = "x" * 5000
        event = trace.append("tool_result", {"tool": "t", "value": big})
        assert "$blob" in event.payload["value"]
        assert event.payload["value"]["$blob"]["size"] == 5000
        digest = event.payload["value"]["$blob"]["sha256"]
        assert trace.blobs[digest] == big

    def test_small_values_stay_inline(self):
        trace = ExecutionTrace()
        event = trace.append("tool_result", {"value": "short"})
        assert event.payload["value"] == "short"


class TestReproducibility:
    def test_events_equal_ignores_timestamps(self):
        a, b = ExecutionTrace(), ExecutionTrace()
        for t in (a, b):
            t.append("policy_step", {"step": 1})
            t.append("final_answer", {"answer": "42"})
        assert events_equal(a, b)

    def test_events_equal_detects_payload_difference(self):
        a, b = ExecutionTrace(), ExecutionTrace()
        a.append("policy_step", {"step": 1})
        b.append("policy_step", {"step": 2})
        assert not events_equal(a, b)
