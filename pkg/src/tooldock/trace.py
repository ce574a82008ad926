"""Structured execution traces: ordered event logs with failure attribution.

A trace is an append-only sequence of events written by exactly one run
pipeline.  Failures carry an attribution: `policy_error` for tool-use faults
(argument validation, unknown tool) and `tool_error` for intrinsic faults
(execution, timeout, rate limit, unavailability, contract violation).
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
import uuid
from dataclasses import dataclass, field

from .schema import canonical_dumps

EVENT_KINDS = (
    "policy_step",
    "tool_validation",
    "tool_invocation",
    "tool_result",
    "tool_error",
    "backend_call",
    "memory_write",
    "verifier_decision",
    "warning",
    "final_answer",
)

ATTRIBUTION_POLICY = "policy_error"
ATTRIBUTION_TOOL = "tool_error"

# Failure classes attributed to the policy (tool-use) vs. the tool itself.
POLICY_FAULT_CLASSES = frozenset({"validation", "unknown_tool"})
TOOL_FAULT_CLASSES = frozenset({"execution", "timeout", "rate_limited", "unavailable", "contract_violation"})

# Payload values larger than this are stored as digests plus a sidecar blob.
BLOB_THRESHOLD_BYTES = 4096


class TraceFinalized(RuntimeError):
    """Appending to a finalized trace is a one-way barrier violation."""


class TraceDecodeError(ValueError):
    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        super().__init__(f"trace line {line_number}: {reason}")


def attribution_for(failure_class: str) -> str:
    """Map a failure class onto its attribution side."""
    if failure_class in POLICY_FAULT_CLASSES:
        return ATTRIBUTION_POLICY
    if failure_class in TOOL_FAULT_CLASSES:
        return ATTRIBUTION_TOOL
    raise ValueError(f"unknown failure class: {failure_class}")


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    timestamp: float
    kind: str
    payload: dict
    attribution: str | None = None

    def to_dict(self) -> dict:
        doc: dict = {"seq": self.seq, "ts": self.timestamp, "kind": self.kind, "payload": self.payload}
        if self.attribution is not None:
            doc["attribution"] = self.attribution
        return doc


@dataclass(frozen=True)
class FailureSummary:
    n_policy_errors: int
    n_tool_errors: int
    per_tool: dict

    def to_dict(self) -> dict:
        return {
            "n_policy_errors": self.n_policy_errors,
            "n_tool_errors": self.n_tool_errors,
            "per_tool": self.per_tool,
        }


def _digest_payload(payload: dict, blobs: dict[str, str]) -> dict:
    """Replace oversized payload values with digest references."""
    out: dict = {}
    for key, value in payload.items():
        if isinstance(value, str):
            text = value
        elif isinstance(value, (dict, list)):
            text = canonical_dumps(value)
        else:
            out[key] = value
            continue
        raw = text.encode("utf-8")
        if len(raw) > BLOB_THRESHOLD_BYTES:
            digest = hashlib.sha256(raw).hexdigest()
            blobs[digest] = text
            out[key] = {"$blob": {"sha256": digest, "size": len(raw)}}
        else:
            out[key] = value
    return out


class ExecutionTrace:
    """Ordered event log for one agent run or tool invocation pipeline.

    One writer (the run's pipeline); readers may snapshot at any time.
    `finalize()` freezes the trace.
    """

    def __init__(self, trace_id: str | None = None, run_id: str | None = None):
        self.trace_id = trace_id or uuid.uuid4().hex
        self.run_id = run_id or self.trace_id
        self.created_at = time.time()
        self._events: list[TraceEvent] = []
        self._blobs: dict[str, str] = {}
        self._finalized = False
        self._lock = threading.Lock()

    @property
    def finalized(self) -> bool:
        return self._finalized

    @property
    def events(self) -> tuple[TraceEvent, ...]:
        with self._lock:
            return tuple(self._events)

    @property
    def blobs(self) -> dict[str, str]:
        return dict(self._blobs)

    def append(self, kind: str, payload: dict | None = None, attribution: str | None = None) -> TraceEvent:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind: {kind}")
        if attribution is not None and attribution not in (ATTRIBUTION_POLICY, ATTRIBUTION_TOOL):
            raise ValueError(f"unknown attribution: {attribution}")
        with self._lock:
            if self._finalized:
                raise TraceFinalized(f"trace {self.trace_id} is finalized")
            event = TraceEvent(
                seq=len(self._events) + 1,
                timestamp=time.time(),
                kind=kind,
                payload=_digest_payload(payload or {}, self._blobs),
                attribution=attribution,
            )
            self._events.append(event)
            return event

    def finalize(self) -> "ExecutionTrace":
        with self._lock:
            self._finalized = True
        return self

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExecutionTrace):
            return NotImplemented
        return (
            self.trace_id == other.trace_id
            and self.run_id == other.run_id
            and self.created_at == other.created_at
            and self._finalized == other._finalized
            and self.events == other.events
        )

    def __hash__(self):  # traces are mutable until finalized; identity hashing
        return id(self)


def events_equal(a: ExecutionTrace, b: ExecutionTrace) -> bool:
    """Reproducibility comparison: event structure equal up to timestamps and ids."""
    sa, sb = a.events, b.events
    if len(sa) != len(sb):
        return False
    for ea, eb in zip(sa, sb):
        if (ea.seq, ea.kind, ea.payload, ea.attribution) != (eb.seq, eb.kind, eb.payload, eb.attribution):
            return False
    return True


def attribute_failures(trace: ExecutionTrace) -> FailureSummary:
    """Partition failure events into policy vs. tool counts, per tool.

    Derived purely from event attributions; requires a finalized trace.
    """
    if not trace.finalized:
        raise ValueError("attribute_failures requires a finalized trace")
    n_policy = 0
    n_tool = 0
    per_tool: dict[str, dict[str, int]] = {}
    for event in trace.events:
        if event.attribution is None:
            continue
        tool = event.payload.get("tool")
        if event.attribution == ATTRIBUTION_POLICY:
            n_policy += 1
        else:
            n_tool += 1
        if isinstance(tool, str):
            bucket = per_tool.setdefault(tool, {"policy_errors": 0, "tool_errors": 0})
            key = "policy_errors" if event.attribution == ATTRIBUTION_POLICY else "tool_errors"
            bucket[key] += 1
    return FailureSummary(n_policy_errors=n_policy, n_tool_errors=n_tool, per_tool=per_tool)


def serialize_jsonl(trace: ExecutionTrace) -> str:
    """One JSON object per line; the first line is the trace header."""
    if not trace.finalized:
        raise ValueError("serialize_jsonl requires a finalized trace")
    header = {
        "trace_id": trace.trace_id,
        "run_id": trace.run_id,
        "created_at": trace.created_at,
        "finalized": True,
    }
    lines = [canonical_dumps(header)]
    lines.extend(canonical_dumps(event.to_dict()) for event in trace.events)
    return "\n".join(lines) + "\n"


def deserialize_jsonl(document: str) -> ExecutionTrace:
    """Rebuild a finalized trace; malformed lines name their line number."""
    lines = document.splitlines()
    if not lines:
        raise TraceDecodeError(1, "empty document, header line missing")

    def parse_line(number: int, text: str) -> dict:
        try:
            parsed = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TraceDecodeError(number, f"invalid JSON: {exc}") from exc
        if not isinstance(parsed, dict):
            raise TraceDecodeError(number, "expected a JSON object")
        return parsed

    header = parse_line(1, lines[0])
    for key in ("trace_id", "run_id", "created_at"):
        if key not in header:
            raise TraceDecodeError(1, f"header missing {key}")

    trace = ExecutionTrace(trace_id=header["trace_id"], run_id=header["run_id"])
    trace.created_at = header["created_at"]
    expected_seq = 1
    for offset, text in enumerate(lines[1:], start=2):
        doc = parse_line(offset, text)
        for key in ("seq", "ts", "kind", "payload"):
            if key not in doc:
                raise TraceDecodeError(offset, f"event missing {key}")
        if doc["seq"] != expected_seq:
            raise TraceDecodeError(offset, f"expected seq {expected_seq}, got {doc['seq']}")
        if doc["kind"] not in EVENT_KINDS:
            raise TraceDecodeError(offset, f"unknown event kind {doc['kind']!r}")
        attribution = doc.get("attribution")
        if attribution is not None and attribution not in (ATTRIBUTION_POLICY, ATTRIBUTION_TOOL):
            raise TraceDecodeError(offset, f"unknown attribution {attribution!r}")
        event = TraceEvent(
            seq=doc["seq"],
            timestamp=doc["ts"],
            kind=doc["kind"],
            payload=doc["payload"],
            attribution=attribution,
        )
        trace._events.append(event)
        expected_seq += 1
    return trace.finalize()
