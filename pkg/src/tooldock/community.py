"""Community contribution protocol: submissions, verifier review, feedback.

Submissions are validated at the door (malformed payloads never enter the
queue) and reviewed exactly once: pending -> accepted or pending -> rejected.
Rejected submissions are retained with the reviewer's reasoning, and every
decision lands in an append-only audit log.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass

from .llm import BackendRegistry
from .runtime import ToolRegistry, binding_from_dict
from .schema import manifest_violations, validate_arguments
from .store import StateStore
from .verification import Expectation, ExpectationInvalid, TestCase

SUBMISSION_KINDS = ("test_case", "tool_manifest", "feedback")
FEEDBACK_SCOPES = ("tool_output", "agent_response")
RATINGS = ("positive", "negative")


class SubmissionRejected(ValueError):
    """Door rejection: the payload never enters the review queue."""

    def __init__(self, violations: list[dict]):
        self.violations = violations
        super().__init__("; ".join(f"{v['field']}: {v['message']}" for v in violations))


class ReviewConflict(RuntimeError):
    """The submission was already decided; first decision wins."""


class UnknownSubmission(KeyError):
    pass


# Reviews of a single submission are serialized: first decision wins.
_REVIEW_LOCK = threading.Lock()


@dataclass(frozen=True)
class FeedbackRecord:
    scope: str
    target_id: str
    rating: str
    comment: str | None = None

    def to_dict(self) -> dict:
        doc: dict = {"scope": self.scope, "target_id": self.target_id, "rating": self.rating}
        if self.comment is not None:
            doc["comment"] = self.comment
        return doc


def _new_submission_id() -> str:
    return "sub-" + uuid.uuid4().hex[:12]


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def _validate_test_case_payload(registry: ToolRegistry, payload: dict) -> list[dict]:
    violations: list[dict] = []
    tool_name = payload.get("tool_name")
    if not isinstance(tool_name, str) or tool_name not in registry:
        violations.append({"field": "tool_name", "message": f"unknown tool {tool_name!r}"})
        return violations
    descriptor = registry.descriptor(tool_name)
    input_args = payload.get("input")
    if not isinstance(input_args, dict):
        violations.append({"field": "input", "message": "input must be an object"})
    else:
        result = validate_arguments(descriptor, input_args)
        if not result.ok:
            violations.extend(
                {"field": f"input.{v.parameter}", "message": v.reason} for v in result.violations
            )
    try:
        Expectation.from_dict(payload.get("expect"))
    except ExpectationInvalid as exc:
        violations.append({"field": "expect", "message": str(exc)})
    return violations


def _validate_manifest_payload(registry: ToolRegistry, payload: dict) -> list[dict]:
    violations: list[dict] = []
    descriptor, manifest_errors = manifest_violations(payload.get("manifest"))
    violations.extend({"field": f"manifest.{v.field}", "message": v.message} for v in manifest_errors)
    if descriptor is not None and descriptor.name in registry:
        violations.append({"field": "manifest.name", "message": f"tool {descriptor.name} already registered"})
    binding_doc = payload.get("binding")
    if not isinstance(binding_doc, dict):
        violations.append({"field": "binding", "message": "binding configuration required"})
        return violations
    try:
        binding = binding_from_dict(binding_doc)
    except (KeyError, ValueError) as exc:
        violations.append({"field": "binding", "message": f"invalid binding: {exc}"})
        return violations
    if descriptor is not None:
        from .runtime import _BINDING_CATEGORY  # binding kind <-> category check

        if _BINDING_CATEGORY[type(binding)] != descriptor.category:
            violations.append(
                {
                    "field": "binding.kind",
                    "message": f"binding kind does not match category {descriptor.category!r}",
                }
            )
    return violations


def _validate_feedback_payload(store: StateStore, payload: dict) -> list[dict]:
    violations: list[dict] = []
    scope = payload.get("scope")
    if scope not in FEEDBACK_SCOPES:
        violations.append({"field": "scope", "message": f"scope must be one of {', '.join(FEEDBACK_SCOPES)}"})
    rating = payload.get("rating")
    if rating not in RATINGS:
        violations.append({"field": "rating", "message": f"rating must be one of {', '.join(RATINGS)}"})
    target_id = payload.get("target_id")
    if not isinstance(target_id, str) or not target_id:
        violations.append({"field": "target_id", "message": "target_id required"})
    elif not (store.trace_exists(target_id) or store.check_exists(target_id)):
        violations.append(
            {"field": "target_id", "message": f"{target_id} references no existing trace or check"}
        )
    return violations


def submit(
    store: StateStore,
    registry: ToolRegistry,
    kind: str,
    payload: dict,
    submitter: str = "anonymous",
) -> dict:
    """Queue a contribution as a pending submission.

    Pending submissions never affect evaluation rounds; schema pre-validation
    failures are rejected at the door with the full violation list.
    """
    if kind not in SUBMISSION_KINDS:
        raise SubmissionRejected([{"field": "kind", "message": f"unknown submission kind {kind!r}"}])
    if not isinstance(payload, dict):
        raise SubmissionRejected([{"field": "payload", "message": "payload must be an object"}])

    if kind == "test_case":
        violations = _validate_test_case_payload(registry, payload)
    elif kind == "tool_manifest":
        violations = _validate_manifest_payload(registry, payload)
    else:
        violations = _validate_feedback_payload(store, payload)
    if violations:
        raise SubmissionRejected(violations)

    submission = {
        "id": _new_submission_id(),
        "kind": kind,
        "payload": payload,
        "submitter": submitter,
        "submitted_at": _now(),
        "status": "pending",
        "review": None,
    }
    store.save_submission(submission)
    return submission


def review(
    store: StateStore,
    registry: ToolRegistry,
    submission_id: str,
    decision: str,
    reviewer: str,
    reason: str = "",
) -> dict:
    """Decide a pending submission exactly once.

    Accepting a test case adds it to the accepted suite (the suite version
    hash changes, and the next round runs it).  Accepting a tool manifest
    registers the tool, making it immediately evaluable.
    """
    if decision not in ("accept", "reject"):
        raise ValueError(f"decision must be accept or reject, not {decision!r}")
    with _REVIEW_LOCK:
        return _review_locked(store, registry, submission_id, decision, reviewer, reason)


def _review_locked(
    store: StateStore,
    registry: ToolRegistry,
    submission_id: str,
    decision: str,
    reviewer: str,
    reason: str,
) -> dict:
    submission = store.load_submission(submission_id)
    if submission is None:
        raise UnknownSubmission(submission_id)
    if submission["status"] != "pending":
        raise ReviewConflict(f"submission {submission_id} already {submission['status']}")

    payload = submission["payload"]
    if decision == "accept":
        if submission["kind"] == "test_case":
            case = TestCase(
                id=submission["id"],
                tool_name=payload["tool_name"],
                input_args=payload["input"],
                expectation=Expectation.from_dict(payload["expect"]),
                origin="community",
                status="accepted",
                contributor=submission["submitter"],
                created_at=submission["submitted_at"],
                notes=payload.get("notes"),
            )
            store.append_case(case)
        elif submission["kind"] == "tool_manifest":
            from .schema import validate_manifest

            descriptor = validate_manifest(payload["manifest"])
            binding = binding_from_dict(payload["binding"])
            registry.register(descriptor, binding)
            store.save_descriptor(descriptor)
            store.save_binding(descriptor.name, binding)
        # feedback acceptance is an acknowledgement; no further side effect

    submission["status"] = "accepted" if decision == "accept" else "rejected"
    submission["review"] = {"reviewer": reviewer, "decided_at": _now(), "reason": reason}
    store.save_submission(submission)
    store.append_review(
        {
            "submission_id": submission_id,
            "kind": submission["kind"],
            "decision": decision,
            "reviewer": reviewer,
            "reason": reason,
            "decided_at": submission["review"]["decided_at"],
        }
    )
    return submission


def promote_feedback_to_case(store: StateStore, submission_id: str) -> dict:
    """Turn an observed failure into a draft test case payload.

    Pre-fills tool and input from the referenced trace (or the original case
    for check targets); the contributor still owns the expected behavior.
    """
    submission = store.load_submission(submission_id)
    if submission is None:
        raise UnknownSubmission(submission_id)
    if submission["kind"] != "feedback":
        raise ValueError(f"submission {submission_id} is not feedback")
    target_id = submission["payload"]["target_id"]

    if store.trace_exists(target_id):
        trace = store.load_trace(target_id)
        tool_name = None
        input_args: dict = {}
        observed = ""
        for event in trace.events:
            if event.kind == "tool_invocation":
                tool_name = event.payload.get("tool")
                input_args = event.payload.get("arguments") or {}
            elif event.kind == "tool_result":
                observed = str(event.payload.get("value", ""))
        if tool_name is None:
            raise ValueError(f"trace {target_id} contains no tool invocation to promote")
        return {
            "tool_name": tool_name,
            "input": input_args,
            "expect": {"kind": "exact", "value": observed},
            "notes": f"draft promoted from feedback {submission_id}",
        }

    if store.check_exists(target_id):
        _, _, case_id = target_id.partition("/")
        for case in store.load_cases():
            if case.id == case_id:
                return {
                    "tool_name": case.tool_name,
                    "input": case.input_args,
                    "expect": case.expectation.to_dict(),
                    "notes": f"draft promoted from feedback {submission_id} on check {target_id}",
                }
    raise ValueError(f"feedback target {target_id} no longer resolvable")
