"""Test suites and the verification module that scores tool outputs.

Expectations come in five kinds: exact, numeric_tolerance, pattern,
property, and semantic.  Property predicates live in a fixed catalog —
community cases stay declarative, never executable.
"""

from __future__ import annotations

import json
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .llm import BackendError, BackendRegistry, ChatMessage, ChatRequest
from .runtime import InvocationBudget, Observation, ToolError, ToolRegistry, UnknownToolError, invoke
from .templates import render_template

EXPECTATION_KINDS = ("exact", "numeric_tolerance", "pattern", "property", "semantic")
CASE_ORIGINS = ("curated", "community")
CASE_STATUSES = ("pending", "accepted", "rejected")


class ExpectationInvalid(ValueError):
    pass


class CaseInvalid(ValueError):
    pass


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


@dataclass(frozen=True)
class Expectation:
    """Tagged union over the five check kinds; exactly one payload populated."""

    kind: str
    value: object = None          # exact: str; numeric_tolerance: number
    abs_tol: float | None = None
    rel_tol: float | None = None
    regex: str | None = None
    predicate: str | None = None
    params: dict | None = None
    reference: str | None = None
    judge_backend: str | None = None

    def to_dict(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.kind == "exact":
            doc["value"] = self.value
        elif self.kind == "numeric_tolerance":
            doc["value"] = self.value
            if self.abs_tol is not None:
                doc["abs_tol"] = self.abs_tol
            if self.rel_tol is not None:
                doc["rel_tol"] = self.rel_tol
        elif self.kind == "pattern":
            doc["regex"] = self.regex
        elif self.kind == "property":
            doc["predicate"] = self.predicate
            if self.params:
                doc["params"] = self.params
        elif self.kind == "semantic":
            doc["reference"] = self.reference
            doc["judge_backend"] = self.judge_backend
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "Expectation":
        if not isinstance(doc, dict):
            raise ExpectationInvalid("expectation must be an object")
        kind = doc.get("kind")
        if kind not in EXPECTATION_KINDS:
            raise ExpectationInvalid(f"unknown expectation kind {kind!r}; expected one of {', '.join(EXPECTATION_KINDS)}")
        if kind == "exact":
            value = doc.get("value")
            if not isinstance(value, str):
                raise ExpectationInvalid("exact expectation needs a string value")
            return cls(kind=kind, value=value)
        if kind == "numeric_tolerance":
            value = doc.get("value")
            if not _is_number(value):
                raise ExpectationInvalid("numeric_tolerance expectation needs a numeric value")
            abs_tol = doc.get("abs_tol")
            rel_tol = doc.get("rel_tol")
            if abs_tol is None and rel_tol is None:
                raise ExpectationInvalid("numeric_tolerance needs abs_tol and/or rel_tol")
            for name, tol in (("abs_tol", abs_tol), ("rel_tol", rel_tol)):
                if tol is not None and (not _is_number(tol) or tol < 0):
                    raise ExpectationInvalid(f"{name} must be a non-negative number")
            return cls(kind=kind, value=value, abs_tol=abs_tol, rel_tol=rel_tol)
        if kind == "pattern":
            regex = doc.get("regex")
            if not isinstance(regex, str):
                raise ExpectationInvalid("pattern expectation needs a regex string")
            try:
                re.compile(regex)
            except re.error as exc:
                raise ExpectationInvalid(f"invalid regex: {exc}") from None
            return cls(kind=kind, regex=regex)
        if kind == "property":
            predicate = doc.get("predicate")
            if predicate not in PREDICATES:
                raise ExpectationInvalid(
                    f"unknown predicate {predicate!r}; catalog: {', '.join(sorted(PREDICATES))}"
                )
            params = doc.get("params") or {}
            if not isinstance(params, dict):
                raise ExpectationInvalid("predicate params must be an object")
            return cls(kind=kind, predicate=predicate, params=params)
        reference = doc.get("reference")
        judge_backend = doc.get("judge_backend", "default")
        if not isinstance(reference, str):
            raise ExpectationInvalid("semantic expectation needs a reference string")
        return cls(kind=kind, reference=reference, judge_backend=judge_backend)


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # domain type, not a pytest class

    id: str
    tool_name: str
    input_args: dict
    expectation: Expectation
    origin: str = "curated"
    status: str = "pending"
    contributor: str | None = None
    created_at: str = ""
    notes: str | None = None

    def to_dict(self) -> dict:
        doc: dict = {
            "id": self.id,
            "input": self.input_args,
            "expect": self.expectation.to_dict(),
            "origin": self.origin,
            "status": self.status,
        }
        if self.contributor is not None:
            doc["contributor"] = self.contributor
        if self.created_at:
            doc["created_at"] = self.created_at
        if self.notes is not None:
            doc["notes"] = self.notes
        return doc

    @classmethod
    def from_dict(cls, tool_name: str, doc: dict) -> "TestCase":
        if not isinstance(doc, dict):
            raise CaseInvalid("test case must be an object")
        case_id = doc.get("id")
        if not isinstance(case_id, str) or not case_id:
            raise CaseInvalid("test case needs a non-empty string id")
        input_args = doc.get("input")
        if not isinstance(input_args, dict):
            raise CaseInvalid(f"case {case_id}: input must be an object")
        origin = doc.get("origin", "curated")
        if origin not in CASE_ORIGINS:
            raise CaseInvalid(f"case {case_id}: unknown origin {origin!r}")
        status = doc.get("status", "pending")
        if status not in CASE_STATUSES:
            raise CaseInvalid(f"case {case_id}: unknown status {status!r}")
        return cls(
            id=case_id,
            tool_name=tool_name,
            input_args=input_args,
            expectation=Expectation.from_dict(doc.get("expect")),
            origin=origin,
            status=status,
            contributor=doc.get("contributor"),
            created_at=doc.get("created_at", ""),
            notes=doc.get("notes"),
        )


@dataclass(frozen=True)
class CheckOutcome:
    passed: bool
    detail: str


@dataclass(frozen=True)
class CheckResult:
    case_id: str
    verdict: str  # pass | fail | error
    detail: str
    tool_outcome: Observation | ToolError
    checked_at: float

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "verdict": self.verdict,
            "detail": self.detail,
            "checked_at": self.checked_at,
        }


@dataclass(frozen=True)
class SuiteSummary:
    n_pass: int
    n_fail: int
    n_error: int
    accuracy: float | None
    availability: float | None

    @property
    def n_cases(self) -> int:
        return self.n_pass + self.n_fail + self.n_error

    def to_dict(self) -> dict:
        return {
            "n_pass": self.n_pass,
            "n_fail": self.n_fail,
            "n_error": self.n_error,
            "accuracy": self.accuracy,
            "availability": self.availability,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SuiteSummary":
        return cls(
            n_pass=doc["n_pass"],
            n_fail=doc["n_fail"],
            n_error=doc["n_error"],
            accuracy=doc.get("accuracy"),
            availability=doc.get("availability"),
        )


# ---------------------------------------------------------------------------
# Property predicate catalog
# ---------------------------------------------------------------------------

def _pred_is_valid_json(text: str, params: dict) -> bool:
    try:
        json.loads(text)
        return True
    except json.JSONDecodeError:
        return False


def _pred_length_between(text: str, params: dict) -> bool:
    low = params.get("min", 0)
    high = params.get("max", float("inf"))
    return low <= len(text) <= high


def _pred_contains_all(text: str, params: dict) -> bool:
    return all(needle in text for needle in params.get("values", []))


def _pred_contains_any(text: str, params: dict) -> bool:
    return any(needle in text for needle in params.get("values", []))


def _pred_non_empty(text: str, params: dict) -> bool:
    return bool(text.strip())


PREDICATES = {
    "is_valid_json": _pred_is_valid_json,
    "length_between": _pred_length_between,
    "contains_all": _pred_contains_all,
    "contains_any": _pred_contains_any,
    "non_empty": _pred_non_empty,
}


def _extract_number(observation: Observation) -> float | None:
    value = observation.output_value
    if _is_number(value):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value.strip())
        except ValueError:
            return None
    return None


def check(
    expectation: Expectation,
    observation: Observation,
    backends: BackendRegistry | None = None,
) -> CheckOutcome:
    """Score a tool observation against an expectation.

    Exact matches trim trailing whitespace only; case sensitivity is
    retained.  A non-numeric output under numeric_tolerance is a fail, not
    an error: the tool did run.
    """
    text = observation.output_text()
    if expectation.kind == "exact":
        got = text.rstrip()
        want = str(expectation.value).rstrip()
        if got == want:
            return CheckOutcome(True, "exact match")
        return CheckOutcome(False, f"expected {want!r}, got {got!r}")

    if expectation.kind == "numeric_tolerance":
        out = _extract_number(observation)
        if out is None:
            return CheckOutcome(False, f"output is not numeric: {text!r}")
        expected = float(expectation.value)
        delta = abs(out - expected)
        within_abs = expectation.abs_tol is not None and delta <= expectation.abs_tol
        within_rel = expectation.rel_tol is not None and delta <= expectation.rel_tol * abs(expected)
        if within_abs or within_rel:
            return CheckOutcome(True, f"|{out} - {expected}| = {delta:g} within tolerance")
        return CheckOutcome(False, f"|{out} - {expected}| = {delta:g} outside tolerance")

    if expectation.kind == "pattern":
        if re.fullmatch(expectation.regex, text):
            return CheckOutcome(True, f"matched /{expectation.regex}/")
        return CheckOutcome(False, f"output {text!r} does not fully match /{expectation.regex}/")

    if expectation.kind == "property":
        predicate = PREDICATES[expectation.predicate]
        if predicate(text, expectation.params or {}):
            return CheckOutcome(True, f"property {expectation.predicate} holds")
        return CheckOutcome(False, f"property {expectation.predicate} violated")

    # semantic: delegate equivalence to the judge backend
    if backends is None:
        return CheckOutcome(False, "semantic check requires a judge backend registry")
    prompt = render_template("judge", reference=expectation.reference, candidate=text)
    request = ChatRequest(
        backend_id=expectation.judge_backend or "default",
        messages=(ChatMessage("user", prompt),),
        temperature=0.0,
        max_tokens=16,
    )
    try:
        response = backends.complete(request)
    except BackendError as exc:
        return CheckOutcome(False, f"judge backend failed: {exc}")
    verdict = response.content.strip().upper()
    if "NOT_EQUIVALENT" in verdict or "NOT EQUIVALENT" in verdict:
        return CheckOutcome(False, "judge: not equivalent")
    if "EQUIVALENT" in verdict:
        return CheckOutcome(True, "judge: equivalent")
    return CheckOutcome(False, f"judge answer unrecognized: {response.content!r}")


def run_case(
    registry: ToolRegistry,
    case: TestCase,
    *,
    budget: InvocationBudget | None = None,
    backends: BackendRegistry | None = None,
) -> CheckResult:
    """Invoke the case's tool and apply its expectation.

    verdict=error means the tool itself errored and the check never ran.
    """
    try:
        outcome = invoke(registry, case.tool_name, case.input_args, budget, backends=backends)
    except UnknownToolError as exc:
        return CheckResult(
            case_id=case.id,
            verdict="error",
            detail=f"routing: {exc.args[0]}",
            tool_outcome=ToolError("unavailable", str(exc), case.tool_name, 0),
            checked_at=time.time(),
        )
    if isinstance(outcome, ToolError):
        return CheckResult(
            case_id=case.id,
            verdict="error",
            detail=f"tool error ({outcome.error_class}): {outcome.message}",
            tool_outcome=outcome,
            checked_at=time.time(),
        )
    result = check(case.expectation, outcome, backends=backends)
    return CheckResult(
        case_id=case.id,
        verdict="pass" if result.passed else "fail",
        detail=result.detail,
        tool_outcome=outcome,
        checked_at=time.time(),
    )


def summarize(results: list[CheckResult]) -> SuiteSummary:
    n_pass = sum(1 for r in results if r.verdict == "pass")
    n_fail = sum(1 for r in results if r.verdict == "fail")
    n_error = sum(1 for r in results if r.verdict == "error")
    scored = n_pass + n_fail
    total = len(results)
    return SuiteSummary(
        n_pass=n_pass,
        n_fail=n_fail,
        n_error=n_error,
        accuracy=(n_pass / scored) if scored else None,
        availability=(scored / total) if total else None,
    )


def run_suite(
    registry: ToolRegistry,
    suite: list[TestCase],
    parallelism: int = 1,
    *,
    budget: InvocationBudget | None = None,
    backends: BackendRegistry | None = None,
) -> tuple[list[CheckResult], SuiteSummary]:
    """Run accepted cases, up to `parallelism` at a time.

    Results keep input order regardless of execution interleaving.
    Accuracy excludes error-class outcomes; availability captures them.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be a positive integer")
    for case in suite:
        if case.status != "accepted":
            raise CaseInvalid(f"case {case.id} is {case.status}; only accepted cases run")

    if not suite:
        return [], summarize([])

    if parallelism == 1:
        results = [run_case(registry, case, budget=budget, backends=backends) for case in suite]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(
                pool.map(lambda c: run_case(registry, c, budget=budget, backends=backends), suite)
            )
    return results, summarize(results)
