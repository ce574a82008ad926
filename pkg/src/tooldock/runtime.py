"""Tool registry and the execution manager.

`invoke` mediates between policies and tools: it validates arguments against
the schema, executes the binding with timeout/retry, enforces the output
contract, and returns an Observation or a classified ToolError.  When given
a trace it emits a (tool_validation, tool_invocation, tool_result|tool_error)
triple for every call.
"""

from __future__ import annotations

import json
import os
import random
import re
import threading
import time
import urllib.parse
from dataclasses import dataclass, field

import httpx

from . import trace as trace_mod
from .llm import BackendError, BackendRegistry, ChatMessage, ChatRequest
from .programs import PROGRAM_CATALOG
from .schema import ToolDescriptor, validate_arguments

DEFAULT_TIMEOUT_MS = 30_000
DEFAULT_MAX_RETRIES = 2

# Exponential backoff between retryable attempts.
_BACKOFF_BASE_S = 0.25
_BACKOFF_FACTOR = 2.0
_BACKOFF_JITTER = 0.2

RETRYABLE_CLASSES = frozenset({"timeout", "rate_limited", "unavailable"})

_ENV_PLACEHOLDER_RE = re.compile(r"\$\{([A-Z0-9_]+)\}")


class RegistrationError(ValueError):
    """Registering a tool failed (duplicate name or category mismatch)."""


class UnknownToolError(KeyError):
    """Routing error: the requested tool is not in the registry.

    Distinct from ToolError — an unknown name signals a policy bug, not a
    tool fault.
    """

    def __init__(self, tool_name: str):
        self.tool_name = tool_name
        super().__init__(f"unknown tool: {tool_name}")


class ContractViolationError(ValueError):
    pass


@dataclass(frozen=True)
class ProgramBinding:
    function: str  # name in the program catalog


@dataclass(frozen=True)
class ApiBinding:
    url_template: str
    method: str = "POST"
    headers: tuple[tuple[str, str], ...] = ()
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    max_retries: int = DEFAULT_MAX_RETRIES


@dataclass(frozen=True)
class PromptBinding:
    template: str
    backend_id: str = "default"
    temperature: float = 0.0
    max_tokens: int = 512


ToolBinding = ProgramBinding | ApiBinding | PromptBinding

_BINDING_CATEGORY = {ProgramBinding: "program", ApiBinding: "api", PromptBinding: "prompting"}


def binding_from_dict(doc: dict) -> ToolBinding:
    kind = doc.get("kind")
    if kind == "program":
        return ProgramBinding(function=doc["function"])
    if kind == "api":
        return ApiBinding(
            url_template=doc["url_template"],
            method=doc.get("method", "POST").upper(),
            headers=tuple(sorted((doc.get("headers") or {}).items())),
            timeout_ms=int(doc.get("timeout_ms", DEFAULT_TIMEOUT_MS)),
            max_retries=int(doc.get("max_retries", DEFAULT_MAX_RETRIES)),
        )
    if kind == "prompting":
        return PromptBinding(
            template=doc["template"],
            backend_id=doc.get("backend_id", "default"),
            temperature=float(doc.get("temperature", 0.0)),
            max_tokens=int(doc.get("max_tokens", 512)),
        )
    raise ValueError(f"unknown binding kind: {kind!r}")


def binding_to_dict(binding: ToolBinding) -> dict:
    if isinstance(binding, ProgramBinding):
        return {"kind": "program", "function": binding.function}
    if isinstance(binding, ApiBinding):
        return {
            "kind": "api",
            "url_template": binding.url_template,
            "method": binding.method,
            "headers": dict(binding.headers),
            "timeout_ms": binding.timeout_ms,
            "max_retries": binding.max_retries,
        }
    return {
        "kind": "prompting",
        "template": binding.template,
        "backend_id": binding.backend_id,
        "temperature": binding.temperature,
        "max_tokens": binding.max_tokens,
    }


@dataclass(frozen=True)
class Observation:
    tool_name: str
    arguments: dict
    output_kind: str
    output_value: object
    latency_ms: float
    attempt_count: int

    def output_text(self) -> str:
        """Textual form of the output, canonical JSON for structured values."""
        if isinstance(self.output_value, str):
            return self.output_value
        if isinstance(self.output_value, (dict, list)):
            return json.dumps(self.output_value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return str(self.output_value)

    def to_dict(self) -> dict:
        return {
            "tool_name": self.tool_name,
            "arguments": self.arguments,
            "output_kind": self.output_kind,
            "output_value": self.output_value,
            "latency_ms": self.latency_ms,
            "attempt_count": self.attempt_count,
        }


@dataclass(frozen=True)
class ToolError:
    error_class: str  # validation | execution | timeout | rate_limited | unavailable | contract_violation
    message: str
    tool_name: str
    attempt_count: int
    violations: tuple = ()

    @property
    def attribution(self) -> str:
        return trace_mod.attribution_for(self.error_class)

    def to_dict(self) -> dict:
        doc = {
            "error_class": self.error_class,
            "message": self.message,
            "tool_name": self.tool_name,
            "attempt_count": self.attempt_count,
        }
        if self.violations:
            doc["violations"] = [v.to_dict() for v in self.violations]
        return doc


@dataclass(frozen=True)
class InvocationBudget:
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    max_retries: int = DEFAULT_MAX_RETRIES


class ToolRegistry:
    """Name -> (descriptor, binding) map; read-mostly, writes serialized."""

    def __init__(self):
        self._entries: dict[str, tuple[ToolDescriptor, ToolBinding]] = {}
        self._write_lock = threading.Lock()

    def register(self, descriptor: ToolDescriptor, binding: ToolBinding) -> None:
        expected = _BINDING_CATEGORY[type(binding)]
        if descriptor.category != expected:
            raise RegistrationError(
                f"binding kind {expected!r} does not match descriptor category {descriptor.category!r}"
            )
        with self._write_lock:
            if descriptor.name in self._entries:
                raise RegistrationError(f"duplicate tool name: {descriptor.name}")
            self._entries[descriptor.name] = (descriptor, binding)

    def update_descriptor(self, descriptor: ToolDescriptor) -> None:
        with self._write_lock:
            if descriptor.name not in self._entries:
                raise UnknownToolError(descriptor.name)
            _, binding = self._entries[descriptor.name]
            self._entries[descriptor.name] = (descriptor, binding)

    def get(self, name: str) -> tuple[ToolDescriptor, ToolBinding]:
        try:
            return self._entries[name]
        except KeyError:
            raise UnknownToolError(name) from None

    def descriptor(self, name: str) -> ToolDescriptor:
        return self.get(name)[0]

    def names(self) -> list[str]:
        return sorted(self._entries)

    def descriptors(self) -> list[ToolDescriptor]:
        return [self._entries[name][0] for name in self.names()]

    def category_counts(self) -> dict[str, int]:
        counts = {"program": 0, "api": 0, "prompting": 0}
        for descriptor, _ in self._entries.values():
            counts[descriptor.category] += 1
        return counts

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)


def check_output_contract(descriptor: ToolDescriptor, raw_output):
    """Coerce raw binding output into the contract's kind, or raise.

    Structure hints on json-object contracts are advisory and not enforced.
    """
    kind = descriptor.output.kind
    if kind == "text":
        if isinstance(raw_output, str):
            return raw_output
        if isinstance(raw_output, bool):
            raise ContractViolationError("text contract violated: got a boolean")
        if isinstance(raw_output, (int, float)):
            return str(raw_output)
        raise ContractViolationError(f"text contract violated: got {type(raw_output).__name__}")
    if kind == "number":
        if isinstance(raw_output, bool):
            raise ContractViolationError("number contract violated: got a boolean")
        if isinstance(raw_output, (int, float)):
            return raw_output
        if isinstance(raw_output, str):
            text = raw_output.strip()
            try:
                return int(text) if re.fullmatch(r"[+-]?\d+", text) else float(text)
            except ValueError:
                raise ContractViolationError(f"number contract violated: cannot parse {raw_output!r}") from None
        raise ContractViolationError(f"number contract violated: got {type(raw_output).__name__}")
    if kind == "json-object":
        if isinstance(raw_output, dict):
            return raw_output
        if isinstance(raw_output, str):
            try:
                parsed = json.loads(raw_output)
            except json.JSONDecodeError as exc:
                raise ContractViolationError(f"json-object contract violated: {exc}") from None
            if not isinstance(parsed, dict):
                raise ContractViolationError("json-object contract violated: top level is not an object")
            return parsed
        raise ContractViolationError(f"json-object contract violated: got {type(raw_output).__name__}")
    if kind == "file-reference":
        if isinstance(raw_output, str):
            return raw_output
        raise ContractViolationError("file-reference contract violated: expected a path or URI string")
    raise ContractViolationError(f"unknown output kind: {kind}")


def _resolve_env(template: str) -> str:
    def replace(match: re.Match) -> str:
        name = match.group(1)
        value = os.environ.get(name)
        if value is None:
            raise KeyError(name)
        return value

    return _ENV_PLACEHOLDER_RE.sub(replace, template)


def _render_url(binding: ApiBinding, args: dict) -> str:
    url = _resolve_env(binding.url_template)

    def substitute(match: re.Match) -> str:
        key = match.group(1)
        if key not in args:
            raise ValueError(f"url template references missing argument {key!r}")
        return urllib.parse.quote(str(args[key]), safe="/")

    return re.sub(r"\{([a-zA-Z_][a-zA-Z0-9_]*)\}", substitute, url)


class _Failure(Exception):
    def __init__(self, error_class: str, message: str):
        self.error_class = error_class
        self.message = message
        super().__init__(message)


def _execute_program(binding: ProgramBinding, args: dict):
    function = PROGRAM_CATALOG.get(binding.function)
    if function is None:
        raise _Failure("unavailable", f"program function {binding.function!r} is not in the catalog")
    try:
        return function(args)
    except _Failure:
        raise
    except Exception as exc:
        raise _Failure("execution", f"{type(exc).__name__}: {exc}") from exc


def _execute_api(binding: ApiBinding, args: dict, timeout_ms: int):
    try:
        url = _render_url(binding, args)
        headers = {key: _resolve_env(value) for key, value in binding.headers}
    except KeyError as exc:
        raise _Failure("unavailable", f"environment variable {exc.args[0]} is not set") from exc
    except ValueError as exc:
        raise _Failure("execution", str(exc)) from exc

    timeout_s = timeout_ms / 1000.0
    try:
        if binding.method == "GET":
            response = httpx.get(url, headers=headers, timeout=timeout_s)
        else:
            response = httpx.request(binding.method, url, json=args, headers=headers, timeout=timeout_s)
    except httpx.TimeoutException as exc:
        raise _Failure("timeout", f"request exceeded {timeout_ms} ms") from exc
    except httpx.HTTPError as exc:
        raise _Failure("unavailable", f"endpoint unreachable: {exc}") from exc

    status = response.status_code
    if status == 429:
        raise _Failure("rate_limited", "endpoint returned HTTP 429")
    if status in (502, 503, 504):
        raise _Failure("unavailable", f"endpoint returned HTTP {status}")
    if status < 200 or status >= 300:
        raise _Failure("execution", f"endpoint returned HTTP {status}")
    return response.text


def _execute_prompt(binding: PromptBinding, args: dict, backends: BackendRegistry | None):
    if backends is None:
        raise _Failure("unavailable", "no backend registry supplied for prompting tool")
    try:
        prompt = binding.template.format_map(args)
    except (KeyError, IndexError) as exc:
        raise _Failure("execution", f"prompt template references missing argument: {exc}") from exc
    request = ChatRequest(
        backend_id=binding.backend_id,
        messages=(ChatMessage("user", prompt),),
        temperature=binding.temperature,
        max_tokens=binding.max_tokens,
    )
    try:
        response = backends.complete(request)
    except BackendError as exc:
        if exc.kind == "timeout":
            raise _Failure("timeout", str(exc)) from exc
        if exc.kind in ("network", "unknown_backend"):
            raise _Failure("unavailable", str(exc)) from exc
        if exc.kind == "http_status":
            if exc.status == 429:
                raise _Failure("rate_limited", str(exc)) from exc
            if exc.status is not None and exc.status >= 500:
                raise _Failure("unavailable", str(exc)) from exc
            raise _Failure("execution", str(exc)) from exc
        raise _Failure("execution", str(exc)) from exc
    return response.content


def _sleep(seconds: float) -> None:
    time.sleep(seconds)


def _backoff_delay(attempt: int) -> float:
    base = _BACKOFF_BASE_S * (_BACKOFF_FACTOR ** (attempt - 1))
    jitter = random.uniform(1.0 - _BACKOFF_JITTER, 1.0 + _BACKOFF_JITTER)
    return base * jitter


def invoke(
    registry: ToolRegistry,
    tool_name: str,
    args: dict,
    budget: InvocationBudget | None = None,
    *,
    trace: trace_mod.ExecutionTrace | None = None,
    backends: BackendRegistry | None = None,
) -> Observation | ToolError:
    """Execute one tool call end to end.

    Emits exactly one terminal outcome.  Retries apply only to timeout,
    rate_limited, and unavailable failures, with exponential backoff.
    Validation failures never touch the binding (attempt_count stays 0).
    Raises UnknownToolError for unresolvable names.
    """
    descriptor, binding = registry.get(tool_name)

    validation = validate_arguments(descriptor, args)
    if trace is not None:
        payload: dict = {"tool": tool_name, "arguments": args, "ok": validation.ok}
        if not validation.ok:
            payload["violations"] = [v.to_dict() for v in validation.violations]
        trace.append("tool_validation", payload)
        trace.append("tool_invocation", {"tool": tool_name, "arguments": args})
    if not validation.ok:
        error = ToolError(
            error_class="validation",
            message="; ".join(f"{v.parameter}: {v.reason}" for v in validation.violations),
            tool_name=tool_name,
            attempt_count=0,
            violations=validation.violations,
        )
        if trace is not None:
            trace.append(
                "tool_error",
                {"tool": tool_name, "error_class": "validation", "message": error.message, "attempt_count": 0},
                attribution=trace_mod.ATTRIBUTION_POLICY,
            )
        return error

    budget = budget or InvocationBudget()
    if isinstance(binding, ApiBinding):
        # Per-binding budget applies unless the caller tightened it.
        timeout_ms = min(budget.timeout_ms, binding.timeout_ms)
        max_retries = budget.max_retries if budget.max_retries != DEFAULT_MAX_RETRIES else binding.max_retries
    else:
        timeout_ms = budget.timeout_ms
        max_retries = budget.max_retries

    started = time.perf_counter()
    attempt = 0
    failure: _Failure | None = None
    raw_output = None
    while attempt <= max_retries:
        attempt += 1
        try:
            if isinstance(binding, ProgramBinding):
                raw_output = _execute_program(binding, args)
            elif isinstance(binding, ApiBinding):
                raw_output = _execute_api(binding, args, timeout_ms)
            else:
                raw_output = _execute_prompt(binding, args, backends)
            failure = None
            break
        except _Failure as exc:
            failure = exc
            if exc.error_class in RETRYABLE_CLASSES and attempt <= max_retries:
                _sleep(_backoff_delay(attempt))
                continue
            break

    latency_ms = (time.perf_counter() - started) * 1000.0

    if failure is not None:
        error = ToolError(
            error_class=failure.error_class,
            message=failure.message,
            tool_name=tool_name,
            attempt_count=attempt,
        )
        if trace is not None:
            trace.append(
                "tool_error",
                {
                    "tool": tool_name,
                    "error_class": error.error_class,
                    "message": error.message,
                    "attempt_count": attempt,
                },
                attribution=error.attribution,
            )
        return error

    try:
        value = check_output_contract(descriptor, raw_output)
    except ContractViolationError as exc:
        error = ToolError(
            error_class="contract_violation",
            message=str(exc),
            tool_name=tool_name,
            attempt_count=attempt,
        )
        if trace is not None:
            trace.append(
                "tool_error",
                {
                    "tool": tool_name,
                    "error_class": "contract_violation",
                    "message": str(exc),
                    "attempt_count": attempt,
                },
                attribution=trace_mod.ATTRIBUTION_TOOL,
            )
        return error

    observation = Observation(
        tool_name=tool_name,
        arguments=dict(args),
        output_kind=descriptor.output.kind,
        output_value=value,
        latency_ms=latency_ms,
        attempt_count=attempt,
    )
    if trace is not None:
        trace.append(
            "tool_result",
            {
                "tool": tool_name,
                "output_kind": observation.output_kind,
                "value": observation.output_text(),
                "attempt_count": attempt,
            },
        )
    return observation
