"""Chat-completion backends: an OpenAI-compatible HTTP client and a scripted mock.

Prompting tools, agent policies, and the semantic judge all go through this
abstraction.  The scripted mock is fully deterministic so every policy test
is reproducible offline; any endpoint speaking the chat-completions wire
shape works via `LLM_BASE_URL` / `LLM_API_KEY` / `LLM_MODEL`.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .schema import ToolDescriptor

ENV_BASE_URL = "LLM_BASE_URL"
ENV_API_KEY = "LLM_API_KEY"
ENV_MODEL = "LLM_MODEL"


class BackendError(RuntimeError):
    """Backend failure: network trouble, bad status, or script exhaustion."""

    def __init__(self, message: str, *, kind: str = "error", status: int | None = None):
        super().__init__(message)
        self.kind = kind  # network | http_status | timeout | script_exhausted | bad_response | unknown_backend
        self.status = status


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant | tool
    content: str

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class ToolCall:
    tool_name: str
    arguments: dict


@dataclass(frozen=True)
class ChatRequest:
    backend_id: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_tokens: int = 1024
    tool_declarations: tuple[dict, ...] | None = None

    def __post_init__(self):
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.messages[0].role not in ("system", "user"):
            raise ValueError("first message role must be system or user")

    def text(self) -> str:
        return "\n".join(f"{m.role}: {m.content}" for m in self.messages)


@dataclass(frozen=True)
class ChatResponse:
    content: str = ""
    tool_call: ToolCall | None = None
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency_ms: float = 0.0


class OpenAICompatibleBackend:
    """Posts the chat-completions body and maps the first choice."""

    def __init__(self, base_url: str, api_key: str = "", model: str = "", timeout_s: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.timeout_s = timeout_s

    @classmethod
    def from_env(cls) -> "OpenAICompatibleBackend | None":
        base_url = os.environ.get(ENV_BASE_URL)
        if not base_url:
            return None
        return cls(
            base_url=base_url,
            api_key=os.environ.get(ENV_API_KEY, ""),
            model=os.environ.get(ENV_MODEL, ""),
        )

    def complete(self, request: ChatRequest) -> ChatResponse:
        payload: dict = {
            "model": self.model,
            "messages": [m.to_dict() for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        if request.tool_declarations:
            payload["tools"] = list(request.tool_declarations)
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        started = time.perf_counter()
        try:
            response = httpx.post(
                f"{self.base_url}/chat/completions", json=payload, headers=headers, timeout=self.timeout_s
            )
        except httpx.TimeoutException as exc:
            raise BackendError(f"backend timed out: {exc}", kind="timeout") from exc
        except httpx.HTTPError as exc:
            raise BackendError(f"backend unreachable: {exc}", kind="network") from exc
        latency_ms = (time.perf_counter() - started) * 1000.0
        if response.status_code < 200 or response.status_code >= 300:
            raise BackendError(
                f"backend returned HTTP {response.status_code}", kind="http_status", status=response.status_code
            )
        try:
            body = response.json()
            choice = body["choices"][0]["message"]
        except (ValueError, LookupError, TypeError) as exc:
            raise BackendError(f"malformed completion body: {exc}", kind="bad_response") from exc

        tool_call = None
        raw_calls = choice.get("tool_calls") or []
        if raw_calls:
            function = raw_calls[0].get("function", {})
            raw_args = function.get("arguments", "{}")
            try:
                arguments = json.loads(raw_args) if isinstance(raw_args, str) else dict(raw_args)
            except (ValueError, TypeError):
                arguments = {}
            tool_call = ToolCall(tool_name=function.get("name", ""), arguments=arguments)

        usage = body.get("usage") or {}
        return ChatResponse(
            content=choice.get("content") or "",
            tool_call=tool_call,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
            latency_ms=latency_ms,
        )


@dataclass(frozen=True)
class ScriptedResponse:
    content: str = ""
    tool_call: ToolCall | None = None
    match: str | None = None  # regex the serialized request must contain


class ScriptedBackend:
    """Deterministic mock: pops scripted responses in order.

    A response's optional `match` predicate is asserted against the request
    text, so a drifting prompt fails loudly instead of silently.  Script
    exhaustion is an error, which doubles as a test-leak detector.  Calls
    observe a total order; captured requests are kept for assertions.
    """

    def __init__(self, responses: list[ScriptedResponse] | None = None):
        self.responses = list(responses or [])
        self.requests: list[ChatRequest] = []
        self._cursor = 0
        self._lock = threading.Lock()

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            self.requests.append(request)
            if self._cursor >= len(self.responses):
                raise BackendError(
                    f"scripted backend exhausted after {len(self.responses)} responses",
                    kind="script_exhausted",
                )
            scripted = self.responses[self._cursor]
            self._cursor += 1
        if scripted.match is not None and not re.search(scripted.match, request.text(), re.DOTALL):
            raise BackendError(
                f"scripted response {self._cursor} expected request matching {scripted.match!r}",
                kind="bad_response",
            )
        return ChatResponse(
            content=scripted.content,
            tool_call=scripted.tool_call,
            prompt_tokens=len(request.text().split()),
            completion_tokens=len(scripted.content.split()),
            latency_ms=0.0,
        )

    @property
    def consumed(self) -> int:
        return self._cursor

    @property
    def remaining(self) -> int:
        return len(self.responses) - self._cursor


def parse_script(entries: list) -> ScriptedBackend:
    """Build a scripted backend from JSON-shaped entries.

    Entry shape: {"content": str} and/or
    {"tool_call": {"tool_name": str, "arguments": {...}}}, plus optional
    {"match": regex}.
    """
    responses = []
    for entry in entries:
        tool_call = None
        raw_call = entry.get("tool_call")
        if raw_call:
            tool_call = ToolCall(tool_name=raw_call["tool_name"], arguments=dict(raw_call.get("arguments", {})))
        responses.append(
            ScriptedResponse(content=entry.get("content", ""), tool_call=tool_call, match=entry.get("match"))
        )
    return ScriptedBackend(responses)


def load_script(path: str | Path) -> ScriptedBackend:
    """Load a mock script from a JSON fixture file."""
    with open(path, "r", encoding="utf-8") as handle:
        return parse_script(json.load(handle))


class BackendRegistry:
    """Maps backend ids onto backend instances; safe for concurrent completes."""

    def __init__(self):
        self._backends: dict[str, object] = {}

    def register(self, backend_id: str, backend) -> None:
        self._backends[backend_id] = backend

    def get(self, backend_id: str):
        return self._backends.get(backend_id)

    def ids(self) -> list[str]:
        return sorted(self._backends)

    def copy(self) -> "BackendRegistry":
        clone = BackendRegistry()
        clone._backends = dict(self._backends)
        return clone

    def complete(self, request: ChatRequest) -> ChatResponse:
        backend = self._backends.get(request.backend_id)
        if backend is None:
            raise BackendError(f"no backend registered under {request.backend_id!r}", kind="unknown_backend")
        return backend.complete(request)

    @classmethod
    def from_env(cls) -> "BackendRegistry":
        registry = cls()
        http_backend = OpenAICompatibleBackend.from_env()
        if http_backend is not None:
            registry.register("default", http_backend)
        return registry


_DECLARATION_TYPES = {
    "string": {"type": "string"},
    "integer": {"type": "integer"},
    "number": {"type": "number"},
    "boolean": {"type": "boolean"},
    "string-list": {"type": "array", "items": {"type": "string"}},
    "file-reference": {"type": "string", "format": "file-reference"},
}


def project_tool_declarations(descriptors: list[ToolDescriptor]) -> list[dict]:
    """Project descriptors into function-call declarations, losslessly.

    Required flags, enums, ranges, and descriptions survive the projection,
    so distinct schemas never collide.
    """
    declarations = []
    for descriptor in descriptors:
        properties: dict = {}
        required: list[str] = []
        for spec in descriptor.arguments.parameters:
            prop = dict(_DECLARATION_TYPES[spec.type])
            if spec.type == "string-list":
                prop["items"] = dict(prop["items"])
            if spec.description:
                prop["description"] = spec.description
            if spec.enum is not None:
                prop["enum"] = list(spec.enum)
            if spec.minimum is not None:
                prop["minimum"] = spec.minimum
            if spec.maximum is not None:
                prop["maximum"] = spec.maximum
            properties[spec.name] = prop
            if spec.required:
                required.append(spec.name)
        declarations.append(
            {
                "type": "function",
                "function": {
                    "name": descriptor.name,
                    "description": descriptor.description,
                    "parameters": {
                        "type": "object",
                        "properties": properties,
                        "required": required,
                        "additionalProperties": False,
                    },
                },
            }
        )
    return declarations
