"""Shared policy machinery: configs, runs, guarded shared memory."""

from __future__ import annotations

import re
import uuid
from dataclasses import dataclass, field

POLICY_KINDS = ("prompting_zero_shot", "prompting_cot", "react", "planner_executor", "multi_agent")

RUN_STATUSES = ("completed", "step_budget_exhausted", "failed")

FINAL_ANSWER_SENTINEL = "FINAL ANSWER:"


class PolicyConfigInvalid(ValueError):
    pass


@dataclass(frozen=True)
class PolicyConfig:
    kind: str
    max_steps: int = 10
    backend_id: str = "default"
    reliability_routing: bool = False
    sub_problem_steps: int = 5       # per-sub-problem generator budget (multi_agent)
    rule_based_verifier: bool = False  # deterministic verifier for hermetic runs
    templates: dict = field(default_factory=dict)  # template id -> override text

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise PolicyConfigInvalid(f"unknown policy kind {self.kind!r}; expected one of {', '.join(POLICY_KINDS)}")
        if self.max_steps < 1:
            raise PolicyConfigInvalid("max_steps must be >= 1")
        if self.sub_problem_steps < 1:
            raise PolicyConfigInvalid("sub_problem_steps must be >= 1")

    @property
    def uses_toolbox(self) -> bool:
        return not self.kind.startswith("prompting")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "max_steps": self.max_steps,
            "backend_id": self.backend_id,
            "reliability_routing": self.reliability_routing,
            "sub_problem_steps": self.sub_problem_steps,
            "rule_based_verifier": self.rule_based_verifier,
            "templates": dict(self.templates),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PolicyConfig":
        if not isinstance(doc, dict):
            raise PolicyConfigInvalid("policy config must be an object")
        known = {"kind", "max_steps", "backend_id", "reliability_routing", "sub_problem_steps",
                 "rule_based_verifier", "templates"}
        unknown = set(doc) - known
        if unknown:
            raise PolicyConfigInvalid(f"unknown policy config keys: {', '.join(sorted(unknown))}")
        if "kind" not in doc:
            raise PolicyConfigInvalid("policy config needs a kind")
        return cls(
            kind=doc["kind"],
            max_steps=int(doc.get("max_steps", 10)),
            backend_id=doc.get("backend_id", "default"),
            reliability_routing=bool(doc.get("reliability_routing", False)),
            sub_problem_steps=int(doc.get("sub_problem_steps", 5)),
            rule_based_verifier=bool(doc.get("rule_based_verifier", False)),
            templates=dict(doc.get("templates") or {}),
        )


@dataclass
class AgentRun:
    run_id: str
    query: str
    toolbox: tuple[str, ...]
    policy: PolicyConfig
    answer: str
    trace_id: str
    status: str

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "query": self.query,
            "toolbox": list(self.toolbox),
            "policy": self.policy.to_dict(),
            "answer": self.answer,
            "trace_id": self.trace_id,
            "status": self.status,
        }


@dataclass(frozen=True)
class MemoryEntry:
    sub_problem: str
    tool_name: str
    result: str
    verified: bool = True


class SharedMemory:
    """Per-run memory guarded by the verifier: unverified results never land."""

    def __init__(self):
        self._entries: list[MemoryEntry] = []

    def write(self, entry: MemoryEntry) -> None:
        if not entry.verified:
            raise ValueError("shared memory only stores verified results")
        self._entries.append(entry)

    @property
    def entries(self) -> tuple[MemoryEntry, ...]:
        return tuple(self._entries)

    def render(self) -> str:
        if not self._entries:
            return "(no validated results)"
        return "\n".join(
            f"- [{e.tool_name}] {e.sub_problem}: {e.result}" for e in self._entries
        )


def new_run_id() -> str:
    return "run-" + uuid.uuid4().hex[:12]


def extract_final_answer(content: str) -> str | None:
    """Pull the answer after the last sentinel line; None when absent."""
    if not content:
        return None
    matches = list(re.finditer(re.escape(FINAL_ANSWER_SENTINEL), content))
    if not matches:
        return None
    return content[matches[-1].end():].strip().splitlines()[0].strip() if content[matches[-1].end():].strip() else ""


def answer_or_content(content: str) -> str:
    """Sentinel extraction with whole-content fallback."""
    extracted = extract_final_answer(content)
    if extracted is not None:
        return extracted
    return content.strip()
