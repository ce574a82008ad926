"""Reliability profiles across evaluation rounds: accuracy, availability,
regression detection, and deterministic report generation.

A round runs every tool's accepted suite, appends one complete line to the
round log (the commit point), refreshes profile caches, and writes the
current accuracy back into each tool's manifest.  Absent accuracy (an
all-error round) is recorded as absent, never 0 — availability already
encodes it, and a fake 0 would fabricate regressions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .llm import BackendRegistry
from .runtime import InvocationBudget, ToolRegistry
from .schema import AccuracySummary, canonical_dumps
from .store import StateStore
from .verification import SuiteSummary, run_suite

DEFAULT_REGRESSION_THRESHOLD = 0.1


class RoundError(RuntimeError):
    pass


@dataclass(frozen=True)
class EvaluationRound:
    round_id: int
    started_at: float
    finished_at: float
    suite_version: str
    per_tool: dict  # tool name -> SuiteSummary
    results: dict   # tool name -> list of {case_id, verdict, detail}

    def to_dict(self) -> dict:
        return {
            "round_id": self.round_id,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "suite_version": self.suite_version,
            "per_tool": {name: summary.to_dict() for name, summary in self.per_tool.items()},
            "results": self.results,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EvaluationRound":
        return cls(
            round_id=doc["round_id"],
            started_at=doc["started_at"],
            finished_at=doc["finished_at"],
            suite_version=doc["suite_version"],
            per_tool={name: SuiteSummary.from_dict(s) for name, s in doc["per_tool"].items()},
            results=doc.get("results", {}),
        )


@dataclass(frozen=True)
class HistoryPoint:
    round_id: int
    accuracy: float | None
    availability: float | None
    n_cases: int

    def to_dict(self) -> dict:
        return {
            "round_id": self.round_id,
            "accuracy": self.accuracy,
            "availability": self.availability,
            "n_cases": self.n_cases,
        }


@dataclass(frozen=True)
class RegressionEvent:
    from_round: int
    to_round: int
    accuracy_drop: float
    threshold: float

    def to_dict(self) -> dict:
        return {
            "from_round": self.from_round,
            "to_round": self.to_round,
            "accuracy_drop": self.accuracy_drop,
            "threshold": self.threshold,
        }


@dataclass(frozen=True)
class ReliabilityProfile:
    tool_name: str
    current_accuracy: float | None
    current_availability: float | None
    history: tuple[HistoryPoint, ...]
    regressions: tuple[RegressionEvent, ...]

    @property
    def current_n_cases(self) -> int:
        return self.history[-1].n_cases if self.history else 0

    def to_dict(self) -> dict:
        return {
            "tool_name": self.tool_name,
            "current_accuracy": self.current_accuracy,
            "current_availability": self.current_availability,
            "history": [p.to_dict() for p in self.history],
            "regressions": [r.to_dict() for r in self.regressions],
        }


def detect_regression(
    history: list[HistoryPoint] | tuple[HistoryPoint, ...],
    threshold: float = DEFAULT_REGRESSION_THRESHOLD,
) -> list[RegressionEvent]:
    """Flag consecutive accuracy drops larger than the threshold.

    Pure function of (history, threshold); rounds with absent accuracy are
    skipped, so the comparison always pairs defined values.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    defined = [point for point in history if point.accuracy is not None]
    events = []
    for earlier, later in zip(defined, defined[1:]):
        drop = earlier.accuracy - later.accuracy
        if drop > threshold:
            events.append(
                RegressionEvent(
                    from_round=earlier.round_id,
                    to_round=later.round_id,
                    accuracy_drop=drop,
                    threshold=threshold,
                )
            )
    return events


def build_profiles(
    rounds: list[EvaluationRound],
    threshold: float = DEFAULT_REGRESSION_THRESHOLD,
) -> dict[str, ReliabilityProfile]:
    """Derive every tool's profile from the round log."""
    histories: dict[str, list[HistoryPoint]] = {}
    for round_ in sorted(rounds, key=lambda r: r.round_id):
        for tool_name, summary in round_.per_tool.items():
            histories.setdefault(tool_name, []).append(
                HistoryPoint(
                    round_id=round_.round_id,
                    accuracy=summary.accuracy,
                    availability=summary.availability,
                    n_cases=summary.n_cases,
                )
            )
    profiles: dict[str, ReliabilityProfile] = {}
    for tool_name, history in histories.items():
        latest = history[-1]
        profiles[tool_name] = ReliabilityProfile(
            tool_name=tool_name,
            current_accuracy=latest.accuracy,
            current_availability=latest.availability,
            history=tuple(history),
            regressions=tuple(detect_regression(history, threshold)),
        )
    return profiles


def load_profiles(
    store: StateStore,
    threshold: float = DEFAULT_REGRESSION_THRESHOLD,
) -> dict[str, ReliabilityProfile]:
    rounds = [EvaluationRound.from_dict(doc) for doc in store.load_rounds()]
    return build_profiles(rounds, threshold)


def run_round(
    registry: ToolRegistry,
    store: StateStore,
    parallelism: int = 4,
    *,
    backends: BackendRegistry | None = None,
    budget: InvocationBudget | None = None,
    threshold: float = DEFAULT_REGRESSION_THRESHOLD,
) -> EvaluationRound:
    """Execute every tool's accepted suite and persist one round.

    Nothing is persisted until the complete round line is appended; a crash
    anywhere earlier leaves the store untouched.  Afterwards profiles are
    rebuilt and each descriptor's accuracy summary refreshed.
    """
    with store.eval_lock:
        accepted = store.accepted_cases()
        by_tool: dict[str, list] = {}
        for case in accepted:
            if case.tool_name in registry:
                by_tool.setdefault(case.tool_name, []).append(case)
        if not by_tool:
            raise RoundError("no accepted cases for any registered tool")

        round_id = store.next_round_id()
        suite_version = store.suite_version()
        started_at = time.time()
        per_tool: dict[str, SuiteSummary] = {}
        results: dict[str, list[dict]] = {}
        for tool_name in sorted(by_tool):
            case_results, summary = run_suite(
                registry, by_tool[tool_name], parallelism, budget=budget, backends=backends
            )
            per_tool[tool_name] = summary
            results[tool_name] = [r.to_dict() for r in case_results]

        round_ = EvaluationRound(
            round_id=round_id,
            started_at=started_at,
            finished_at=time.time(),
            suite_version=suite_version,
            per_tool=per_tool,
            results=results,
        )

        store.append_round(round_.to_dict())  # commit point

        profiles = load_profiles(store, threshold)
        for tool_name, profile in profiles.items():
            store.write_profile_cache(tool_name, profile.to_dict())
            if tool_name not in registry:
                continue
            descriptor = registry.descriptor(tool_name)
            if profile.current_accuracy is None:
                refreshed = descriptor.with_accuracy_summary(None)
            else:
                refreshed = descriptor.with_accuracy_summary(
                    AccuracySummary(
                        accuracy=profile.current_accuracy,
                        suite_size=profile.current_n_cases,
                        evaluated_at=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(round_.finished_at)),
                    )
                )
            registry.update_descriptor(refreshed)
            store.save_descriptor(refreshed)
        return round_


def generate_report(
    profiles: dict[str, ReliabilityProfile],
    round_: EvaluationRound | None,
    registry: ToolRegistry | None = None,
) -> dict:
    """Deterministic report document: same inputs, byte-identical output.

    Covers every registered tool; tools without history are marked
    unevaluated with the accuracy field absent.  Wall-clock timestamps are
    deliberately excluded so repeat evaluations of identical state compare
    equal.
    """
    tool_names = set(profiles)
    if registry is not None:
        tool_names.update(registry.names())
    tools = []
    for name in sorted(tool_names):
        profile = profiles.get(name)
        entry: dict = {"name": name}
        if registry is not None and name in registry:
            descriptor = registry.descriptor(name)
            entry["category"] = descriptor.category
            entry["version"] = descriptor.version
        if profile is None or not profile.history:
            entry["status"] = "unevaluated"
            tools.append(entry)
            continue
        entry["status"] = "evaluated"
        if profile.current_accuracy is not None:
            entry["accuracy"] = profile.current_accuracy
        entry["availability"] = profile.current_availability
        entry["n_cases"] = profile.current_n_cases
        entry["history"] = [p.to_dict() for p in profile.history]
        entry["regressions"] = [r.to_dict() for r in profile.regressions]
        tools.append(entry)
    return {
        "round_id": round_.round_id if round_ is not None else None,
        "suite_version": round_.suite_version if round_ is not None else None,
        "tools": tools,
    }


def render_report(report: dict) -> bytes:
    return (canonical_dumps(report) + "\n").encode("utf-8")


def latest_round(store: StateStore) -> EvaluationRound | None:
    rounds = store.load_rounds()
    if not rounds:
        return None
    return EvaluationRound.from_dict(max(rounds, key=lambda r: r["round_id"]))
