"""Tool subsetting: greedy top-k relevance with optional reliability routing."""

from __future__ import annotations

import re

from ..llm import BackendError, BackendRegistry, ChatMessage, ChatRequest
from ..runtime import ToolRegistry
from ..schema import ToolDescriptor
from ..templates import render_template
from ..trace import ExecutionTrace

# Normalized scores within this distance of a cluster head count as near-ties.
SCORE_EPSILON = 0.05

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> set[str]:
    return set(_TOKEN_RE.findall(text.lower()))


def lexical_score(query: str, descriptor: ToolDescriptor) -> float:
    """Token overlap between the query and the tool's name/description/tags."""
    query_tokens = _tokens(query)
    tool_tokens = _tokens(descriptor.name.replace("_", " "))
    tool_tokens |= _tokens(descriptor.description)
    for tag in descriptor.tags:
        tool_tokens |= _tokens(tag)
    return float(len(query_tokens & tool_tokens))


def _llm_score(query: str, descriptor: ToolDescriptor, backends: BackendRegistry, backend_id: str) -> float:
    prompt = render_template(
        "tool_ranker",
        query=query,
        tool_name=descriptor.name,
        tool_description=descriptor.description,
        tags=", ".join(descriptor.tags) or "(none)",
    )
    response = backends.complete(
        ChatRequest(backend_id=backend_id, messages=(ChatMessage("user", prompt),), temperature=0.0, max_tokens=8)
    )
    match = re.search(r"\d+", response.content)
    if match is None:
        return 0.0
    return float(min(max(int(match.group()), 0), 10))


def _order(
    scored: list[tuple[str, float, float | None]],
    reliability_routing: bool,
    epsilon: float,
) -> list[str]:
    """Order by normalized score; near-ties break toward higher accuracy.

    `scored` rows are (name, normalized_score, current_accuracy-or-None).
    Unevaluated tools rank below evaluated ones on tie-break only.
    """
    rows = sorted(scored, key=lambda row: (-row[1], row[0]))
    if not reliability_routing:
        return [name for name, _, _ in rows]
    ordered: list[str] = []
    index = 0
    while index < len(rows):
        head_score = rows[index][1]
        cluster = [rows[index]]
        index += 1
        while index < len(rows) and head_score - rows[index][1] <= epsilon:
            cluster.append(rows[index])
            index += 1
        cluster.sort(
            key=lambda row: (
                0 if row[2] is not None else 1,      # evaluated first
                -(row[2] if row[2] is not None else 0.0),
                -row[1],
                row[0],
            )
        )
        ordered.extend(name for name, _, _ in cluster)
    return ordered


def select_tools(
    registry: ToolRegistry,
    query: str,
    k: int,
    mode: str = "lexical",
    reliability_routing: bool = False,
    *,
    backends: BackendRegistry | None = None,
    backend_id: str = "default",
    trace: ExecutionTrace | None = None,
    epsilon: float = SCORE_EPSILON,
) -> list[str]:
    """Greedy top-k tools by relevance to the query.

    Selection depends on rankings after normalization to [0,1], never on raw
    score scale.  llm_ranked mode falls back to lexical (with a trace
    warning) when the backend is unavailable.
    """
    if len(registry) == 0:
        raise ValueError("registry is empty")
    if not 1 <= k <= len(registry):
        raise ValueError(f"k must lie in [1, {len(registry)}]")
    if mode not in ("lexical", "llm_ranked"):
        raise ValueError(f"unknown selection mode {mode!r}")

    descriptors = registry.descriptors()
    raw: dict[str, float] = {}
    if mode == "llm_ranked":
        try:
            if backends is None:
                raise BackendError("no backend registry supplied", kind="unknown_backend")
            for descriptor in descriptors:
                raw[descriptor.name] = _llm_score(query, descriptor, backends, backend_id)
        except BackendError as exc:
            if trace is not None:
                trace.append("warning", {"warning": "llm_ranking_unavailable", "detail": str(exc)})
            raw = {d.name: lexical_score(query, d) for d in descriptors}
    else:
        raw = {d.name: lexical_score(query, d) for d in descriptors}

    peak = max(raw.values(), default=0.0)
    normalized = {name: (score / peak if peak > 0 else 0.0) for name, score in raw.items()}

    scored = []
    for descriptor in descriptors:
        summary = descriptor.accuracy_summary
        accuracy = summary.accuracy if summary is not None else None
        scored.append((descriptor.name, normalized[descriptor.name], accuracy))

    return _order(scored, reliability_routing, epsilon)[:k]
