"""The pluggable agent policies: direct prompting, reason-and-act,
planner-executor, and hierarchical multi-agent with guarded shared memory.

Every policy maps (query, toolbox, config) onto (answer, trace).  Policies
never call tools directly: all invocations go through the runtime, so each
one leaves a validation/invocation/result triple in the trace.  Malformed
structured outputs from the backend get exactly one corrective re-prompt
before the step counts as a policy failure.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from ..llm import BackendError, BackendRegistry, ChatMessage, ChatRequest, ChatResponse, project_tool_declarations
from ..runtime import InvocationBudget, Observation, ToolRegistry, invoke
from ..templates import render_template
from ..trace import ATTRIBUTION_POLICY, ExecutionTrace
from .base import AgentRun, PolicyConfig, MemoryEntry, SharedMemory, answer_or_content, new_run_id


@dataclass
class Episode:
    query: str
    config: PolicyConfig
    registry: ToolRegistry
    backends: BackendRegistry
    trace: ExecutionTrace
    toolbox: tuple[str, ...]
    budget: InvocationBudget | None = None

    def complete(
        self,
        messages: list[ChatMessage],
        *,
        phase: str,
        step: int | None = None,
        tools: list[dict] | None = None,
        max_tokens: int = 1024,
    ) -> ChatResponse:
        request = ChatRequest(
            backend_id=self.config.backend_id,
            messages=tuple(messages),
            temperature=0.0,
            max_tokens=max_tokens,
            tool_declarations=tuple(tools) if tools else None,
        )
        response = self.backends.complete(request)
        payload: dict = {"backend": self.config.backend_id, "phase": phase, "content": response.content}
        if step is not None:
            payload["step"] = step
        if response.tool_call is not None:
            payload["tool"] = response.tool_call.tool_name
        self.trace.append("backend_call", payload)
        return response

    def template(self, name: str, **values) -> str:
        return render_template(name, self.config.templates, **values)

    def declarations(self) -> list[dict]:
        return project_tool_declarations([self.registry.descriptor(name) for name in self.toolbox])

    def tool_listing(self) -> str:
        lines = []
        for name in self.toolbox:
            descriptor = self.registry.descriptor(name)
            lines.append(f"- {name}: {descriptor.description}")
        return "\n".join(lines) or "(no tools)"


def _backend_failed(episode: Episode, exc: BackendError) -> tuple[str, str]:
    episode.trace.append("warning", {"warning": "backend_error", "detail": str(exc)})
    return "", "failed"


# ---------------------------------------------------------------------------
# Direct prompting
# ---------------------------------------------------------------------------

def run_prompting(episode: Episode) -> tuple[str, str]:
    """Single backend call; CoT appends the step-by-step instruction."""
    system = episode.template("zero_shot")
    if episode.config.kind == "prompting_cot":
        system = system + "\n\n" + episode.template("cot")
    episode.trace.append("policy_step", {"policy": episode.config.kind, "step": 1})
    try:
        response = episode.complete(
            [ChatMessage("system", system), ChatMessage("user", episode.query)], phase="prompting", step=1
        )
    except BackendError as exc:
        return _backend_failed(episode, exc)
    answer = answer_or_content(response.content)
    episode.trace.append("final_answer", {"answer": answer})
    return answer, "completed"


# ---------------------------------------------------------------------------
# ReAct
# ---------------------------------------------------------------------------

def _feed_tool_outcome(messages: list[ChatMessage], outcome) -> None:
    if isinstance(outcome, Observation):
        messages.append(ChatMessage("tool", outcome.output_text()))
    else:
        messages.append(
            ChatMessage("tool", f"tool error ({outcome.error_class}): {outcome.message}")
        )


def run_react(episode: Episode) -> tuple[str, str]:
    """Iterative reason-and-act loop, hard-capped at max_steps backend calls."""
    toolbox = set(episode.toolbox)
    declarations = episode.declarations()
    messages = [
        ChatMessage("system", episode.template("react_system")),
        ChatMessage("user", episode.query),
    ]
    for step in range(1, episode.config.max_steps + 1):
        episode.trace.append("policy_step", {"policy": "react", "step": step})
        try:
            response = episode.complete(messages, phase="react", step=step, tools=declarations)
        except BackendError as exc:
            return _backend_failed(episode, exc)
        if response.tool_call is None:
            answer = answer_or_content(response.content)
            episode.trace.append("final_answer", {"answer": answer})
            return answer, "completed"

        call = response.tool_call
        messages.append(
            ChatMessage("assistant", json.dumps({"tool": call.tool_name, "arguments": call.arguments}))
        )
        if call.tool_name not in toolbox:
            episode.trace.append(
                "tool_error",
                {
                    "tool": call.tool_name,
                    "error_class": "unknown_tool",
                    "message": f"{call.tool_name} is not in the toolbox",
                    "attempt_count": 0,
                },
                attribution=ATTRIBUTION_POLICY,
            )
            messages.append(
                ChatMessage("tool", f"unknown tool {call.tool_name!r}; available: {', '.join(sorted(toolbox))}")
            )
            continue
        outcome = invoke(
            episode.registry,
            call.tool_name,
            call.arguments,
            episode.budget,
            trace=episode.trace,
            backends=episode.backends,
        )
        _feed_tool_outcome(messages, outcome)

    episode.trace.append("warning", {"warning": "step_budget_exhausted", "max_steps": episode.config.max_steps})
    return "", "step_budget_exhausted"


# ---------------------------------------------------------------------------
# Planner-executor
# ---------------------------------------------------------------------------

_TOOL_LINE_RE = re.compile(r"^TOOL:\s*(.+?)\s*$", re.MULTILINE)
_SUBGOAL_LINE_RE = re.compile(r"^SUBGOAL:\s*(.+?)\s*$", re.MULTILINE)


def _parse_plan(content: str) -> tuple[str, str] | None:
    tool = _TOOL_LINE_RE.search(content or "")
    if tool is None:
        return None
    subgoal = _SUBGOAL_LINE_RE.search(content or "")
    return tool.group(1), (subgoal.group(1) if subgoal else "")


def _parse_json_object(content: str) -> dict | None:
    text = (content or "").strip()
    if text.startswith("```"):
        text = re.sub(r"^```[a-z]*\s*|\s*```$", "", text, flags=re.DOTALL)
    try:
        parsed = json.loads(text)
    except json.JSONDecodeError:
        return None
    return parsed if isinstance(parsed, dict) else None


def run_planner_executor(episode: Episode) -> tuple[str, str]:
    """Plan, execute, verify, repeat; a composer writes the final answer.

    Each iteration: the planner picks a sub-goal and tool (or STOP), the
    executor generates the argument map, the runtime invokes the tool, and a
    progress verifier decides continue/stop.
    """
    context_lines: list[str] = []

    def context() -> str:
        return "\n".join(context_lines) or "(nothing yet)"

    try:
        for step in range(1, episode.config.max_steps + 1):
            episode.trace.append("policy_step", {"phase": "planner", "step": step})
            planner_prompt = episode.template(
                "planner", query=episode.query, tool_listing=episode.tool_listing(), context=context()
            )
            response = episode.complete([ChatMessage("user", planner_prompt)], phase="planner", step=step)
            plan = _parse_plan(response.content)
            if plan is None:
                # one corrective re-prompt, then the step counts as a policy failure
                response = episode.complete(
                    [
                        ChatMessage("user", planner_prompt),
                        ChatMessage("assistant", response.content),
                        ChatMessage("user", "Your reply was malformed. Reply with exactly the TOOL: and SUBGOAL: lines."),
                    ],
                    phase="planner",
                    step=step,
                )
                plan = _parse_plan(response.content)
                if plan is None:
                    episode.trace.append(
                        "warning", {"warning": "policy_failure", "phase": "planner", "step": step}
                    )
                    context_lines.append(f"step {step}: planner output unusable")
                    continue
            tool_name, subgoal = plan
            if tool_name.upper() == "STOP":
                break
            if tool_name not in episode.toolbox:
                episode.trace.append(
                    "tool_error",
                    {
                        "tool": tool_name,
                        "error_class": "unknown_tool",
                        "message": f"{tool_name} is not in the toolbox",
                        "attempt_count": 0,
                    },
                    attribution=ATTRIBUTION_POLICY,
                )
                context_lines.append(f"step {step}: planner chose unknown tool {tool_name}")
                continue

            descriptor = episode.registry.descriptor(tool_name)
            parameter_listing = "\n".join(
                f"- {p.name} ({p.type}{', required' if p.required else ''}): {p.description}"
                for p in descriptor.arguments.parameters
            ) or "(no parameters)"
            executor_prompt = episode.template(
                "executor",
                subgoal=subgoal,
                tool_name=tool_name,
                tool_description=descriptor.description,
                parameter_listing=parameter_listing,
            )

            episode.trace.append("policy_step", {"phase": "executor", "step": step})
            outcome = None
            exec_messages = [ChatMessage("user", executor_prompt)]
            for attempt in range(2):  # initial try plus one corrective re-prompt
                response = episode.complete(exec_messages, phase="executor", step=step)
                args = _parse_json_object(response.content)
                if args is None:
                    exec_messages = exec_messages + [
                        ChatMessage("assistant", response.content),
                        ChatMessage("user", "Reply with a single valid JSON object and nothing else."),
                    ]
                    outcome = None
                    continue
                outcome = invoke(
                    episode.registry, tool_name, args, episode.budget,
                    trace=episode.trace, backends=episode.backends,
                )
                if isinstance(outcome, Observation) or outcome.error_class != "validation":
                    break
                exec_messages = exec_messages + [
                    ChatMessage("assistant", response.content),
                    ChatMessage("user", f"Arguments were rejected: {outcome.message}. Correct them."),
                ]
            if outcome is None or (not isinstance(outcome, Observation) and outcome.error_class == "validation"):
                episode.trace.append(
                    "warning", {"warning": "policy_failure", "phase": "executor", "step": step}
                )
                context_lines.append(f"step {step}: executor failed to produce valid arguments for {tool_name}")
                continue
            if isinstance(outcome, Observation):
                context_lines.append(f"step {step}: [{tool_name}] {subgoal} -> {outcome.output_text()}")
            else:
                context_lines.append(
                    f"step {step}: [{tool_name}] {subgoal} -> tool error ({outcome.error_class}): {outcome.message}"
                )

            episode.trace.append("policy_step", {"phase": "verifier", "step": step})
            verifier_prompt = episode.template("progress_verifier", query=episode.query, context=context())
            response = episode.complete([ChatMessage("user", verifier_prompt)], phase="verifier", step=step)
            stop = "STOP" in (response.content or "").upper()
            episode.trace.append(
                "verifier_decision", {"phase": "progress", "step": step, "decision": "stop" if stop else "continue"}
            )
            if stop:
                break

        episode.trace.append("policy_step", {"phase": "composer"})
        composer_prompt = episode.template("composer", query=episode.query, context=context())
        response = episode.complete([ChatMessage("user", composer_prompt)], phase="composer")
    except BackendError as exc:
        return _backend_failed(episode, exc)

    answer = answer_or_content(response.content)
    episode.trace.append("final_answer", {"answer": answer})
    return answer, "completed"


# ---------------------------------------------------------------------------
# MultiAgent: Planner / Generator / Verifier / Composer
# ---------------------------------------------------------------------------

def _parse_sub_problems(content: str) -> list[str]:
    subs = []
    for line in (content or "").splitlines():
        stripped = line.strip()
        if stripped.startswith("- ") and stripped[2:].strip():
            subs.append(stripped[2:].strip())
    return subs


def _verify_result(episode: Episode, sub_problem: str, tool_name: str, result_text: str) -> tuple[bool, str]:
    if episode.config.rule_based_verifier:
        accepted = bool(result_text.strip())
        return accepted, "rule: non-empty contract-conformant output" if accepted else "rule: empty output"
    prompt = episode.template("result_verifier", sub_problem=sub_problem, tool_name=tool_name, result=result_text)
    response = episode.complete([ChatMessage("user", prompt)], phase="verifier", max_tokens=64)
    verdict = (response.content or "").upper()
    if "REJECT" in verdict:
        return False, response.content.strip()
    if "ACCEPT" in verdict:
        return True, response.content.strip()
    return False, f"verifier answer unrecognized: {response.content!r}"


def run_multi_agent(episode: Episode) -> tuple[str, str]:
    """Decompose, route sub-problems through tool calls, and compose.

    Only verifier-validated results reach shared memory; sub-problems whose
    every result fails verification leave a gap the composer is told about.
    """
    memory = SharedMemory()
    gaps: list[str] = []
    try:
        episode.trace.append("policy_step", {"phase": "decomposer"})
        response = episode.complete(
            [ChatMessage("user", episode.template("decomposer", query=episode.query))], phase="decomposer"
        )
        sub_problems = _parse_sub_problems(response.content)

        declarations = episode.declarations() if sub_problems else []
        toolbox = set(episode.toolbox)
        for index, sub_problem in enumerate(sub_problems, start=1):
            verified = False
            messages = [
                ChatMessage("system", episode.template("subproblem_system", sub_problem=sub_problem)),
                ChatMessage("user", episode.query),
            ]
            for step in range(1, episode.config.sub_problem_steps + 1):
                episode.trace.append(
                    "policy_step", {"phase": "generator", "sub_problem": index, "step": step}
                )
                response = episode.complete(
                    messages, phase="generator", step=step, tools=declarations
                )
                if response.tool_call is None:
                    break  # generator yields without a result
                call = response.tool_call
                messages.append(
                    ChatMessage("assistant", json.dumps({"tool": call.tool_name, "arguments": call.arguments}))
                )
                if call.tool_name not in toolbox:
                    episode.trace.append(
                        "tool_error",
                        {
                            "tool": call.tool_name,
                            "error_class": "unknown_tool",
                            "message": f"{call.tool_name} is not in the toolbox",
                            "attempt_count": 0,
                        },
                        attribution=ATTRIBUTION_POLICY,
                    )
                    messages.append(ChatMessage("tool", f"unknown tool {call.tool_name!r}"))
                    continue
                outcome = invoke(
                    episode.registry, call.tool_name, call.arguments, episode.budget,
                    trace=episode.trace, backends=episode.backends,
                )
                if not isinstance(outcome, Observation):
                    _feed_tool_outcome(messages, outcome)
                    continue
                result_text = outcome.output_text()
                accepted, detail = _verify_result(episode, sub_problem, call.tool_name, result_text)
                episode.trace.append(
                    "verifier_decision",
                    {"sub_problem": index, "tool": call.tool_name, "accepted": accepted, "detail": detail},
                )
                if accepted:
                    memory.write(MemoryEntry(sub_problem=sub_problem, tool_name=call.tool_name, result=result_text))
                    episode.trace.append(
                        "memory_write", {"sub_problem": index, "tool": call.tool_name, "result": result_text}
                    )
                    verified = True
                    break
                messages.append(ChatMessage("tool", f"result rejected by verifier: {detail}"))
            if not verified:
                gaps.append(sub_problem)
                episode.trace.append(
                    "warning", {"warning": "no_validated_result", "sub_problem": index}
                )

        gap_note = ""
        if gaps:
            gap_note = "Unresolved sub-problems (no validated result):\n" + "\n".join(f"- {g}" for g in gaps)
        episode.trace.append("policy_step", {"phase": "composer"})
        response = episode.complete(
            [
                ChatMessage(
                    "user",
                    episode.template("memory_composer", query=episode.query, memory=memory.render(), gaps=gap_note),
                )
            ],
            phase="composer",
        )
    except BackendError as exc:
        return _backend_failed(episode, exc)

    answer = answer_or_content(response.content)
    episode.trace.append("final_answer", {"answer": answer, "memory_entries": len(memory.entries)})
    episode.memory = memory  # exposed for inspection by callers/tests
    return answer, "completed"


_POLICY_RUNNERS = {
    "prompting_zero_shot": run_prompting,
    "prompting_cot": run_prompting,
    "react": run_react,
    "planner_executor": run_planner_executor,
    "multi_agent": run_multi_agent,
}


def run_agent(
    query: str,
    config: PolicyConfig,
    registry: ToolRegistry,
    backends: BackendRegistry,
    toolbox: list[str] | None = None,
    *,
    budget: InvocationBudget | None = None,
    run_id: str | None = None,
    trace: ExecutionTrace | None = None,
) -> tuple[AgentRun, ExecutionTrace]:
    """Execute one agent run: (query, toolbox, policy) -> (answer, trace).

    The trace is finalized before returning, even when the run fails.
    Callers may hand in an open trace (e.g. with tool-selection events
    already recorded).
    """
    run_id = run_id or new_run_id()
    if trace is None:
        trace = ExecutionTrace(run_id=run_id)

    if config.uses_toolbox:
        chosen = tuple(toolbox) if toolbox is not None else tuple(registry.names())
        for name in chosen:
            if name not in registry:
                raise ValueError(f"toolbox references unknown tool {name!r}")
    else:
        chosen = tuple(toolbox or ())

    episode = Episode(
        query=query,
        config=config,
        registry=registry,
        backends=backends,
        trace=trace,
        toolbox=chosen,
        budget=budget,
    )
    try:
        answer, status = _POLICY_RUNNERS[config.kind](episode)
    finally:
        trace.finalize()
    if status == "completed" and not answer:
        # completed runs carry a non-empty answer; an empty extraction is a failure
        status = "failed"
    run = AgentRun(
        run_id=run_id,
        query=query,
        toolbox=chosen,
        policy=config,
        answer=answer,
        trace_id=trace.trace_id,
        status=status,
    )
    if hasattr(episode, "memory"):
        run.memory = episode.memory  # type: ignore[attr-defined]
    return run, trace
