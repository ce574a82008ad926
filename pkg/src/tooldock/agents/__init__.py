"""Agent policies and tool subsetting."""

from .base import (
    FINAL_ANSWER_SENTINEL,
    POLICY_KINDS,
    AgentRun,
    MemoryEntry,
    PolicyConfig,
    PolicyConfigInvalid,
    SharedMemory,
    answer_or_content,
    extract_final_answer,
    new_run_id,
)
from .policies import (
    Episode,
    run_agent,
    run_multi_agent,
    run_planner_executor,
    run_prompting,
    run_react,
)
from .selection import SCORE_EPSILON, lexical_score, select_tools

__all__ = [
    "FINAL_ANSWER_SENTINEL",
    "POLICY_KINDS",
    "AgentRun",
    "MemoryEntry",
    "PolicyConfig",
    "PolicyConfigInvalid",
    "SharedMemory",
    "answer_or_content",
    "extract_final_answer",
    "new_run_id",
    "Episode",
    "run_agent",
    "run_multi_agent",
    "run_planner_executor",
    "run_prompting",
    "run_react",
    "SCORE_EPSILON",
    "lexical_score",
    "select_tools",
]
