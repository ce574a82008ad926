#!/usr/bin/env python3
"""Regenerate the packaged seed toolbox: manifests, bindings, test suites.

Manifests are written in canonical form so the files themselves exercise the
bit-exact serialization contract.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from tooldock.programs import UNIT_NAMES
from tooldock.schema import canonical_serialize, validate_manifest

SEED = Path(__file__).resolve().parents[1] / "src" / "tooldock" / "seed"
CREATED = "2026-08-01T00:00:00Z"

MANIFESTS = [
    {
        "name": "calculator",
        "version": "1.0.0",
        "description": "Evaluates an arithmetic expression and returns the numeric result as text. Supports +, -, *, /, //, %, **, parentheses, and functions such as sqrt, log, and round.",
        "category": "program",
        "arguments": [
            {"name": "expression", "type": "string", "required": True, "description": "Arithmetic expression to evaluate, e.g. (3+5)*2."},
        ],
        "output": {"kind": "text", "description": "The computed value rendered as text."},
        "tags": ["math", "arithmetic", "calculate", "compute"],
    },
    {
        "name": "unit_converter",
        "version": "1.0.0",
        "description": "Converts a value between units of length, mass, time, or temperature and returns the converted number.",
        "category": "program",
        "arguments": [
            {"name": "value", "type": "number", "required": True, "description": "Quantity to convert."},
            {"name": "from_unit", "type": "string", "required": True, "description": "Source unit.", "enum": UNIT_NAMES},
            {"name": "to_unit", "type": "string", "required": True, "description": "Target unit.", "enum": UNIT_NAMES},
        ],
        "output": {"kind": "number", "description": "The converted quantity."},
        "tags": ["units", "convert", "measurement", "metric"],
    },
    {
        "name": "date_arithmetic",
        "version": "1.0.0",
        "description": "Adds a signed number of days to an ISO calendar date and returns the resulting ISO date, honoring leap years.",
        "category": "program",
        "arguments": [
            {"name": "base", "type": "string", "required": True, "description": "Base date in YYYY-MM-DD form."},
            {"name": "add_days", "type": "integer", "required": True, "description": "Days to add (may be negative).", "minimum": -36500, "maximum": 36500},
        ],
        "output": {"kind": "text", "description": "Resulting date in YYYY-MM-DD form."},
        "tags": ["date", "calendar", "days", "time"],
    },
    {
        "name": "string_transformer",
        "version": "1.0.0",
        "description": "Transforms text: change case, reverse it, or count its characters or words.",
        "category": "program",
        "arguments": [
            {"name": "text", "type": "string", "required": True, "description": "Input text."},
            {"name": "operation", "type": "string", "required": True, "description": "Transformation to apply.", "enum": ["upper", "lower", "title", "reverse", "swapcase", "length", "word_count"]},
        ],
        "output": {"kind": "text", "description": "Transformed text, or a count rendered as text."},
        "tags": ["string", "text", "transform", "case"],
    },
    {
        "name": "maze_solver",
        "version": "1.0.0",
        "description": "Solves a rectangular grid maze: finds the shortest path from S to E around # walls and reports whether the exit is reachable and in how many steps.",
        "category": "program",
        "arguments": [
            {"name": "maze", "type": "string-list", "required": True, "description": "Maze rows of equal width using #, ., S, and E."},
        ],
        "output": {"kind": "json-object", "description": "Reachability verdict and shortest step count.", "fields": ["reachable", "steps"]},
        "tags": ["maze", "puzzle", "path", "search", "solve"],
    },
    {
        "name": "http_fetch",
        "version": "1.0.0",
        "description": "Fetches the raw text body of a web resource over HTTP given its path.",
        "category": "api",
        "arguments": [
            {"name": "path", "type": "string", "required": True, "description": "Resource path starting with /."},
        ],
        "output": {"kind": "text", "description": "Response body as text."},
        "tags": ["http", "fetch", "web", "download"],
    },
    {
        "name": "wiki_lookup",
        "version": "1.0.0",
        "description": "Looks up an encyclopedia-style summary for a topic title.",
        "category": "api",
        "arguments": [
            {"name": "title", "type": "string", "required": True, "description": "Topic title to look up."},
        ],
        "output": {"kind": "text", "description": "Short topic summary."},
        "tags": ["wiki", "lookup", "knowledge", "encyclopedia"],
    },
    {
        "name": "weather_lookup",
        "version": "1.0.0",
        "description": "Reports current weather conditions and temperature for a city.",
        "category": "api",
        "arguments": [
            {"name": "city", "type": "string", "required": True, "description": "City name."},
        ],
        "output": {"kind": "json-object", "description": "Current conditions.", "fields": ["city", "temperature_c", "conditions"]},
        "tags": ["weather", "forecast", "temperature", "city"],
    },
    {
        "name": "currency_rate",
        "version": "1.0.0",
        "description": "Returns the current exchange rate between two currencies.",
        "category": "api",
        "arguments": [
            {"name": "base", "type": "string", "required": True, "description": "Base currency code, e.g. USD."},
            {"name": "quote", "type": "string", "required": True, "description": "Quote currency code, e.g. EUR."},
        ],
        "output": {"kind": "number", "description": "Units of quote currency per base unit."},
        "tags": ["currency", "exchange", "finance", "rate"],
    },
    {
        "name": "dictionary_lookup",
        "version": "1.0.0",
        "description": "Returns the dictionary definition of a word.",
        "category": "api",
        "arguments": [
            {"name": "word", "type": "string", "required": True, "description": "Word to define."},
        ],
        "output": {"kind": "text", "description": "Definition text."},
        "tags": ["dictionary", "definition", "word", "language"],
    },
    {
        "name": "news_headlines",
        "version": "1.0.0",
        "description": "Fetches current news headlines for a topic.",
        "category": "api",
        "arguments": [
            {"name": "topic", "type": "string", "required": True, "description": "News topic."},
        ],
        "output": {"kind": "json-object", "description": "Topic plus a list of headlines.", "fields": ["topic", "headlines"]},
        "tags": ["news", "headlines", "current", "events"],
    },
    {
        "name": "summarizer",
        "version": "1.0.0",
        "description": "Summarizes a passage of text in one sentence.",
        "category": "prompting",
        "arguments": [
            {"name": "text", "type": "string", "required": True, "description": "Text to summarize."},
        ],
        "output": {"kind": "text", "description": "One-sentence summary."},
        "tags": ["summary", "summarize", "condense", "text"],
    },
    {
        "name": "solution_generator",
        "version": "1.0.0",
        "description": "Produces a concise step-by-step solution to a stated problem.",
        "category": "prompting",
        "arguments": [
            {"name": "problem", "type": "string", "required": True, "description": "Problem statement."},
        ],
        "output": {"kind": "text", "description": "Worked solution ending with the result."},
        "tags": ["reasoning", "solve", "solution", "general"],
    },
]

BINDINGS = {
    "calculator": {"kind": "program", "function": "calculator"},
    "unit_converter": {"kind": "program", "function": "unit_converter"},
    "date_arithmetic": {"kind": "program", "function": "date_arithmetic"},
    "string_transformer": {"kind": "program", "function": "string_transformer"},
    "maze_solver": {"kind": "program", "function": "maze_solver"},
    "http_fetch": {"kind": "api", "url_template": "${TOOLSTUB_BASE}{path}", "method": "GET", "headers": {}, "timeout_ms": 8000, "max_retries": 2},
    "wiki_lookup": {"kind": "api", "url_template": "${TOOLSTUB_BASE}/wiki", "method": "POST", "headers": {}, "timeout_ms": 8000, "max_retries": 2},
    "weather_lookup": {"kind": "api", "url_template": "${TOOLSTUB_BASE}/weather", "method": "POST", "headers": {}, "timeout_ms": 8000, "max_retries": 2},
    "currency_rate": {"kind": "api", "url_template": "${TOOLSTUB_BASE}/fx", "method": "POST", "headers": {}, "timeout_ms": 8000, "max_retries": 2},
    "dictionary_lookup": {"kind": "api", "url_template": "${TOOLSTUB_BASE}/dict", "method": "POST", "headers": {}, "timeout_ms": 8000, "max_retries": 2},
    "news_headlines": {"kind": "api", "url_template": "${TOOLSTUB_BASE}/news", "method": "POST", "headers": {}, "timeout_ms": 8000, "max_retries": 2},
    "summarizer": {"kind": "prompting", "template": "Summarize the following text in one sentence.\n\n{text}", "backend_id": "default", "temperature": 0.0, "max_tokens": 256},
    "solution_generator": {"kind": "prompting", "template": "Provide a concise step-by-step solution to the following problem, ending with the final result on its own line.\n\n{problem}", "backend_id": "default", "temperature": 0.0, "max_tokens": 512},
}


def case(case_id, input_args, expect):
    return {
        "id": case_id,
        "input": input_args,
        "expect": expect,
        "origin": "curated",
        "status": "accepted",
        "created_at": CREATED,
    }


SUITES = {
    "calculator": [
        case("calc-001", {"expression": "2+2"}, {"kind": "exact", "value": "4"}),
        case("calc-002", {"expression": "24*7"}, {"kind": "exact", "value": "168"}),
        case("calc-003", {"expression": "sqrt(2)"}, {"kind": "numeric_tolerance", "value": 1.41421356, "abs_tol": 1e-06}),
        case("calc-004", {"expression": "(3+5)*2"}, {"kind": "exact", "value": "16"}),
        case("calc-005", {"expression": "100/8"}, {"kind": "exact", "value": "12.5"}),
        case("calc-006", {"expression": "2**10"}, {"kind": "exact", "value": "1024"}),
        case("calc-007", {"expression": "min(3, -2, 7)"}, {"kind": "exact", "value": "-2"}),
        case("calc-008", {"expression": "pi"}, {"kind": "numeric_tolerance", "value": 3.14159265, "abs_tol": 1e-06}),
    ],
    "unit_converter": [
        case("unit-001", {"value": 1, "from_unit": "km", "to_unit": "m"}, {"kind": "numeric_tolerance", "value": 1000, "abs_tol": 1e-09}),
        case("unit-002", {"value": 2.5, "from_unit": "h", "to_unit": "min"}, {"kind": "numeric_tolerance", "value": 150, "abs_tol": 1e-09}),
        case("unit-003", {"value": 100, "from_unit": "c", "to_unit": "f"}, {"kind": "numeric_tolerance", "value": 212, "abs_tol": 1e-09}),
        case("unit-004", {"value": 1, "from_unit": "mi", "to_unit": "km"}, {"kind": "numeric_tolerance", "value": 1.609344, "abs_tol": 1e-09}),
        case("unit-005", {"value": 16, "from_unit": "oz", "to_unit": "lb"}, {"kind": "numeric_tolerance", "value": 1.0, "abs_tol": 1e-09}),
        case("unit-006", {"value": 0, "from_unit": "k", "to_unit": "c"}, {"kind": "numeric_tolerance", "value": -273.15, "abs_tol": 1e-09}),
    ],
    "date_arithmetic": [
        case("date-001", {"base": "2024-02-28", "add_days": 1}, {"kind": "exact", "value": "2024-02-29"}),
        case("date-002", {"base": "2023-02-28", "add_days": 1}, {"kind": "exact", "value": "2023-03-01"}),
        case("date-003", {"base": "2024-01-01", "add_days": 365}, {"kind": "exact", "value": "2024-12-31"}),
        case("date-004", {"base": "2024-03-10", "add_days": -10}, {"kind": "exact", "value": "2024-02-29"}),
        case("date-005", {"base": "2020-12-31", "add_days": 1}, {"kind": "exact", "value": "2021-01-01"}),
    ],
    "string_transformer": [
        case("str-001", {"text": "Hello World", "operation": "upper"}, {"kind": "exact", "value": "HELLO WORLD"}),
        case("str-002", {"text": "Hello", "operation": "reverse"}, {"kind": "exact", "value": "olleH"}),
        case("str-003", {"text": "the quick brown fox", "operation": "word_count"}, {"kind": "exact", "value": "4"}),
        case("str-004", {"text": "hello world", "operation": "title"}, {"kind": "exact", "value": "Hello World"}),
        case("str-005", {"text": "abcdef", "operation": "length"}, {"kind": "exact", "value": "6"}),
        case("str-006", {"text": "Data", "operation": "swapcase"}, {"kind": "pattern", "regex": "dATA"}),
    ],
    "maze_solver": [
        case("maze-001", {"maze": ["S..", ".#.", "..E"]}, {"kind": "exact", "value": '{"reachable":true,"steps":4}'}),
        case("maze-002", {"maze": ["S#E"]}, {"kind": "exact", "value": '{"reachable":false,"steps":null}'}),
        case("maze-003", {"maze": ["S.", ".E"]}, {"kind": "exact", "value": '{"reachable":true,"steps":2}'}),
        case("maze-004", {"maze": ["S..E"]}, {"kind": "property", "predicate": "is_valid_json"}),
    ],
}


def main() -> None:
    (SEED / "tools").mkdir(parents=True, exist_ok=True)
    (SEED / "tests").mkdir(parents=True, exist_ok=True)
    for manifest in MANIFESTS:
        descriptor = validate_manifest(json.dumps(manifest))
        (SEED / "tools" / f"{descriptor.name}.json").write_bytes(canonical_serialize(descriptor))
    (SEED / "bindings.json").write_text(
        json.dumps(BINDINGS, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    for tool, cases in SUITES.items():
        (SEED / "tests" / f"{tool}.json").write_text(
            json.dumps(cases, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    print(f"wrote {len(MANIFESTS)} manifests, {sum(len(c) for c in SUITES.values())} cases")


if __name__ == "__main__":
    main()
