"""Built-in deterministic program tools.

Each function takes the validated argument map and returns the raw output;
the runtime enforces the output contract afterwards.  Functions are
registered by name in the catalog consulted by program bindings.
"""

from __future__ import annotations

import ast
import math
import operator
from collections import deque
from datetime import date, timedelta
from typing import Callable

PROGRAM_CATALOG: dict[str, Callable[[dict], object]] = {}


def register_program(name: str):
    def decorator(func: Callable[[dict], object]):
        PROGRAM_CATALOG[name] = func
        return func

    return decorator


_BIN_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.FloorDiv: operator.floordiv,
    ast.Mod: operator.mod,
    ast.Pow: operator.pow,
}
_UNARY_OPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCTIONS = {
    "sqrt": math.sqrt,
    "abs": abs,
    "round": round,
    "min": min,
    "max": max,
    "floor": math.floor,
    "ceil": math.ceil,
    "log": math.log,
    "log10": math.log10,
    "exp": math.exp,
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
}
_CONSTANTS = {"pi": math.pi, "e": math.e}


def _eval_node(node: ast.AST):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return node.value
        raise ValueError(f"unsupported literal: {node.value!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BIN_OPS:
        return _BIN_OPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY_OPS:
        return _UNARY_OPS[type(node.op)](_eval_node(node.operand))
    if isinstance(node, ast.Name):
        if node.id in _CONSTANTS:
            return _CONSTANTS[node.id]
        raise ValueError(f"unknown name: {node.id}")
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise ValueError("unknown function")
        if node.keywords:
            raise ValueError("keyword arguments not supported")
        return _FUNCTIONS[node.func.id](*[_eval_node(a) for a in node.args])
    raise ValueError(f"unsupported expression element: {type(node).__name__}")


def _format_number(value) -> str:
    if isinstance(value, float) and value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value) if isinstance(value, float) else str(value)


@register_program("calculator")
def calculator(args: dict) -> str:
    """Evaluate an arithmetic expression over a restricted AST."""
    expression = args["expression"]
    tree = ast.parse(expression, mode="eval")
    return _format_number(_eval_node(tree))


# Conversion factors into each dimension's base unit (m, kg, s).
_LENGTH = {"m": 1.0, "km": 1000.0, "cm": 0.01, "mm": 0.001, "mi": 1609.344, "yd": 0.9144, "ft": 0.3048, "in": 0.0254}
_MASS = {"kg": 1.0, "g": 0.001, "t": 1000.0, "lb": 0.45359237, "oz": 0.028349523125}
_TIME = {"s": 1.0, "min": 60.0, "h": 3600.0, "day": 86400.0}
_TEMPERATURE = ("c", "f", "k")

UNIT_NAMES = sorted(set(_LENGTH) | set(_MASS) | set(_TIME) | set(_TEMPERATURE))


def _to_kelvin(value: float, unit: str) -> float:
    if unit == "k":
        return value
    if unit == "c":
        return value + 273.15
    return (value - 32.0) * 5.0 / 9.0 + 273.15


def _from_kelvin(value: float, unit: str) -> float:
    if unit == "k":
        return value
    if unit == "c":
        return value - 273.15
    return (value - 273.15) * 9.0 / 5.0 + 32.0


@register_program("unit_converter")
def unit_converter(args: dict) -> float:
    value = float(args["value"])
    src = args["from_unit"]
    dst = args["to_unit"]
    if src in _TEMPERATURE and dst in _TEMPERATURE:
        return _from_kelvin(_to_kelvin(value, src), dst)
    for table in (_LENGTH, _MASS, _TIME):
        if src in table and dst in table:
            return value * table[src] / table[dst]
    raise ValueError(f"cannot convert {src} to {dst}: units belong to different dimensions")


@register_program("date_arithmetic")
def date_arithmetic(args: dict) -> str:
    base = date.fromisoformat(args["base"])
    return (base + timedelta(days=args["add_days"])).isoformat()


@register_program("string_transformer")
def string_transformer(args: dict) -> str:
    text = args["text"]
    operation = args["operation"]
    if operation == "upper":
        return text.upper()
    if operation == "lower":
        return text.lower()
    if operation == "title":
        return text.title()
    if operation == "reverse":
        return text[::-1]
    if operation == "swapcase":
        return text.swapcase()
    if operation == "length":
        return str(len(text))
    if operation == "word_count":
        return str(len(text.split()))
    raise ValueError(f"unknown operation: {operation}")


@register_program("maze_solver")
def maze_solver(args: dict) -> dict:
    """Breadth-first shortest path through a grid maze.

    Rows use '#' for walls, '.' for floor, 'S' for start, 'E' for exit.
    """
    rows = args["maze"]
    if not rows:
        raise ValueError("maze is empty")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("maze rows must all have the same width")
    start = exit_ = None
    for y, row in enumerate(rows):
        for x, cell in enumerate(row):
            if cell == "S":
                if start is not None:
                    raise ValueError("maze must contain exactly one start cell")
                start = (y, x)
            elif cell == "E":
                if exit_ is not None:
                    raise ValueError("maze must contain exactly one exit cell")
                exit_ = (y, x)
            elif cell not in "#.":
                raise ValueError(f"unknown maze cell: {cell!r}")
    if start is None or exit_ is None:
        raise ValueError("maze must contain one start (S) and one exit (E)")

    queue = deque([(start, 0)])
    seen = {start}
    while queue:
        (y, x), steps = queue.popleft()
        if (y, x) == exit_:
            return {"reachable": True, "steps": steps}
        for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            ny, nx = y + dy, x + dx
            if 0 <= ny < len(rows) and 0 <= nx < width and (ny, nx) not in seen and rows[ny][nx] != "#":
                seen.add((ny, nx))
                queue.append(((ny, nx), steps + 1))
    return {"reachable": False, "steps": None}
