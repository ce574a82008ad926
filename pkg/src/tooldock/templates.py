"""Versioned prompt template assets with {placeholder} substitution.

Templates ship with the package and can be overridden per call site (policy
configs carry an overrides map), keeping agent behavior reproducible.
"""

from __future__ import annotations

from importlib import resources

_CACHE: dict[str, str] = {}


def load_template(name: str, overrides: dict[str, str] | None = None) -> str:
    if overrides and name in overrides:
        return overrides[name]
    if name not in _CACHE:
        path = resources.files("tooldock").joinpath(f"templates/{name}.txt")
        _CACHE[name] = path.read_text(encoding="utf-8")
    return _CACHE[name]


def render_template(name: str, overrides: dict[str, str] | None = None, **values) -> str:
    return load_template(name, overrides).format(**values)
