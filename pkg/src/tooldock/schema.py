"""Standardized tool interface: manifests, argument schemas, output contracts.

Every tool is described by a :class:`ToolDescriptor` parsed from a JSON
manifest (one document per tool).  Validation is exhaustive: callers get the
full list of violations, never just the first.  Descriptors are immutable
after validation and safe to share across threads.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace

CATEGORIES = ("program", "api", "prompting")
PARAMETER_TYPES = ("string", "integer", "number", "boolean", "string-list", "file-reference")
OUTPUT_KINDS = ("text", "number", "json-object", "file-reference")

_NAME_RE = re.compile(r"^[a-z0-9_]+$")
_PARAM_NAME_RE = re.compile(r"^[a-zA-Z_][a-zA-Z0-9_]*$")
_VERSION_RE = re.compile(r"^\d+\.\d+\.\d+(?:[-+][0-9A-Za-z.\-]+)?$")

_MANIFEST_KEYS = {"name", "version", "description", "category", "arguments", "output", "tags", "accuracy_summary"}
_PARAMETER_KEYS = {"name", "type", "required", "description", "enum", "minimum", "maximum"}
_OUTPUT_KEYS = {"kind", "description", "fields"}

# Numeric range and enum constraints only make sense for these types.
_RANGE_TYPES = {"integer", "number"}
_ENUM_TYPES = {"string", "integer", "number"}


@dataclass(frozen=True)
class Violation:
    """One constraint failure, tied to the field (or parameter) that broke it."""

    field: str
    message: str

    def to_dict(self) -> dict:
        return {"field": self.field, "message": self.message}


class ManifestInvalid(ValueError):
    """Raised by :func:`validate_manifest`; carries every violation found."""

    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        summary = "; ".join(f"{v.field}: {v.message}" for v in self.violations)
        super().__init__(f"invalid tool manifest: {summary}")


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    type: str
    required: bool = False
    description: str = ""
    enum: tuple | None = None
    minimum: float | None = None
    maximum: float | None = None

    def to_dict(self) -> dict:
        doc: dict = {
            "name": self.name,
            "type": self.type,
            "required": self.required,
            "description": self.description,
        }
        if self.enum is not None:
            doc["enum"] = list(self.enum)
        if self.minimum is not None:
            doc["minimum"] = self.minimum
        if self.maximum is not None:
            doc["maximum"] = self.maximum
        return doc


@dataclass(frozen=True)
class ArgumentSchema:
    parameters: tuple[ParameterSpec, ...] = ()

    def parameter(self, name: str) -> ParameterSpec | None:
        for spec in self.parameters:
            if spec.name == name:
                return spec
        return None

    @property
    def required_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters if p.required)

    def to_list(self) -> list[dict]:
        return [p.to_dict() for p in self.parameters]


@dataclass(frozen=True)
class OutputContract:
    kind: str
    description: str = ""
    fields: tuple[str, ...] | None = None  # advisory structure hints for json-object

    def to_dict(self) -> dict:
        doc: dict = {"kind": self.kind, "description": self.description}
        if self.fields is not None:
            doc["fields"] = list(self.fields)
        return doc


@dataclass(frozen=True)
class AccuracySummary:
    accuracy: float
    suite_size: int
    evaluated_at: str

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "suite_size": self.suite_size,
            "evaluated_at": self.evaluated_at,
        }


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    version: str
    description: str
    category: str
    arguments: ArgumentSchema
    output: OutputContract
    tags: tuple[str, ...] = ()
    accuracy_summary: AccuracySummary | None = None

    def to_dict(self) -> dict:
        doc: dict = {
            "name": self.name,
            "version": self.version,
            "description": self.description,
            "category": self.category,
            "arguments": self.arguments.to_list(),
            "output": self.output.to_dict(),
        }
        if self.tags:
            doc["tags"] = list(self.tags)
        if self.accuracy_summary is not None:
            doc["accuracy_summary"] = self.accuracy_summary.to_dict()
        return doc

    def with_accuracy_summary(self, summary: AccuracySummary | None) -> "ToolDescriptor":
        return replace(self, accuracy_summary=summary)


@dataclass(frozen=True)
class ArgumentViolation:
    parameter: str
    reason: str

    def to_dict(self) -> dict:
        return {"parameter": self.parameter, "reason": self.reason}


@dataclass(frozen=True)
class ArgumentValidation:
    """Outcome of checking an argument map against a descriptor.

    Failures are a value, not an exception: callers attribute them as
    tool-use errors.
    """

    ok: bool
    violations: tuple[ArgumentViolation, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


VALID_ARGUMENTS = ArgumentValidation(ok=True)


def canonical_dumps(document) -> str:
    """Canonical JSON text: keys sorted, no insignificant whitespace."""
    return json.dumps(document, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_serialize(descriptor: ToolDescriptor) -> bytes:
    """Deterministic manifest bytes: sorted keys, compact, LF-terminated.

    Round-trips through :func:`validate_manifest` to an equal descriptor.
    """
    return (canonical_dumps(descriptor.to_dict()) + "\n").encode("utf-8")


def _check_value_type(value, param_type: str) -> bool:
    if param_type == "string" or param_type == "file-reference":
        return isinstance(value, str)
    if param_type == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if param_type == "number":
        # Integer-valued inputs widen to number, never the reverse.
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if param_type == "boolean":
        return isinstance(value, bool)
    if param_type == "string-list":
        return isinstance(value, (list, tuple)) and all(isinstance(v, str) for v in value)
    return False


def _enum_values_consistent(values, param_type: str) -> bool:
    return all(_check_value_type(v, param_type) for v in values)


def _parse_parameter(index: int, raw, violations: list[Violation]) -> ParameterSpec | None:
    where = f"arguments[{index}]"
    if not isinstance(raw, dict):
        violations.append(Violation(where, "parameter must be an object"))
        return None

    for key in raw:
        if key not in _PARAMETER_KEYS:
            violations.append(Violation(f"{where}.{key}", "unknown parameter key"))

    name = raw.get("name")
    if not isinstance(name, str) or not _PARAM_NAME_RE.match(name):
        violations.append(Violation(f"{where}.name", "parameter name must match [a-zA-Z_][a-zA-Z0-9_]*"))
        return None
    where = f"arguments.{name}"

    ptype = raw.get("type")
    if ptype not in PARAMETER_TYPES:
        violations.append(
            Violation(f"{where}.type", f"unknown parameter type {ptype!r}; expected one of {', '.join(PARAMETER_TYPES)}")
        )
        return None

    required = raw.get("required", False)
    if not isinstance(required, bool):
        violations.append(Violation(f"{where}.required", "required must be a boolean"))
        required = bool(required)

    description = raw.get("description", "")
    if not isinstance(description, str):
        violations.append(Violation(f"{where}.description", "description must be a string"))
        description = ""

    enum = raw.get("enum")
    enum_out: tuple | None = None
    if enum is not None:
        if ptype not in _ENUM_TYPES:
            violations.append(Violation(f"{where}.enum", f"enum not allowed for type {ptype}"))
        elif not isinstance(enum, list) or not enum:
            violations.append(Violation(f"{where}.enum", "enum must be a non-empty list"))
        elif not _enum_values_consistent(enum, ptype):
            violations.append(Violation(f"{where}.enum", f"enum values must all be of type {ptype}"))
        else:
            enum_out = tuple(enum)

    minimum = raw.get("minimum")
    maximum = raw.get("maximum")
    for bound_name, bound in (("minimum", minimum), ("maximum", maximum)):
        if bound is None:
            continue
        if ptype not in _RANGE_TYPES:
            violations.append(Violation(f"{where}.{bound_name}", f"range bound not allowed for type {ptype}"))
        elif not isinstance(bound, (int, float)) or isinstance(bound, bool):
            violations.append(Violation(f"{where}.{bound_name}", "range bound must be a number"))
    if (
        isinstance(minimum, (int, float))
        and isinstance(maximum, (int, float))
        and not isinstance(minimum, bool)
        and not isinstance(maximum, bool)
        and minimum > maximum
    ):
        violations.append(Violation(f"{where}.minimum", "minimum exceeds maximum"))

    return ParameterSpec(
        name=name,
        type=ptype,
        required=required,
        description=description,
        enum=enum_out,
        minimum=minimum if isinstance(minimum, (int, float)) and not isinstance(minimum, bool) else None,
        maximum=maximum if isinstance(maximum, (int, float)) and not isinstance(maximum, bool) else None,
    )


def _parse_output(raw, violations: list[Violation]) -> OutputContract | None:
    if not isinstance(raw, dict):
        violations.append(Violation("output", "output must be an object"))
        return None
    for key in raw:
        if key not in _OUTPUT_KEYS:
            violations.append(Violation(f"output.{key}", "unknown output key"))
    kind = raw.get("kind")
    if kind not in OUTPUT_KINDS:
        violations.append(
            Violation("output.kind", f"unknown output kind {kind!r}; expected one of {', '.join(OUTPUT_KINDS)}")
        )
        return None
    description = raw.get("description", "")
    if not isinstance(description, str):
        violations.append(Violation("output.description", "description must be a string"))
        description = ""
    fields = raw.get("fields")
    fields_out: tuple[str, ...] | None = None
    if fields is not None:
        if kind != "json-object":
            violations.append(Violation("output.fields", "structure hints only apply to json-object outputs"))
        elif not isinstance(fields, list) or not all(isinstance(f, str) for f in fields):
            violations.append(Violation("output.fields", "fields must be a list of strings"))
        else:
            fields_out = tuple(fields)
    return OutputContract(kind=kind, description=description, fields=fields_out)


def _parse_accuracy_summary(raw, violations: list[Violation]) -> AccuracySummary | None:
    if not isinstance(raw, dict):
        violations.append(Violation("accuracy_summary", "must be an object"))
        return None
    accuracy = raw.get("accuracy")
    suite_size = raw.get("suite_size")
    evaluated_at = raw.get("evaluated_at")
    ok = True
    if not isinstance(accuracy, (int, float)) or isinstance(accuracy, bool) or not 0.0 <= accuracy <= 1.0:
        violations.append(Violation("accuracy_summary.accuracy", "accuracy must lie in [0,1]"))
        ok = False
    if not isinstance(suite_size, int) or isinstance(suite_size, bool) or suite_size < 1:
        violations.append(Violation("accuracy_summary.suite_size", "suite size must be an integer >= 1"))
        ok = False
    if not isinstance(evaluated_at, str) or not evaluated_at:
        violations.append(Violation("accuracy_summary.evaluated_at", "evaluated_at must be a timestamp string"))
        ok = False
    if not ok:
        return None
    return AccuracySummary(accuracy=float(accuracy), suite_size=suite_size, evaluated_at=evaluated_at)


def manifest_violations(raw_manifest) -> tuple[ToolDescriptor | None, list[Violation]]:
    """Validate a manifest document, collecting every violation.

    `raw_manifest` may be bytes, JSON text, or an already-parsed mapping.
    """
    violations: list[Violation] = []

    if isinstance(raw_manifest, bytes):
        try:
            raw_manifest = raw_manifest.decode("utf-8")
        except UnicodeDecodeError as exc:
            return None, [Violation("$", f"manifest is not valid UTF-8: {exc}")]
    if isinstance(raw_manifest, str):
        try:
            raw_manifest = json.loads(raw_manifest)
        except json.JSONDecodeError as exc:
            return None, [Violation("$", f"manifest is not valid JSON: {exc}")]
    if not isinstance(raw_manifest, dict):
        return None, [Violation("$", "manifest must be a JSON object")]

    for key in raw_manifest:
        if key not in _MANIFEST_KEYS:
            violations.append(Violation(key, "unknown manifest key"))
    for key in ("name", "version", "description", "category", "arguments", "output"):
        if key not in raw_manifest:
            violations.append(Violation(key, "required manifest key missing"))

    name = raw_manifest.get("name")
    if "name" in raw_manifest and (not isinstance(name, str) or not _NAME_RE.match(name)):
        violations.append(Violation("name", "tool name must match [a-z0-9_]+"))

    version = raw_manifest.get("version")
    if "version" in raw_manifest and (not isinstance(version, str) or not _VERSION_RE.match(version)):
        violations.append(Violation("version", "version must be a semantic version (MAJOR.MINOR.PATCH)"))

    description = raw_manifest.get("description")
    if "description" in raw_manifest and not isinstance(description, str):
        violations.append(Violation("description", "description must be a string"))

    category = raw_manifest.get("category")
    if "category" in raw_manifest and category not in CATEGORIES:
        violations.append(
            Violation("category", f"unknown category {category!r}; expected one of {', '.join(CATEGORIES)}")
        )

    parameters: list[ParameterSpec] = []
    raw_args = raw_manifest.get("arguments")
    if "arguments" in raw_manifest:
        if not isinstance(raw_args, list):
            violations.append(Violation("arguments", "arguments must be a list of parameter objects"))
        else:
            seen: set[str] = set()
            for index, raw_param in enumerate(raw_args):
                spec = _parse_parameter(index, raw_param, violations)
                if spec is None:
                    continue
                if spec.name in seen:
                    violations.append(Violation(f"arguments.{spec.name}", "duplicate parameter name"))
                    continue
                seen.add(spec.name)
                parameters.append(spec)

    output = None
    if "output" in raw_manifest:
        output = _parse_output(raw_manifest.get("output"), violations)

    tags: tuple[str, ...] = ()
    if "tags" in raw_manifest:
        raw_tags = raw_manifest.get("tags")
        if not isinstance(raw_tags, list) or not all(isinstance(t, str) for t in raw_tags):
            violations.append(Violation("tags", "tags must be a list of strings"))
        else:
            tags = tuple(raw_tags)

    summary = None
    if "accuracy_summary" in raw_manifest:
        summary = _parse_accuracy_summary(raw_manifest.get("accuracy_summary"), violations)

    if violations:
        return None, violations

    # Parameter order is normalized by name so that source documents that
    # differ only in declaration order validate to identical descriptors.
    parameters.sort(key=lambda p: p.name)
    descriptor = ToolDescriptor(
        name=name,
        version=version,
        description=description,
        category=category,
        arguments=ArgumentSchema(parameters=tuple(parameters)),
        output=output,
        tags=tags,
        accuracy_summary=summary,
    )
    return descriptor, []


def validate_manifest(raw_manifest) -> ToolDescriptor:
    """Parse and validate a tool manifest, raising with all violations at once."""
    descriptor, violations = manifest_violations(raw_manifest)
    if descriptor is None:
        raise ManifestInvalid(violations)
    return descriptor


def validate_arguments(descriptor: ToolDescriptor, args) -> ArgumentValidation:
    """Check an argument map against the descriptor's schema.

    Total: any input yields Valid or a non-empty violation list.  Unknown
    keys are rejected (strict mode) so silent extra arguments surface as
    tool-use failures.
    """
    violations: list[ArgumentViolation] = []
    if not isinstance(args, dict):
        return ArgumentValidation(ok=False, violations=(ArgumentViolation("$", "arguments must be a JSON object"),))

    schema = descriptor.arguments
    for spec in schema.parameters:
        if spec.required and spec.name not in args:
            violations.append(ArgumentViolation(spec.name, "required parameter missing"))

    for key, value in args.items():
        spec = schema.parameter(key) if isinstance(key, str) else None
        if spec is None:
            violations.append(ArgumentViolation(str(key), "unknown parameter"))
            continue
        if not _check_value_type(value, spec.type):
            violations.append(
                ArgumentViolation(key, f"expected {spec.type}, got {type(value).__name__}")
            )
            continue
        if spec.enum is not None and value not in spec.enum:
            violations.append(ArgumentViolation(key, f"value not in allowed set {list(spec.enum)}"))
        if spec.minimum is not None and value < spec.minimum:
            violations.append(ArgumentViolation(key, f"value {value} below minimum {spec.minimum}"))
        if spec.maximum is not None and value > spec.maximum:
            violations.append(ArgumentViolation(key, f"value {value} above maximum {spec.maximum}"))

    if violations:
        return ArgumentValidation(ok=False, violations=tuple(violations))
    return VALID_ARGUMENTS
