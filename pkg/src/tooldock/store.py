"""File-backed state store: manifests, bindings, test suites, rounds, traces.

Everything is diff-able JSON under one root directory:

    <root>/tools/<name>.json      canonical tool manifests
    <root>/bindings.json          tool name -> binding configuration
    <root>/tests/<tool>.json      one array of test case objects per tool
    <root>/state/rounds.jsonl     append-only evaluation round log
    <root>/state/profiles/        materialized reliability profiles (caches)
    <root>/state/submissions/     community submissions
    <root>/state/reviews.jsonl    append-only review audit log
    <root>/state/traces/          execution traces, one JSONL file each
    <root>/state/runs/            agent run records

The round log is the source of truth for reliability history; profile files
are rebuildable caches.  Appending the round line is the commit point, so a
crash mid-round never leaves a partial round behind.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from importlib import resources
from pathlib import Path

from . import trace as trace_mod
from .runtime import ToolBinding, ToolRegistry, binding_from_dict, binding_to_dict
from .schema import ToolDescriptor, canonical_dumps, canonical_serialize, validate_manifest
from .verification import TestCase


class StateCorruption(RuntimeError):
    """State files exist but cannot be parsed; refuse to guess."""


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _read_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise StateCorruption(f"{path}: invalid JSON: {exc}") from exc


class StateStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._round_lock = threading.Lock()
        # At most one evaluation round executes at a time.
        self.eval_lock = threading.Lock()

    # -- layout ------------------------------------------------------------

    @property
    def tools_dir(self) -> Path:
        return self.root / "tools"

    @property
    def tests_dir(self) -> Path:
        return self.root / "tests"

    @property
    def state_dir(self) -> Path:
        return self.root / "state"

    @property
    def rounds_path(self) -> Path:
        return self.state_dir / "rounds.jsonl"

    @property
    def bindings_path(self) -> Path:
        return self.root / "bindings.json"

    def init_layout(self) -> "StateStore":
        for path in (
            self.tools_dir,
            self.tests_dir,
            self.state_dir,
            self.state_dir / "profiles",
            self.state_dir / "submissions",
            self.state_dir / "traces",
            self.state_dir / "runs",
        ):
            path.mkdir(parents=True, exist_ok=True)
        if not self.bindings_path.exists():
            _atomic_write(self.bindings_path, b"{}\n")
        return self

    def initialized(self) -> bool:
        return self.tools_dir.is_dir() and self.state_dir.is_dir()

    # -- tools ---------------------------------------------------------------

    def save_descriptor(self, descriptor: ToolDescriptor) -> Path:
        path = self.tools_dir / f"{descriptor.name}.json"
        _atomic_write(path, canonical_serialize(descriptor))
        return path

    def load_descriptors(self) -> dict[str, ToolDescriptor]:
        descriptors: dict[str, ToolDescriptor] = {}
        if not self.tools_dir.is_dir():
            return descriptors
        for path in sorted(self.tools_dir.glob("*.json")):
            try:
                descriptor = validate_manifest(path.read_text(encoding="utf-8"))
            except ValueError as exc:
                raise StateCorruption(f"{path}: {exc}") from exc
            descriptors[descriptor.name] = descriptor
        return descriptors

    def save_binding(self, name: str, binding: ToolBinding) -> None:
        bindings = self._load_binding_docs()
        bindings[name] = binding_to_dict(binding)
        _atomic_write(self.bindings_path, (canonical_dumps(bindings) + "\n").encode("utf-8"))

    def _load_binding_docs(self) -> dict:
        if not self.bindings_path.exists():
            return {}
        doc = _read_json(self.bindings_path)
        if not isinstance(doc, dict):
            raise StateCorruption(f"{self.bindings_path}: expected an object")
        return doc

    def load_bindings(self) -> dict[str, ToolBinding]:
        return {name: binding_from_dict(doc) for name, doc in self._load_binding_docs().items()}

    def build_registry(self) -> ToolRegistry:
        registry = ToolRegistry()
        bindings = self.load_bindings()
        for name, descriptor in self.load_descriptors().items():
            binding = bindings.get(name)
            if binding is None:
                raise StateCorruption(f"tool {name} has a manifest but no binding")
            registry.register(descriptor, binding)
        return registry

    # -- test cases ----------------------------------------------------------

    def load_cases(self, tool_name: str | None = None) -> list[TestCase]:
        cases: list[TestCase] = []
        if not self.tests_dir.is_dir():
            return cases
        if tool_name is not None:
            paths = [self.tests_dir / f"{tool_name}.json"]
        else:
            paths = sorted(self.tests_dir.glob("*.json"))
        for path in paths:
            if not path.exists():
                continue
            docs = _read_json(path)
            if not isinstance(docs, list):
                raise StateCorruption(f"{path}: expected an array of cases")
            for doc in docs:
                try:
                    cases.append(TestCase.from_dict(path.stem, doc))
                except ValueError as exc:
                    raise StateCorruption(f"{path}: {exc}") from exc
        return cases

    def save_cases(self, tool_name: str, cases: list[TestCase]) -> None:
        docs = [case.to_dict() for case in sorted(cases, key=lambda c: c.id)]
        payload = json.dumps(docs, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
        _atomic_write(self.tests_dir / f"{tool_name}.json", payload.encode("utf-8"))

    def append_case(self, case: TestCase) -> None:
        existing = self.load_cases(case.tool_name)
        if any(c.id == case.id for c in existing):
            raise ValueError(f"case id {case.id} already exists for {case.tool_name}")
        existing.append(case)
        self.save_cases(case.tool_name, existing)

    def accepted_cases(self) -> list[TestCase]:
        return [case for case in self.load_cases() if case.status == "accepted"]

    def suite_version(self) -> str:
        """Content hash of the accepted case set; changes iff that set changes."""
        accepted = [
            {
                "tool": case.tool_name,
                "id": case.id,
                "input": case.input_args,
                "expect": case.expectation.to_dict(),
            }
            for case in self.accepted_cases()
        ]
        accepted.sort(key=lambda doc: (doc["tool"], doc["id"]))
        return hashlib.sha256(canonical_dumps(accepted).encode("utf-8")).hexdigest()

    # -- evaluation rounds -----------------------------------------------------

    def append_round(self, round_doc: dict) -> None:
        """Commit point: one complete line, appended atomically."""
        line = canonical_dumps(round_doc) + "\n"
        with self._round_lock:
            with open(self.rounds_path, "a", encoding="utf-8") as handle:
                handle.write(line)
                handle.flush()
                os.fsync(handle.fileno())

    def load_rounds(self) -> list[dict]:
        if not self.rounds_path.exists():
            return []
        rounds = []
        with open(self.rounds_path, "r", encoding="utf-8") as handle:
            for number, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rounds.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise StateCorruption(f"{self.rounds_path} line {number}: {exc}") from exc
        return rounds

    def next_round_id(self) -> int:
        rounds = self.load_rounds()
        return (max((r["round_id"] for r in rounds), default=0)) + 1

    def write_profile_cache(self, tool_name: str, profile_doc: dict) -> None:
        path = self.state_dir / "profiles" / f"{tool_name}.json"
        _atomic_write(path, (canonical_dumps(profile_doc) + "\n").encode("utf-8"))

    def check_exists(self, check_id: str) -> bool:
        """Check ids have the shape r<round_id>/<case_id>."""
        if not check_id.startswith("r") or "/" not in check_id:
            return False
        head, _, case_id = check_id.partition("/")
        try:
            round_id = int(head[1:])
        except ValueError:
            return False
        for round_doc in self.load_rounds():
            if round_doc.get("round_id") != round_id:
                continue
            for results in (round_doc.get("results") or {}).values():
                if any(r.get("case_id") == case_id for r in results):
                    return True
        return False

    # -- submissions -----------------------------------------------------------

    def save_submission(self, doc: dict) -> None:
        path = self.state_dir / "submissions" / f"{doc['id']}.json"
        _atomic_write(path, (canonical_dumps(doc) + "\n").encode("utf-8"))

    def load_submission(self, submission_id: str) -> dict | None:
        path = self.state_dir / "submissions" / f"{submission_id}.json"
        if not path.exists():
            return None
        return _read_json(path)

    def list_submissions(self, status: str | None = None) -> list[dict]:
        directory = self.state_dir / "submissions"
        if not directory.is_dir():
            return []
        docs = [_read_json(path) for path in sorted(directory.glob("*.json"))]
        if status is not None:
            docs = [doc for doc in docs if doc.get("status") == status]
        return sorted(docs, key=lambda d: d.get("submitted_at", ""))

    def append_review(self, doc: dict) -> None:
        with open(self.state_dir / "reviews.jsonl", "a", encoding="utf-8") as handle:
            handle.write(canonical_dumps(doc) + "\n")

    # -- traces and runs ---------------------------------------------------------

    def save_trace(self, trace: trace_mod.ExecutionTrace) -> Path:
        path = self.state_dir / "traces" / f"{trace.trace_id}.jsonl"
        _atomic_write(path, trace_mod.serialize_jsonl(trace).encode("utf-8"))
        blobs = trace.blobs
        if blobs:
            blob_dir = self.state_dir / "traces" / "blobs"
            blob_dir.mkdir(exist_ok=True)
            for digest, text in blobs.items():
                _atomic_write(blob_dir / digest, text.encode("utf-8"))
        return path

    def load_trace(self, trace_id: str) -> trace_mod.ExecutionTrace | None:
        path = self.state_dir / "traces" / f"{trace_id}.jsonl"
        if not path.exists():
            return None
        return trace_mod.deserialize_jsonl(path.read_text(encoding="utf-8"))

    def trace_text(self, trace_id: str) -> str | None:
        path = self.state_dir / "traces" / f"{trace_id}.jsonl"
        if not path.exists():
            return None
        return path.read_text(encoding="utf-8")

    def trace_exists(self, trace_id: str) -> bool:
        return (self.state_dir / "traces" / f"{trace_id}.jsonl").exists()

    def save_run(self, doc: dict) -> None:
        path = self.state_dir / "runs" / f"{doc['run_id']}.json"
        _atomic_write(path, (canonical_dumps(doc) + "\n").encode("utf-8"))

    def load_run(self, run_id: str) -> dict | None:
        path = self.state_dir / "runs" / f"{run_id}.json"
        if not path.exists():
            return None
        return _read_json(path)

    # -- integrity ---------------------------------------------------------------

    def state_hash(self) -> str:
        """Digest of every state file; used to prove failed requests mutate nothing."""
        digest = hashlib.sha256()
        if not self.root.is_dir():
            return digest.hexdigest()
        for path in sorted(p for p in self.root.rglob("*") if p.is_file()):
            digest.update(str(path.relative_to(self.root)).encode("utf-8"))
            digest.update(b"\0")
            digest.update(path.read_bytes())
            digest.update(b"\0")
        return digest.hexdigest()


def seed_state(root: str | Path, *, include_tests: bool = True) -> StateStore:
    """Copy the packaged seed toolbox (and suites) into a fresh state dir."""
    store = StateStore(root).init_layout()
    seed = resources.files("tooldock").joinpath("seed")
    for entry in sorted(seed.joinpath("tools").iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            (store.tools_dir / entry.name).write_bytes(entry.read_bytes())
    (store.bindings_path).write_bytes(seed.joinpath("bindings.json").read_bytes())
    if include_tests:
        for entry in sorted(seed.joinpath("tests").iterdir(), key=lambda e: e.name):
            if entry.name.endswith(".json"):
                (store.tests_dir / entry.name).write_bytes(entry.read_bytes())
    return store
