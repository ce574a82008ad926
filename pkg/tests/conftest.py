from __future__ import annotations

import json
from pathlib import Path

import pytest

from tooldock.store import StateStore, seed_state
from tooldock.stubtools import StubToolServer

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


@pytest.fixture
def seed_store(tmp_path) -> StateStore:
    return seed_state(tmp_path / "state")


@pytest.fixture
def seed_registry(seed_store):
    return seed_store.build_registry()


@pytest.fixture
def stub_server():
    with StubToolServer() as server:
        yield server


@pytest.fixture
def stub_env(stub_server, monkeypatch):
    """Point the seed api tools at the stub server."""
    monkeypatch.setenv("TOOLSTUB_BASE", stub_server.base_url)
    return stub_server


@pytest.fixture
def fast_backoff(monkeypatch):
    """Skip real retry sleeps."""
    monkeypatch.setattr("tooldock.runtime._sleep", lambda seconds: None)


def load_fixture_script(name: str) -> list:
    return json.loads((FIXTURES / name).read_text(encoding="utf-8"))
