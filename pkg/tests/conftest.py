from __future__ import annotations

import pytest

from synthuser.agents import build_frequency_model
from synthuser.scenarios import record_scripted_session
from synthuser.traces import load_trace


@pytest.fixture(scope="session")
def scripted_trace_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("traces") / "trainer.jsonl"
    record_scripted_session(path, events=200)
    return path


@pytest.fixture(scope="session")
def scripted_traces(scripted_trace_path):
    return load_trace(scripted_trace_path)


@pytest.fixture(scope="session")
def scripted_model(scripted_traces):
    return build_frequency_model(scripted_traces)


@pytest.fixture(scope="session")
def scripted_model_path(tmp_path_factory, scripted_model):
    path = tmp_path_factory.mktemp("models") / "trainer-model.json"
    scripted_model.save(path)
    return path
