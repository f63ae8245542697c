"""Synthetic users: behavior models and the three baseline agent types.

The frequency model is a first-order Markov view of recorded activity:
one table counts which action a user took in each view, another counts
which view followed each (view, action) pair. Probabilities are pure
maximum-likelihood (count / row total), with no smoothing: a transition
never seen in training is reported as off-model rather than made merely
unlikely, because unlikely-but-possible is exactly what the assertion
step must flag.

Action keys keep sibling indices, so liking the third tweet and liking
the first are distinct actions. All sampling walks keys in lexicographic
order of (encoded id, kind) with a single PRNG draw, which makes agent
decisions reproducible across platforms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DeadEndError, DivergenceError, ModelError
from .traces import ActionKind, Trace, encode_component_id
from .views import UiAction

ActionKey = tuple[str, str]  # (encoded component id, action kind value)

MODEL_FORMAT = "synthuser-model"
MODEL_VERSION = 1


class VerdictStatus(str, Enum):
    OK = "ok"
    VIOLATION = "violation"
    OFF_MODEL = "off-model"


@dataclass(frozen=True)
class Verdict:
    """Outcome of asserting one observed transition against expectation."""

    status: VerdictStatus
    surprise: float
    expected: dict[str, float]
    observed: str

    def __post_init__(self):
        if not 0.0 <= self.surprise <= 1.0:
            raise ValueError("surprise must be in [0, 1]")


@dataclass
class FrequencyModel:
    """Markov-chain behavior model built by direct counting."""

    action_counts: dict[str, dict[ActionKey, int]]
    transition_counts: dict[tuple[str, ActionKey], dict[str, int]]
    sessions: tuple[str, ...] = ()
    built_at: str = ""

    def action_row(self, state: str) -> dict[ActionKey, float]:
        counts = self.action_counts.get(state)
        if not counts:
            return {}
        total = sum(counts.values())
        return {key: c / total for key, c in counts.items()}

    def transition_row(self, state: str, key: ActionKey) -> dict[str, float]:
        counts = self.transition_counts.get((state, key))
        if not counts:
            return {}
        total = sum(counts.values())
        return {view: c / total for view, c in counts.items()}

    def save(self, path: str | Path) -> None:
        actions: dict[str, dict[str, dict[str, int]]] = {}
        for state, row in self.action_counts.items():
            for (component, kind), count in row.items():
                actions.setdefault(state, {}).setdefault(component, {})[kind] = count
        transitions: dict[str, dict[str, dict[str, dict[str, int]]]] = {}
        for (state, (component, kind)), row in self.transition_counts.items():
            bucket = (
                transitions.setdefault(state, {})
                .setdefault(component, {})
                .setdefault(kind, {})
            )
            for view, count in row.items():
                bucket[view] = count
        doc = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "provenance": {
                "sessions": list(self.sessions),
                "built_at": self.built_at,
            },
            "action_counts": actions,
            "transition_counts": transitions,
        }
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "FrequencyModel":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ModelError(f"cannot read model file {path}: {e}") from e
        if doc.get("format") != MODEL_FORMAT:
            raise ModelError(f"{path} is not a {MODEL_FORMAT} file")
        action_counts: dict[str, dict[ActionKey, int]] = {}
        for state, by_component in doc["action_counts"].items():
            row = action_counts.setdefault(state, {})
            for component, by_kind in by_component.items():
                for kind, count in by_kind.items():
                    row[(component, kind)] = count
        transition_counts: dict[tuple[str, ActionKey], dict[str, int]] = {}
        for state, by_component in doc["transition_counts"].items():
            for component, by_kind in by_component.items():
                for kind, by_view in by_kind.items():
                    transition_counts[(state, (component, kind))] = dict(by_view)
        provenance = doc.get("provenance", {})
        return cls(
            action_counts=action_counts,
            transition_counts=transition_counts,
            sessions=tuple(provenance.get("sessions", ())),
            built_at=provenance.get("built_at", ""),
        )


def build_frequency_model(
    traces: Sequence[Trace], *, built_at: str = ""
) -> FrequencyModel:
    """Count (state -> action) and (state, action -> state) occurrences."""
    if not traces:
        raise ModelError("cannot build a model from zero traces")
    action_counts: dict[str, dict[ActionKey, int]] = {}
    transition_counts: dict[tuple[str, ActionKey], dict[str, int]] = {}
    for trace in traces:
        for event in trace.events:
            key = (encode_component_id(event.component), event.kind.value)
            row = action_counts.setdefault(event.state_before, {})
            row[key] = row.get(key, 0) + 1
            trow = transition_counts.setdefault((event.state_before, key), {})
            trow[event.state_after] = trow.get(event.state_after, 0) + 1
    return FrequencyModel(
        action_counts=action_counts,
        transition_counts=transition_counts,
        sessions=tuple(t.session for t in traces),
        built_at=built_at,
    )


def _sorted_actions(available: Iterable[UiAction]) -> list[UiAction]:
    return sorted(available, key=lambda a: a.key())


def _uniform_pick(available: Sequence[UiAction], rng) -> UiAction:
    ordered = _sorted_actions(available)
    index = min(int(rng.random() * len(ordered)), len(ordered) - 1)
    return ordered[index]


class ReplayAgent:
    """Re-executes one recorded session action for action."""

    kind = "replay"

    def __init__(self, trace: Trace):
        self.trace = trace
        self.cursor = 0
        self.last_gap_ms: int | None = None

    @property
    def exhausted(self) -> bool:
        return self.cursor >= len(self.trace.events)

    def select_action(self, state, available, rng) -> tuple[UiAction, bool]:
        if self.exhausted:
            raise DivergenceError("trace exhausted")
        event = self.trace.events[self.cursor]
        key = (encode_component_id(event.component), event.kind.value)
        if key not in {a.key() for a in available}:
            raise DivergenceError(
                f"logged action {key[0]} ({key[1]}) is not available"
                f" in state {state!r} at step {self.cursor}"
            )
        if self.cursor > 0:
            previous = self.trace.events[self.cursor - 1]
            self.last_gap_ms = event.ts_ms - previous.ts_ms
        self.cursor += 1
        return UiAction(event.component, event.kind, event.payload), False

    def assert_transition(self, state, action: UiAction, state_after) -> Verdict:
        event = self.trace.events[self.cursor - 1]
        expected = {event.state_after: 1.0}
        if state_after == event.state_after:
            return Verdict(VerdictStatus.OK, 0.0, expected, state_after)
        return Verdict(VerdictStatus.VIOLATION, 1.0, expected, state_after)


class RandomAgent:
    """Monkey baseline: uniform over whatever is on screen, no expectations."""

    kind = "random"

    def select_action(self, state, available, rng) -> tuple[UiAction, bool]:
        if not available:
            raise DeadEndError(f"no actions available in state {state!r}")
        return _uniform_pick(available, rng), False

    def assert_transition(self, state, action, state_after) -> Verdict:
        return Verdict(VerdictStatus.OK, 0.0, {}, state_after)


class FrequencyAgent:
    """Samples actions with the recorded per-state frequencies and asserts
    the next view against the learned (state, action) expectation."""

    kind = "frequency"

    def __init__(self, model: FrequencyModel):
        self.model = model

    def select_action(self, state, available, rng) -> tuple[UiAction, bool]:
        if not available:
            raise DeadEndError(f"no actions available in state {state!r}")
        by_key = {a.key(): a for a in available}
        row = self.model.action_counts.get(state, {})
        restricted = {key: count for key, count in row.items() if key in by_key}
        if not restricted:
            return _uniform_pick(available, rng), True
        total = sum(restricted.values())
        threshold = rng.random() * total
        cumulative = 0
        choice = None
        for key in sorted(restricted):
            cumulative += restricted[key]
            if threshold < cumulative:
                choice = key
                break
        if choice is None:  # guards against float edge at threshold == total
            choice = max(sorted(restricted))
        return by_key[choice], False

    def assert_transition(self, state, action: UiAction, state_after) -> Verdict:
        row = self.model.transition_counts.get((state, action.key()))
        if not row:
            return Verdict(VerdictStatus.OFF_MODEL, 1.0, {}, state_after)
        total = sum(row.values())
        expected = {view: count / total for view, count in row.items()}
        p = expected.get(state_after, 0.0)
        if p == 0.0:
            return Verdict(VerdictStatus.VIOLATION, 1.0, expected, state_after)
        return Verdict(VerdictStatus.OK, 1.0 - p, expected, state_after)


Agent = ReplayAgent | RandomAgent | FrequencyAgent


@dataclass
class AgentSpec:
    """Declarative description of one agent in a simulation."""

    kind: str  # replay | random | frequency
    trace_paths: tuple[str, ...] = ()
    model_path: str | None = None
    seed: int | None = None  # derived from the master seed when omitted
    max_steps: int | None = None  # falls back to the run-level cap

    def __post_init__(self):
        if self.kind not in ("replay", "random", "frequency"):
            raise ValueError(f"unknown agent kind {self.kind!r}")
        if self.kind == "replay" and len(self.trace_paths) != 1:
            raise ValueError("replay agents take exactly one source trace")
        if self.kind == "frequency" and not self.trace_paths and not self.model_path:
            raise ValueError("frequency agents need traces or a model file")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("max_steps must be positive")
