"""The playground: run agents against a fresh target and report compliance.

Each agent loops Select -> Perform -> Await -> Assert through its own
tracked session. The Await phase is one stimulus tick (when configured),
one alert poll, and one state observation; the demo target is synchronous,
so no settling delay is needed (a hook exists for targets that are not).

A single-agent run is fully deterministic given the master seed: the
target PRNG, per-agent PRNGs, and the virtual clock are all derived from
it, and reports serialize with sorted keys. With several agents the
per-agent step logs remain internally ordered but thread interleaving is
unconstrained.
"""

from __future__ import annotations

import json
import random
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .agents import (
    AgentSpec,
    FrequencyAgent,
    FrequencyModel,
    RandomAgent,
    ReplayAgent,
    Verdict,
    VerdictStatus,
    build_frequency_model,
)
from .clock import Clock, VirtualClock
from .errors import DeadEndError, DivergenceError, RunError
from .seeding import derive_seed
from .target import FaultConfig, InProcessTarget
from .traces import ActionKind, TraceWriter, load_trace
from .tracking import TrackedSession
from .views import ClientSession, UiAction

DEFAULT_STEP_MS = 1000


@dataclass
class SimulationConfig:
    agents: list[AgentSpec]
    faults: FaultConfig
    master_seed: int
    max_steps: int = 100
    time_scale: float = 0.0
    stop_on_first_violation: bool = False
    stimulus: bool = False
    settle_delay_ms: int = 0

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.time_scale < 0:
            raise ValueError("time_scale must be non-negative")


@dataclass
class StepOutcome:
    step: int
    state_before: str
    component: str
    kind: str
    payload: str | None
    state_after: str
    verdict: Verdict
    runtime_error: str | None
    off_model_selection: bool
    alerts_seen: int
    ts_ms: int

    def to_record(self) -> dict:
        return {
            "step": self.step,
            "state_before": self.state_before,
            "component": self.component,
            "kind": self.kind,
            "payload": self.payload,
            "state_after": self.state_after,
            "verdict": {
                "status": self.verdict.status.value,
                "surprise": self.verdict.surprise,
                "expected": self.verdict.expected,
                "observed": self.verdict.observed,
            },
            "runtime_error": self.runtime_error,
            "off_model_selection": self.off_model_selection,
            "alerts_seen": self.alerts_seen,
            "ts_ms": self.ts_ms,
        }

    @classmethod
    def from_record(cls, r: dict) -> "StepOutcome":
        v = r["verdict"]
        return cls(
            step=r["step"],
            state_before=r["state_before"],
            component=r["component"],
            kind=r["kind"],
            payload=r["payload"],
            state_after=r["state_after"],
            verdict=Verdict(
                status=VerdictStatus(v["status"]),
                surprise=v["surprise"],
                expected=dict(v["expected"]),
                observed=v["observed"],
            ),
            runtime_error=r["runtime_error"],
            off_model_selection=r["off_model_selection"],
            alerts_seen=r["alerts_seen"],
            ts_ms=r["ts_ms"],
        )


@dataclass
class AgentResult:
    name: str
    kind: str
    seed: int
    bootstrap_ok: bool
    terminated: str  # max_steps | trace_end | divergence | dead_end | stopped | bootstrap_failed
    termination_detail: str | None
    steps: list[StepOutcome] = field(default_factory=list)


@dataclass
class SimulationReport:
    master_seed: int
    faults: FaultConfig
    settings: dict
    agents: list[AgentResult]

    @property
    def violations(self) -> list[dict]:
        out = []
        for agent in self.agents:
            for step in agent.steps:
                if step.verdict.status is VerdictStatus.VIOLATION:
                    out.append(
                        {
                            "agent": agent.name,
                            "step": step.step,
                            "expected": step.verdict.expected,
                            "observed": step.verdict.observed,
                        }
                    )
        return out

    @property
    def runtime_errors(self) -> list[dict]:
        out = []
        for agent in self.agents:
            for step in agent.steps:
                if step.runtime_error is not None:
                    out.append(
                        {
                            "agent": agent.name,
                            "step": step.step,
                            "component": step.component,
                            "kind": step.kind,
                            "message": step.runtime_error,
                        }
                    )
        return out

    @property
    def coverage(self) -> list[tuple[str, str, str]]:
        seen = {
            (s.state_before, s.component, s.kind)
            for agent in self.agents
            for s in agent.steps
        }
        return sorted(seen)

    @property
    def totals(self) -> dict:
        steps = sum(len(a.steps) for a in self.agents)
        off_model = sum(
            1
            for a in self.agents
            for s in a.steps
            if s.off_model_selection or s.verdict.status is VerdictStatus.OFF_MODEL
        )
        return {
            "steps": steps,
            "violations": len(self.violations),
            "runtime_errors": len(self.runtime_errors),
            "off_model_steps": off_model,
            "off_model_rate": (off_model / steps) if steps else 0.0,
            "coverage": len(self.coverage),
        }

    @property
    def clean(self) -> bool:
        return not self.violations and not self.runtime_errors

    def to_doc(self) -> dict:
        return {
            "format": "synthuser-report",
            "version": 1,
            "master_seed": self.master_seed,
            "faults": {
                "follow_error_probability": self.faults.follow_error_probability,
                "alert_nav_bug_enabled": self.faults.alert_nav_bug_enabled,
                "alert_nav_bug_threshold": self.faults.alert_nav_bug_threshold,
            },
            "settings": self.settings,
            "agents": [
                {
                    "name": a.name,
                    "kind": a.kind,
                    "seed": a.seed,
                    "bootstrap_ok": a.bootstrap_ok,
                    "terminated": a.terminated,
                    "termination_detail": a.termination_detail,
                    "steps": [s.to_record() for s in a.steps],
                }
                for a in self.agents
            ],
            "violations": self.violations,
            "runtime_errors": self.runtime_errors,
            "coverage": [list(c) for c in self.coverage],
            "totals": self.totals,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "SimulationReport":
        if doc.get("format") != "synthuser-report":
            raise RunError("not a synthuser-report file")
        faults = FaultConfig(**doc["faults"])
        agents = [
            AgentResult(
                name=a["name"],
                kind=a["kind"],
                seed=a["seed"],
                bootstrap_ok=a["bootstrap_ok"],
                terminated=a["terminated"],
                termination_detail=a["termination_detail"],
                steps=[StepOutcome.from_record(s) for s in a["steps"]],
            )
            for a in doc["agents"]
        ]
        return cls(
            master_seed=doc["master_seed"],
            faults=faults,
            settings=doc["settings"],
            agents=agents,
        )


def write_report(report: SimulationReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report.to_doc(), indent=2, sort_keys=True) + "\n"
    )


def load_report(path: str | Path) -> SimulationReport:
    return SimulationReport.from_doc(json.loads(Path(path).read_text()))


def summarize(report: SimulationReport) -> str:
    lines = []
    header = f"{'agent':<10} {'kind':<10} {'steps':>6} {'violations':>11} {'errors':>7} {'off-model':>10} terminated"
    lines.append(header)
    lines.append("-" * len(header))
    for agent in report.agents:
        steps = len(agent.steps)
        violations = sum(
            1 for s in agent.steps if s.verdict.status is VerdictStatus.VIOLATION
        )
        errors = sum(1 for s in agent.steps if s.runtime_error is not None)
        off = sum(
            1
            for s in agent.steps
            if s.off_model_selection or s.verdict.status is VerdictStatus.OFF_MODEL
        )
        rate = f"{off / steps:.1%}" if steps else "-"
        lines.append(
            f"{agent.name:<10} {agent.kind:<10} {steps:>6} {violations:>11}"
            f" {errors:>7} {rate:>10} {agent.terminated}"
        )
    totals = report.totals
    lines.append("")
    lines.append(
        f"totals: steps={totals['steps']} violations={totals['violations']}"
        f" runtime_errors={totals['runtime_errors']}"
        f" off_model_rate={totals['off_model_rate']:.1%}"
        f" coverage={totals['coverage']} state-action pairs"
    )
    for v in report.violations:
        expected = ", ".join(
            f"{view}: {p:.3f}" for view, p in sorted(v["expected"].items())
        )
        lines.append(
            f"violation: {v['agent']} step {v['step']}:"
            f" expected {{{expected}}}, observed {v['observed']!r}"
        )
    for e in report.runtime_errors:
        lines.append(
            f"runtime error: {e['agent']} step {e['step']} on {e['component']}"
            f" ({e['kind']}): {e['message']}"
        )
    return "\n".join(lines)


class StimulusDriver:
    """Harness-scripted account that feeds one agent with alerts.

    Each tick it follows the target user (until that sticks), then likes the
    oldest of their tweets it does not currently like, or unlikes the oldest
    one once it likes them all, so fresh liked-alerts keep arriving. The
    driver is rule-based and consumes no randomness of its own.
    """

    def __init__(self, target, target_username: str,
                 username: str = "stimulus", password: str = "stim-pw"):
        self.target = target
        self.target_username = target_username
        self.username = username
        self.password = password
        self.token: str | None = None
        self._following = False
        self._lock = threading.Lock()

    def bootstrap(self) -> None:
        resp = self.target.request(
            {"op": "signup", "username": self.username, "password": self.password}
        )
        if not resp.get("ok"):
            raise RunError(f"stimulus bootstrap failed: {resp.get('message')}")
        self.token = resp["token"]

    def tick(self) -> None:
        with self._lock:
            if self.token is None:
                return
            if not self._following:
                resp = self.target.request(
                    {
                        "op": "follow",
                        "token": self.token,
                        "username": self.target_username,
                    }
                )
                if not resp.get("ok"):
                    return  # retried next tick (e.g. injected follow fault)
                self._following = True
            feed = self.target.request({"op": "get_feed", "token": self.token})
            if not feed.get("ok"):
                return
            tweets = sorted(
                (t for t in feed["tweets"] if t["author"] == self.target_username),
                key=lambda t: t["id"],
            )
            if not tweets:
                return
            unliked = [t for t in tweets if not t["liked_by_me"]]
            if unliked:
                self.target.request(
                    {"op": "like", "token": self.token, "tweet_id": unliked[0]["id"]}
                )
            else:
                self.target.request(
                    {"op": "unlike", "token": self.token, "tweet_id": tweets[0]["id"]}
                )


BOOTSTRAP_STEPS = (
    ("window[main]#0/button[Sign up]#0", ActionKind.CLICK, None),
    ("window[main]#0/field[username]#0", ActionKind.TEXT_INPUT, "{username}"),
    ("window[main]#0/field[password]#0", ActionKind.TEXT_INPUT, "{password}"),
    ("window[main]#0/button[Create account]#0", ActionKind.CLICK, None),
)


class SessionRunner:
    """Shared Perform/Await pipeline used by live recording and by play.

    Keeping recording and playback on the same pipeline is what makes
    replays faithful: the stimulus ticks and the alert poll happen at the
    same point relative to every action in both modes.
    """

    def __init__(
        self,
        tracked: TrackedSession,
        *,
        stimulus: StimulusDriver | None = None,
        settle_delay_ms: int = 0,
        time_scale: float = 0.0,
    ):
        self.tracked = tracked
        self.session = tracked.session
        self.stimulus = stimulus
        self.settle_delay_ms = settle_delay_ms
        self.time_scale = time_scale

    def bootstrap(self, username: str, password: str) -> None:
        for component, kind, payload in BOOTSTRAP_STEPS:
            if payload is not None:
                payload = payload.format(username=username, password=password)
            self.tracked.trigger(component, kind, payload)
        if self.session.view != "feed":
            raise RunError(
                f"bootstrap for {username!r} ended on view {self.session.view!r}"
            )

    def execute(self, action: UiAction) -> tuple[str, str | None]:
        """Perform one action, then run the Await phase; returns the observed
        state and any internal server error the action surfaced."""
        self.tracked.perform(action)
        error = self.session.last_error
        runtime_error = (
            error["message"] if error and error.get("code") == "internal" else None
        )
        if self.settle_delay_ms and self.time_scale > 0:
            time.sleep(self.settle_delay_ms * self.time_scale / 1000)
        if self.stimulus is not None:
            self.stimulus.tick()
        self.tracked.poll_alerts()
        return self.tracked.observe_state(), runtime_error


def _fill_payload(action: UiAction, runner: SessionRunner, rng,
                  credentials: tuple[str, str]) -> UiAction:
    if action.kind is not ActionKind.TEXT_INPUT or action.payload is not None:
        return action
    label = action.component[-1].label or ""
    username, password = credentials
    if label == "username":
        payload = username
    elif label == "password":
        payload = password
    elif label == "media":
        payload = f"pic-{rng.randrange(1_000_000)}"
    else:
        payload = f"note {rng.randrange(1_000_000)}"
    return UiAction(action.component, action.kind, payload)


def step_agent(
    agent,
    runner: SessionRunner,
    rng,
    *,
    step_index: int,
    credentials: tuple[str, str],
) -> StepOutcome:
    """One Select -> Perform -> Await -> Assert cycle.

    Raises DivergenceError/DeadEndError out of the Select phase; those
    terminate the agent at the run level without failing the run.
    """
    tracked = runner.tracked
    state_before = tracked.observe_state()
    alerts_seen = runner.session.alert_count_seen
    available = tracked.available_actions()
    if not available:
        raise DeadEndError(f"no actions available in state {state_before!r}")
    action, off_model = agent.select_action(state_before, available, rng)
    action = _fill_payload(action, runner, rng, credentials)
    state_after, runtime_error = runner.execute(action)
    verdict = agent.assert_transition(state_before, action, state_after)
    return StepOutcome(
        step=step_index,
        state_before=state_before,
        component=action.component_text,
        kind=action.kind.value,
        payload=action.payload,
        state_after=state_after,
        verdict=verdict,
        runtime_error=runtime_error,
        off_model_selection=off_model,
        alerts_seen=alerts_seen,
        ts_ms=tracked.clock.now_ms(),
    )


def _instantiate(spec: AgentSpec):
    if spec.kind == "replay":
        traces = load_trace(spec.trace_paths[0])
        if len(traces) != 1:
            sessions = ", ".join(t.session for t in traces)
            raise RunError(
                f"{spec.trace_paths[0]} holds {len(traces)} sessions ({sessions});"
                " replay needs exactly one"
            )
        return ReplayAgent(traces[0])
    if spec.kind == "random":
        return RandomAgent()
    if spec.model_path is not None:
        return FrequencyAgent(FrequencyModel.load(spec.model_path))
    traces = [t for path in spec.trace_paths for t in load_trace(path)]
    return FrequencyAgent(build_frequency_model(traces))


class _AgentTask:
    def __init__(self, index: int, spec: AgentSpec, agent, runner: SessionRunner,
                 rng, max_steps: int, result: AgentResult):
        self.index = index
        self.spec = spec
        self.agent = agent
        self.runner = runner
        self.rng = rng
        self.max_steps = max_steps
        self.result = result

    def run(self, stop: threading.Event, on_violation: Callable[[], None],
            clock: VirtualClock, time_scale: float) -> None:
        credentials = (f"agent-{self.index}", f"agent-{self.index}-pw")
        for step_index in range(self.max_steps):
            if stop.is_set():
                self.result.terminated = "stopped"
                return
            if isinstance(self.agent, ReplayAgent) and self.agent.exhausted:
                self.result.terminated = "trace_end"
                return
            try:
                outcome = step_agent(
                    self.agent,
                    self.runner,
                    self.rng,
                    step_index=step_index,
                    credentials=credentials,
                )
            except DivergenceError as e:
                self.result.terminated = "divergence"
                self.result.termination_detail = str(e)
                return
            except DeadEndError as e:
                self.result.terminated = "dead_end"
                self.result.termination_detail = str(e)
                return
            self.result.steps.append(outcome)
            if outcome.verdict.status is VerdictStatus.VIOLATION:
                on_violation()
            gap = getattr(self.agent, "last_gap_ms", None)
            tick = gap if gap is not None and gap >= 0 else DEFAULT_STEP_MS
            clock.advance(tick)
            if time_scale > 0:
                time.sleep(tick * time_scale / 1000)
        if isinstance(self.agent, ReplayAgent) and self.agent.exhausted:
            self.result.terminated = "trace_end"
        else:
            self.result.terminated = "max_steps"


def run_simulation(
    config: SimulationConfig,
    target_factory: Callable[[int, FaultConfig, Clock], object] | None = None,
    *,
    trace_path: str | Path | None = None,
) -> SimulationReport:
    """Run all configured agents against a fresh target instance."""
    clock = VirtualClock()
    factory = target_factory or InProcessTarget
    try:
        target = factory(
            derive_seed(config.master_seed, "server"), config.faults, clock
        )
    except Exception as e:
        raise RunError(f"target startup failed: {e}") from e
    writer = TraceWriter.open(trace_path) if trace_path else None

    tasks: list[_AgentTask] = []
    results: list[AgentResult] = []
    stimulus: StimulusDriver | None = None
    if config.stimulus:
        if not config.agents:
            raise RunError("stimulus configured but there are no agents")
        stimulus = StimulusDriver(target, target_username="agent-0")

    for index, spec in enumerate(config.agents):
        name = f"agent-{index}"
        seed = (
            spec.seed
            if spec.seed is not None
            else derive_seed(config.master_seed, f"agent-{index}")
        )
        result = AgentResult(
            name=name,
            kind=spec.kind,
            seed=seed,
            bootstrap_ok=False,
            terminated="bootstrap_failed",
            termination_detail=None,
        )
        results.append(result)
        try:
            agent = _instantiate(spec)
        except Exception as e:
            result.termination_detail = f"agent setup failed: {e}"
            continue
        session = ClientSession(target, config.faults, session_id=name)
        tracked = TrackedSession(session, writer, clock, name)
        runner = SessionRunner(
            tracked,
            stimulus=stimulus,
            settle_delay_ms=config.settle_delay_ms,
            time_scale=config.time_scale,
        )
        try:
            runner.bootstrap(name, f"{name}-pw")
        except Exception as e:
            result.termination_detail = f"bootstrap failed: {e}"
            continue
        result.bootstrap_ok = True
        result.terminated = "max_steps"
        tasks.append(
            _AgentTask(
                index,
                spec,
                agent,
                runner,
                random.Random(seed),
                spec.max_steps or config.max_steps,
                result,
            )
        )

    if stimulus is not None:
        stimulus.bootstrap()

    stop = threading.Event()

    def on_violation():
        if config.stop_on_first_violation:
            stop.set()

    if len(tasks) <= 1:
        for task in tasks:
            task.run(stop, on_violation, clock, config.time_scale)
    else:
        threads = [
            threading.Thread(
                target=task.run,
                args=(stop, on_violation, clock, config.time_scale),
                name=task.result.name,
            )
            for task in tasks
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

    if writer is not None:
        writer.close()

    return SimulationReport(
        master_seed=config.master_seed,
        faults=config.faults,
        settings={
            "agents": len(config.agents),
            "max_steps": config.max_steps,
            "time_scale": config.time_scale,
            "stop_on_first_violation": config.stop_on_first_violation,
            "stimulus": config.stimulus,
            "settle_delay_ms": config.settle_delay_ms,
        },
        agents=results,
    )
