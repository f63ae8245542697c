"""Synthetic end-user testing for the demo social platform.

Record real sessions as state/action traces, build frequency models of the
behavior, and replay synthesized agents against fresh target instances to
assert the system still behaves the way its users learned to expect.
"""

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
from .clock import VirtualClock, WallClock
from .play import (
    SimulationConfig,
    SimulationReport,
    load_report,
    run_simulation,
    summarize,
    write_report,
)
from .target import FaultConfig, InProcessTarget, ServerState
from .traces import (
    ActionEvent,
    ActionKind,
    ComponentId,
    Segment,
    Trace,
    TraceWriter,
    encode_component_id,
    load_trace,
    parse_component_id,
)
from .tracking import TrackedSession, wrap
from .views import ClientSession, UiAction, view_catalog

__version__ = "0.1.0"

__all__ = [
    "ActionEvent",
    "ActionKind",
    "AgentSpec",
    "ClientSession",
    "ComponentId",
    "FaultConfig",
    "FrequencyAgent",
    "FrequencyModel",
    "InProcessTarget",
    "RandomAgent",
    "ReplayAgent",
    "Segment",
    "ServerState",
    "SimulationConfig",
    "SimulationReport",
    "Trace",
    "TraceWriter",
    "TrackedSession",
    "UiAction",
    "Verdict",
    "VerdictStatus",
    "VirtualClock",
    "WallClock",
    "build_frequency_model",
    "encode_component_id",
    "load_report",
    "load_trace",
    "parse_component_id",
    "run_simulation",
    "summarize",
    "view_catalog",
    "wrap",
    "write_report",
]
