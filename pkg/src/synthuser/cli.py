"""Command-line entry point.

Subcommands::

    synthuser serve       run the demo target, tracker endpoints, and web UI;
                          records whatever the UI posts to the trace file
    synthuser synthesize  build a frequency model from trace files
    synthuser play        run agents against a fresh target and write a report
    synthuser report      print the summary of a saved report

``play`` exits 0 when the run is clean, 1 when violations or runtime
errors were found, and 2 when the run itself failed.
"""

from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path

import yaml

from .agents import AgentSpec, FrequencyModel, build_frequency_model
from .errors import ConfigError, SynthUserError
from .play import (
    SimulationConfig,
    load_report,
    run_simulation,
    summarize,
    write_report,
)
from .target import FaultConfig, InProcessTarget
from .traces import TraceWriter, load_trace
from .webserver import AppServer

CONFIG_DEFAULTS = {
    "seed": None,
    "agents": 1,
    "max_steps": 100,
    "time_scale": 0.0,
    "stop_on_first_violation": False,
    "stimulus": False,
    "settle_delay_ms": 0,
    "follow_error_probability": 0.2,
    "alert_nav_bug_enabled": False,
    "alert_nav_bug_threshold": 10,
}


def parse_config(path: str | Path | None) -> dict:
    """Read a YAML/JSON config file, validate it, and fill defaults."""
    values = dict(CONFIG_DEFAULTS)
    if path is None:
        return values
    try:
        loaded = yaml.safe_load(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"config {path} is not valid YAML: {e}") from e
    if loaded is None:
        loaded = {}
    if not isinstance(loaded, dict):
        raise ConfigError(f"config {path} must be a mapping")
    unknown = sorted(set(loaded) - set(CONFIG_DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    values.update(loaded)
    _validate_config(values)
    return values


def _validate_config(values: dict) -> None:
    p = values["follow_error_probability"]
    if not isinstance(p, (int, float)) or not 0.0 <= p <= 1.0:
        raise ConfigError("follow_error_probability must be in [0, 1]")
    if not isinstance(values["alert_nav_bug_threshold"], int) or values[
        "alert_nav_bug_threshold"
    ] < 1:
        raise ConfigError("alert_nav_bug_threshold must be a positive integer")
    if not isinstance(values["max_steps"], int) or values["max_steps"] < 1:
        raise ConfigError("max_steps must be a positive integer")
    if not isinstance(values["agents"], int) or values["agents"] < 0:
        raise ConfigError("agents must be a non-negative integer")
    ts = values["time_scale"]
    if not isinstance(ts, (int, float)) or ts < 0:
        raise ConfigError("time_scale must be non-negative")
    if values["seed"] is not None and not isinstance(values["seed"], int):
        raise ConfigError("seed must be an integer")


def _faults_from(values: dict, args) -> FaultConfig:
    p = values["follow_error_probability"]
    if args.fault_follow_p is not None:
        p = args.fault_follow_p
    enabled = values["alert_nav_bug_enabled"] or args.fault_alert_nav
    return FaultConfig(
        follow_error_probability=p,
        alert_nav_bug_enabled=enabled,
        alert_nav_bug_threshold=values["alert_nav_bug_threshold"],
    )


def _cmd_serve(args) -> int:
    values = parse_config(args.config)
    faults = _faults_from(values, args)
    seed = args.seed if args.seed is not None else (values["seed"] or 0)
    target = InProcessTarget(seed=seed, faults=faults)
    writer = TraceWriter.open(args.traces) if args.traces else None
    web_dir = args.web_dir
    if web_dir is None:
        bundled = Path("frontend/dist")
        web_dir = bundled if bundled.is_dir() else None
    app = AppServer(
        target, writer=writer, web_dir=web_dir, host=args.host, port=args.port
    )
    print(f"serving on http://{args.host}:{app.port}")
    if args.traces:
        print(f"recording traces to {args.traces}")
    if web_dir:
        print(f"web UI from {web_dir}")
    try:
        app.serve_forever()
    except KeyboardInterrupt:
        print("shutting down")
    finally:
        if writer is not None:
            writer.close()
    return 0


def _cmd_synthesize(args) -> int:
    traces = []
    for path in args.traces:
        traces.extend(load_trace(path))
    built_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    model = build_frequency_model(traces, built_at=built_at)
    model.save(args.output)
    sessions = ", ".join(model.sessions)
    print(
        f"model over {len(model.action_counts)} states written to {args.output}"
        f" (sessions: {sessions})"
    )
    return 0


def _cmd_play(args) -> int:
    values = parse_config(args.config)
    seed = args.seed if args.seed is not None else values["seed"]
    if seed is None:
        raise ConfigError(
            "play needs an explicit seed (config key 'seed' or --seed):"
            " runs must be reproducible"
        )
    faults = _faults_from(values, args)

    if args.replay:
        specs = [AgentSpec(kind="replay", trace_paths=(args.replay,))]
    elif args.random:
        specs = [AgentSpec(kind="random") for _ in range(values["agents"])]
    else:
        FrequencyModel.load(args.model)  # fail early on a bad model file
        specs = [
            AgentSpec(kind="frequency", model_path=args.model)
            for _ in range(values["agents"])
        ]

    config = SimulationConfig(
        agents=specs,
        faults=faults,
        master_seed=seed,
        max_steps=values["max_steps"],
        time_scale=values["time_scale"],
        stop_on_first_violation=values["stop_on_first_violation"],
        stimulus=values["stimulus"],
        settle_delay_ms=values["settle_delay_ms"],
    )
    report = run_simulation(config)
    if args.output:
        write_report(report, args.output)
    print(summarize(report))
    return 0 if report.clean else 1


def _cmd_report(args) -> int:
    report = load_report(args.file)
    print(summarize(report))
    return 0 if report.clean else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthuser",
        description="Record users of the demo social platform, synthesize"
        " agents from their traces, and play them back as tests.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the demo target and web UI")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--traces", help="trace file recorded from the web UI")
    serve.add_argument("--web-dir", help="static web UI directory")
    serve.add_argument("--config", help="YAML config file")
    serve.add_argument("--seed", type=int, help="server PRNG seed")
    _fault_flags(serve)
    serve.set_defaults(func=_cmd_serve)

    synth = sub.add_parser("synthesize", help="build a model from traces")
    synth.add_argument("traces", nargs="+", help="trace files")
    synth.add_argument("-o", "--output", required=True, help="model file to write")
    synth.set_defaults(func=_cmd_synthesize)

    play = sub.add_parser("play", help="run agents against a fresh target")
    source = play.add_mutually_exclusive_group(required=True)
    source.add_argument("--model", help="frequency model file")
    source.add_argument("--replay", help="trace file to replay")
    source.add_argument("--random", action="store_true", help="random agents")
    play.add_argument("--config", help="YAML config file")
    play.add_argument("-o", "--output", help="report file to write")
    play.add_argument("--seed", type=int, help="master seed (overrides config)")
    _fault_flags(play)
    play.set_defaults(func=_cmd_play)

    report = sub.add_parser("report", help="summarize a saved report")
    report.add_argument("file")
    report.set_defaults(func=_cmd_report)
    return parser


def _fault_flags(parser) -> None:
    parser.add_argument(
        "--fault-alert-nav",
        action="store_true",
        help="arm the alert navigation bug",
    )
    parser.add_argument(
        "--fault-follow-p",
        type=float,
        default=None,
        help="probability of the injected follow fault",
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except SynthUserError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
