"""Canonical representation and on-disk format of tracked user activity.

A trace file is UTF-8, one JSON record per line. The first line is a header
record ``{"format": "synthuser-trace", "version": 1}``; every following line
is one action event::

    {"session": "s1", "seq": 0, "ts_ms": 1700000000000,
     "state_before": "feed",
     "action": {"component": "window[main]#0/...", "kind": "click"},
     "state_after": "feed"}

``action.payload`` is present exactly for ``text-input`` actions. The format
is append-only: a file truncated after any complete line is still loadable,
so partially recorded sessions survive crashes.

Component ids name an actionable widget by its nesting path from the
application window, e.g. ``window[main]#0/panel[tweets]#0/button[Like]#2``.
Each segment is ``kind[label]#index`` (``[label]`` omitted for unlabeled
widgets); ``index`` disambiguates siblings with the same kind and label and
is 0-based and gapless within that class. The characters ``\\ / [ ] #``
inside labels are escaped with a backslash.
"""

from __future__ import annotations

import io
import json
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Sequence

from .errors import (
    ComponentIdError,
    SequencingError,
    TraceFormatError,
    TraceIntegrityError,
)

TRACE_FORMAT = "synthuser-trace"
TRACE_VERSION = 1

_ESCAPED = "\\/[]#"


class ActionKind(str, Enum):
    CLICK = "click"
    TEXT_INPUT = "text-input"


@dataclass(frozen=True)
class Segment:
    """One step of a component's nesting path."""

    kind: str
    label: str | None
    index: int


ComponentId = tuple[Segment, ...]


def _escape_label(label: str) -> str:
    out = []
    for ch in label:
        if ch in _ESCAPED:
            out.append("\\")
        out.append(ch)
    return "".join(out)


def _valid_kind(kind: str) -> bool:
    return bool(kind) and all(c.isascii() and (c.isalnum() or c in "_-") for c in kind)


def encode_component_id(path: Sequence[Segment]) -> str:
    """Encode a component path as its textual id."""
    if not path:
        raise ComponentIdError("component path is empty")
    if path[0].kind != "window":
        raise ComponentIdError("component path must start at a window")
    parts = []
    for seg in path:
        if not _valid_kind(seg.kind):
            raise ComponentIdError(f"invalid widget kind {seg.kind!r}")
        if seg.index < 0:
            raise ComponentIdError(f"negative sibling index in {seg!r}")
        label = "" if seg.label is None else f"[{_escape_label(seg.label)}]"
        parts.append(f"{seg.kind}{label}#{seg.index}")
    return "/".join(parts)


def _split_unescaped(text: str, sep: str) -> list[str]:
    parts, current, escaped = [], [], False
    for ch in text:
        if escaped:
            current.append("\\")
            current.append(ch)
            escaped = False
        elif ch == "\\":
            escaped = True
        elif ch == sep:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    if escaped:
        current.append("\\")
    parts.append("".join(current))
    return parts


def _parse_segment(text: str) -> Segment:
    kind_chars: list[str] = []
    i = 0
    while i < len(text) and text[i] not in "[#":
        kind_chars.append(text[i])
        i += 1
    kind = "".join(kind_chars)
    if not _valid_kind(kind):
        raise ComponentIdError(f"segment {text!r}: invalid widget kind")

    label: str | None = None
    if i < len(text) and text[i] == "[":
        i += 1
        label_chars: list[str] = []
        closed = False
        while i < len(text):
            ch = text[i]
            if ch == "\\":
                if i + 1 >= len(text):
                    raise ComponentIdError(f"segment {text!r}: dangling escape")
                nxt = text[i + 1]
                if nxt not in _ESCAPED:
                    raise ComponentIdError(f"segment {text!r}: bad escape \\{nxt}")
                label_chars.append(nxt)
                i += 2
            elif ch == "]":
                closed = True
                i += 1
                break
            elif ch in "[#":
                raise ComponentIdError(f"segment {text!r}: unescaped {ch!r} in label")
            else:
                label_chars.append(ch)
                i += 1
        if not closed:
            raise ComponentIdError(f"segment {text!r}: unterminated label")
        label = "".join(label_chars)

    if i >= len(text) or text[i] != "#":
        raise ComponentIdError(f"segment {text!r}: missing #index")
    index_text = text[i + 1 :]
    if not index_text.isdigit():
        raise ComponentIdError(f"segment {text!r}: non-integer index {index_text!r}")
    return Segment(kind=kind, label=label, index=int(index_text))


def parse_component_id(text: str) -> ComponentId:
    """Parse a textual component id; inverse of :func:`encode_component_id`."""
    if not text:
        raise ComponentIdError("component id is empty")
    segments = tuple(_parse_segment(part) for part in _split_unescaped(text, "/"))
    if segments[0].kind != "window":
        raise ComponentIdError(
            f"segment {segments[0].kind!r}: first segment must be a window"
        )
    return segments


@dataclass(frozen=True)
class ActionEvent:
    """One tracked user step: a (state, action, state) binding."""

    session: str
    seq: int
    ts_ms: int
    state_before: str
    component: ComponentId
    kind: ActionKind
    payload: str | None
    state_after: str

    def __post_init__(self):
        if self.seq < 0:
            raise ValueError("seq must be non-negative")
        if self.kind is ActionKind.TEXT_INPUT and self.payload is None:
            raise ValueError("text-input events carry a payload")
        if self.kind is ActionKind.CLICK and self.payload is not None:
            raise ValueError("click events carry no payload")

    def to_record(self) -> dict:
        action: dict = {
            "component": encode_component_id(self.component),
            "kind": self.kind.value,
        }
        if self.payload is not None:
            action["payload"] = self.payload
        return {
            "session": self.session,
            "seq": self.seq,
            "ts_ms": self.ts_ms,
            "state_before": self.state_before,
            "action": action,
            "state_after": self.state_after,
        }

    @classmethod
    def from_record(cls, record: dict) -> "ActionEvent":
        action = record["action"]
        return cls(
            session=record["session"],
            seq=record["seq"],
            ts_ms=record["ts_ms"],
            state_before=record["state_before"],
            component=parse_component_id(action["component"]),
            kind=ActionKind(action["kind"]),
            payload=action.get("payload"),
            state_after=record["state_after"],
        )


@dataclass(frozen=True)
class Trace:
    """All events of one recorded session, ordered by seq."""

    session: str
    events: tuple[ActionEvent, ...]

    def __post_init__(self):
        last_ts = None
        for i, ev in enumerate(self.events):
            if ev.session != self.session:
                raise TraceIntegrityError(
                    f"event {i} belongs to session {ev.session!r}, not {self.session!r}"
                )
            if ev.seq != i:
                raise TraceIntegrityError(
                    f"session {self.session!r}: gap or duplicate at seq {ev.seq}"
                    f" (expected {i})"
                )
            if last_ts is not None and ev.ts_ms < last_ts:
                raise TraceIntegrityError(
                    f"session {self.session!r}: timestamp decreases at seq {ev.seq}"
                )
            last_ts = ev.ts_ms


class TraceWriter:
    """Serialized, flush-on-append writer for one trace log.

    Multiple tracked sessions may share one writer; appends are serialized
    through an internal lock and each record is flushed before returning.
    """

    def __init__(self, stream: IO[str], *, fresh: bool = True):
        self._stream = stream
        self._lock = threading.Lock()
        self._last_seq: dict[str, int] = {}
        self._last_ts: dict[str, int] = {}
        if fresh:
            header = {"format": TRACE_FORMAT, "version": TRACE_VERSION}
            self._stream.write(json.dumps(header) + "\n")
            self._stream.flush()

    @classmethod
    def open(cls, path: str | Path) -> "TraceWriter":
        """Open ``path`` for appending, creating it (with header) if needed.

        Resuming an existing file recovers the per-session sequence counters
        so appends stay gapless.
        """
        path = Path(path)
        if path.exists() and path.stat().st_size > 0:
            traces = load_trace(path)
            stream = path.open("a", encoding="utf-8")
            writer = cls(stream, fresh=False)
            for trace in traces:
                if trace.events:
                    writer._last_seq[trace.session] = trace.events[-1].seq
                    writer._last_ts[trace.session] = trace.events[-1].ts_ms
            return writer
        path.parent.mkdir(parents=True, exist_ok=True)
        return cls(path.open("w", encoding="utf-8"))

    def append(self, event: ActionEvent) -> None:
        with self._lock:
            expected = self._last_seq.get(event.session, -1) + 1
            if event.seq != expected:
                raise SequencingError(
                    f"session {event.session!r}: got seq {event.seq},"
                    f" expected {expected}"
                )
            last_ts = self._last_ts.get(event.session)
            if last_ts is not None and event.ts_ms < last_ts:
                raise SequencingError(
                    f"session {event.session!r}: ts_ms decreases at seq {event.seq}"
                )
            self._stream.write(json.dumps(event.to_record()) + "\n")
            self._stream.flush()
            self._last_seq[event.session] = event.seq
            self._last_ts[event.session] = event.ts_ms

    def last_seq(self, session: str) -> int | None:
        with self._lock:
            return self._last_seq.get(session)

    def close(self) -> None:
        self._stream.close()

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def append_event(writer: TraceWriter, event: ActionEvent) -> None:
    writer.append(event)


def _iter_lines(source: str | Path | IO[str]) -> Iterable[str]:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as f:
            yield from f
    else:
        yield from source


def load_trace(source: str | Path | IO[str]) -> list[Trace]:
    """Load a trace file and return one validated Trace per session.

    Sessions come back in order of first appearance. Raises
    :class:`TraceFormatError` for malformed lines (with the line number) and
    :class:`TraceIntegrityError` for sequence gaps or duplicates.
    """
    by_session: dict[str, list[ActionEvent]] = {}
    header_seen = False
    for line_no, line in enumerate(_iter_lines(source), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise TraceFormatError(f"invalid JSON: {e.msg}", line_no) from e
        if not isinstance(record, dict):
            raise TraceFormatError("record is not an object", line_no)
        if not header_seen:
            if record.get("format") != TRACE_FORMAT:
                raise TraceFormatError(
                    f"not a {TRACE_FORMAT} file (missing header)", line_no
                )
            if record.get("version") != TRACE_VERSION:
                raise TraceFormatError(
                    f"unsupported version {record.get('version')!r}", line_no
                )
            header_seen = True
            continue
        try:
            event = ActionEvent.from_record(record)
        except (KeyError, ValueError, TypeError, ComponentIdError) as e:
            raise TraceFormatError(f"bad event record: {e}", line_no) from e
        by_session.setdefault(event.session, []).append(event)
    if not header_seen:
        raise TraceFormatError("empty file: missing header", 1)

    traces = []
    for session, events in by_session.items():
        events.sort(key=lambda ev: ev.seq)
        seen: set[int] = set()
        for ev in events:
            if ev.seq in seen:
                raise TraceIntegrityError(
                    f"session {session!r}: duplicate seq {ev.seq}"
                )
            seen.add(ev.seq)
        for expected, ev in enumerate(events):
            if ev.seq != expected:
                raise TraceIntegrityError(
                    f"session {session!r}: gap after seq {expected - 1}"
                    f" (next recorded seq is {ev.seq})"
                )
        traces.append(Trace(session=session, events=tuple(events)))
    return traces


def write_trace(path: str | Path, traces: Iterable[Trace]) -> None:
    """Write whole traces to a fresh file (mainly for tests and tools)."""
    with TraceWriter(open(path, "w", encoding="utf-8")) as writer:
        for trace in traces:
            for event in trace.events:
                writer.append(event)


def dumps_trace(traces: Iterable[Trace]) -> str:
    buf = io.StringIO()
    writer = TraceWriter(buf)
    for trace in traces:
        for event in trace.events:
            writer.append(event)
    return buf.getvalue()
