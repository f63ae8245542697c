"""Transparent action recording around a client session.

Wrapping a session makes every completed ``perform`` emit exactly one
action event (state before, action, state after) to the shared trace
writer, and adds programmatic triggering of actions by component id. The
wrapped session behaves identically to the bare one; a logging failure is
reported only after the action has completed.
"""

from __future__ import annotations

from .clock import Clock, WallClock
from .errors import InvalidKindError, TrackingError, UnavailableActionError
from .traces import (
    ActionEvent,
    ActionKind,
    ComponentId,
    TraceWriter,
    encode_component_id,
    parse_component_id,
)
from .views import ClientSession, UiAction, ViewState


class TrackedSession:
    """A client session whose completed actions are logged as a trace."""

    def __init__(
        self,
        session: ClientSession,
        writer: TraceWriter | None = None,
        clock: Clock | None = None,
        session_id: str | None = None,
        initial_seq: int = 0,
    ):
        self.session = session
        self.writer = writer
        self.clock = clock if clock is not None else WallClock()
        self.session_id = session_id or session.session_id
        self._seq = initial_seq

    # passthroughs ------------------------------------------------------------

    def observe_state(self) -> str:
        return self.session.observe_state()

    def available_actions(self) -> list[UiAction]:
        return self.session.available_actions()

    def poll_alerts(self) -> int:
        return self.session.poll_alerts()

    @property
    def view(self) -> str:
        return self.session.view

    # recording ---------------------------------------------------------------

    def perform(self, action: UiAction) -> ViewState:
        state_before = self.session.observe_state()
        result = self.session.perform(action)
        if self.writer is not None:
            event = ActionEvent(
                session=self.session_id,
                seq=self._seq,
                ts_ms=self.clock.now_ms(),
                state_before=state_before,
                component=action.component,
                kind=action.kind,
                payload=action.payload if action.kind is ActionKind.TEXT_INPUT else None,
                state_after=self.session.observe_state(),
            )
            try:
                self.writer.append(event)
            except OSError as e:
                # the next completed action reuses this seq: the log stays gapless
                raise TrackingError(f"action completed but not logged: {e}") from e
            self._seq += 1
        return result

    def trigger(
        self,
        component: ComponentId | str,
        kind: ActionKind | str,
        payload: str | None = None,
    ) -> ViewState:
        """Execute the action bound to ``component`` as if a user took it."""
        if isinstance(component, str):
            component_text = component
            component = parse_component_id(component)
        else:
            component_text = encode_component_id(component)
        kind = ActionKind(kind)
        entry = self.session.find_action(component_text)
        if entry is None:
            raise UnavailableActionError(f"{component_text} is not active")
        _, widget = entry
        if kind not in widget.action_kinds:
            raise InvalidKindError(
                f"{component_text} does not accept {kind.value}"
            )
        if kind is ActionKind.TEXT_INPUT and payload is None:
            raise InvalidKindError(f"{component_text}: text-input needs a payload")
        if kind is ActionKind.CLICK and payload is not None:
            raise InvalidKindError(f"{component_text}: click takes no payload")
        return self.perform(UiAction(component=component, kind=kind, payload=payload))

    def active_ids(self) -> set[str]:
        return {a.component_text for a in self.session.available_actions()}


def wrap(
    session: ClientSession,
    writer: TraceWriter | None,
    clock: Clock | None = None,
    session_id: str | None = None,
) -> TrackedSession:
    resumed = writer.last_seq(session_id or session.session_id) if writer else None
    initial = 0 if resumed is None else resumed + 1
    return TrackedSession(session, writer, clock, session_id, initial_seq=initial)
