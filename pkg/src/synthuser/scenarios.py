"""Scripted recording sessions used for demos, tests, and model seeding.

The script drives a tracked session through the same Perform/Await pipeline
the play engine uses (one stimulus tick and one alert poll after every
action), so a trace recorded here replays faithfully against a fresh
target. The scripted user composes, likes, retweets, inspects who-liked,
toggles follows, and clicks through their alerts; a stimulus account keeps
liked-alerts flowing. Every transition is canonical (no faults), so models
built from these traces expect liked-alert clicks to land on the feed.
"""

from __future__ import annotations

from pathlib import Path

from .clock import VirtualClock
from .play import SessionRunner, StimulusDriver
from .seeding import derive_seed
from .target import FaultConfig, InProcessTarget
from .traces import ActionKind, TraceWriter
from .tracking import TrackedSession
from .views import ClientSession, UiAction


class _BudgetExhausted(Exception):
    pass


def record_scripted_session(
    trace_path: str | Path,
    *,
    events: int = 200,
    master_seed: int = 0,
    username: str = "trainer",
    session_id: str | None = None,
) -> Path:
    """Record exactly ``events`` canonical actions to ``trace_path``."""
    trace_path = Path(trace_path)
    session_id = session_id or username
    clock = VirtualClock()
    faults = FaultConfig.none()
    target = InProcessTarget(derive_seed(master_seed, "server"), faults, clock)
    session = ClientSession(target, faults, session_id=session_id)
    tracked = TrackedSession(session, writer=None, clock=clock, session_id=session_id)
    runner = SessionRunner(tracked)
    runner.bootstrap(username, f"{username}-pw")

    stimulus = StimulusDriver(target, target_username=username)
    stimulus.bootstrap()
    runner.stimulus = stimulus

    writer = TraceWriter.open(trace_path)
    tracked.writer = writer
    emitted = 0

    def act(component_text: str, kind=ActionKind.CLICK, payload: str | None = None):
        nonlocal emitted
        if emitted >= events:
            raise _BudgetExhausted
        entry = session.find_action(component_text)
        if entry is None:
            raise AssertionError(
                f"script expected {component_text} on view {session.view!r}"
            )
        runner.execute(UiAction(entry[0], kind, payload))
        emitted += 1
        clock.advance(1000)

    def first(fragment: str) -> str | None:
        matches = sorted(i for i in tracked.active_ids() if fragment in i)
        return matches[0] if matches else None

    nav = "window[main]#0/panel[nav]#0/button[{}]#0".format

    try:
        round_no = 0
        while True:
            # compose one tweet
            act(nav("Compose"))
            act("window[main]#0/field[text]#0", ActionKind.TEXT_INPUT,
                f"update {round_no}")
            act("window[main]#0/button[Post]#0")

            # alternate liking and unliking the oldest eligible tweet
            if round_no % 2 == 0:
                target_id = first("button[Like]#0")
            else:
                target_id = first("button[Unlike]#0") or first("button[Like]#0")
            if target_id:
                act(target_id)

            # inspect who liked the oldest tweet
            act("window[main]#0/panel[tweets]#0/button[Who liked]#0")
            act("window[main]#0/button[Back]#0")

            # toggle the follow relationship both ways
            act(nav("Users"))
            for _ in range(2):
                toggle = first("button[Follow]#0") or first("button[Unfollow]#0")
                act(toggle)
            act(nav("Feed"))

            # read alerts; click a liked alert (varying which one)
            act(nav("Alerts"))
            liked = sorted(i for i in tracked.active_ids() if "alert[liked]" in i)
            if liked:
                act(liked[round_no % min(len(liked), 4)])
            else:
                act(nav("Feed"))

            if round_no % 3 == 2:
                # follow the one followed-alert back to the users view
                act(nav("Alerts"))
                followed = first("alert[followed]#0")
                if followed:
                    act(followed)
                act(nav("Feed"))

            if round_no % 3 == 1:
                # retweet the oldest tweet, tagging media
                act("window[main]#0/panel[tweets]#0/button[Retweet]#0")
                act("window[main]#0/field[text]#0", ActionKind.TEXT_INPUT,
                    f"echo {round_no}")
                act("window[main]#0/field[media]#0", ActionKind.TEXT_INPUT,
                    f"pic-{round_no}")
                act("window[main]#0/button[Post]#0")

            round_no += 1
    except _BudgetExhausted:
        pass
    finally:
        writer.close()
    return trace_path
