"""Injectable clocks.

Recording against the live server uses the wall clock; simulations use a
virtual clock that only moves when the play engine advances it, so two runs
with the same configuration stamp identical timestamps.
"""

from __future__ import annotations

import time
from typing import Protocol


class Clock(Protocol):
    def now_ms(self) -> int: ...


class WallClock:
    def now_ms(self) -> int:
        return time.time_ns() // 1_000_000


class VirtualClock:
    """Deterministic clock advanced explicitly by its owner."""

    def __init__(self, start_ms: int = 0):
        self._now = start_ms

    def now_ms(self) -> int:
        return self._now

    def advance(self, delta_ms: int) -> None:
        if delta_ms < 0:
            raise ValueError("clock cannot move backwards")
        self._now += delta_ms
