"""Sinusoidal weather-station model for the environment fixture.

Each channel evolves as base + amplitude * sin(2*pi*t/period) over the
station's tick counter t, which advances once per request.  Defaults
are fixture parameters, not physical claims.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass


@dataclass(frozen=True)
class Channel:
    base: float
    amplitude: float
    period: float

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")

    def value(self, t: float) -> float:
        return self.base + self.amplitude * math.sin(2.0 * math.pi * t / self.period)


DEFAULT_CHANNELS = {
    "pressure": Channel(base=715.0, amplitude=50.0, period=86400.0),
    "humidity": Channel(base=0.03, amplitude=0.02, period=86400.0),
    "wind": Channel(base=7.0, amplitude=5.0, period=3600.0),
    "uv": Channel(base=2.5, amplitude=2.5, period=86400.0),
}


class EnvironmentModel:
    """Channels plus the shared per-request tick counter (the only
    mutable state; increments are atomic)."""

    def __init__(self, channels: dict[str, Channel] | None = None):
        self.channels = dict(channels or DEFAULT_CHANNELS)
        self._ticks = itertools.count()
        self._lock = threading.Lock()

    def next_tick(self) -> int:
        with self._lock:
            return next(self._ticks)

    def sample(self, channel: str) -> float:
        return self.channels[channel].value(self.next_tick())
