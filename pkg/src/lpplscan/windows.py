"""Multi-scale (t1, t2) window grid for the fitting scan.

The grid is built from two calendar-day ladders: start times stepping
forward from the earliest start t10, end times stepping backward from the
latest end t20.  Every ladder pair whose length t2 - t1 lies inside
[dt_min, dt_max] (both endpoints inclusive) is a window.  Generation is
data independent: windows may start before the first observed date, the
series slice decides what actually gets fitted.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta

from .errors import ConfigError


@dataclass(frozen=True, order=True)
class Window:
    """A closed calendar interval [t1, t2] selecting a contiguous sub-series."""

    t1: date
    t2: date

    def __post_init__(self):
        if self.t1 >= self.t2:
            raise ConfigError(f"window start {self.t1} must precede end {self.t2}")

    @property
    def length_days(self) -> int:
        """Window length dt = t2 - t1 in calendar days."""
        return (self.t2 - self.t1).days

    def __str__(self) -> str:
        return f"{self.t1.isoformat()},{self.t2.isoformat()}"


@dataclass(frozen=True)
class GridConfig:
    """Parameters of the window grid.

    t10/t20 anchor the two ladders; dt1/dt2 are the (positive) step
    magnitudes in calendar days; dt_min/dt_max bound the window length,
    inclusively on both ends.

    A config whose span is shorter than dt_min is allowed and simply
    generates no windows.
    """

    t10: date
    t20: date
    dt1: int = 50
    dt2: int = 50
    dt_min: int = 110
    dt_max: int = 1500

    def __post_init__(self):
        if self.dt1 <= 0 or self.dt2 <= 0:
            raise ConfigError(f"ladder steps must be positive, got dt1={self.dt1} dt2={self.dt2}")
        if not 0 < self.dt_min < self.dt_max:
            raise ConfigError(
                f"need 0 < dt_min < dt_max, got dt_min={self.dt_min} dt_max={self.dt_max}"
            )
        if self.t10 >= self.t20:
            raise ConfigError(f"t10 {self.t10} must precede t20 {self.t20}")


def generate_windows(config: GridConfig) -> list[Window]:
    """Every ladder pair (t1, t2) with dt_min <= t2 - t1 <= dt_max.

    t1 runs over {t10 + k*dt1}, t2 over {t20 - j*dt2}, both within [t10, t20].
    Output is ordered by ascending t1, then ascending t2, and is a pure
    function of the config.
    """
    span = (config.t20 - config.t10).days
    out: list[Window] = []
    a = 0
    while True:
        off1 = a * config.dt1
        if off1 > span - config.dt_min:
            break
        t1 = config.t10 + timedelta(days=off1)
        # t2 = t20 - j*dt2 with dt_min <= (span - off1) - j*dt2 <= dt_max
        gap = span - off1
        j_lo = max(0, -(-(gap - config.dt_max) // config.dt2))  # ceil
        j_hi = (gap - config.dt_min) // config.dt2  # floor
        for j in range(int(j_hi), int(j_lo) - 1, -1):
            out.append(Window(t1=t1, t2=config.t20 - timedelta(days=j * config.dt2)))
        a += 1
    return out
