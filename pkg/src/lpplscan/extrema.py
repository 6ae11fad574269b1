"""Detection of rebounds, peaks, and crashes in daily price series.

A rebound day is a local minimum over a two-sided neighborhood of
+/- `radius` trading days; a peak is the same predicate with max.  Days
too close to either end of the series for full coverage are never
candidates, and tying days are all retained.  A crash is reported at its
initiating peak: a day at least as high as everything in the preceding
horizon, strictly above everything in the following horizon, whose price
then loses more than `drop` of its value within that following horizon.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DataError
from .timeseries import PriceSeries, TradingDay

log = logging.getLogger(__name__)

REBOUND = "rebound"
PEAK = "peak"
CRASH = "crash"


@dataclass(frozen=True)
class EventSet:
    """Detected event days of one kind, with the rule that produced them."""

    kind: str
    days: tuple[TradingDay, ...]
    rule: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if self.kind not in (REBOUND, PEAK, CRASH):
            raise ValueError(f"unknown event kind '{self.kind}'")
        indices = [d.index for d in self.days]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError("event days must be sorted by index and unique")

    def __len__(self) -> int:
        return len(self.days)

    @property
    def indices(self) -> np.ndarray:
        return np.array([d.index for d in self.days], dtype=int)

    @property
    def dates(self) -> tuple[date, ...]:
        return tuple(d.date for d in self.days)


def _extreme_days(series: PriceSeries, radius: int, mode: str) -> np.ndarray:
    """Indices with full two-sided coverage achieving the window min or max."""
    if radius < 1:
        raise DataError(f"radius must be a positive day count, got {radius}")
    p = series.prices
    width = 2 * radius + 1
    if len(p) < width:
        log.warning(
            "series of %d days is too short for radius %d; no eligible days",
            len(p), radius,
        )
        return np.array([], dtype=int)
    windows = sliding_window_view(p, width)
    extremes = windows.min(axis=1) if mode == "min" else windows.max(axis=1)
    centers = p[radius:len(p) - radius]
    return np.nonzero(centers == extremes)[0] + radius


def detect_rebounds(series: PriceSeries, radius: int = 200) -> EventSet:
    """Days whose price is the minimum over [d - radius, d + radius]."""
    idx = _extreme_days(series, radius, "min")
    return EventSet(
        kind=REBOUND,
        days=tuple(series.day(int(i)) for i in idx),
        rule=(("radius", float(radius)),),
    )


def detect_peaks(series: PriceSeries, radius: int = 200) -> EventSet:
    """Days whose price is the maximum over [d - radius, d + radius]."""
    idx = _extreme_days(series, radius, "max")
    return EventSet(
        kind=PEAK,
        days=tuple(series.day(int(i)) for i in idx),
        rule=(("radius", float(radius)),),
    )


def detect_crashes(series: PriceSeries, drop: float = 0.15, horizon: int = 21) -> EventSet:
    """Initiating-peak days of drops losing more than `drop` within `horizon` days.

    A day d qualifies when P_d >= every price in the `horizon` days before
    it, P_d > every price in the `horizon` days after it, and the minimum
    of those following days is below (1 - drop) * P_d.  On a flat run
    followed by a slump this flags the last day before prices turn down.
    Truncated neighborhoods at the series edges are evaluated on the data
    that exists; a day with no following observations cannot qualify.
    """
    if not 0.0 < drop < 1.0:
        raise DataError(f"drop must be a fraction in (0, 1), got {drop}")
    if horizon < 1:
        raise DataError(f"horizon must be a positive day count, got {horizon}")
    p = series.prices
    found = []
    for d in range(len(p)):
        post = p[d + 1:d + 1 + horizon]
        if post.size == 0:
            continue
        pre = p[max(0, d - horizon):d]
        if pre.size and p[d] < pre.max():
            continue
        if not p[d] > post.max():
            continue
        if post.min() < (1.0 - drop) * p[d]:
            found.append(d)
    return EventSet(
        kind=CRASH,
        days=tuple(series.day(d) for d in found),
        rule=(("drop", float(drop)), ("horizon", float(horizon))),
    )


def save_events_csv(events: EventSet, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "date", "index"])
        for day in events.days:
            writer.writerow([events.kind, day.date.isoformat(), day.index])


def load_event_days(path: str | Path) -> list[tuple[str, date, int]]:
    """Rows of an events CSV as (kind, date, index) tuples."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            rows.append((row["kind"], date.fromisoformat(row["date"]), int(row["index"])))
    return rows


def event_dates_near(events: EventSet, when: date, within_days: int) -> list[date]:
    """Event dates within `within_days` calendar days of `when`."""
    target = when.toordinal()
    return [d for d in events.dates if abs(d.toordinal() - target) <= within_days]
