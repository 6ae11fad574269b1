"""Error diagrams: miss fraction versus alarm fraction across thresholds.

An alarm set for threshold T is every trading day whose alarm index
exceeds T plus the `duration` trading days that follow each such day.
Sweeping T from +inf down to -inf traces a curve from (0, 1) (no alarms,
everything missed) to (1, 0) (always in alarm, nothing missed); an
unskilled index follows the anti-diagonal y = 1 - x, and skill_summary
integrates how far below it the curve sits.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError
from .extrema import EventSet
from .timeseries import TradingDay


@dataclass(frozen=True)
class ErrorDiagramPoint:
    threshold: float
    alarm_fraction: float
    miss_fraction: float

    def __post_init__(self):
        if not 0.0 <= self.alarm_fraction <= 1.0:
            raise ValueError(f"alarm fraction {self.alarm_fraction} outside [0, 1]")
        if not 0.0 <= self.miss_fraction <= 1.0:
            raise ValueError(f"miss fraction {self.miss_fraction} outside [0, 1]")


def _ri_arrays(ri: Sequence[tuple[TradingDay, float]]) -> tuple[np.ndarray, np.ndarray]:
    if len(ri) == 0:
        raise DataError("empty alarm series")
    idx = np.array([day.index for day, _ in ri], dtype=int)
    if np.any(np.diff(idx) != 1):
        raise DataError("alarm series must cover a contiguous trading-day span")
    values = np.array([v for _, v in ri], dtype=float)
    return idx, values


def _alarm_mask(values: np.ndarray, threshold: float, duration: int) -> np.ndarray:
    """Boolean span mask: RI > threshold extended by `duration` following days."""
    n = len(values)
    delta = np.zeros(n + 1, dtype=int)
    for i in np.nonzero(values > threshold)[0]:
        delta[i] += 1
        delta[min(i + duration + 1, n)] -= 1
    return np.cumsum(delta[:n]) > 0


def build_alarm_set(
    ri: Sequence[tuple[TradingDay, float]],
    threshold: float,
    duration: int = 40,
) -> set[TradingDay]:
    """Days with RI above threshold plus the following `duration` trading days."""
    if duration < 0:
        raise DataError(f"duration must be >= 0, got {duration}")
    _, values = _ri_arrays(ri)
    mask = _alarm_mask(values, threshold, duration)
    return {ri[i][0] for i in np.nonzero(mask)[0]}


def error_diagram(
    ri: Sequence[tuple[TradingDay, float]],
    rebounds: EventSet,
    thresholds: Sequence[float] | None = None,
    duration: int = 40,
) -> list[ErrorDiagramPoint]:
    """One point per threshold, sorted by threshold.

    alarm_fraction is |alarm set| / span length; miss_fraction is the
    fraction of in-span rebounds not covered by the alarm set.  With no
    explicit thresholds, every distinct RI value is swept plus -inf and
    +inf sentinels, which yields the exact step curve including the
    (1, 0) and (0, 1) endpoints.  Raises when the span holds no rebound.
    """
    if duration < 0:
        raise DataError(f"duration must be >= 0, got {duration}")
    span_idx, values = _ri_arrays(ri)
    pos_of = {int(day_index): pos for pos, day_index in enumerate(span_idx)}
    rebound_pos = np.array(
        [pos_of[int(i)] for i in rebounds.indices if int(i) in pos_of], dtype=int
    )
    if len(rebound_pos) == 0:
        raise DataError("no rebounds inside the alarm-series span; miss fraction undefined")
    if thresholds is None:
        sweep = sorted(set(float(v) for v in values) | {-math.inf, math.inf})
    else:
        sweep = sorted(float(t) for t in thresholds)
    n = len(values)
    points = []
    for t in sweep:
        mask = _alarm_mask(values, t, duration)
        covered = int(np.count_nonzero(mask[rebound_pos]))
        points.append(ErrorDiagramPoint(
            threshold=t,
            alarm_fraction=float(np.count_nonzero(mask)) / n,
            miss_fraction=1.0 - covered / len(rebound_pos),
        ))
    return points


def skill_summary(points: Sequence[ErrorDiagramPoint]) -> float:
    """Trapezoidal area of (1 - x) - y(x); positive when better than random."""
    if len(points) < 2:
        raise DataError(f"need >= 2 diagram points, got {len(points)}")
    ordered = sorted(points, key=lambda p: p.alarm_fraction)
    x = np.array([p.alarm_fraction for p in ordered])
    y = np.array([p.miss_fraction for p in ordered])
    return float(np.trapezoid((1.0 - x) - y, x))


def save_diagram_csv(points: Sequence[ErrorDiagramPoint], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "alarm_fraction", "miss_fraction"])
        for p in points:
            writer.writerow([repr(p.threshold), repr(p.alarm_fraction), repr(p.miss_fraction)])


def load_diagram_csv(path: str | Path) -> list[ErrorDiagramPoint]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(ErrorDiagramPoint(
                threshold=float(row["threshold"]),
                alarm_fraction=float(row["alarm_fraction"]),
                miss_fraction=float(row["miss_fraction"]),
            ))
    return out


def save_plot_csv(points: Sequence[ErrorDiagramPoint], path: str | Path) -> None:
    """Curve plus the y = 1 - x random-prediction reference, sorted by x."""
    ordered = sorted(points, key=lambda p: p.alarm_fraction)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alarm_fraction", "miss_fraction", "random_miss_fraction"])
        for p in ordered:
            writer.writerow([
                repr(p.alarm_fraction), repr(p.miss_fraction), repr(1.0 - p.alarm_fraction),
            ])
