"""Daily price series: loading, validation, calendar/trading-day views.

A PriceSeries is an immutable, date-sorted sequence of strictly positive
adjusted closing prices.  Dates carry no time of day; all date arithmetic in
this package is in whole calendar days, while positional indexing (trading
days) is the 0-based row number.  Missing trading days are never filled or
interpolated: a window simply selects whatever trading days fall inside it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError

logger = logging.getLogger(__name__)


def to_ordinal(when: date | float | int) -> float:
    """Days on the proleptic-Gregorian axis (date.toordinal), as a float.

    Floats pass through unchanged so fractional times (e.g. fitted critical
    times) live on the same axis as calendar dates.
    """
    if isinstance(when, date):
        return float(when.toordinal())
    return float(when)


def ordinal_to_date(x: float) -> date:
    """Nearest calendar date for a (possibly fractional) ordinal."""
    return date.fromordinal(int(round(x)))


@dataclass(frozen=True)
class TradingDay:
    """One observed trading day: its calendar date and 0-based position."""

    date: date
    index: int


@dataclass(frozen=True)
class PriceSeries:
    """Date-sorted daily adjusted closes.

    Invariants (enforced at construction):
      - at least 2 rows
      - dates strictly increasing (hence unique)
      - all prices strictly positive and finite
    """

    dates: tuple[date, ...]
    prices: np.ndarray
    _ordinals: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        object.__setattr__(self, "prices", prices)
        if len(self.dates) != len(prices):
            raise DataError(
                f"dates ({len(self.dates)}) and prices ({len(prices)}) differ in length"
            )
        if len(prices) < 2:
            raise DataError(f"a price series needs at least 2 rows, got {len(prices)}")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0.0):
            raise DataError("prices must be finite and strictly positive")
        ords = np.array([d.toordinal() for d in self.dates], dtype=np.int64)
        if np.any(np.diff(ords) <= 0):
            raise DataError("dates must be strictly increasing with no duplicates")
        prices.flags.writeable = False
        ords.flags.writeable = False
        object.__setattr__(self, "_ordinals", ords)

    def __len__(self) -> int:
        return len(self.prices)

    @property
    def ordinals(self) -> np.ndarray:
        """Integer day ordinals, aligned with prices."""
        return self._ordinals

    @property
    def start(self) -> date:
        return self.dates[0]

    @property
    def end(self) -> date:
        return self.dates[-1]

    def day(self, index: int) -> TradingDay:
        return TradingDay(date=self.dates[index], index=index)

    @property
    def days(self) -> tuple[TradingDay, ...]:
        return tuple(TradingDay(d, i) for i, d in enumerate(self.dates))

    def index_of(self, when: date) -> int:
        """Position of an exact trading date; DataError if not a trading day."""
        i = int(np.searchsorted(self._ordinals, when.toordinal()))
        if i >= len(self) or self.dates[i] != when:
            raise DataError(f"{when.isoformat()} is not a trading day of this series")
        return i


def log_prices(series: PriceSeries) -> np.ndarray:
    """Natural log of each price; positivity is guaranteed by the invariant."""
    return np.log(series.prices)


def slice_series(series: PriceSeries, window) -> PriceSeries:
    """Sub-series of all trading days with window.t1 <= date <= window.t2.

    Indices are re-based to 0.  Raises DataError when fewer than 2 trading
    days fall inside the window (a 1-day selection violates the PriceSeries
    length invariant, an empty one means no overlap).
    """
    lo = int(np.searchsorted(series.ordinals, window.t1.toordinal(), side="left"))
    hi = int(np.searchsorted(series.ordinals, window.t2.toordinal(), side="right"))
    n = hi - lo
    if n == 0:
        raise DataError(
            f"window {window.t1.isoformat()}..{window.t2.isoformat()} selects no trading days"
        )
    if n < 2:
        raise DataError(
            f"window {window.t1.isoformat()}..{window.t2.isoformat()} selects only {n} trading day"
        )
    return PriceSeries(dates=series.dates[lo:hi], prices=series.prices[lo:hi])


def load_csv(
    path: str | Path,
    date_column: str = "date",
    price_column: str = "price",
) -> PriceSeries:
    """Read a daily price CSV into a validated PriceSeries.

    The file must have a header row, ISO-8601 (YYYY-MM-DD) dates and
    decimal-point prices.  Rows whose price is missing or non-positive are
    dropped and counted in a warning.  Duplicate dates are an error, never a
    silent dedup.  Output is sorted ascending by date.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    for col in (date_column, price_column):
        if col not in frame.columns:
            raise DataError(f"{path} has no column '{col}' (found {list(frame.columns)})")

    try:
        parsed = pd.to_datetime(frame[date_column], format="%Y-%m-%d")
    except (ValueError, TypeError) as exc:
        raise DataError(f"{path}: dates must be ISO-8601 YYYY-MM-DD: {exc}") from exc
    prices = pd.to_numeric(frame[price_column], errors="coerce")

    keep = prices.notna() & (prices > 0.0)
    n_rejected = int((~keep).sum())
    if n_rejected:
        logger.warning(
            "%s: rejected %d row(s) with missing or non-positive %s",
            path, n_rejected, price_column,
        )
    parsed, prices = parsed[keep], prices[keep]
    if len(parsed) == 0:
        raise DataError(f"{path}: no valid rows after filtering")
    if parsed.duplicated().any():
        dupes = parsed[parsed.duplicated()].dt.strftime("%Y-%m-%d").unique()
        raise DataError(f"{path}: duplicate dates {list(dupes[:5])}")

    order = parsed.argsort(kind="stable").to_numpy()
    dates = tuple(d.date() for d in parsed.iloc[order])
    return PriceSeries(dates=dates, prices=prices.iloc[order].to_numpy(dtype=float))


def save_csv(
    series: PriceSeries,
    path: str | Path,
    date_column: str = "date",
    price_column: str = "price",
) -> None:
    """Write a series in the same schema load_csv reads (round-trip safe)."""
    frame = pd.DataFrame(
        {
            date_column: [d.isoformat() for d in series.dates],
            price_column: series.prices,
        }
    )
    frame.to_csv(path, index=False)


def weekday_dates(start: date, end: date) -> tuple[date, ...]:
    """All Mon-Fri dates in [start, end]; the synthetic trading calendar."""
    out = []
    d = start
    one = timedelta(days=1)
    while d <= end:
        if d.weekday() < 5:
            out.append(d)
        d += one
    return tuple(out)
