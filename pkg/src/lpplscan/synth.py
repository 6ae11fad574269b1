"""Synthetic series with known ground truth.

Three generators: the closed-form finite-time-singularity trajectory,
single log-periodic (or pure power-law) price series with seeded gaussian
log-noise, and a multi-bubble "course" of planted negative bubbles whose
trough days are returned as ground truth for end-to-end detector and
pipeline tests.  Synthetic trading calendars are weekdays only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta
from typing import NamedTuple

import numpy as np

from .errors import ConfigError
from .lppl import LpplParams, eval_lppl
from .timeseries import PriceSeries, TradingDay, to_ordinal

MODELS = ("lppl", "power_law", "singularity_ode")


def derived_tc(x0: float, k: float, m: float) -> float:
    """Blow-up time of dx/dt = k*x**m starting from x0, for m > 1, k > 0."""
    if m <= 1.0:
        raise ConfigError(f"finite-time singularity needs m > 1, got {m}")
    if x0 <= 0.0 or k <= 0.0:
        raise ConfigError("x0 and k must be positive")
    return x0 ** (1.0 - m) / ((m - 1.0) * k)


def singularity_trajectory(
    x0: float,
    k: float,
    m: float,
    t_grid,
    tc: float | None = None,
) -> np.ndarray:
    """x(t) = x0 * (1 - t/tc)**(1/(1-m)) on the grid, diverging as t -> tc.

    When tc is omitted it is derived from (x0, k, m) so the trajectory is
    the exact solution of dx/dt = k*x**m; an explicit tc overrides that
    (k is then unused).  All grid points must satisfy 0 <= t < tc.
    """
    if m <= 1.0:
        raise ConfigError(f"finite-time singularity needs m > 1, got {m}")
    if tc is None:
        tc = derived_tc(x0, k, m)
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < 0.0) or np.any(t >= tc):
        raise ValueError(f"grid must lie in [0, tc); tc = {tc}")
    return x0 * (1.0 - t / tc) ** (1.0 / (1.0 - m))


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic price series."""

    model: str
    params: LpplParams
    span: tuple[date, date]
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.model not in ("lppl", "power_law"):
            raise ConfigError(
                f"synth_lppl_series handles models 'lppl' and 'power_law', got '{self.model}'"
            )
        if self.noise_sigma < 0.0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.span[0] >= self.span[1]:
            raise ConfigError(f"empty span {self.span}")
        if to_ordinal(self.span[1]) >= self.params.tc:
            raise ConfigError(
                f"span must end strictly before tc = {self.params.tc_date.isoformat()}"
            )
        if self.model == "power_law" and self.params.C != 0.0:
            raise ConfigError("power_law model requires C == 0")


def _weekdays_between(start: date, end: date) -> list[date]:
    out = []
    d = start
    one = timedelta(days=1)
    while d <= end:
        if d.weekday() < 5:
            out.append(d)
        d += one
    return out


def _weekdays_from(start: date, count: int) -> list[date]:
    out = []
    d = start
    one = timedelta(days=1)
    while len(out) < count:
        if d.weekday() < 5:
            out.append(d)
        d += one
    return out


def synth_lppl_series(spec: SynthSpec) -> tuple[PriceSeries, dict]:
    """Seeded weekday series with exp(model + noise) prices, plus its truth record."""
    days = _weekdays_between(spec.span[0], spec.span[1])
    if len(days) < 2:
        raise ConfigError(f"span {spec.span} holds fewer than two weekdays")
    t = np.array([d.toordinal() for d in days], dtype=float)
    logp = eval_lppl(spec.params, t)
    if spec.noise_sigma > 0.0:
        rng = np.random.default_rng(spec.seed)
        logp = logp + rng.normal(0.0, spec.noise_sigma, size=len(t))
    series = PriceSeries(dates=tuple(days), prices=np.exp(logp))
    p = spec.params
    truth = {
        "model": spec.model,
        "A": p.A, "B": p.B, "C": p.C, "m": p.m,
        "tc": p.tc, "tc_date": p.tc_date.isoformat(),
        "omega": p.omega, "phi": p.phi,
        "noise_sigma": spec.noise_sigma, "seed": spec.seed,
        "span": [spec.span[0].isoformat(), spec.span[1].isoformat()],
    }
    return series, truth


class PlantedCourse(NamedTuple):
    series: PriceSeries
    rebound_days: tuple[TradingDay, ...]
    truth: dict


def plant_rebound_course(
    n_bubbles: int,
    spacing: int = 500,
    noise_sigma: float = 0.005,
    seed: int = 0,
    radius: int = 200,
    start: date = date(1960, 1, 2),
) -> PlantedCourse:
    """Concatenated negative bubbles with known trough days.

    Each bubble occupies `spacing` trading days: an accelerating
    log-periodic decline into a trough followed by a linear recovery.
    The returned rebound days are the exact minima of the noiseless
    construction, so with zero noise a +/- radius local-minimum detector
    must recover them exactly.  `spacing` must exceed 2 * radius or the
    troughs could fall inside each other's detection windows.
    """
    if n_bubbles < 1:
        raise ConfigError(f"need at least one bubble, got {n_bubbles}")
    if spacing <= 2 * radius:
        raise ConfigError(
            f"spacing {spacing} must exceed 2 * radius = {2 * radius} trading days"
        )
    if noise_sigma < 0.0:
        raise ConfigError(f"noise_sigma must be >= 0, got {noise_sigma}")

    rng = np.random.default_rng(seed)
    n_days = n_bubbles * spacing + radius + 5
    days = _weekdays_from(start, n_days)
    t = np.array([d.toordinal() for d in days], dtype=float)

    down = max(int(round(0.65 * spacing)), radius + 5)
    logp = np.empty(n_days)
    base = 4.0
    trough_idx: list[int] = []
    segments: list[dict] = []
    for s in range(n_bubbles):
        i0 = s * spacing
        i_trough = i0 + down
        i1 = min((s + 1) * spacing, n_days)
        depth = rng.uniform(0.5, 0.9)
        gap = rng.uniform(5.0, 20.0)
        m = rng.uniform(0.3, 0.7)
        omega = rng.uniform(5.0, 12.0)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        tc = t[i_trough] + gap
        span_f = (tc - t[i0]) ** m - gap**m
        b = depth / span_f
        c = rng.uniform(0.1, 0.25) * b
        a = base - depth - b * gap**m
        params = LpplParams(A=a, B=b, C=c, m=m, tc=tc, omega=omega, phi=phi)
        decline = eval_lppl(params, t[i0:i_trough + 1])
        logp[i0:i_trough + 1] = decline
        j = int(np.argmin(decline))
        trough_idx.append(i0 + j)

        rise = depth * rng.uniform(0.7, 1.0)
        n_up = i1 - i_trough - 1
        slope = rise / max(n_up, 1)
        if n_up > 0:
            logp[i_trough + 1:i1] = decline[-1] + slope * np.arange(1, n_up + 1)
        base = logp[i1 - 1] if n_up > 0 else decline[-1]
        if s == n_bubbles - 1 and i1 < n_days:
            tail = n_days - i1
            logp[i1:] = base + slope * np.arange(1, tail + 1)
        segments.append({
            "A": a, "B": b, "C": c, "m": m, "tc": tc, "omega": omega, "phi": phi,
            "trough_date": days[i0 + j].isoformat(),
        })

    if noise_sigma > 0.0:
        logp = logp + rng.normal(0.0, noise_sigma, size=n_days)
    series = PriceSeries(dates=tuple(days), prices=np.exp(logp))
    rebound_days = tuple(TradingDay(date=days[i], index=i) for i in trough_idx)
    truth = {
        "n_bubbles": n_bubbles, "spacing": spacing, "radius": radius,
        "noise_sigma": noise_sigma, "seed": seed,
        "rebound_dates": [d.date.isoformat() for d in rebound_days],
        "segments": segments,
    }
    return PlantedCourse(series=series, rebound_days=rebound_days, truth=truth)
