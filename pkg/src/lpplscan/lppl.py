"""Power-law and log-periodic model evaluation and window calibration.

Model in log-price, with u = tc - t measured in calendar days:

    power law:     A + B * u**m
    log-periodic:  A + B * u**m + C * u**m * cos(omega * ln(u) - phi)

B < 0 with 0 < m < 1 gives the accelerating run-up of a positive bubble,
B > 0 the mirrored accelerating decline of a negative bubble.

Calibration profiles the linear coefficients out exactly and runs a
seeded multistart Nelder-Mead over the remaining nonlinear parameters.
Internally the phase is absorbed into the linear system through
C*cos(w*ln u - phi) = c1*cos(w*ln u) + c2*sin(w*ln u), so the
derivative-free search only sees (m, tc, omega); the public
solve_linear_params keeps the 3-coefficient (A, B, C) form for a fixed
phase.  Every fit is a pure function of (series, window, search config),
reproducible bit for bit.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, replace
from datetime import date
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .errors import ConfigError, DataError, DegenerateDesignError, NumericalError
from .timeseries import PriceSeries, log_prices, ordinal_to_date, slice_series, to_ordinal
from .windows import Window

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PowerLawParams:
    """Pure power-law parameters; tc is a (possibly fractional) day ordinal."""

    A: float
    B: float
    m: float
    tc: float

    def __post_init__(self):
        if not 0.0 < self.m < 1.0:
            raise ValueError(f"exponent m must lie in (0, 1), got {self.m}")
        if not np.isfinite([self.A, self.B, self.tc]).all():
            raise ValueError("parameters must be finite")

    @property
    def tc_date(self) -> date:
        return ordinal_to_date(self.tc)


@dataclass(frozen=True)
class LpplParams:
    """Log-periodic parameters; C == 0 encodes a pure power-law fit.

    phi is normalized into [0, 2*pi) at construction.  The omega search
    range is owned by SearchConfig; here omega only has to be positive
    whenever the oscillation is present.  |C| < |B| is a model-validity
    condition checked by the fitter (an out-of-range best fit is retained
    with converged=False), not a construction error.
    """

    A: float
    B: float
    C: float
    m: float
    tc: float
    omega: float
    phi: float

    def __post_init__(self):
        if not 0.0 < self.m < 1.0:
            raise ValueError(f"exponent m must lie in (0, 1), got {self.m}")
        if not np.isfinite([self.A, self.B, self.C, self.tc, self.omega, self.phi]).all():
            raise ValueError("parameters must be finite")
        if self.C != 0.0 and self.omega <= 0.0:
            raise ValueError(f"omega must be positive when C != 0, got {self.omega}")
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)

    @property
    def tc_date(self) -> date:
        return ordinal_to_date(self.tc)

    @property
    def trend(self) -> PowerLawParams:
        """The power-law backbone with the oscillation dropped."""
        return PowerLawParams(A=self.A, B=self.B, m=self.m, tc=self.tc)

    def oscillation_subdominant(self) -> bool:
        return abs(self.C) < abs(self.B)


def _time_to_tc(params, t) -> np.ndarray:
    t_ord = to_ordinal(t) if isinstance(t, (date, float, int)) else np.asarray(t, dtype=float)
    u = params.tc - np.asarray(t_ord, dtype=float)
    if np.any(u <= 0.0):
        raise ValueError("evaluation time must precede the critical time tc")
    return u


def eval_power_law(params: PowerLawParams | LpplParams, t) -> float | np.ndarray:
    """Log-price A + B*(tc - t)**m; t a date, ordinal, or array of ordinals."""
    u = _time_to_tc(params, t)
    out = params.A + params.B * u**params.m
    return float(out) if out.ndim == 0 else out


def eval_lppl(params: LpplParams, t) -> float | np.ndarray:
    """Log-price with the log-periodic decoration; reduces to the power law at C=0."""
    u = _time_to_tc(params, t)
    f = u**params.m
    out = params.A + params.B * f + params.C * f * np.cos(params.omega * np.log(u) - params.phi)
    return float(out) if out.ndim == 0 else out


class LinearSolution(NamedTuple):
    A: float
    B: float
    C: float
    sse: float


def solve_linear_params(
    nonlinear: tuple[float, float, float, float],
    t: np.ndarray,
    y: np.ndarray,
) -> LinearSolution:
    """Ordinary least squares for (A, B, C) given fixed (m, tc, omega, phi).

    t are day ordinals, y the log prices.  Needs at least 3 more
    observations than the 3 linear coefficients.  A rank-deficient design
    (e.g. (tc - t)**m effectively constant over the window) raises
    DegenerateDesignError.
    """
    m, tc, omega, phi = nonlinear
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("t and y must be 1-d arrays of equal length")
    if len(t) < 6:
        raise DataError(f"need >= 6 observations for a 3-coefficient solve, got {len(t)}")
    u = tc - t
    if np.any(u <= 0.0):
        raise ValueError("all observations must precede tc")
    f = u**m
    g = f * np.cos(omega * np.log(u) - phi)
    design = np.column_stack([np.ones_like(f), f, g])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 3:
        raise DegenerateDesignError(
            f"design matrix rank {rank} < 3 for (m={m:.4g}, tc={tc:.6g}, omega={omega:.4g})"
        )
    resid = y - design @ coef
    return LinearSolution(A=float(coef[0]), B=float(coef[1]), C=float(coef[2]),
                          sse=float(resid @ resid))


def _profile_linear4(t: np.ndarray, y: np.ndarray, m: float, tc: float, omega: float):
    """(A, B, c1, c2, sse) with the phase absorbed; None if rank deficient."""
    u = tc - t
    if u[-1] <= 0.0:
        return None
    f = u**m
    wlog = omega * np.log(u)
    design = np.column_stack([np.ones_like(f), f, f * np.cos(wlog), f * np.sin(wlog)])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 4:
        return None
    resid = y - design @ coef
    return coef, float(resid @ resid)


def _profile_linear2(t: np.ndarray, y: np.ndarray, m: float, tc: float):
    """(A, B, sse) for the pure power law; None if rank deficient."""
    u = tc - t
    if u[-1] <= 0.0:
        return None
    f = u**m
    design = np.column_stack([np.ones_like(f), f])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 2:
        return None
    resid = y - design @ coef
    return coef, float(resid @ resid)


@dataclass(frozen=True)
class SearchConfig:
    """Multistart search settings for fit_window.

    Starts come from a scrambled Sobol sequence over the nonlinear bounds;
    the per-window RNG is derived from (seed, window), so a scan is
    reproducible regardless of evaluation order or worker count.  tc is
    searched in (t2, t2 + tc_window_frac * dt]; fits looking further past
    the window are unreliable.
    """

    restarts: int = 12
    seed: int = 0
    model: str = "lppl"  # "lppl" or "power_law"
    m_bounds: tuple[float, float] = (1e-3, 0.999)
    omega_bounds: tuple[float, float] = (2.0, 25.0)
    tc_gap_min: float = 0.01
    tc_window_frac: float = 0.5
    n_min: int = 30
    xatol: float = 1e-8
    fatol: float = 1e-14
    max_iter: int = 2500

    def __post_init__(self):
        if self.model not in ("lppl", "power_law"):
            raise ConfigError(f"unknown model '{self.model}'")
        if self.restarts < 1:
            raise ConfigError("need at least one restart")
        if not 0.0 < self.m_bounds[0] < self.m_bounds[1] < 1.0:
            raise ConfigError(f"m bounds must lie inside (0, 1), got {self.m_bounds}")
        if not 0.0 < self.omega_bounds[0] < self.omega_bounds[1]:
            raise ConfigError(f"bad omega bounds {self.omega_bounds}")
        if self.tc_gap_min <= 0.0 or self.tc_window_frac <= 0.0:
            raise ConfigError("tc search range must be positive")
        if self.n_min < 8:
            raise ConfigError("n_min below 8 leaves no residual degrees of freedom")


@dataclass(frozen=True)
class FitResult:
    """One calibrated window: parameters plus residual diagnostics."""

    window: Window
    params: LpplParams
    rmse: float
    n_points: int
    converged: bool
    n_restarts_used: int

    @property
    def tc(self) -> float:
        return self.params.tc

    @property
    def tc_gap_days(self) -> float:
        """Days the fitted tc extends past the window end."""
        return self.params.tc - to_ordinal(self.window.t2)

    @property
    def dt_days(self) -> int:
        return self.window.length_days

    def c_over_b(self) -> float:
        if self.params.B == 0.0:
            return math.inf if self.params.C > 0 else (-math.inf if self.params.C < 0 else 0.0)
        return self.params.C / self.params.B


def _window_rng(seed: int, window: Window) -> np.random.Generator:
    key = (window.t1.toordinal(), window.t2.toordinal())
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _sobol_starts(rng: np.random.Generator, lo: np.ndarray, hi: np.ndarray, n: int) -> np.ndarray:
    sampler = qmc.Sobol(d=len(lo), scramble=True, seed=rng)
    raw = sampler.random_base2(max(1, math.ceil(math.log2(n))))
    return qmc.scale(raw[:n], lo, hi)


def fit_window(series: PriceSeries, window: Window, search: SearchConfig) -> FitResult:
    """Best multistart fit of the window's log prices.

    Each restart runs bounded Nelder-Mead from one Sobol start, with the
    linear coefficients profiled out at every objective evaluation; the
    winner (lowest SSE among restarts that converged and produced a
    non-degenerate design) gets one extra polishing descent.  Raises
    DataError when the window holds fewer than n_min points and
    NumericalError when no restart yields a usable solution.
    """
    sub = slice_series(series, window)
    if len(sub) < search.n_min:
        raise DataError(
            f"window {window} has {len(sub)} points, below the minimum {search.n_min}"
        )
    t = sub.ordinals.astype(float)
    y = log_prices(sub)
    t2 = t[-1]
    dt = t2 - t[0]

    lppl_model = search.model == "lppl"
    lo = np.array(
        [search.m_bounds[0], t2 + search.tc_gap_min]
        + ([search.omega_bounds[0]] if lppl_model else [])
    )
    hi = np.array(
        [search.m_bounds[1], t2 + search.tc_window_frac * dt]
        + ([search.omega_bounds[1]] if lppl_model else [])
    )
    if hi[1] <= lo[1]:
        raise ConfigError("tc search interval is empty; increase tc_window_frac")

    if lppl_model:
        def objective(x):
            out = _profile_linear4(t, y, x[0], x[1], x[2])
            return math.inf if out is None else out[1]
    else:
        def objective(x):
            out = _profile_linear2(t, y, x[0], x[1])
            return math.inf if out is None else out[1]

    rng = _window_rng(search.seed, window)
    starts = _sobol_starts(rng, lo, hi, search.restarts)
    options = dict(
        xatol=search.xatol, fatol=search.fatol,
        maxiter=search.max_iter, maxfev=search.max_iter,
    )
    bounds = list(zip(lo, hi))

    best = None
    best_converged = False
    for x0 in starts:
        res = minimize(objective, x0, method="Nelder-Mead", bounds=bounds, options=options)
        if not np.isfinite(res.fun):
            continue
        # converged restarts outrank non-converged ones, then lowest SSE wins
        if best is None or (res.success, -res.fun) > (best_converged, -best.fun):
            best, best_converged = res, bool(res.success)
    if best is None:
        raise NumericalError(f"all {search.restarts} restarts degenerate for window {window}")

    polish = minimize(
        objective, best.x, method="Nelder-Mead", bounds=bounds,
        options=dict(xatol=search.xatol * 1e-2, fatol=search.fatol * 1e-2,
                     maxiter=search.max_iter, maxfev=search.max_iter),
    )
    if np.isfinite(polish.fun) and polish.fun <= best.fun:
        best = polish
        best_converged = best_converged or bool(polish.success)

    if lppl_model:
        m_hat, tc_hat, omega_hat = (float(v) for v in best.x)
        coef, sse = _profile_linear4(t, y, m_hat, tc_hat, omega_hat)
        a, b, c1, c2 = (float(v) for v in coef)
        c = math.hypot(c1, c2)
        phi = math.atan2(c2, c1) % TWO_PI
        params = LpplParams(A=a, B=b, C=c, m=m_hat, tc=tc_hat, omega=omega_hat, phi=phi)
        valid = params.oscillation_subdominant()
    else:
        m_hat, tc_hat = (float(v) for v in best.x)
        coef, sse = _profile_linear2(t, y, m_hat, tc_hat)
        params = LpplParams(A=float(coef[0]), B=float(coef[1]), C=0.0,
                            m=m_hat, tc=tc_hat, omega=0.0, phi=0.0)
        valid = True

    return FitResult(
        window=window,
        params=params,
        rmse=math.sqrt(sse / len(t)),
        n_points=len(t),
        converged=best_converged and valid,
        n_restarts_used=search.restarts,
    )


class BubbleSign(enum.Enum):
    POSITIVE_BUBBLE = "positive_bubble"
    NEGATIVE_BUBBLE = "negative_bubble"
    INDETERMINATE = "indeterminate"


def classify_bubble_sign(fit: FitResult, eps: float = 0.0) -> BubbleSign:
    """Sign test on the power-law amplitude.

    B < -eps is an accelerating run-up (positive bubble), B > +eps an
    accelerating decline (negative bubble, ends in a rebound).
    """
    if not fit.converged:
        raise ValueError("bubble sign is only defined for converged fits")
    if fit.params.B < -eps:
        return BubbleSign.POSITIVE_BUBBLE
    if fit.params.B > eps:
        return BubbleSign.NEGATIVE_BUBBLE
    return BubbleSign.INDETERMINATE


@dataclass(frozen=True)
class TcBand:
    """Empirical quantile interval of critical times across a set of fits."""

    lo_level: float
    hi_level: float
    lo: float
    hi: float

    @property
    def lo_date(self) -> date:
        return ordinal_to_date(self.lo)

    @property
    def hi_date(self) -> date:
        return ordinal_to_date(self.hi)


def aggregate_tc_quantiles(
    fits: Sequence[FitResult],
    levels: Sequence[tuple[float, float]] = ((0.2, 0.8), (0.05, 0.95)),
) -> list[TcBand]:
    """Quantile bands of tc over the converged fits, linear interpolation."""
    tcs = np.array([f.tc for f in fits if f.converged], dtype=float)
    if len(tcs) == 0:
        raise DataError("no converged fits to aggregate")
    bands = []
    for lo_level, hi_level in levels:
        if not 0.0 <= lo_level < hi_level <= 1.0:
            raise ConfigError(f"bad quantile pair ({lo_level}, {hi_level})")
        lo, hi = np.quantile(tcs, [lo_level, hi_level])
        bands.append(TcBand(lo_level=lo_level, hi_level=hi_level, lo=float(lo), hi=float(hi)))
    return bands


_FIT_COLUMNS = [
    "t1", "t2", "A", "B", "C", "m", "tc", "omega", "phi",
    "rmse", "n_points", "converged", "n_restarts_used",
]


def save_fits_csv(fits: Sequence[FitResult], path: str | Path) -> None:
    """Write fits as CSV; floats use repr so the file round-trips exactly."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_FIT_COLUMNS)
        for f in fits:
            p = f.params
            writer.writerow([
                f.window.t1.isoformat(), f.window.t2.isoformat(),
                repr(p.A), repr(p.B), repr(p.C), repr(p.m), repr(p.tc),
                repr(p.omega), repr(p.phi),
                repr(f.rmse), f.n_points, str(f.converged).lower(), f.n_restarts_used,
            ])


def load_fits_csv(path: str | Path) -> list[FitResult]:
    fits = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(_FIT_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise DataError(f"{path}: fit table is missing columns {sorted(missing)}")
        for row in reader:
            window = Window(t1=date.fromisoformat(row["t1"]), t2=date.fromisoformat(row["t2"]))
            params = LpplParams(
                A=float(row["A"]), B=float(row["B"]), C=float(row["C"]),
                m=float(row["m"]), tc=float(row["tc"]),
                omega=float(row["omega"]), phi=float(row["phi"]),
            )
            fits.append(FitResult(
                window=window, params=params, rmse=float(row["rmse"]),
                n_points=int(row["n_points"]), converged=row["converged"] == "true",
                n_restarts_used=int(row["n_restarts_used"]),
            ))
    return fits


def scan_windows(
    series: PriceSeries,
    window_list: Sequence[Window],
    search: SearchConfig,
    workers: int = 1,
) -> tuple[list[FitResult], int]:
    """Fit every window that overlaps the series with enough points.

    Returns (fits, n_skipped).  Windows that fail their preconditions
    (too little data, degenerate restarts) are skipped and counted; the
    result order follows window_list regardless of worker count.
    """
    if workers <= 1:
        outcomes = [_fit_or_none(series, w, search) for w in window_list]
    else:
        from concurrent.futures import ProcessPoolExecutor
        from functools import partial
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(
                partial(_fit_or_none, series, search=search), window_list, chunksize=16,
            ))
    fits = [o for o in outcomes if o is not None]
    return fits, len(outcomes) - len(fits)


def _fit_or_none(series: PriceSeries, window: Window, search: SearchConfig):
    try:
        return fit_window(series, window, search)
    except (DataError, NumericalError):
        return None
