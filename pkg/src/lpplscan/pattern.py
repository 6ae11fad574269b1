"""Trait learning and the rebound alarm index.

Fits whose critical time lands within a proximity of an actual rebound
form Class I, the rest Class II.  Seven per-fit quantities (m, omega, B,
C/B, rmse, window length, critical-time gap) are discretized into bins
from pooled learning-set quantiles; a (parameter, bin) pair is a trait.
Traits occurring in more than `alpha` of one class and less than `beta`
of the other qualify as features of that class.  The alarm index of a
day is nu_I / (nu_I + nu_II), counting qualified-feature occurrences
over every fit whose critical time falls near that day, and 0 when no
fit is near.

Learning and scoring are split in time: feature sets record the end of
their learning period, and building one from fits whose windows end at
or after a requested split date is rejected, which keeps any alarm
evaluated past the split strictly out of sample.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .extrema import EventSet
from .lppl import FitResult
from .timeseries import PriceSeries, TradingDay

log = logging.getLogger(__name__)

PARAMETERS = ("m", "omega", "B", "C_over_B", "rmse", "dt", "tc_gap")


class Label(enum.Enum):
    CLASS_I = "I"
    CLASS_II = "II"


@dataclass(frozen=True)
class LabeledFit:
    fit: FitResult
    label: Label
    nearest_rebound_distance: float  # calendar days, inf when no rebound exists


class Trait(NamedTuple):
    parameter: str
    bin: int


def fit_values(fit: FitResult) -> dict[str, float]:
    """The seven binned quantities of one fit."""
    p = fit.params
    return {
        "m": p.m,
        "omega": p.omega,
        "B": p.B,
        "C_over_B": fit.c_over_b(),
        "rmse": fit.rmse,
        "dt": float(fit.dt_days),
        "tc_gap": fit.tc_gap_days,
    }


@dataclass(frozen=True)
class TraitBinning:
    """Per-parameter bin edges; open outer bins cover the whole line.

    A value lands in bin i when edges[i-1] <= value < edges[i]; a
    parameter with no edges (constant learning column) has the single
    bin 0.
    """

    edges: tuple[tuple[str, tuple[float, ...]], ...]

    def __post_init__(self):
        names = [n for n, _ in self.edges]
        if names != list(PARAMETERS):
            raise ValueError(f"binning must cover {PARAMETERS} in order, got {names}")
        for name, e in self.edges:
            if any(b <= a for a, b in zip(e, e[1:])):
                raise ValueError(f"bin edges for {name} must be strictly increasing: {e}")

    def edges_for(self, parameter: str) -> tuple[float, ...]:
        for name, e in self.edges:
            if name == parameter:
                return e
        raise KeyError(parameter)

    def n_bins(self, parameter: str) -> int:
        return len(self.edges_for(parameter)) + 1

    def bin_of(self, parameter: str, value: float) -> int:
        return int(np.searchsorted(self.edges_for(parameter), value, side="right"))

    def traits_of(self, fit: FitResult) -> tuple[Trait, ...]:
        values = fit_values(fit)
        return tuple(Trait(p, self.bin_of(p, values[p])) for p in PARAMETERS)


def label_fits(
    fits: Sequence[FitResult],
    rebounds: EventSet,
    delta: float = 20.0,
) -> list[LabeledFit]:
    """Class I when the fitted critical time is within delta calendar days
    of some rebound, Class II otherwise."""
    if delta < 0:
        raise ConfigError(f"proximity delta must be >= 0, got {delta}")
    bad = sum(1 for f in fits if not f.converged)
    if bad:
        raise DataError(f"{bad} non-converged fits passed to labeling; filter them first")
    rebound_ords = np.array([d.date.toordinal() for d in rebounds.days], dtype=float)
    if len(rebound_ords) == 0:
        log.warning("no rebounds to label against; every fit becomes Class II")
    out = []
    for f in fits:
        if len(rebound_ords) == 0:
            dist = np.inf
        else:
            dist = float(np.min(np.abs(rebound_ords - f.tc)))
        label = Label.CLASS_I if dist <= delta else Label.CLASS_II
        out.append(LabeledFit(fit=f, label=label, nearest_rebound_distance=dist))
    return out


def select_rebound_fits(fits: Sequence[FitResult]) -> list[FitResult]:
    """Converged negative-bubble fits (B > 0), the inputs rebound prediction uses."""
    return [f for f in fits if f.converged and f.params.B > 0.0]


def build_binning(learning_fits: Sequence[LabeledFit], bins_per_parameter: int = 3) -> TraitBinning:
    """Edges at the k/bins quantiles of the pooled learning values.

    Duplicate quantiles collapse, so a constant column degenerates to a
    single all-covering bin (with a warning) rather than failing.
    """
    if len(learning_fits) < 10:
        raise DataError(f"need >= 10 learning fits to bin, got {len(learning_fits)}")
    if bins_per_parameter < 2:
        raise ConfigError(f"need >= 2 bins per parameter, got {bins_per_parameter}")
    columns = {p: [] for p in PARAMETERS}
    for lf in learning_fits:
        for p, v in fit_values(lf.fit).items():
            columns[p].append(v)
    q = np.arange(1, bins_per_parameter) / bins_per_parameter
    edges = []
    for p in PARAMETERS:
        values = np.array(columns[p], dtype=float)
        finite = values[np.isfinite(values)]
        if len(finite) == 0 or finite.min() == finite.max():
            log.warning("parameter %s is constant over the learning set; single bin", p)
            edges.append((p, ()))
            continue
        e = np.unique(np.quantile(finite, q))
        if len(e) < bins_per_parameter - 1:
            log.warning(
                "parameter %s has tied quantiles; %d bins instead of %d",
                p, len(e) + 1, bins_per_parameter,
            )
        edges.append((p, tuple(float(x) for x in e)))
    return TraitBinning(edges=tuple(edges))


@dataclass(frozen=True)
class FeatureSet:
    """Qualified traits of each class, with the binning and thresholds used."""

    binning: TraitBinning
    features_I: frozenset[Trait]
    features_II: frozenset[Trait]
    alpha: float
    beta: float
    freq_I: tuple[tuple[Trait, float], ...]
    freq_II: tuple[tuple[Trait, float], ...]
    learning_end: date

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0 or not 0.0 < self.beta < 1.0:
            raise ConfigError(
                f"alpha and beta must lie in (0, 1), got {self.alpha}, {self.beta}"
            )

    def frequency(self, trait: Trait, label: Label) -> float:
        table = self.freq_I if label is Label.CLASS_I else self.freq_II
        for t, f in table:
            if t == trait:
                return f
        return 0.0


def qualify_features(
    labeled: Sequence[LabeledFit],
    binning: TraitBinning,
    alpha: float,
    beta: float,
    learning_end: date | None = None,
) -> FeatureSet:
    """Occurrence-thresholded trait selection.

    A trait is a Class I feature when its occurrence rate among Class I
    fits exceeds alpha and its rate among Class II fits is below beta;
    the Class II rule is symmetric.  Both classes must be non-empty.
    When `learning_end` is given, every labeled fit's window must end
    before it — passing later fits is rejected to protect out-of-sample
    use of the resulting feature set.
    """
    class_I = [lf for lf in labeled if lf.label is Label.CLASS_I]
    class_II = [lf for lf in labeled if lf.label is Label.CLASS_II]
    if not class_I or not class_II:
        raise DataError(
            f"both classes must be represented; got {len(class_I)} Class I "
            f"and {len(class_II)} Class II fits"
        )
    if learning_end is not None:
        late = sum(1 for lf in labeled if lf.fit.window.t2 >= learning_end)
        if late:
            raise ConfigError(
                f"{late} fits end on or after the learning cutoff {learning_end.isoformat()}"
            )
    else:
        learning_end = max(lf.fit.window.t2 for lf in labeled)

    def rates(group: list[LabeledFit]) -> dict[Trait, float]:
        counts: dict[Trait, int] = {}
        for lf in group:
            for trait in binning.traits_of(lf.fit):
                counts[trait] = counts.get(trait, 0) + 1
        return {t: c / len(group) for t, c in counts.items()}

    rates_I = rates(class_I)
    rates_II = rates(class_II)
    all_traits = sorted(set(rates_I) | set(rates_II))
    feats_I = frozenset(
        t for t in all_traits if rates_I.get(t, 0.0) > alpha and rates_II.get(t, 0.0) < beta
    )
    feats_II = frozenset(
        t for t in all_traits if rates_II.get(t, 0.0) > alpha and rates_I.get(t, 0.0) < beta
    )
    return FeatureSet(
        binning=binning,
        features_I=feats_I,
        features_II=feats_II,
        alpha=alpha,
        beta=beta,
        freq_I=tuple((t, rates_I.get(t, 0.0)) for t in all_traits),
        freq_II=tuple((t, rates_II.get(t, 0.0)) for t in all_traits),
        learning_end=learning_end,
    )


def feature_counts(fit: FitResult, features: FeatureSet) -> tuple[int, int]:
    """(Class I, Class II) qualified-feature occurrences among the fit's traits."""
    traits = features.binning.traits_of(fit)
    return (
        sum(1 for t in traits if t in features.features_I),
        sum(1 for t in traits if t in features.features_II),
    )


def alarm_index(
    day: TradingDay | date,
    fits: Sequence[FitResult],
    features: FeatureSet,
    delta: float = 20.0,
) -> float:
    """nu_I / (nu_I + nu_II) over fits with |tc - day| <= delta; 0 when none."""
    when = day.date if isinstance(day, TradingDay) else day
    target = float(when.toordinal())
    nu_i = nu_ii = 0
    for f in fits:
        if abs(f.tc - target) <= delta:
            ci, cii = feature_counts(f, features)
            nu_i += ci
            nu_ii += cii
    total = nu_i + nu_ii
    return nu_i / total if total > 0 else 0.0


def alarm_series(
    series: PriceSeries,
    fits: Sequence[FitResult],
    features: FeatureSet,
    delta: float = 20.0,
    start: date | None = None,
    end: date | None = None,
) -> list[tuple[TradingDay, float]]:
    """Alarm index on every trading day of [start, end] (series bounds by default).

    Per-fit feature counts are accumulated into prefix sums over
    tc-sorted fits, so each day is a pair of binary searches.
    """
    start = start or series.start
    end = end or series.end
    if start < series.start or end > series.end:
        raise DataError(
            f"span {start.isoformat()}..{end.isoformat()} reaches outside the series"
        )
    tcs = np.array([f.tc for f in fits], dtype=float)
    order = np.argsort(tcs, kind="stable")
    tcs = tcs[order]
    counts = np.zeros((len(fits) + 1, 2), dtype=float)
    for row, idx in enumerate(order):
        ci, cii = feature_counts(fits[idx], features)
        counts[row + 1] = counts[row] + (ci, cii)

    out = []
    lo_ord = start.toordinal()
    hi_ord = end.toordinal()
    for i in range(len(series)):
        day = series.day(i)
        o = day.date.toordinal()
        if o < lo_ord or o > hi_ord:
            continue
        a = np.searchsorted(tcs, o - delta, side="left")
        b = np.searchsorted(tcs, o + delta, side="right")
        nu_i, nu_ii = counts[b] - counts[a]
        total = nu_i + nu_ii
        out.append((day, float(nu_i / total) if total > 0 else 0.0))
    return out


def features_to_json(features: FeatureSet, path: str | Path) -> None:
    freq_i = {f"{t.parameter}:{t.bin}": v for t, v in features.freq_I}
    freq_ii = {f"{t.parameter}:{t.bin}": v for t, v in features.freq_II}
    doc = {
        "alpha": features.alpha,
        "beta": features.beta,
        "learning_end": features.learning_end.isoformat(),
        "binning": {name: list(edges) for name, edges in features.binning.edges},
        "traits": [
            {
                "parameter": t.parameter,
                "bin": t.bin,
                "freq_I": freq_i.get(f"{t.parameter}:{t.bin}", 0.0),
                "freq_II": freq_ii.get(f"{t.parameter}:{t.bin}", 0.0),
                "feature_I": t in features.features_I,
                "feature_II": t in features.features_II,
            }
            for t in sorted({tr for tr, _ in features.freq_I} | {tr for tr, _ in features.freq_II})
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def features_from_json(path: str | Path) -> FeatureSet:
    with open(path) as fh:
        doc = json.load(fh)
    binning = TraitBinning(edges=tuple(
        (name, tuple(doc["binning"][name])) for name in PARAMETERS
    ))
    feats_i = frozenset(
        Trait(row["parameter"], row["bin"]) for row in doc["traits"] if row["feature_I"]
    )
    feats_ii = frozenset(
        Trait(row["parameter"], row["bin"]) for row in doc["traits"] if row["feature_II"]
    )
    freq_i = tuple(
        (Trait(row["parameter"], row["bin"]), row["freq_I"]) for row in doc["traits"]
    )
    freq_ii = tuple(
        (Trait(row["parameter"], row["bin"]), row["freq_II"]) for row in doc["traits"]
    )
    return FeatureSet(
        binning=binning,
        features_I=feats_i,
        features_II=feats_ii,
        alpha=doc["alpha"],
        beta=doc["beta"],
        freq_I=freq_i,
        freq_II=freq_ii,
        learning_end=date.fromisoformat(doc["learning_end"]),
    )


def save_alarm_csv(alarm: Sequence[tuple[TradingDay, float]], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "ri"])
        for day, ri in alarm:
            writer.writerow([day.date.isoformat(), repr(ri)])


def load_alarm_csv(path: str | Path) -> list[tuple[date, float]]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append((date.fromisoformat(row["date"]), float(row["ri"])))
    return out
