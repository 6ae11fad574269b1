"""End-to-end backtest: scan, label, train, alarm, and score in one run.

The run is split at a learning cutoff: fits from windows ending before
the split — labeled against rebounds realized before the split — train
the feature sets; the alarm index after the split is therefore fully out
of sample.  Error diagrams are written for both periods and for every
(alpha, beta) qualification in the sweep, with the pair scoring best in
sample flagged in the manifest.  All randomness flows from the single
seed in the config, and reruns of the same config produce byte-identical
artifacts.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, fields
from datetime import date
from pathlib import Path

from . import __version__
from .errors import ConfigError, DataError, LpplscanError, StageError
from .evaluation import error_diagram, save_diagram_csv, save_plot_csv, skill_summary
from .extrema import EventSet, REBOUND, detect_rebounds, save_events_csv
from .lppl import SearchConfig, save_fits_csv, scan_windows
from .pattern import (
    Label,
    alarm_series,
    build_binning,
    features_to_json,
    label_fits,
    qualify_features,
    save_alarm_csv,
    select_rebound_fits,
)
from .timeseries import load_csv
from .windows import GridConfig, generate_windows

log = logging.getLogger(__name__)

WINDOW_CONVENTION = (
    "t1 ladder ascends from t10 in dt1-day steps; t2 ladder descends from t20 "
    "in dt2-day steps; both ladders include their anchors; a window is kept "
    "when dt_min <= t2 - t1 <= dt_max calendar days"
)


@dataclass(frozen=True)
class RunConfig:
    """Flat pipeline configuration; field names double as config-file keys."""

    input: str
    out_dir: str
    t10: date | None = None  # default: series start
    t20: date | None = None  # default: series end
    dt1: int = 50
    dt2: int = 50
    dt_min: int = 110
    dt_max: int = 1500
    restarts: int = 12
    seed: int = 0
    radius: int = 200
    delta: float = 20.0
    bins: int = 3
    ab_pairs: tuple[tuple[float, float], ...] = ((0.3, 0.3), (0.35, 0.3), (0.5, 0.3))
    split: date = date(1975, 1, 1)
    duration: int = 40
    thresholds: tuple[float, ...] | None = None  # None sweeps all distinct RI values
    workers: int = 1

    def __post_init__(self):
        if not self.ab_pairs:
            raise ConfigError("need at least one (alpha, beta) pair")
        for a, b in self.ab_pairs:
            if not 0.0 < a < 1.0 or not 0.0 < b < 1.0:
                raise ConfigError(f"alpha/beta must lie in (0, 1), got ({a}, {b})")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, date):
                v = v.isoformat()
            elif f.name == "ab_pairs":
                v = [list(p) for p in v]
            elif f.name == "thresholds" and v is not None:
                v = list(v)
            out[f.name] = v
        return out

    def config_hash(self) -> str:
        doc = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(doc.encode()).hexdigest()


def _ab_tag(alpha: float, beta: float) -> str:
    return f"a{round(alpha * 100):02d}_b{round(beta * 100):02d}"


def _stage(name: str):
    """Context manager tagging any library error with the failing stage."""
    class _Ctx:
        def __enter__(self):
            log.info("stage %s", name)
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, LpplscanError) and \
                    not isinstance(exc, StageError):
                raise StageError(name, exc) from exc
            return False
    return _Ctx()


def run_pipeline(config: RunConfig) -> Path:
    """Execute every stage and return the artifact directory.

    Writes fits.csv, rebounds.csv, labels.csv, and per-(alpha, beta)
    feature/alarm/diagram files plus manifest.json.  The input series
    must extend beyond the split date on both sides.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    with _stage("load"):
        series = load_csv(config.input)
        if not series.start < config.split <= series.end:
            raise DataError(
                f"split {config.split.isoformat()} must fall inside the series span "
                f"{series.start.isoformat()}..{series.end.isoformat()}"
            )
        input_sha = hashlib.sha256(Path(config.input).read_bytes()).hexdigest()

    with _stage("windows"):
        grid = GridConfig(
            t10=config.t10 or series.start,
            t20=config.t20 or series.end,
            dt1=config.dt1, dt2=config.dt2,
            dt_min=config.dt_min, dt_max=config.dt_max,
        )
        windows = generate_windows(grid)
        if not windows:
            raise DataError("window grid is empty; widen the span or loosen the bounds")

    with _stage("scan"):
        search = SearchConfig(restarts=config.restarts, seed=config.seed)
        fits, n_skipped = scan_windows(series, windows, search, workers=config.workers)
        save_fits_csv(fits, out_dir / "fits.csv")
        usable = select_rebound_fits(fits)
        if not usable:
            raise DataError("no converged negative-bubble fits; nothing to learn from")

    with _stage("rebounds"):
        rebounds = detect_rebounds(series, radius=config.radius)
        save_events_csv(rebounds, out_dir / "rebounds.csv")

    with _stage("label"):
        learning_fits = [f for f in usable if f.window.t2 < config.split]
        if not learning_fits:
            raise DataError("no usable fits end before the split; nothing to learn from")
        learning_rebounds = EventSet(
            kind=REBOUND,
            days=tuple(d for d in rebounds.days if d.date < config.split),
            rule=rebounds.rule,
        )
        labeled = label_fits(learning_fits, learning_rebounds, delta=config.delta)
        _save_labels(labeled, out_dir / "labels.csv")

    with _stage("binning"):
        binning = build_binning(labeled, bins_per_parameter=config.bins)

    is_end = max(d for d in series.dates if d < config.split)
    oos_start = min(d for d in series.dates if d >= config.split)
    settings = []
    for alpha, beta in config.ab_pairs:
        tag = _ab_tag(alpha, beta)
        with _stage(f"train[{tag}]"):
            features = qualify_features(
                labeled, binning, alpha, beta, learning_end=config.split,
            )
            features_to_json(features, out_dir / f"features_{tag}.json")
        with _stage(f"alarm[{tag}]"):
            alarm_is = alarm_series(
                series, learning_fits, features, delta=config.delta,
                start=series.start, end=is_end,
            )
            alarm_oos = alarm_series(
                series, usable, features, delta=config.delta,
                start=oos_start, end=series.end,
            )
            save_alarm_csv(alarm_is, out_dir / f"alarm_insample_{tag}.csv")
            save_alarm_csv(alarm_oos, out_dir / f"alarm_outsample_{tag}.csv")
        with _stage(f"evaluate[{tag}]"):
            diagram_is = error_diagram(
                alarm_is, rebounds, thresholds=config.thresholds, duration=config.duration,
            )
            diagram_oos = error_diagram(
                alarm_oos, rebounds, thresholds=config.thresholds, duration=config.duration,
            )
            save_diagram_csv(diagram_is, out_dir / f"diagram_insample_{tag}.csv")
            save_diagram_csv(diagram_oos, out_dir / f"diagram_outsample_{tag}.csv")
            save_plot_csv(diagram_oos, out_dir / f"diagram_outsample_{tag}_plot.csv")
            settings.append({
                "alpha": alpha, "beta": beta, "tag": tag,
                "n_features_I": len(features.features_I),
                "n_features_II": len(features.features_II),
                "skill_insample": skill_summary(diagram_is),
                "skill_outsample": skill_summary(diagram_oos),
            })

    selected = max(settings, key=lambda s: s["skill_insample"])
    n_class_i = sum(1 for lf in labeled if lf.label is Label.CLASS_I)
    manifest = {
        "package": "lpplscan",
        "version": __version__,
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "input_sha256": input_sha,
        "series": {
            "start": series.start.isoformat(),
            "end": series.end.isoformat(),
            "n_days": len(series),
        },
        "windows": {
            "count": len(windows),
            "convention": WINDOW_CONVENTION,
        },
        "scan": {
            "n_fits": len(fits),
            "n_skipped": n_skipped,
            "n_usable": len(usable),
            "n_learning": len(learning_fits),
        },
        "rebounds": {
            "count": len(rebounds),
            "count_before_split": len(learning_rebounds),
        },
        "labels": {
            "n_class_I": n_class_i,
            "n_class_II": len(labeled) - n_class_i,
        },
        "settings": settings,
        "selected": {
            "alpha": selected["alpha"],
            "beta": selected["beta"],
            "tag": selected["tag"],
            "by": "in-sample skill",
        },
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_dir


def _save_labels(labeled, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t1", "t2", "label", "nearest_rebound_distance"])
        for lf in labeled:
            writer.writerow([
                lf.fit.window.t1.isoformat(), lf.fit.window.t2.isoformat(),
                lf.label.value, repr(lf.nearest_rebound_distance),
            ])
