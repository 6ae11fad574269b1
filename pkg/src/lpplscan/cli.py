"""Command-line interface.

Subcommands cover every pipeline stage (scan, fit, rebounds, crashes,
train, alarm, error-diagram, synth) plus `run`, which executes the whole
backtest from a flat key=value config file.  Exit codes: 0 success,
2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import date
from pathlib import Path

from . import __version__
from .errors import ConfigError, DataError, NumericalError, StageError
from .evaluation import error_diagram, save_diagram_csv, save_plot_csv, skill_summary
from .extrema import detect_crashes, detect_rebounds, load_event_days, save_events_csv, EventSet
from .lppl import (
    LpplParams,
    SearchConfig,
    fit_window,
    load_fits_csv,
    save_fits_csv,
    scan_windows,
)
from .pattern import (
    alarm_series,
    build_binning,
    features_from_json,
    features_to_json,
    label_fits,
    load_alarm_csv,
    qualify_features,
    save_alarm_csv,
    select_rebound_fits,
)
from .pipeline import RunConfig, run_pipeline
from .synth import SynthSpec, plant_rebound_course, synth_lppl_series
from .timeseries import PriceSeries, load_csv, save_csv
from .windows import GridConfig, Window, generate_windows

log = logging.getLogger(__name__)


def _date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an ISO date: {text!r}") from exc


def _date_or_ordinal(text: str) -> float:
    """Critical times may be given as ISO dates or raw day ordinals."""
    try:
        return float(text)
    except ValueError:
        return float(date.fromisoformat(text).toordinal())


def cmd_scan(args) -> int:
    series = load_csv(args.input)
    grid = GridConfig(
        t10=args.t10 or series.start,
        t20=args.t20 or series.end,
        dt1=args.dt1, dt2=args.dt2, dt_min=args.dt_min, dt_max=args.dt_max,
    )
    windows = generate_windows(grid)
    search = SearchConfig(restarts=args.restarts, seed=args.seed, model=args.model)
    fits, skipped = scan_windows(series, windows, search, workers=args.workers)
    save_fits_csv(fits, args.out)
    print(f"{len(windows)} windows, {len(fits)} fitted, {skipped} skipped -> {args.out}")
    return 0


def cmd_fit(args) -> int:
    series = load_csv(args.input)
    window = Window(t1=args.t1, t2=args.t2)
    search = SearchConfig(restarts=args.restarts, seed=args.seed, model=args.model)
    fit = fit_window(series, window, search)
    p = fit.params
    print(f"window {window.t1.isoformat()}..{window.t2.isoformat()}  n={fit.n_points}")
    print(f"model {args.model}  converged {'yes' if fit.converged else 'no'}  "
          f"restarts {fit.n_restarts_used}")
    print(f"A={p.A:.6g}  B={p.B:.6g}  C={p.C:.6g}  m={p.m:.4f}  "
          f"omega={p.omega:.4f}  phi={p.phi:.4f}")
    print(f"tc={p.tc_date.isoformat()} (ordinal {p.tc:.2f}, {fit.tc_gap_days:.1f} days "
          f"past window end)  rmse={fit.rmse:.3e}")
    if args.out:
        save_fits_csv([fit], args.out)
    return 0


def cmd_rebounds(args) -> int:
    series = load_csv(args.input)
    events = detect_rebounds(series, radius=args.radius)
    save_events_csv(events, args.out)
    print(f"{len(events)} rebounds -> {args.out}")
    return 0


def cmd_crashes(args) -> int:
    series = load_csv(args.input)
    events = detect_crashes(series, drop=args.drop, horizon=args.horizon)
    save_events_csv(events, args.out)
    print(f"{len(events)} crashes -> {args.out}")
    return 0


def _load_rebounds(args, series: PriceSeries) -> EventSet:
    if args.rebounds:
        rows = load_event_days(args.rebounds)
        days = []
        for kind, when, index in rows:
            day = series.day(index)
            if day.date != when:
                raise DataError(
                    f"{args.rebounds}: row ({when.isoformat()}, {index}) does not match "
                    f"the input series"
                )
            days.append(day)
        return EventSet(kind="rebound", days=tuple(days), rule=(("radius", float(args.radius)),))
    return detect_rebounds(series, radius=args.radius)


def cmd_train(args) -> int:
    series = load_csv(args.input)
    fits = select_rebound_fits(load_fits_csv(args.fits))
    learning = [f for f in fits if f.window.t2 < args.split]
    rebounds = _load_rebounds(args, series)
    learning_rebounds = EventSet(
        kind="rebound",
        days=tuple(d for d in rebounds.days if d.date < args.split),
        rule=rebounds.rule,
    )
    labeled = label_fits(learning, learning_rebounds, delta=args.delta)
    binning = build_binning(labeled, bins_per_parameter=args.bins)
    features = qualify_features(
        labeled, binning, args.alpha, args.beta, learning_end=args.split,
    )
    features_to_json(features, args.out)
    print(f"{len(labeled)} learning fits, {len(features.features_I)} Class I features, "
          f"{len(features.features_II)} Class II features -> {args.out}")
    return 0


def cmd_alarm(args) -> int:
    series = load_csv(args.input)
    fits = select_rebound_fits(load_fits_csv(args.fits))
    features = features_from_json(args.features)
    alarm = alarm_series(
        series, fits, features, delta=args.delta,
        start=getattr(args, "from") or series.start,
        end=args.to or series.end,
    )
    save_alarm_csv(alarm, args.out)
    print(f"alarm index on {len(alarm)} days -> {args.out}")
    return 0


def cmd_error_diagram(args) -> int:
    series = load_csv(args.input)
    alarm_rows = load_alarm_csv(args.alarm)
    alarm = [(series.day(series.index_of(when)), ri) for when, ri in alarm_rows]
    rebounds = _load_rebounds(args, series)
    thresholds = None if args.thresholds == "auto" else \
        tuple(float(x) for x in args.thresholds.split(","))
    points = error_diagram(alarm, rebounds, thresholds=thresholds, duration=args.duration)
    save_diagram_csv(points, args.out)
    if args.plot_out:
        save_plot_csv(points, args.plot_out)
    print(f"{len(points)} thresholds, skill {skill_summary(points):+.4f} -> {args.out}")
    return 0


def cmd_synth(args) -> int:
    if args.model == "course":
        kwargs = {"start": args.start} if args.start else {}
        course = plant_rebound_course(
            n_bubbles=args.bubbles, spacing=args.spacing,
            noise_sigma=args.noise, seed=args.seed, radius=args.radius, **kwargs,
        )
        save_csv(course.series, args.out)
        truth = course.truth
    else:
        params = LpplParams(A=args.a, B=args.b, C=args.c, m=args.m,
                            tc=args.tc, omega=args.omega, phi=args.phi)
        spec = SynthSpec(model=args.model, params=params,
                         span=(args.start, args.end),
                         noise_sigma=args.noise, seed=args.seed)
        series, truth = synth_lppl_series(spec)
        save_csv(series, args.out)
    sidecar = Path(str(args.out) + ".truth.json")
    with open(sidecar, "w") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"series -> {args.out}, ground truth -> {sidecar}")
    return 0


def _parse_ab_pairs(text: str) -> tuple[tuple[float, float], ...]:
    pairs = []
    for chunk in text.split(","):
        a, sep, b = chunk.partition(":")
        if not sep:
            raise ConfigError(f"ab_pairs entries are alpha:beta, got {chunk!r}")
        pairs.append((float(a), float(b)))
    return tuple(pairs)


_CONFIG_PARSERS = {
    "input": str,
    "out_dir": str,
    "t10": date.fromisoformat,
    "t20": date.fromisoformat,
    "dt1": int,
    "dt2": int,
    "dt_min": int,
    "dt_max": int,
    "restarts": int,
    "seed": int,
    "radius": int,
    "delta": float,
    "bins": int,
    "ab_pairs": _parse_ab_pairs,
    "split": date.fromisoformat,
    "duration": int,
    "thresholds": lambda s: None if s == "auto" else tuple(float(x) for x in s.split(",")),
    "workers": int,
}


def parse_config_text(text: str) -> dict:
    """Flat `key = value` lines; '#' starts a comment; later keys win."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        if not sep:
            raise ConfigError(f"config line {lineno}: expected key = value, got {line!r}")
        raw[key.strip()] = value.strip()
    parsed = {}
    for key, value in raw.items():
        if key not in _CONFIG_PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            parsed[key] = _CONFIG_PARSERS[key](value)
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"config key {key!r}: cannot parse {value!r}: {exc}") from exc
    return parsed


def cmd_run(args) -> int:
    settings: dict = {}
    if args.config:
        settings.update(parse_config_text(Path(args.config).read_text()))
    for item in args.set or []:
        settings.update(parse_config_text(item))
    if args.input:
        settings["input"] = args.input
    if args.out_dir:
        settings["out_dir"] = args.out_dir
    for required in ("input", "out_dir"):
        if required not in settings:
            raise ConfigError(f"missing required config key {required!r}")
    config = RunConfig(**settings)
    out = run_pipeline(config)
    with open(out / "manifest.json") as fh:
        manifest = json.load(fh)
    sel = manifest["selected"]
    for s in manifest["settings"]:
        marker = " *" if s["tag"] == sel["tag"] else ""
        print(f"alpha={s['alpha']:.2f} beta={s['beta']:.2f}  "
              f"skill in-sample {s['skill_insample']:+.4f}  "
              f"out-of-sample {s['skill_outsample']:+.4f}{marker}")
    print(f"artifacts -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpplscan",
        description="Bubble-window scanning, rebound detection, and alarm backtesting.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="fit every window of the grid")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--t10", type=_date, default=None, help="earliest window start")
    p.add_argument("--t20", type=_date, default=None, help="latest window end")
    p.add_argument("--dt1", type=int, default=50)
    p.add_argument("--dt2", type=int, default=50)
    p.add_argument("--dt-min", type=int, default=110)
    p.add_argument("--dt-max", type=int, default=1500)
    p.add_argument("--restarts", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--model", choices=["lppl", "power_law"], default="lppl")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("fit", help="fit a single window")
    p.add_argument("--input", required=True)
    p.add_argument("--t1", type=_date, required=True)
    p.add_argument("--t2", type=_date, required=True)
    p.add_argument("--restarts", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", choices=["lppl", "power_law"], default="lppl")
    p.add_argument("--out", default=None, help="optional fits CSV for this one window")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("rebounds", help="detect local minima over +/- radius days")
    p.add_argument("--input", required=True)
    p.add_argument("--radius", type=int, default=200)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rebounds)

    p = sub.add_parser("crashes", help="detect peaks followed by fast drops")
    p.add_argument("--input", required=True)
    p.add_argument("--drop", type=float, default=0.15)
    p.add_argument("--horizon", type=int, default=21)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_crashes)

    p = sub.add_parser("train", help="qualify class features from pre-split fits")
    p.add_argument("--input", required=True, help="price series CSV")
    p.add_argument("--fits", required=True, help="fits CSV from scan")
    p.add_argument("--rebounds", default=None, help="events CSV; detected if omitted")
    p.add_argument("--radius", type=int, default=200)
    p.add_argument("--split", type=_date, default=date(1975, 1, 1))
    p.add_argument("--delta", type=float, default=20.0)
    p.add_argument("--bins", type=int, default=3)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("alarm", help="alarm index over a span of days")
    p.add_argument("--input", required=True)
    p.add_argument("--fits", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--from", type=_date, default=None, dest="from")
    p.add_argument("--to", type=_date, default=None)
    p.add_argument("--delta", type=float, default=20.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_alarm)

    p = sub.add_parser("error-diagram", help="miss fraction vs alarm fraction")
    p.add_argument("--input", required=True)
    p.add_argument("--alarm", required=True)
    p.add_argument("--rebounds", default=None)
    p.add_argument("--radius", type=int, default=200)
    p.add_argument("--duration", type=int, default=40)
    p.add_argument("--thresholds", default="auto")
    p.add_argument("--out", required=True)
    p.add_argument("--plot-out", default=None)
    p.set_defaults(func=cmd_error_diagram)

    p = sub.add_parser("synth", help="generate a synthetic series with ground truth")
    p.add_argument("--model", choices=["lppl", "power_law", "course"], default="lppl")
    p.add_argument("--out", required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--a", type=float, default=4.0)
    p.add_argument("--b", type=float, default=0.5)
    p.add_argument("--c", type=float, default=0.1)
    p.add_argument("--m", type=float, default=0.5)
    p.add_argument("--tc", type=_date_or_ordinal, default=None)
    p.add_argument("--omega", type=float, default=8.0)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--start", type=_date, default=None)
    p.add_argument("--end", type=_date, default=None)
    p.add_argument("--bubbles", type=int, default=6)
    p.add_argument("--spacing", type=int, default=500)
    p.add_argument("--radius", type=int, default=200)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="full pipeline from a flat key=value config")
    p.add_argument("--config", default=None)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("--input", default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "synth" and args.model != "course":
        if args.tc is None or args.start is None or args.end is None:
            parser.error("synth lppl/power_law needs --tc, --start, and --end")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        cause = exc.cause
        if isinstance(cause, ConfigError):
            return 2
        if isinstance(cause, DataError):
            return 3
        return 4
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
