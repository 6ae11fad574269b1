"""Acceptance gate: every release-blocking behavior, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line (visible with
``pytest -s``) and then asserts, so the suite doubles as a checklist.
Tolerances are stated inline next to the assertions they guard.
"""

import json
import os
import time
from datetime import date, timedelta

import numpy as np
import pytest

from lpplscan.evaluation import error_diagram, load_diagram_csv, skill_summary
from lpplscan.extrema import EventSet, detect_rebounds
from lpplscan.lppl import FitResult, LpplParams, SearchConfig, fit_window
from lpplscan.pattern import (
    PARAMETERS,
    FeatureSet,
    Trait,
    TraitBinning,
    alarm_index,
    alarm_series,
)
from lpplscan.pipeline import WINDOW_CONVENTION, RunConfig, run_pipeline
from lpplscan.synth import SynthSpec, plant_rebound_course, synth_lppl_series
from lpplscan.timeseries import PriceSeries, TradingDay, save_csv, weekday_dates
from lpplscan.windows import GridConfig, Window, generate_windows


def report(criterion: int, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


# --- 1. reference window grid ----------------------------------------------

def brute_force_grid(t10, t20, dt1, dt2, dt_min, dt_max):
    t1s, t2s = [], []
    k = 0
    while t10 + timedelta(days=k * dt1) <= t20:
        t1s.append(t10 + timedelta(days=k * dt1))
        k += 1
    j = 0
    while t20 - timedelta(days=j * dt2) >= t10:
        t2s.append(t20 - timedelta(days=j * dt2))
        j += 1
    pairs = [(t1, t2) for t1 in t1s for t2 in sorted(t2s)
             if dt_min <= (t2 - t1).days <= dt_max]
    pairs.sort()
    return pairs


def test_criterion_1_reference_window_grid():
    grid = GridConfig(t10=date(1950, 1, 3), t20=date(2009, 6, 3),
                      dt1=50, dt2=50, dt_min=110, dt_max=1500)
    start = time.perf_counter()
    windows = generate_windows(grid)
    elapsed = time.perf_counter() - start

    oracle = brute_force_grid(grid.t10, grid.t20, grid.dt1, grid.dt2,
                              grid.dt_min, grid.dt_max)
    agree = [(w.t1, w.t2) for w in windows] == oracle
    count = len(windows)
    in_band = 11_300 <= count <= 11_750
    convention_recorded = "ladder" in WINDOW_CONVENTION and "dt_min" in WINDOW_CONVENTION
    ok = agree and in_band and elapsed < 1.0 and convention_recorded
    report(1, ok, f"{count} windows (band 11300..11750), "
                  f"brute-force agreement {agree}, {elapsed * 1e3:.0f} ms")


# --- 2. round-trip parameter recovery --------------------------------------

def planted_decline(case: int, noise_sigma: float):
    """One random declining series with its true parameters and full window."""
    rng = np.random.default_rng(10_000 + case)
    start = date(1980, 1, 7)
    end = start + timedelta(days=550)
    tc = end.toordinal() + rng.uniform(15.0, 90.0)
    m = rng.uniform(0.2, 0.8)
    drop = rng.uniform(0.4, 1.0)  # log-price displacement over the window
    u1, u2 = tc - start.toordinal(), tc - end.toordinal()
    b = drop / (u1 ** m - u2 ** m)
    params = LpplParams(
        A=rng.uniform(3.0, 6.0), B=b,
        C=b * rng.uniform(0.15, 0.5) * rng.choice([-1.0, 1.0]),
        m=m, tc=tc, omega=rng.uniform(4.0, 16.0), phi=rng.uniform(0.0, 2 * np.pi),
    )
    spec = SynthSpec(model="lppl", params=params, span=(start, end),
                     noise_sigma=noise_sigma, seed=case)
    series, _ = synth_lppl_series(spec)
    return series, params, Window(t1=start, t2=end)


def test_criterion_2_singularity_recovery():
    start = time.perf_counter()
    ok_clean = 0
    for case in range(50):
        series, true, window = planted_decline(case, noise_sigma=0.0)
        fit = fit_window(series, window, SearchConfig(restarts=12, seed=case))
        p = fit.params
        ok_clean += (abs(p.tc - true.tc) <= 2.0 and abs(p.m - true.m) <= 0.02
                     and abs(p.omega - true.omega) <= 0.2 and fit.rmse <= 1e-6)
    ok_noisy = 0
    for case in range(50):
        series, true, window = planted_decline(case, noise_sigma=0.01)
        fit = fit_window(series, window, SearchConfig(restarts=12, seed=case))
        ok_noisy += abs(fit.params.tc - true.tc) <= 10.0
    elapsed = time.perf_counter() - start

    ok = ok_clean >= 48 and ok_noisy >= 40 and elapsed < 300.0
    report(2, ok, f"noiseless {ok_clean}/50 (need 48) at tc±2d m±0.02 ω±0.2 "
                  f"rmse≤1e-6; σ=0.01 {ok_noisy}/50 (need 40) at tc±10d; "
                  f"{elapsed:.0f}s (limit 300)")


# --- 3. rebound detector vs literal definition -----------------------------

def test_criterion_3_detector_oracle_equivalence():
    days = weekday_dates(date(1950, 1, 2), date(1954, 1, 1))[:1000]
    mismatches = 0
    start = time.perf_counter()
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        prices = 100.0 * np.exp(np.cumsum(rng.normal(0.0, 0.02, 1000)))
        series = PriceSeries(dates=days, prices=prices)
        fast = list(detect_rebounds(series, radius=200).indices)
        slow = [d for d in range(200, 800)
                if prices[d] == prices[d - 200: d + 201].min()]
        mismatches += fast != slow
    elapsed = time.perf_counter() - start
    report(3, mismatches == 0,
           f"{mismatches}/1000 random-walk series disagree with the "
           f"per-day definition ({elapsed:.1f}s)")


# --- 4. error-diagram endpoints and random baseline ------------------------

def test_criterion_4_diagram_endpoints_and_baseline():
    days = weekday_dates(date(1950, 1, 2), date(1958, 1, 1))[:2000]
    tdays = [TradingDay(date=d, index=i) for i, d in enumerate(days)]
    rebounds = EventSet(kind="rebound", days=tuple(tdays[70::80]),
                        rule=(("radius", 200.0),))

    endpoints_exact = True
    for trial in range(5):
        rng = np.random.default_rng(9_000 + trial)
        ri = list(zip(tdays, rng.uniform(0.0, 1.0, 2000)))
        pts = error_diagram(ri, rebounds, duration=40)
        endpoints_exact &= (pts[0].alarm_fraction, pts[0].miss_fraction) == (1.0, 0.0)
        endpoints_exact &= (pts[-1].alarm_fraction, pts[-1].miss_fraction) == (0.0, 1.0)

    grid = [i / 20 for i in range(20)]
    xs = np.zeros((100, len(grid)))
    ys = np.zeros((100, len(grid)))
    for trial in range(100):
        rng = np.random.default_rng(5_000 + trial)
        ri = list(zip(tdays, rng.uniform(0.0, 1.0, 2000)))
        pts = error_diagram(ri, rebounds, thresholds=grid, duration=40)
        xs[trial] = [p.alarm_fraction for p in pts]
        ys[trial] = [p.miss_fraction for p in pts]
    deviation = float(np.abs(ys.mean(0) - (1.0 - xs.mean(0))).max())

    ok = endpoints_exact and deviation < 0.05
    report(4, ok, f"endpoints (1,0)/(0,1) exact on auto sweeps: {endpoints_exact}; "
                  f"uniform-noise mean curve within {deviation:.4f} of y=1-x "
                  f"(limit 0.05)")


# --- 5. alarm-index bounds and arithmetic ----------------------------------

def _random_binning(rng):
    edges = []
    for name in PARAMETERS:
        k = int(rng.integers(0, 3))
        edges.append((name, tuple(sorted(rng.uniform(-5.0, 5.0, k))) if k else ()))
    return TraitBinning(edges=tuple(edges))


def _random_features(rng, binning):
    traits = [Trait(parameter=p, bin=b)
              for p in PARAMETERS for b in range(binning.n_bins(p))]
    picks = rng.permutation(len(traits))
    n1, n2 = int(rng.integers(0, 6)), int(rng.integers(0, 6))
    return FeatureSet(binning=binning,
                      features_I=frozenset(traits[i] for i in picks[:n1]),
                      features_II=frozenset(traits[i] for i in picks[n1:n1 + n2]),
                      alpha=0.5, beta=0.5, freq_I=(), freq_II=(),
                      learning_end=date(1971, 1, 1))


def _random_fit(rng, days):
    i2 = int(rng.integers(60, 480))
    t2 = days[i2]
    return FitResult(
        window=Window(t1=days[i2 - 50], t2=t2),
        params=LpplParams(A=float(rng.uniform(-5, 5)), B=float(rng.uniform(0.01, 3)),
                          C=float(rng.uniform(-1, 1)), m=float(rng.uniform(0.01, 0.99)),
                          tc=t2.toordinal() + float(rng.uniform(-40.0, 120.0)),
                          omega=float(rng.uniform(2.0, 25.0)),
                          phi=float(rng.uniform(0.0, 6.28))),
        rmse=float(rng.uniform(1e-8, 0.3)), n_points=50,
        converged=True, n_restarts_used=1)


def test_criterion_5_alarm_index_structure():
    days = weekday_dates(date(1970, 1, 2), date(1972, 1, 1))[:500]
    series = PriceSeries(dates=days, prices=np.linspace(100.0, 120.0, 500))

    rng = np.random.default_rng(2024)
    checked = 0
    bounded = True
    while checked < 100_000:
        binning = _random_binning(rng)
        features = _random_features(rng, binning)
        fits = [_random_fit(rng, days) for _ in range(int(rng.integers(0, 7)))]
        delta = float(rng.uniform(1.0, 60.0))
        values = [ri for _, ri in alarm_series(series, fits, features, delta=delta)]
        bounded &= all(0.0 <= v <= 1.0 for v in values)
        for i in map(int, rng.integers(0, 500, 3)):
            direct = alarm_index(series.day(i), fits, features, delta=delta)
            bounded &= 0.0 <= direct <= 1.0
            checked += 1
        checked += len(values)

    features = _random_features(np.random.default_rng(7), _random_binning(np.random.default_rng(7)))
    zero_case = alarm_index(days[100], [], features, delta=20.0)

    # three Class I occurrences against one Class II -> 3/4 exactly
    binning = TraitBinning(edges=tuple((name, ()) for name in PARAMETERS))
    three_one = FeatureSet(
        binning=binning,
        features_I=frozenset(Trait(parameter=p, bin=0) for p in ("m", "omega", "B")),
        features_II=frozenset({Trait(parameter="rmse", bin=0)}),
        alpha=0.5, beta=0.5, freq_I=(), freq_II=(), learning_end=date(1971, 1, 1),
    )
    fit = _random_fit(np.random.default_rng(3), days)
    day = date.fromordinal(int(fit.tc))
    ratio = alarm_index(day, [fit], three_one, delta=20.0)

    ok = bounded and checked >= 100_000 and zero_case == 0.0 and ratio == 0.75
    report(5, ok, f"{checked} fuzzed evaluations in [0,1]: {bounded}; "
                  f"no-fit day == {zero_case!r} (want 0.0); "
                  f"3-vs-1 occurrence case == {ratio} (want 0.75)")


# --- 6. end-to-end skill on planted ground truth ---------------------------

def test_criterion_6_planted_course_skill(tmp_path):
    course = plant_rebound_course(n_bubbles=6, spacing=500, noise_sigma=0.005, seed=7)
    input_path = tmp_path / "course.csv"
    save_csv(course.series, input_path)

    config = RunConfig(
        input=str(input_path), out_dir=str(tmp_path / "artifacts"),
        dt1=100, dt2=100, dt_min=110, dt_max=1200,
        restarts=6, seed=0, radius=200, delta=20.0, bins=3,
        split=date(1966, 7, 1), duration=40,
    )
    start = time.perf_counter()
    out_dir = run_pipeline(config)
    elapsed = time.perf_counter() - start

    manifest = json.loads((out_dir / "manifest.json").read_text())
    tag = manifest["selected"]["tag"]
    selected = next(s for s in manifest["settings"] if s["tag"] == tag)
    skill = selected["skill_outsample"]
    points = load_diagram_csv(out_dir / f"diagram_outsample_{tag}.csv")
    fast_drop = any(p.alarm_fraction <= 0.3 and p.miss_fraction <= 0.5
                    for p in points)

    ok = skill > 0.1 and fast_drop
    report(6, ok, f"6 planted rebounds at σ=0.005: selected setting "
                  f"α={selected['alpha']} β={selected['beta']} has out-of-sample "
                  f"skill {skill:.3f} (need >0.1), miss≤0.5 at alarm≤0.3: "
                  f"{fast_drop}; {elapsed:.0f}s")


# --- 7. real-data walkthrough (best effort, opt in) ------------------------

def test_criterion_7_real_sp500_walkthrough(tmp_path):
    path = os.environ.get("LPPLSCAN_SP500_CSV")
    if not path:
        pytest.skip("best-effort real-data check; set LPPLSCAN_SP500_CSV to a "
                    "daily adjusted-close CSV (date,price) to run it")
    config = RunConfig(
        input=path, out_dir=str(tmp_path / "sp500"),
        dt1=200, dt2=200, restarts=4, seed=0,
        split=date(1975, 1, 1),
    )
    out_dir = run_pipeline(config)
    manifest = json.loads((out_dir / "manifest.json").read_text())
    best = max(s["skill_outsample"] for s in manifest["settings"])
    snapshot = manifest["input_sha256"]
    # Not a gating check: the outcome depends on the data snapshot, and the
    # coarsened grid above (200-day steps, 4 restarts) trades fidelity for
    # runtime.  The result and snapshot hash are reported for the record.
    report(7, True, f"best out-of-sample skill {best:+.3f} on snapshot "
                    f"{snapshot[:12]}… (best-effort, non-gating, coarse grid)")
