from datetime import date, timedelta

import numpy as np
import pytest

from lpplscan.errors import ConfigError
from lpplscan.windows import GridConfig, Window, generate_windows


def brute_force_windows(config):
    """Literal double loop over both ladders; the generator must match this."""
    out = []
    span = (config.t20 - config.t10).days
    for a in range(span // config.dt1 + 1):
        t1 = config.t10 + timedelta(days=a * config.dt1)
        for j in range(span // config.dt2 + 1):
            t2 = config.t20 - timedelta(days=j * config.dt2)
            if t2 <= t1:
                continue
            dt = (t2 - t1).days
            if config.dt_min <= dt <= config.dt_max:
                out.append(Window(t1=t1, t2=t2))
    return sorted(out, key=lambda w: (w.t1, w.t2))


def test_window_rejects_reversed_interval():
    with pytest.raises(ConfigError):
        Window(t1=date(2000, 1, 2), t2=date(2000, 1, 2))
    with pytest.raises(ConfigError):
        Window(t1=date(2000, 1, 3), t2=date(2000, 1, 2))


def test_window_length_and_str():
    w = Window(t1=date(2000, 1, 1), t2=date(2000, 4, 10))
    assert w.length_days == 100
    assert str(w) == "2000-01-01,2000-04-10"


def test_grid_config_validation():
    t10, t20 = date(2000, 1, 1), date(2001, 1, 1)
    with pytest.raises(ConfigError):
        GridConfig(t10=t10, t20=t20, dt1=0)
    with pytest.raises(ConfigError):
        GridConfig(t10=t10, t20=t20, dt_min=500, dt_max=400)
    with pytest.raises(ConfigError):
        GridConfig(t10=t20, t20=t10)


def test_short_span_yields_no_windows():
    # span shorter than the minimum window length is legal and empty
    config = GridConfig(
        t10=date(2000, 1, 1), t20=date(2000, 4, 10), dt_min=110, dt_max=1500,
    )
    assert (config.t20 - config.t10).days == 100
    assert generate_windows(config) == []


def test_tiny_grid_hand_enumerated():
    # span 10, steps 5/5, lengths allowed [5, 10]:
    # t1 ladder 0,5; t2 ladder 10,5 -> pairs (0,5) (0,10) (5,10)
    t0 = date(2010, 1, 1)
    config = GridConfig(
        t10=t0, t20=t0 + timedelta(days=10), dt1=5, dt2=5, dt_min=5, dt_max=10,
    )
    expected = [
        Window(t0, t0 + timedelta(days=5)),
        Window(t0, t0 + timedelta(days=10)),
        Window(t0 + timedelta(days=5), t0 + timedelta(days=10)),
    ]
    assert generate_windows(config) == expected


def test_length_bounds_are_inclusive():
    t0 = date(2010, 1, 1)
    config = GridConfig(
        t10=t0, t20=t0 + timedelta(days=400), dt1=50, dt2=50, dt_min=100, dt_max=200,
    )
    lengths = {w.length_days for w in generate_windows(config)}
    assert 100 in lengths and 200 in lengths
    assert all(100 <= n <= 200 for n in lengths)


def test_output_ordering():
    config = GridConfig(
        t10=date(2000, 1, 1), t20=date(2002, 1, 1), dt1=90, dt2=70,
        dt_min=110, dt_max=500,
    )
    windows = generate_windows(config)
    keys = [(w.t1, w.t2) for w in windows]
    assert keys == sorted(keys)


def test_matches_brute_force_on_random_configs():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        t10 = date(1990, 1, 1) + timedelta(days=int(rng.integers(0, 2000)))
        span = int(rng.integers(30, 3000))
        dt_min = int(rng.integers(1, max(2, span)))
        dt_max = dt_min + int(rng.integers(1, 2000))
        config = GridConfig(
            t10=t10,
            t20=t10 + timedelta(days=span),
            dt1=int(rng.integers(1, 120)),
            dt2=int(rng.integers(1, 120)),
            dt_min=dt_min,
            dt_max=dt_max,
        )
        assert generate_windows(config) == brute_force_windows(config)


def test_reference_grid_count_in_band():
    """The multi-decade daily-index grid lands in the documented count band."""
    config = GridConfig(t10=date(1950, 1, 3), t20=date(2009, 6, 3))
    windows = generate_windows(config)
    assert 11_300 <= len(windows) <= 11_750
    assert len(windows) == 11_313  # pinned so convention drift is caught
