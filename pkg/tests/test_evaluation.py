import math
from datetime import date

import numpy as np
import pytest

from lpplscan.errors import DataError
from lpplscan.evaluation import (
    ErrorDiagramPoint,
    build_alarm_set,
    error_diagram,
    load_diagram_csv,
    save_diagram_csv,
    skill_summary,
)
from lpplscan.extrema import EventSet, REBOUND
from lpplscan.timeseries import TradingDay, weekday_dates


def ri_series(values, start=date(1980, 1, 1)):
    days = weekday_dates(start, date.fromordinal(start.toordinal() + 2 * len(values) + 4))
    return [
        (TradingDay(date=d, index=i), float(v))
        for i, (d, v) in enumerate(zip(days, values))
    ]


def rebounds_from(ri, positions):
    days = tuple(ri[i][0] for i in sorted(positions))
    return EventSet(kind=REBOUND, days=days, rule=(("radius", 200.0),))


def test_quiet_series_yields_empty_alarm_set():
    ri = ri_series([0.0] * 100)
    assert build_alarm_set(ri, threshold=0.5) == set()


def test_single_crossing_covers_forty_one_days():
    values = [0.0] * 200
    values[80] = 0.9
    ri = ri_series(values)
    alarm = build_alarm_set(ri, threshold=0.5, duration=40)
    assert len(alarm) == 41
    indices = sorted(day.index for day in alarm)
    assert indices == list(range(80, 121))


def test_two_crossings_ten_days_apart_union_to_fifty_one():
    values = [0.0] * 200
    values[80] = values[90] = 0.9
    ri = ri_series(values)
    alarm = build_alarm_set(ri, threshold=0.5, duration=40)
    assert len(alarm) == 51
    assert sorted(day.index for day in alarm) == list(range(80, 131))


def test_alarm_clipped_at_series_end():
    values = [0.0] * 100
    values[95] = 1.0
    alarm = build_alarm_set(ri_series(values), threshold=0.5, duration=40)
    assert sorted(day.index for day in alarm) == list(range(95, 100))


def test_threshold_is_strict():
    values = [0.3] * 50
    assert build_alarm_set(ri_series(values), threshold=0.3) == set()
    assert len(build_alarm_set(ri_series(values), threshold=0.29)) == 50


def test_diagram_contains_exact_endpoints():
    rng = np.random.default_rng(3)
    ri = ri_series(rng.uniform(0, 1, 300))
    rebounds = rebounds_from(ri, [120, 260])
    points = error_diagram(ri, rebounds, duration=40)
    assert (points[0].threshold, points[0].alarm_fraction, points[0].miss_fraction) == \
        (-math.inf, 1.0, 0.0)
    assert (points[-1].threshold, points[-1].alarm_fraction, points[-1].miss_fraction) == \
        (math.inf, 0.0, 1.0)


def test_diagram_monotone_in_threshold():
    rng = np.random.default_rng(41)
    ri = ri_series(rng.uniform(0, 1, 500))
    rebounds = rebounds_from(ri, [100, 250, 400])
    points = error_diagram(ri, rebounds, duration=40)
    x = [p.alarm_fraction for p in points]
    y = [p.miss_fraction for p in points]
    assert all(b <= a + 1e-12 for a, b in zip(x, x[1:]))  # x falls as T rises
    assert all(b >= a - 1e-12 for a, b in zip(y, y[1:]))  # y climbs as T rises


def test_rebound_on_crossing_day_counts_as_predicted():
    values = [0.0] * 120
    values[60] = 0.8
    ri = ri_series(values)
    rebounds = rebounds_from(ri, [60])
    point = error_diagram(ri, rebounds, thresholds=[0.5], duration=40)[0]
    assert point.miss_fraction == 0.0


def test_rebound_outside_any_alarm_is_missed():
    values = [0.0] * 120
    values[60] = 0.8
    ri = ri_series(values)
    rebounds = rebounds_from(ri, [10, 61])
    point = error_diagram(ri, rebounds, thresholds=[0.5], duration=40)[0]
    assert point.miss_fraction == pytest.approx(0.5)  # day 10 missed, day 61 covered


def test_no_rebounds_in_span_is_an_error():
    ri = ri_series([0.1] * 50)
    outside = EventSet(
        kind=REBOUND,
        days=(TradingDay(date=date(2030, 1, 1), index=9999),),
        rule=(("radius", 200.0),),
    )
    with pytest.raises(DataError):
        error_diagram(ri, outside, duration=40)


def test_non_contiguous_span_rejected():
    ri = ri_series([0.1] * 50)
    broken = ri[:10] + ri[20:]
    with pytest.raises(DataError):
        build_alarm_set(broken, threshold=0.05)


def test_skill_zero_on_the_anti_diagonal():
    points = [
        ErrorDiagramPoint(threshold=t, alarm_fraction=x, miss_fraction=1.0 - x)
        for t, x in [(-1, 1.0), (0.3, 0.7), (0.6, 0.4), (2, 0.0)]
    ]
    assert skill_summary(points) == pytest.approx(0.0, abs=1e-15)


def test_skill_half_for_the_ideal_predictor():
    points = [
        ErrorDiagramPoint(threshold=2.0, alarm_fraction=0.0, miss_fraction=1.0),
        ErrorDiagramPoint(threshold=0.5, alarm_fraction=0.0, miss_fraction=0.0),
        ErrorDiagramPoint(threshold=-1.0, alarm_fraction=1.0, miss_fraction=0.0),
    ]
    assert skill_summary(points) == pytest.approx(0.5)


def test_skill_matches_hand_trapezoid_sum():
    # five points; area of (1-x)-y integrated with the trapezoid rule by hand:
    # nodes x: 0, .2, .5, .8, 1; f: 0, .5, .3, .1, 0
    # area = .2*(0+.5)/2 + .3*(.5+.3)/2 + .3*(.3+.1)/2 + .2*(.1+0)/2 = 0.24
    pts = [
        ErrorDiagramPoint(threshold=4, alarm_fraction=0.0, miss_fraction=1.0),
        ErrorDiagramPoint(threshold=3, alarm_fraction=0.2, miss_fraction=0.3),
        ErrorDiagramPoint(threshold=2, alarm_fraction=0.5, miss_fraction=0.2),
        ErrorDiagramPoint(threshold=1, alarm_fraction=0.8, miss_fraction=0.1),
        ErrorDiagramPoint(threshold=0, alarm_fraction=1.0, miss_fraction=0.0),
    ]
    assert skill_summary(pts) == pytest.approx(0.24)


def test_skill_needs_two_points():
    with pytest.raises(DataError):
        skill_summary([ErrorDiagramPoint(threshold=0, alarm_fraction=0, miss_fraction=1)])


def test_point_fractions_validated():
    with pytest.raises(ValueError):
        ErrorDiagramPoint(threshold=0.5, alarm_fraction=1.2, miss_fraction=0.0)


def test_diagram_csv_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    ri = ri_series(rng.uniform(0, 1, 120))
    rebounds = rebounds_from(ri, [50, 90])
    points = error_diagram(ri, rebounds, duration=40)
    path = tmp_path / "diagram.csv"
    save_diagram_csv(points, path)
    assert load_diagram_csv(path) == points
