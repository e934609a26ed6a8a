import math

import numpy as np
import pytest

from src.dynamics import TimeSeries, rabi_period, run_time_series, telegraph_time
from src.errors import TelegraphError
from src.telegraph import (
    Direction, Regime, SwitchEvent, SwitchEvents, classify_regime, detect_switches, dominant_period, dwell_statistics,
    square_wave_partial_sum, square_wave_signal, summarize_switching,
)


def _square_wave(scale=1.0):
    times = np.arange(0.0, 1001.0)
    return times * scale, square_wave_signal(times, 100.0)


@pytest.mark.parametrize('dV, regime', [
    (0.045, Regime.SLOW_RABI),
    (0.018, Regime.TELEGRAPH),
    (0.005, Regime.BONDING),
])
def test_table_examples(dV, regime):
    assert classify_regime(0.05, dV) is regime


@pytest.mark.parametrize('dV, regime', [
    (6.0, Regime.SLOW_RABI),
    (5.0, Regime.SLOW_RABI),
    (4.9, Regime.FASTER_RABI),
    (3.0, Regime.FASTER_RABI),
    (2.9, Regime.TELEGRAPH),
    (1.0, Regime.TELEGRAPH),
    (0.9, Regime.BONDING),
    (0.0, Regime.BONDING),
])
def test_boundaries_belong_to_larger_asymmetry(dV, regime):
    assert classify_regime(6.0, dV) is regime


def test_regime_names():
    assert [r.value for r in Regime] == ['SlowRabi', 'FasterRabi', 'Telegraph', 'Bonding']


def test_classify_rejects_out_of_range():
    with pytest.raises(TelegraphError):
        classify_regime(0.05, 0.06)
    with pytest.raises(TelegraphError):
        classify_regime(0.05, -0.01)
    with pytest.raises(TelegraphError):
        classify_regime(0.0, 0.0)


def test_square_wave_switches_every_half_period():
    times, values = _square_wave()
    ev = detect_switches(times=times, values=values)
    assert len(ev) == 19
    assert ev.events[0].direction is Direction.ALPHA_TO_BETA
    assert np.allclose(ev.dwells, 50.0, atol=1.0)


def test_directions_alternate():
    times, values = _square_wave()
    directions = [e.direction for e in detect_switches(times=times, values=values).events]
    assert all(a is not b for a, b in zip(directions, directions[1:]))


def test_detection_invariant_under_time_rescaling():
    times, values = _square_wave()
    base = detect_switches(times=times, values=values)
    scaled = detect_switches(times=3.0 * times, values=values)
    assert len(scaled) == len(base)
    assert np.allclose(scaled.dwells, 3.0 * base.dwells)


def test_constant_series_has_no_events():
    ev = detect_switches(times=np.arange(10.0), values=np.ones(10))
    assert len(ev) == 0
    assert ev.dwells.size == 0


def test_failed_attempt_is_not_a_switch():
    values = np.array([1.0, 0.9, 0.5, 0.35, 0.6, 0.95, 1.0])
    assert len(detect_switches(times=np.arange(7.0), values=values)) == 0


def test_crossing_time_is_interpolated():
    ev = detect_switches(times=np.array([0.0, 1.0, 2.0]), values=np.array([1.0, 0.8, 0.0]))
    assert len(ev) == 1
    assert ev.events[0].t == pytest.approx(1.625)


def test_invalid_detector_input():
    with pytest.raises(TelegraphError):
        detect_switches(times=np.array([0.0]), values=np.array([1.0]))
    with pytest.raises(TelegraphError):
        detect_switches(times=np.arange(3.0), values=np.ones(3), hi=0.3, lo=0.7)
    with pytest.raises(TelegraphError):
        detect_switches()


def test_events_frame():
    times, values = _square_wave()
    frame = detect_switches(times=times, values=values).to_frame()
    assert list(frame.columns) == ['t_seconds', 'direction', 'dwell_seconds']
    assert math.isnan(frame['dwell_seconds'][0])
    assert set(frame['direction']) == {'alpha_to_beta', 'beta_to_alpha'}


def test_dwell_statistics():
    ev = SwitchEvents([SwitchEvent(0.0, Direction.ALPHA_TO_BETA), SwitchEvent(50.0, Direction.BETA_TO_ALPHA),
                       SwitchEvent(100.0, Direction.ALPHA_TO_BETA)], 0.7, 0.3)
    stats = dwell_statistics(ev)
    assert (stats.mean, stats.stddev, stats.count) == (50.0, 0.0, 2)

    single = dwell_statistics(SwitchEvents([SwitchEvent(0.0, Direction.ALPHA_TO_BETA),
                                            SwitchEvent(100.0, Direction.BETA_TO_ALPHA)], 0.7, 0.3))
    assert (single.mean, single.stddev, single.count) == (100.0, 0.0, 1)

    with pytest.raises(TelegraphError):
        dwell_statistics(SwitchEvents([], 0.7, 0.3))


def test_partial_sum_values():
    assert square_wave_partial_sum(0.0, 7) == 0.0
    assert square_wave_partial_sum(math.pi / 2, 2000) == pytest.approx(math.pi / 4, abs=1e-3)
    with pytest.raises(TelegraphError):
        square_wave_partial_sum(1.0, 0)


def test_partial_sum_flat_away_from_jumps():
    upper = np.linspace(0.1, math.pi - 0.1, 500)
    lower = upper + math.pi
    assert np.all(np.abs(square_wave_partial_sum(upper, 200) - math.pi / 4) < 0.02)
    assert np.all(np.abs(square_wave_partial_sum(lower, 200) + math.pi / 4) < 0.02)


def test_summary_of_square_wave():
    times, values = _square_wave()
    ts = TimeSeries(times, values, 1.0 - values, True)
    summary = summarize_switching(ts)
    assert summary.n_events == 19
    assert summary.mean_dwell == pytest.approx(50.0, abs=1.0)
    assert summary.plateau_fraction > 0.9
    assert summary.dominant_period == pytest.approx(100.0, rel=0.01)


def test_dominant_period_of_sine():
    times = np.arange(1000.0)
    values = 0.5 + 0.3 * np.sin(2 * np.pi * times / 50.0)
    assert dominant_period(TimeSeries(times, values, 1.0 - values, True)) == pytest.approx(50.0)


def test_dominant_period_of_flat_series():
    times = np.arange(10.0)
    assert dominant_period(TimeSeries(times, np.ones(10), np.zeros(10), True)) == math.inf


@pytest.mark.slow
def test_bonding_example_switches_only_at_recurrences(example3, system3):
    ts = run_time_series(example3, 8000.0, 4000, True, system3.es)
    recurrence = telegraph_time(example3)
    events = detect_switches(ts)
    assert len(events) == 2
    for event in events.events:
        multiple = event.t / recurrence
        assert round(multiple) >= 2
        assert abs(multiple - round(multiple)) < 0.05
    assert events.events[0].t > 1000 * rabi_period(example3)


@pytest.mark.slow
def test_telegraph_example_hovers_between_sides(example2, system2):
    summary = summarize_switching(run_time_series(example2, 8000.0, 4000, True, system2.es))
    assert summary.n_events <= 1
    assert summary.plateau_fraction < 0.05
    assert summary.band_fraction > 0.95


@pytest.mark.slow
def test_slow_rabi_example_oscillates_slowly(example1, system1):
    ts = run_time_series(example1, 8000.0, 4000, True, system1.es)
    assert dominant_period(ts) > 10 * rabi_period(example1)
