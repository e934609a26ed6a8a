import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np
import pandas as pd
from scipy import signal

from src.dynamics import TimeSeries
from src.errors import TelegraphError

logger = logging.getLogger(__name__)

DEFAULT_HI = 0.7
DEFAULT_LO = 0.3
PLATEAU_HIGH = 0.8
PLATEAU_LOW = 0.2
BAND = (0.25, 0.75)


class Regime(str, Enum):
    SLOW_RABI = 'SlowRabi'
    FASTER_RABI = 'FasterRabi'
    TELEGRAPH = 'Telegraph'
    BONDING = 'Bonding'


class Direction(str, Enum):
    ALPHA_TO_BETA = 'alpha_to_beta'
    BETA_TO_ALPHA = 'beta_to_alpha'


@dataclass(frozen=True)
class SwitchEvent:
    t: float
    direction: Direction


@dataclass(frozen=True)
class SwitchEvents:
    """Side changes found by the hysteresis detector"""
    events: List[SwitchEvent]
    hi: float
    lo: float
    dwells: np.ndarray = field(init=False)

    def __post_init__(self):
        times = np.array([e.t for e in self.events], dtype=float)
        object.__setattr__(self, 'dwells', np.diff(times))

    def __len__(self):
        return len(self.events)

    def to_frame(self) -> pd.DataFrame:
        dwell = np.concatenate([[math.nan], self.dwells]) if self.events else np.array([])
        return pd.DataFrame({
            't_seconds': [e.t for e in self.events],
            'direction': [e.direction.value for e in self.events],
            'dwell_seconds': dwell,
        })


@dataclass(frozen=True)
class DwellStatistics:
    mean: float
    stddev: float
    count: int


@dataclass(frozen=True)
class SwitchingSummary:
    n_events: int
    mean_dwell: float
    stddev_dwell: float
    plateau_fraction: float
    band_fraction: float
    dominant_period: float = math.nan


def classify_regime(V: float, dV: float) -> Regime:
    """Dynamics regime from the coupling asymmetry; ties go to the larger-dV regime"""
    if not V > 0:
        raise TelegraphError(f"V must be positive, got {V!r}")
    if not 0 <= dV <= V:
        raise TelegraphError(f"dV={dV!r} outside [0, V={V!r}]")
    if 6 * dV >= 5 * V:
        return Regime.SLOW_RABI
    if 2 * dV >= V:
        return Regime.FASTER_RABI
    if 6 * dV >= V:
        return Regime.TELEGRAPH
    return Regime.BONDING


def _crossing_time(t0: float, t1: float, v0: float, v1: float, level: float) -> float:
    if v1 == v0:
        return t1
    return t0 + (level - v0) * (t1 - t0) / (v1 - v0)


def detect_switches(ts: Optional[TimeSeries] = None, hi: float = DEFAULT_HI, lo: float = DEFAULT_LO,
                    times=None, values=None) -> SwitchEvents:
    """Hysteresis switch detection on occ_alpha.

    A switch to beta is recorded when the signal, last seen above ``hi``, falls
    below ``lo`` (and the reverse). The event time is the linearly interpolated
    crossing of the threshold that completes the switch.
    """
    if ts is not None:
        times, values = ts.times, ts.occ_alpha
    if times is None or values is None:
        raise TelegraphError("Need a time series or explicit times and values")
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape:
        raise TelegraphError("times and values must have the same length")
    if times.shape[0] < 2:
        raise TelegraphError(f"Need at least 2 samples, got {times.shape[0]}")
    if not 0 < lo < hi < 1:
        raise TelegraphError(f"Thresholds must satisfy 0 < lo < hi < 1, got lo={lo!r}, hi={hi!r}")

    side = None
    events = []
    for i, v in enumerate(values):
        if side is None:
            if v >= hi:
                side = 'alpha'
            elif v <= lo:
                side = 'beta'
            continue
        if side == 'alpha' and v < lo:
            t = _crossing_time(times[i - 1], times[i], values[i - 1], v, lo)
            events.append(SwitchEvent(float(t), Direction.ALPHA_TO_BETA))
            side = 'beta'
        elif side == 'beta' and v > hi:
            t = _crossing_time(times[i - 1], times[i], values[i - 1], v, hi)
            events.append(SwitchEvent(float(t), Direction.BETA_TO_ALPHA))
            side = 'alpha'

    logger.debug(f"Detected {len(events)} switches (lo={lo}, hi={hi})")
    return SwitchEvents(events, hi, lo)


def dwell_statistics(ev: SwitchEvents) -> DwellStatistics:
    if ev.dwells.size == 0:
        raise TelegraphError("No dwell times: fewer than two switch events")
    return DwellStatistics(float(np.mean(ev.dwells)), float(np.std(ev.dwells)), int(ev.dwells.size))


def dominant_period(ts: TimeSeries) -> float:
    """Period of the strongest non-constant component of occ_alpha; inf for a flat series"""
    if len(ts) < 2:
        raise TelegraphError("Need at least two samples for a periodogram")
    occ = np.asarray(ts.occ_alpha, dtype=float)
    if np.ptp(occ) == 0:
        return math.inf
    step = float(np.mean(np.diff(ts.times)))
    freqs, power = signal.periodogram(occ, fs=1.0 / step, detrend='constant')
    peak = 1 + int(np.argmax(power[1:]))
    return float(1.0 / freqs[peak])


def summarize_switching(ts: TimeSeries, hi: float = DEFAULT_HI, lo: float = DEFAULT_LO) -> SwitchingSummary:
    ev = detect_switches(ts, hi=hi, lo=lo)
    try:
        stats = dwell_statistics(ev)
        mean, stddev = stats.mean, stats.stddev
    except TelegraphError:
        mean, stddev = math.nan, math.nan
    occ = ts.occ_alpha
    plateau = float(np.mean((occ > PLATEAU_HIGH) | (occ < PLATEAU_LOW)))
    band = float(np.mean((occ >= BAND[0]) & (occ <= BAND[1])))
    return SwitchingSummary(len(ev), mean, stddev, plateau, band, dominant_period(ts))


def square_wave_partial_sum(x, n_terms: int):
    """sin x + sin 3x / 3 + ... with n_terms odd harmonics"""
    if n_terms < 1:
        raise TelegraphError(f"n_terms must be at least 1, got {n_terms}")
    x = np.asarray(x, dtype=float)
    harmonics = 2 * np.arange(n_terms) + 1
    result = np.sum(np.sin(np.multiply.outer(x, harmonics)) / harmonics, axis=-1)
    return float(result) if result.ndim == 0 else result


def square_wave_signal(times, period: float, n_terms: int = 200) -> np.ndarray:
    """Partial-sum square wave mapped onto [0, 1], high during the first half period"""
    if not period > 0:
        raise TelegraphError(f"period must be positive, got {period!r}")
    x = 2 * math.pi * np.asarray(times, dtype=float) / period
    return 0.5 + (2 / math.pi) * np.asarray(square_wave_partial_sum(x, n_terms))
