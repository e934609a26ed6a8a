import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import pandas as pd

from src.config.config import RunConfig, build_run_config
from src.dynamics import TimeSeries, rabi_period, run_time_series, telegraph_time
from src.errors import SimulationError
from src.model import BasisMap, build_hamiltonian
from src.spectral import band_window, fit_lorentzian, spectral_distribution
from src.spectrum import EigenSystem, diagonalize_by_symmetry
from src.symmetry import SymmetryTransform, build_transform
from src.telegraph import DEFAULT_HI, DEFAULT_LO, SwitchEvents, classify_regime, detect_switches, summarize_switching

logger = logging.getLogger(__name__)

SWEEP_KEYS = ('V', 'dV', 'W')


@dataclass(frozen=True)
class RunOptions:
    include_environment: bool = True
    hi: float = DEFAULT_HI
    lo: float = DEFAULT_LO


@dataclass(frozen=True)
class RunResult:
    series: TimeSeries
    events: SwitchEvents
    eigensystem: EigenSystem
    transform: SymmetryTransform
    summary: Dict[str, object]


def run_and_summarize(config: RunConfig, options: RunOptions) -> RunResult:
    """Diagonalize, evolve g_alpha and summarize one parameter set"""
    p = config.params
    b = BasisMap.for_params(p)
    T = build_transform(b)
    es = diagonalize_by_symmetry(build_hamiltonian(p, b), T)
    ts = run_time_series(p, config.t_max, config.t_steps, options.include_environment, es)
    events = detect_switches(ts, hi=options.hi, lo=options.lo)
    switching = summarize_switching(ts, hi=options.hi, lo=options.lo)

    try:
        fit = fit_lorentzian(spectral_distribution(es, T, b), 'minus', p.d_eps, band_window(p))
        half_width = fit.half_width
    except SimulationError as e:
        logger.warning(f"No minus-branch width for dV={p.dV}: {str(e)}")
        half_width = math.nan

    summary = {
        'V': p.V,
        'dV': p.dV,
        'W': p.W,
        'regime': classify_regime(p.V, p.dV).value,
        'n_events': switching.n_events,
        'mean_dwell': switching.mean_dwell,
        'stddev_dwell': switching.stddev_dwell,
        'plateau_fraction': switching.plateau_fraction,
        'band_fraction': switching.band_fraction,
        'dominant_period': switching.dominant_period,
        'half_width_minus': half_width,
        'rabi_period': rabi_period(p),
        'telegraph_time': telegraph_time(p),
    }
    return RunResult(ts, events, es, T, summary)


def parse_sweep_values(raw: str) -> List[float]:
    try:
        values = [float(x) for x in raw.split(',') if x.strip()]
    except ValueError:
        raise SimulationError(f"Sweep values must be comma-separated numbers, got {raw!r}") from None
    if not values:
        raise SimulationError("Sweep needs at least one value")
    return values


class SweepService:
    """Runs a cartesian parameter grid on a thread pool, keeping grid order in the output"""

    def __init__(self, base: RunConfig, options: RunOptions, threads: int):
        self.base = base
        self.options = options
        self.threads = max(1, threads)

    def grid(self, axes: Sequence[Tuple[str, Sequence[float]]]) -> List[Dict[str, float]]:
        for key, _ in axes:
            if key not in SWEEP_KEYS:
                raise SimulationError(f"Cannot sweep {key!r}, expected one of {', '.join(SWEEP_KEYS)}")
        keys = [key for key, _ in axes]
        if len(set(keys)) != len(keys):
            raise SimulationError("Each sweep key may appear only once")
        return [dict(zip(keys, point)) for point in itertools.product(*(values for _, values in axes))]

    def run_point(self, index: int, point: Dict[str, float]) -> Dict[str, object]:
        """Run one grid point; failures become an error entry in the row"""
        row: Dict[str, object] = {'index': index, **point}
        try:
            params = self.base.params.with_updates(**point)
            config = build_run_config(params, self.base.t_max, self.base.t_steps, f"grid point {index}")
            row.update(run_and_summarize(config, self.options).summary)
            row['error'] = ''
        except SimulationError as e:
            logger.error(f"Grid point {index} {point} failed: {str(e)}", exc_info=True)
            row['error'] = str(e)
        return row

    def run(self, axes: Sequence[Tuple[str, Sequence[float]]]) -> pd.DataFrame:
        points = self.grid(axes)
        logger.info(f"Running {len(points)} grid points on {self.threads} threads")
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            rows = list(pool.map(self.run_point, range(len(points)), points))

        columns = ['index', 'V', 'dV', 'W', 'regime', 'n_events', 'mean_dwell', 'stddev_dwell',
                   'plateau_fraction', 'band_fraction', 'dominant_period', 'half_width_minus', 'rabi_period',
                   'telegraph_time', 'error']
        frame = pd.DataFrame(rows)
        for column in columns:
            if column not in frame:
                frame[column] = math.nan
        for key in SWEEP_KEYS:
            frame[key] = frame[key].fillna(getattr(self.base.params, key))
        return frame[columns].sort_values('index', kind='stable').reset_index(drop=True)
