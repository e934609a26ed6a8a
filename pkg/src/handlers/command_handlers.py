import logging
import math
import os
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd

from src.config.config import RunConfig
from src.errors import FitError, ScatteringError
from src.model import BasisMap, build_hamiltonian
from src.scattering import (
    dyson_amplitude, g0_replacement_amplitude, kappa_kappa_element, perp_overlap, perturbative_estimates,
    principal_value_log, second_order_width, telegraph_fourier_amplitude, validate_against_exact,
)
from src.services.sweep_service import RunOptions, SweepService, run_and_summarize
from src.spectral import (
    analytic_half_width, band_window, branch_weight, fit_lorentzian, overlay_frame,
    resonance_couplings, self_energy, spectral_distribution,
)
from src.spectrum import (
    block_eigensystem, degenerate_reduction, diagonalize_by_symmetry, g_perp_overlap, write_eigenstates_csv,
)
from src.symmetry import block_hamiltonians, build_transform, dump_blocks
from src.telegraph import Regime, classify_regime
from src.utils.helpers import ensure_dir, write_csv, write_report

logger = logging.getLogger(__name__)

SUMMARY_KEYS = ('regime', 'n_events', 'mean_dwell', 'stddev_dwell', 'plateau_fraction', 'band_fraction',
                'dominant_period', 'half_width_minus', 'rabi_period', 'telegraph_time')


class CommandHandlers:
    def __init__(self, out_dir: str, options: RunOptions, dump: bool = False):
        self.out_dir = out_dir
        self.options = options
        self.dump = dump

    def _path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def _dump_blocks(self, config: RunConfig):
        if not self.dump:
            return
        b = BasisMap.for_params(config.params)
        T = build_transform(b)
        H_plus, H_minus = block_hamiltonians(build_hamiltonian(config.params, b), T)
        dump_blocks(H_plus, H_minus, T, self._path('blocks'))

    def cmd_simulate(self, config: RunConfig):
        """Evolve g_alpha and write the occupation series, switch events and summary"""
        ensure_dir(self.out_dir)
        self._dump_blocks(config)
        result = run_and_summarize(config, self.options)
        ts = result.series

        write_csv(ts.to_frame(), self._path('timeseries.csv'))
        write_csv(result.events.to_frame(), self._path('events.csv'))
        items = [(key, result.summary[key]) for key in SUMMARY_KEYS]
        items += [
            ('N', config.params.N),
            ('t_max', config.t_max),
            ('t_steps', config.t_steps),
            ('include_environment', ts.include_environment),
            ('max_norm_error', ts.max_norm_error),
            ('max_trace_error', ts.max_trace_error),
        ]
        write_report(self._path('report.txt'), items)
        logger.info(f"Simulation finished: regime {result.summary['regime']}, {len(result.events)} switches")
        return result

    def cmd_spectrum(self, config: RunConfig):
        """Spectral distribution of g_alpha, minus-branch Lorentzian and self-energy overlay"""
        ensure_dir(self.out_dir)
        self._dump_blocks(config)
        p = config.params
        b = BasisMap.for_params(p)
        T = build_transform(b)
        es = diagonalize_by_symmetry(build_hamiltonian(p, b), T)
        sd = spectral_distribution(es, T, b)
        write_csv(sd.to_frame(), self._path('spectrum.csv'))
        write_eigenstates_csv(es, b, self._path('eigenstates.csv'))

        regime = classify_regime(p.V, p.dV)
        window = band_window(p)
        items: List[Tuple[str, object]] = [
            ('regime', regime),
            ('total_weight', float(np.sum(sd.weights))),
            ('plus_weight', branch_weight(sd, 'plus')),
            ('minus_weight', branch_weight(sd, 'minus')),
            ('minus_weight_in_band', branch_weight(sd, 'minus', window)),
            ('half_width_analytic', analytic_half_width(p, 'minus')),
        ]

        energies, couplings = resonance_couplings(es, T, p, 'minus')
        sigma = self_energy(p, energies, couplings, p.E_g)
        items += [('self_energy_real', sigma.value.real), ('self_energy_imag', sigma.value.imag)]

        try:
            fit = fit_lorentzian(sd, 'minus', p.d_eps, window)
            items += [
                ('center', fit.center),
                ('half_width', fit.half_width),
                ('amplitude', fit.amplitude),
                ('rms_residual', fit.rms_residual),
                ('n_points', fit.n_points),
            ]
            write_csv(overlay_frame(sd, 'minus', p.d_eps, fit, p, sigma), self._path('green_overlay.csv'))
        except FitError as e:
            logger.warning(f"Lorentzian fit failed: {str(e)}")
            items += [('center', math.nan), ('half_width', math.nan), ('fit_error', str(e))]

        if regime is Regime.BONDING:
            items.append(('note', 'bonding regime: resonance narrower than a few level spacings, '
                                  'weight stays on the bonding combination'))
        write_report(self._path('lorentzian.txt'), items)
        return sd

    def cmd_verify(self, config: RunConfig):
        """Compare the perturbative estimates with the exact minus block"""
        ensure_dir(self.out_dir)
        self._dump_blocks(config)
        p = config.params
        b = BasisMap.for_params(p)
        T = build_transform(b)
        H = build_hamiltonian(p, b)
        es_minus = block_eigensystem(H, T, 'minus')

        estimates = perturbative_estimates(p)
        items: List[Tuple[str, object]] = [
            ('coupling_minus', estimates.coupling_minus),
            ('coupling_plus', estimates.coupling_plus),
            ('g_elem_ratio', estimates.g_elem_ratio),
            ('overlap_scale', estimates.overlap_scale),
            ('g_perp_overlap', g_perp_overlap(p)),
            ('perp_overlap', perp_overlap(p)),
            ('kappa_kappa_at_d_eps', kappa_kappa_element(p, p.d_eps, p.d_eps)),
            ('g0_replacement_amplitude', g0_replacement_amplitude(p)),
            ('second_order_width', second_order_width(p)),
            ('half_width_analytic', analytic_half_width(p, 'minus')),
            ('gamma_in_band', estimates.gamma_in_band),
            ('principal_value_at_shell', principal_value_log(p, p.E_g)),
        ]
        if p.W > 0:
            items += [
                ('dyson_amplitude_at_d_eps', abs(dyson_amplitude(p, p.d_eps))),
                ('telegraph_fourier_amplitude', telegraph_fourier_amplitude(p)),
            ]

        if p.degenerate_continuum:
            items += self._degenerate_items(p, es_minus.eigenvalues)
            write_report(self._path('verification.txt'), items)
            return None

        try:
            validation = validate_against_exact(p, es_minus)
        except ScatteringError as e:
            logger.warning(f"Near-shell comparison skipped: {str(e)}")
            items.append(('validation_error', str(e)))
            write_report(self._path('verification.txt'), items)
            return None

        items += [
            ('slope', validation.slope),
            ('scale_factor', validation.scale_factor),
            ('n_states', validation.n_states),
            ('max_overlap', validation.max_overlap),
        ]
        write_report(self._path('verification.txt'), items)
        write_csv(validation.rows, self._path('verification.csv'))
        return validation

    def _degenerate_items(self, p, values: np.ndarray) -> List[Tuple[str, object]]:
        reduction = degenerate_reduction(p)
        zero_count = int(np.sum(np.abs(values - reduction.E1) <= 1e-10))
        return [
            ('E2', reduction.E2),
            ('E3', reduction.E3),
            ('E3_approx', reduction.E3_approx),
            ('E2_deviation', float(np.min(np.abs(values - reduction.E2)))),
            ('E3_deviation', float(np.min(np.abs(values - reduction.E3)))),
            ('zero_multiplicity', zero_count),
        ]

    def cmd_sweep(self, config: RunConfig, axes: Sequence[Tuple[str, Sequence[float]]], threads: int) -> pd.DataFrame:
        """Classify every grid point and write regime_map.csv in grid order"""
        ensure_dir(self.out_dir)
        frame = SweepService(config, self.options, threads).run(axes)
        write_csv(frame, self._path('regime_map.csv'))
        failed = int((frame['error'] != '').sum())
        if failed:
            logger.warning(f"{failed} of {len(frame)} grid points failed")
        return frame
