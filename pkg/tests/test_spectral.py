import numpy as np
import pytest

from src.errors import FitError, SpectrumError
from src.model import BasisMap, build_hamiltonian, continuum_energies, half_bandwidth
from src.spectral import (
    SpectralDistribution, analytic_half_width, band_window, branch_weight, fit_lorentzian, green_density,
    overlay_frame, resonance_couplings, self_energy, spectral_distribution,
)
from src.spectrum import diagonalize_by_symmetry
from src.symmetry import build_transform


@pytest.fixture(scope='module')
def spectrum2(system2):
    return spectral_distribution(system2.es, system2.T, system2.b)


def _minus_fit(system):
    sd = spectral_distribution(system.es, system.T, system.b)
    return fit_lorentzian(sd, 'minus', system.p.d_eps, band_window(system.p))


def test_every_state_has_a_branch(spectrum2):
    assert set(np.unique(spectrum2.branches)) == {'plus', 'minus'}
    assert len(spectrum2) == 800


def test_sum_rule_and_equal_branch_shares(spectrum2):
    assert np.sum(spectrum2.weights) == pytest.approx(1.0, abs=1e-10)
    assert branch_weight(spectrum2, 'minus') == pytest.approx(0.5, abs=1e-10)
    assert branch_weight(spectrum2, 'plus') == pytest.approx(0.5, abs=1e-10)


def test_minus_resonance_on_shell(system2):
    fit = _minus_fit(system2)
    d_eps = system2.p.d_eps
    assert abs(fit.center - system2.p.E_g) < 2 * d_eps
    assert fit.half_width == pytest.approx(analytic_half_width(system2.p, 'minus'), rel=0.2)
    assert fit.n_points >= 5


def test_widths_shrink_with_asymmetry(system1, system2, system3):
    widths = [_minus_fit(s).half_width for s in (system1, system2, system3)]
    assert widths[0] > widths[1] > widths[2]
    assert widths[0] / widths[1] > 3


def test_analytic_half_width(example2):
    d_eps, dV, W = example2.d_eps, example2.dV, example2.W
    expected = d_eps * dV * np.sqrt(W ** 2 + dV ** 2) / (np.pi * W ** 2)
    assert analytic_half_width(example2) == pytest.approx(expected)
    assert 2.0 < analytic_half_width(example2) / d_eps < 2.4
    assert analytic_half_width(example2.with_updates(W=0.0)) == 0.0
    assert analytic_half_width(example2, 'plus') > analytic_half_width(example2, 'minus')


def test_self_energy_matches_resonance_width(system2):
    energies, couplings = resonance_couplings(system2.es, system2.T, system2.p, 'minus')
    assert energies.shape[0] == system2.p.N + 2
    sigma = self_energy(system2.p, energies, couplings, system2.p.E_g)
    assert sigma.in_band
    assert sigma.value.imag < 0
    assert -sigma.value.imag == pytest.approx(analytic_half_width(system2.p), rel=0.3)


def test_self_energy_outside_band(system2):
    energies, couplings = resonance_couplings(system2.es, system2.T, system2.p, 'minus')
    sigma = self_energy(system2.p, energies, couplings, system2.p.E_g + 0.01)
    assert not sigma.in_band
    assert sigma.value.imag == 0.0


def test_self_energy_without_coupling(example2):
    sigma = self_energy(example2, np.array([0.0, 1e-6]), np.zeros(2), 0.0)
    assert sigma.value == 0j


def test_green_density_peak(example2):
    gamma = 3e-6
    assert green_density(example2, -1j * gamma, example2.E_g) == pytest.approx(1.0 / (np.pi * gamma))
    assert green_density(example2, -1j * gamma, example2.E_g + gamma) == pytest.approx(0.5 / (np.pi * gamma))


def test_green_density_integrates_to_one_over_band(example2):
    a = half_bandwidth(example2)
    step = 1e-8
    energies = np.arange(-a, a, step) + 0.5 * step
    rho = green_density(example2, -3e-6j, energies)
    assert np.sum(rho) * step == pytest.approx(1.0, abs=0.01)


def test_green_density_from_couplings(system2):
    p = system2.p
    energies, couplings = resonance_couplings(system2.es, system2.T, p, 'minus')
    sigma = self_energy(p, energies, couplings, p.E_g)
    on_shell = green_density(p, (energies, couplings), p.E_g)
    assert on_shell == pytest.approx(green_density(p, sigma, p.E_g))
    grid = p.E_g + p.d_eps * np.array([-20.0, 0.0, 20.0])
    rho = green_density(p, (energies, couplings), grid)
    assert rho.shape == (3,)
    assert rho[1] > rho[0] and rho[1] > rho[2]


def test_principal_value_vanishes_for_constant_couplings(example2):
    energies = continuum_energies(example2)
    couplings = np.full(energies.shape, 1e-10)
    sigma = self_energy(example2, energies, couplings, example2.band_center)
    assert abs(sigma.value.real) < 1e-15
    assert sigma.value.imag == pytest.approx(-np.pi * 1e-10 / example2.d_eps)


@pytest.mark.slow
def test_width_decreases_across_asymmetry_sweep(example2):
    widths = []
    for dV in np.linspace(0.045, 0.005, 20):
        p = example2.with_updates(dV=float(dV))
        b = BasisMap.for_params(p)
        T = build_transform(b)
        es = diagonalize_by_symmetry(build_hamiltonian(p, b), T)
        sd = spectral_distribution(es, T, b)
        widths.append(fit_lorentzian(sd, 'minus', p.d_eps, band_window(p)).half_width)
    assert np.all(np.diff(widths) < 0)


def test_fit_needs_enough_points():
    sd = SpectralDistribution(np.array([0.0, 1.0, 2.0]), np.array([0.2, 0.5, 0.3]),
                              np.array(['minus', 'minus', 'minus']))
    with pytest.raises(FitError):
        fit_lorentzian(sd, 'minus', 1.0)
    with pytest.raises(FitError):
        fit_lorentzian(sd, 'plus', 1.0)


def test_fit_recovers_synthetic_lorentzian():
    energies = np.arange(-100, 101, dtype=float)
    weights = (4.0 / np.pi) / ((energies - 1.5) ** 2 + 16.0)
    sd = SpectralDistribution(energies, weights, np.full(energies.shape, 'minus'))
    fit = fit_lorentzian(sd, 'minus', 1.0)
    assert fit.center == pytest.approx(1.5, abs=1e-4)
    assert fit.half_width == pytest.approx(4.0, rel=1e-4)


def test_dimension_mismatch(system2):
    with pytest.raises(SpectrumError):
        spectral_distribution(system2.es, system2.T, BasisMap(3))


def test_overlay_frame(system2, spectrum2):
    fit = _minus_fit(system2)
    energies, couplings = resonance_couplings(system2.es, system2.T, system2.p, 'minus')
    sigma = self_energy(system2.p, energies, couplings, system2.p.E_g)
    frame = overlay_frame(spectrum2, 'minus', system2.p.d_eps, fit, system2.p, sigma)
    assert list(frame.columns) == ['E_peV', 'density', 'fit_density', 'self_energy_density']
    assert frame['density'].max() == pytest.approx(frame['fit_density'].max(), rel=0.3)
