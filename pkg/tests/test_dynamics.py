import math

import numpy as np
import pytest

from src.dynamics import (
    WavePacket, density_matrix, evolve, four_level_splitting, occupation_at, rabi_period, reproject,
    run_time_series, side_occupation, telegraph_time, time_grid,
)
from src.errors import DynamicsError
from src.model import HBAR_PEV_S, BasisMap, build_hamiltonian
from src.spectrum import diagonalize, diagonalize_by_symmetry, project_initial
from src.symmetry import build_transform


@pytest.fixture(scope='module')
def series2(example2, system2):
    return run_time_series(example2, 8000.0, 4000, True, system2.es)


def test_norm_and_trace_conserved(series2):
    assert len(series2) == 4000
    assert series2.max_norm_error <= 1e-10
    assert series2.max_trace_error <= 1e-9


def test_starts_on_alpha(series2):
    assert series2.times[0] == 0.0
    assert series2.occ_alpha[0] == pytest.approx(1.0, abs=1e-12)
    assert series2.occ_beta[0] == pytest.approx(0.0, abs=1e-12)


def test_occupations_stay_in_unit_interval(series2):
    assert np.all(series2.occ_alpha >= -1e-12)
    assert np.all(series2.occ_alpha <= 1 + 1e-12)


def test_without_environment_trace_is_not_checked(example2):
    ts = run_time_series(example2.with_updates(N=20), 50.0, 10, include_environment=False)
    assert math.isnan(ts.max_trace_error)
    assert np.all(ts.occ_alpha + ts.occ_beta <= 1 + 1e-12)


def test_two_state_rabi():
    v = 0.01
    es = diagonalize(np.array([[0.0, v], [v, 0.0]]))
    c0 = es.eigenvectors[0, :].copy()
    for t in (0.0, 0.03, 0.1, 0.25):
        wp = evolve(es, c0, t, HBAR_PEV_S)
        assert abs(wp.amplitudes[0]) ** 2 == pytest.approx(math.cos(v * t / HBAR_PEV_S) ** 2, abs=1e-12)
        assert wp.norm() == pytest.approx(1.0, abs=1e-12)


def test_four_level_rabi_period(example2):
    p = example2.with_updates(W=0.0)
    delta = four_level_splitting(p)
    assert delta == pytest.approx(4 * p.V * (p.V - p.dV) / p.E_w, rel=0.01)

    period = rabi_period(p)
    b = BasisMap.for_params(p)
    es = diagonalize_by_symmetry(build_hamiltonian(p, b), build_transform(b))
    c0 = project_initial(es, b, 'g_alpha')
    occ = occupation_at(es, b, c0, [0.5 * period, period], p.hbar)
    assert occ[0] < 0.02
    assert occ[1] > 0.98


def test_rabi_period_matches_splitting(example2):
    assert rabi_period(example2) == pytest.approx(2 * math.pi * example2.hbar / four_level_splitting(example2))


def test_telegraph_time(example2):
    assert telegraph_time(example2) == pytest.approx(2 * math.pi * HBAR_PEV_S / 2.22e-6)
    assert 1800 < telegraph_time(example2) < 1900


def test_reproject_continues_evolution(example2):
    p = example2.with_updates(N=10)
    b = BasisMap.for_params(p)
    es = diagonalize_by_symmetry(build_hamiltonian(p, b), build_transform(b))
    c0 = project_initial(es, b, 'g_alpha')
    first = evolve(es, c0, 300.0, p.hbar)
    resumed = evolve(es, reproject(es, first), 500.0, p.hbar)
    direct = evolve(es, c0, 800.0, p.hbar)
    assert np.allclose(resumed.amplitudes, direct.amplitudes, atol=1e-10)


def test_side_occupation_of_initial_state(system2):
    c0 = project_initial(system2.es, system2.b, 'g_alpha')
    wp = evolve(system2.es, c0, 0.0, system2.p.hbar)
    assert side_occupation(wp, system2.b, 'alpha', True) == pytest.approx(1.0, abs=1e-12)
    assert side_occupation(wp, system2.b, 'beta', False) == pytest.approx(0.0, abs=1e-12)


def test_density_matrix():
    wp = WavePacket(0.0, np.array([0.6, 0.8j]))
    rho = density_matrix(wp)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.allclose(rho, rho.conj().T)
    with pytest.raises(DynamicsError):
        density_matrix(WavePacket(0.0, np.zeros(300)), max_dim=256)


def test_invalid_inputs():
    es = diagonalize(np.array([[0.0, 0.01], [0.01, 0.0]]))
    with pytest.raises(DynamicsError):
        evolve(es, np.array([1.0, 1.0]), 0.0, HBAR_PEV_S)
    with pytest.raises(DynamicsError):
        evolve(es, np.array([1.0, 0.0]), float('nan'), HBAR_PEV_S)
    with pytest.raises(DynamicsError):
        time_grid(100.0, 1)
    with pytest.raises(DynamicsError):
        time_grid(0.0, 10)


def test_backward_evolution_returns_initial_state(example2):
    p = example2.with_updates(N=20)
    b = BasisMap.for_params(p)
    es = diagonalize_by_symmetry(build_hamiltonian(p, b), build_transform(b))
    c0 = project_initial(es, b, 'g_alpha')
    forward = evolve(es, c0, 1234.5, p.hbar)
    back = evolve(es, reproject(es, forward), -1234.5, p.hbar)
    initial = evolve(es, c0, 0.0, p.hbar)
    assert np.allclose(back.amplitudes, initial.amplitudes, atol=1e-10)


def test_decoupled_environment_never_fills_continuum(example2):
    p = example2.with_updates(W=0.0, N=10)
    b = BasisMap.for_params(p)
    es = diagonalize_by_symmetry(build_hamiltonian(p, b), build_transform(b))
    c0 = project_initial(es, b, 'g_alpha')
    continuum = np.concatenate([b.kappa_indices('alpha'), b.kappa_indices('beta')])
    for t in time_grid(8000.0, 4000):
        assert np.max(np.abs(evolve(es, c0, t, p.hbar).amplitudes[continuum])) <= 1e-12
