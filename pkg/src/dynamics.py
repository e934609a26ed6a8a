import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.errors import DynamicsError
from src.model import BasisMap, ModelParams, build_hamiltonian, four_level_params, require_valid
from src.spectrum import EigenSystem, diagonalize, diagonalize_by_symmetry, project_initial
from src.symmetry import build_transform

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-10
# Samples synthesized per matrix product; bounds memory at chunk x dim complex values
CHUNK_SIZE = 256


@dataclass(frozen=True)
class WavePacket:
    """Complex amplitudes over the input basis at time t (s)"""
    t: float
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


@dataclass(frozen=True)
class TimeSeries:
    """Side occupations sampled on a uniform time grid"""
    times: np.ndarray
    occ_alpha: np.ndarray
    occ_beta: np.ndarray
    include_environment: bool
    max_norm_error: float = 0.0

    def __len__(self):
        return self.times.shape[0]

    @property
    def max_trace_error(self) -> float:
        if not self.include_environment:
            return math.nan
        return float(np.max(np.abs(self.occ_alpha + self.occ_beta - 1.0)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            't_seconds': self.times,
            'occ_alpha': self.occ_alpha,
            'occ_beta': self.occ_beta,
        })


def _check_coefficients(c0: np.ndarray) -> np.ndarray:
    c0 = np.asarray(c0)
    if not np.all(np.isfinite(c0)):
        raise DynamicsError("Initial coefficients contain NaN or infinite values")
    norm = float(np.sum(np.abs(c0) ** 2))
    if abs(norm - 1.0) > 1e-8:
        raise DynamicsError(f"Initial state is not normalized: sum |c|^2 = {norm!r}")
    return c0


def evolve(es: EigenSystem, c0: np.ndarray, t: float, hbar: float) -> WavePacket:
    """Spectral synthesis |psi(t)> = sum_I c_I exp(-i E_I t / hbar) |I>"""
    c0 = _check_coefficients(c0)
    if not math.isfinite(t):
        raise DynamicsError(f"Time must be finite, got {t!r}")
    if not hbar > 0:
        raise DynamicsError(f"hbar must be positive, got {hbar!r}")
    phases = np.exp(-1j * es.eigenvalues * (t / hbar))
    amplitudes = es.eigenvectors @ (c0 * phases)
    return WavePacket(float(t), amplitudes)


def reproject(es: EigenSystem, wp: WavePacket) -> np.ndarray:
    """Eigen-coefficients of a wave packet, used to continue an evolution"""
    return es.eigenvectors.T @ wp.amplitudes


def side_occupation(wp: WavePacket, b: BasisMap, side: str, include_environment: bool) -> float:
    """Probability on the remote and gateway states of a side (plus its continuum if requested)"""
    idx = b.side_indices(side, include_environment)
    return float(np.sum(np.abs(wp.amplitudes[idx]) ** 2))


def density_matrix(wp: WavePacket, max_dim: int = 256) -> np.ndarray:
    """Full density operator |psi><psi|, only for small systems"""
    dim = wp.amplitudes.shape[0]
    if dim > max_dim:
        raise DynamicsError(f"Density matrix of dimension {dim} exceeds the debug limit {max_dim}")
    return np.outer(wp.amplitudes, np.conj(wp.amplitudes))


def sample_occupations(es: EigenSystem, c0: np.ndarray, times: np.ndarray, hbar: float,
                       b: BasisMap, include_environment: bool) -> Tuple[np.ndarray, np.ndarray, float]:
    """Side occupations at every time plus the largest norm deviation seen"""
    c0 = _check_coefficients(c0)
    times = np.asarray(times, dtype=float)
    if not np.all(np.isfinite(times)):
        raise DynamicsError("Time grid contains NaN or infinite values")

    alpha_idx = b.side_indices('alpha', include_environment)
    beta_idx = b.side_indices('beta', include_environment)
    occ_alpha = np.empty(times.shape[0])
    occ_beta = np.empty(times.shape[0])
    max_norm_error = 0.0

    for start in range(0, times.shape[0], CHUNK_SIZE):
        chunk = times[start:start + CHUNK_SIZE]
        phases = np.exp(-1j * np.outer(chunk, es.eigenvalues) / hbar)
        amplitudes = (phases * c0) @ es.eigenvectors.T
        probabilities = np.abs(amplitudes) ** 2
        occ_alpha[start:start + chunk.shape[0]] = probabilities[:, alpha_idx].sum(axis=1)
        occ_beta[start:start + chunk.shape[0]] = probabilities[:, beta_idx].sum(axis=1)
        max_norm_error = max(max_norm_error, float(np.max(np.abs(probabilities.sum(axis=1) - 1.0))))

    return occ_alpha, occ_beta, max_norm_error


def time_grid(t_max: float, t_steps: int) -> np.ndarray:
    if t_steps < 2:
        raise DynamicsError(f"t_steps must be at least 2, got {t_steps}")
    if not (math.isfinite(t_max) and t_max > 0):
        raise DynamicsError(f"t_max must be positive, got {t_max!r}")
    return np.linspace(0.0, t_max, t_steps)


def run_time_series(p: ModelParams, t_max: float, t_steps: int, include_environment: bool = True,
                    es: Optional[EigenSystem] = None) -> TimeSeries:
    """Evolve g_alpha and sample both side occupations on a uniform grid"""
    require_valid(p)
    times = time_grid(t_max, t_steps)
    b = BasisMap.for_params(p)
    if es is None:
        es = diagonalize_by_symmetry(build_hamiltonian(p, b), build_transform(b))
    c0 = project_initial(es, b, 'g_alpha')

    logger.info(f"Sampling {t_steps} times up to {t_max} s (environment included: {include_environment})")
    occ_alpha, occ_beta, norm_error = sample_occupations(es, c0, times, p.hbar, b, include_environment)
    if norm_error > NORM_TOLERANCE:
        logger.warning(f"Norm deviation {norm_error:.3e} exceeds {NORM_TOLERANCE:g}")
    return TimeSeries(times, occ_alpha, occ_beta, include_environment, norm_error)


def four_level_splitting(p: ModelParams) -> float:
    """Energy splitting of the two lowest eigenstates of the remote/gateway block"""
    b = BasisMap(1)
    H = build_hamiltonian(four_level_params(p).with_updates(N=1), b)
    local = [b.index(label) for label in ('g_alpha', 'g_beta', 'w_alpha', 'w_beta')]
    values = diagonalize(H.entries[np.ix_(local, local)]).eigenvalues
    return float(values[1] - values[0])


def rabi_period(p: ModelParams) -> float:
    """Side-to-side Rabi period without environment, 2 pi hbar / delta"""
    delta = four_level_splitting(p)
    if delta <= 0:
        return math.inf
    return 2.0 * math.pi * p.hbar / delta


def telegraph_time(p: ModelParams) -> float:
    """Time scale 2 pi hbar / d_eps set by the continuum level spacing"""
    return 2.0 * math.pi * p.hbar / p.d_eps


def occupation_at(es: EigenSystem, b: BasisMap, c0: np.ndarray, times: Sequence[float], hbar: float,
                  side: str = 'alpha', include_environment: bool = True) -> np.ndarray:
    """Occupation of one side at a few arbitrary times"""
    return np.array([side_occupation(evolve(es, c0, t, hbar), b, side, include_environment) for t in times])
