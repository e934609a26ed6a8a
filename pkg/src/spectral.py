import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import curve_fit

from src.errors import FitError, SpectrumError
from src.model import BasisMap, ModelParams, half_bandwidth
from src.spectrum import EigenSystem
from src.symmetry import SymmetryTransform

logger = logging.getLogger(__name__)

BRANCH_PURITY = 0.99
WEIGHT_FLOOR = 1e-6
MIN_FIT_POINTS = 5
FIT_MAX_EVALUATIONS = 5000


@dataclass(frozen=True)
class SpectralDistribution:
    """Weights |<I|g_alpha>|^2 per eigenstate with its branch attribution"""
    energies: np.ndarray
    weights: np.ndarray
    branches: np.ndarray

    def __len__(self):
        return self.energies.shape[0]

    def branch(self, branch: str) -> Tuple[np.ndarray, np.ndarray]:
        mask = self.branches == branch
        return self.energies[mask], self.weights[mask]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'E_peV': self.energies, 'weight': self.weights, 'branch': self.branches})


@dataclass(frozen=True)
class LorentzianFit:
    center: float
    half_width: float
    amplitude: float
    rms_residual: float
    n_points: int


@dataclass(frozen=True)
class SelfEnergy:
    value: complex
    in_band: bool


def spectral_distribution(es: EigenSystem, T: SymmetryTransform, b: BasisMap,
                          label: str = 'g_alpha') -> SpectralDistribution:
    """Eigenstate-resolved weights of a basis state, each state attributed to a branch"""
    if es.dim != T.dim or es.dim != b.dim:
        raise SpectrumError(f"Dimension mismatch: eigensystem {es.dim}, transform {T.dim}, basis {b.dim}")
    weights = es.eigenvectors[b.index(label), :] ** 2

    transformed = T.U @ es.eigenvectors
    minus_share = np.sum(transformed[T.minus_indices, :] ** 2, axis=0)
    branches = np.full(es.dim, 'mixed', dtype=object)
    branches[minus_share >= BRANCH_PURITY] = 'minus'
    branches[minus_share <= 1.0 - BRANCH_PURITY] = 'plus'

    mixed = int(np.sum(branches == 'mixed'))
    if mixed:
        logger.warning(f"{mixed} eigenstates could not be attributed to a single branch")
    return SpectralDistribution(np.array(es.eigenvalues), weights, branches.astype(str))


def band_window(p: ModelParams) -> Tuple[float, float]:
    """Energy interval of the continuum band, padded by one level spacing"""
    a = half_bandwidth(p) + p.d_eps
    return p.band_center - a, p.band_center + a


def branch_weight(sd: SpectralDistribution, branch: str, window: Optional[Tuple[float, float]] = None) -> float:
    energies, weights = sd.branch(branch)
    if window is not None:
        mask = (energies >= window[0]) & (energies <= window[1])
        weights = weights[mask]
    return float(np.sum(weights))


def lorentzian(E, amplitude, center, half_width):
    return amplitude * (half_width / math.pi) / ((E - center) ** 2 + half_width ** 2)


def fit_lorentzian(sd: SpectralDistribution, branch: str, d_eps: float,
                   window: Optional[Tuple[float, float]] = None) -> LorentzianFit:
    """Least-squares Lorentzian fit of weight/d_eps against energy for one branch.

    Start values are the peak-weighted mean and RMS spread (weights squared), which
    recover center and half width of an ideal Lorentzian.
    """
    energies, weights = sd.branch(branch)
    if window is not None:
        mask = (energies >= window[0]) & (energies <= window[1])
        energies, weights = energies[mask], weights[mask]
    if weights.size == 0:
        raise FitError(f"No eigenstates in branch {branch}")
    keep = weights > WEIGHT_FLOOR * np.max(weights)
    energies, weights = energies[keep], weights[keep]
    if energies.size < MIN_FIT_POINTS:
        raise FitError(f"Only {energies.size} points in branch {branch}, need at least {MIN_FIT_POINTS}")

    density = weights / d_eps
    emphasis = weights ** 2
    center0 = float(np.sum(emphasis * energies) / np.sum(emphasis))
    spread0 = float(np.sqrt(np.sum(emphasis * (energies - center0) ** 2) / np.sum(emphasis)))
    width0 = max(spread0, 0.5 * d_eps)
    amplitude0 = float(np.max(density)) * math.pi * width0

    try:
        popt, _ = curve_fit(
            lorentzian, energies, density,
            p0=(amplitude0, center0, width0),
            bounds=([0.0, -np.inf, 1e-6 * d_eps], [np.inf, np.inf, np.inf]),
            x_scale=(amplitude0, width0, width0),
            method='trf',
            max_nfev=FIT_MAX_EVALUATIONS,
        )
    except (RuntimeError, ValueError) as e:
        raise FitError(
            f"Lorentzian fit of branch {branch} did not converge "
            f"(start center={center0:.6g}, width={width0:.6g}, points={energies.size}): {e}"
        ) from e

    amplitude, center, half_width = (float(x) for x in popt)
    residual = float(np.sqrt(np.mean((lorentzian(energies, *popt) - density) ** 2)))
    relative = residual / float(np.max(density))
    if relative > 0.1:
        logger.warning(f"Lorentzian fit of branch {branch} has a large residual ({relative:.2%} of peak)")
    logger.info(f"Fitted {branch} resonance: center {center:.6g} peV, half width {half_width:.6g} peV")
    return LorentzianFit(center, abs(half_width), amplitude, residual, int(energies.size))


def resonance_couplings(es: EigenSystem, T: SymmetryTransform, p: ModelParams,
                        branch: str = 'minus') -> Tuple[np.ndarray, np.ndarray]:
    """Energies and |<I|H - E_g|g±>|^2 for the eigenstates of one branch.

    For an eigenstate the matrix element reduces to (E_I - E_g) <I|g±>.
    """
    rows = T.block_indices(branch)
    g_row = T.U[rows[0]]
    overlaps = g_row @ es.eigenvectors
    if es.branches is not None:
        mask = es.branches == branch
    else:
        transformed = T.U @ es.eigenvectors
        mask = np.sum(transformed[rows, :] ** 2, axis=0) >= BRANCH_PURITY
    energies = es.eigenvalues[mask]
    couplings = ((energies - p.E_g) * overlaps[mask]) ** 2
    return np.array(energies), couplings


def self_energy(p: ModelParams, energies: np.ndarray, couplings: np.ndarray, E: float,
                window: float = 50.0) -> SelfEnergy:
    """Discrete self-energy of a state coupled to eigenstates with the given |coupling|^2.

    Real part: principal-value sum over a window symmetric about E, excluding the
    level(s) within half a spacing of E. Imaginary part: -pi times the average
    |coupling|^2 within +-window spacings, divided by the level spacing.
    """
    energies = np.asarray(energies, dtype=float)
    couplings = np.asarray(couplings, dtype=float)
    if energies.shape != couplings.shape:
        raise SpectrumError("energies and couplings must have the same length")

    a = half_bandwidth(p)
    in_band = abs(E - p.band_center) <= a
    if energies.size == 0 or not np.any(couplings):
        return SelfEnergy(0j, in_band)

    distance = E - energies
    reach = min(E - energies.min(), energies.max() - E)
    pv_mask = (np.abs(distance) > 0.5 * p.d_eps * (1 + 1e-9)) & (np.abs(distance) <= reach * (1 + 1e-12))
    real = float(np.sum(couplings[pv_mask] / distance[pv_mask]))

    if not in_band:
        logger.debug(f"E={E!r} lies outside the band, imaginary part set to zero")
        return SelfEnergy(complex(real, 0.0), False)
    local = np.abs(distance) <= window * p.d_eps
    imag = -math.pi * float(np.mean(couplings[local])) / p.d_eps if np.any(local) else 0.0
    return SelfEnergy(complex(real, imag), True)


def green_density(p: ModelParams, couplings, E) -> np.ndarray:
    """-Im G / pi with G = 1 / (E - E_g - Sigma).

    ``couplings`` is either the ``(energies, |coupling|^2)`` pair returned by
    ``resonance_couplings``, in which case Sigma is evaluated at every E, or a
    fixed Sigma given as a complex number or ``SelfEnergy``.
    """
    E = np.asarray(E, dtype=float)
    if isinstance(couplings, tuple):
        energies, values = couplings
        sigma = np.array([self_energy(p, energies, values, float(e)).value for e in E.ravel()])
        sigma = sigma.reshape(E.shape)
    elif isinstance(couplings, SelfEnergy):
        sigma = couplings.value
    else:
        sigma = complex(couplings)
    G = 1.0 / (E - p.E_g - sigma)
    return -np.imag(G) / math.pi


def analytic_half_width(p: ModelParams, branch: str = 'minus') -> float:
    """Resonance half width from the secular equation of a block with a uniform continuum"""
    c = p.dV if branch == 'minus' else 2 * p.V - p.dV
    if p.W == 0:
        return 0.0
    return p.d_eps * c * math.sqrt(p.W ** 2 + c ** 2) / (math.pi * p.W ** 2)


def overlay_frame(sd: SpectralDistribution, branch: str, d_eps: float, fit: LorentzianFit,
                  p: ModelParams, sigma: SelfEnergy) -> pd.DataFrame:
    """Discrete density of one branch next to the fitted and self-energy Lorentzians.

    The self-energy curve is scaled by the branch's share of the g_alpha weight.
    """
    share = branch_weight(sd, branch)
    energies, weights = sd.branch(branch)
    lo, hi = band_window(p)
    mask = (energies >= lo) & (energies <= hi)
    energies, weights = energies[mask], weights[mask]
    return pd.DataFrame({
        'E_peV': energies,
        'density': weights / d_eps,
        'fit_density': lorentzian(energies, fit.amplitude, fit.center, fit.half_width),
        'self_energy_density': share * green_density(p, sigma, energies),
    })
