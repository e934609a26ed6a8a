import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from src.errors import ScatteringError
from src.model import ModelParams, half_bandwidth, require_valid
from src.spectrum import EigenSystem

logger = logging.getLogger(__name__)

# Near-shell window for the 1/E comparison, in level spacings
GUARD_SPACINGS = 2.0
REACH_SPACINGS = 50.0
MIN_NEAR_SHELL_STATES = 10
DECOUPLED_OVERLAP = 1e-10


@dataclass(frozen=True)
class PerturbativeEstimates:
    """Closed-form quantities of the perturbation chain for one parameter set"""
    coupling_minus: float
    coupling_plus: float
    g_elem_ratio: float
    overlap_scale: float
    gamma_in_band: float

    def g_perp_kappa_element(self, E_kappa: float) -> float:
        return -self.g_elem_ratio * E_kappa


@dataclass(frozen=True)
class ScatteringValidation:
    """Exact near-shell overlaps of g- against the summed amplitude"""
    slope: float
    scale_factor: float
    n_states: int
    max_overlap: float
    rows: pd.DataFrame


def _coupling_norm_sq(p: ModelParams) -> float:
    return p.N * p.W ** 2 + p.dV ** 2


def coupling_estimates(p: ModelParams) -> Tuple[float, float]:
    """First-order couplings of g- and g+ to the continuum through the gateway"""
    offset = p.E_w - p.E_g
    if offset == 0:
        raise ScatteringError("Coupling estimates need E_w different from E_g")
    s = 1.0 / math.sqrt(2.0)
    minus = (p.W / offset) * s * p.dV
    plus = (p.W / offset) * s * (2 * p.V - p.dV)
    return minus, plus


def onshell_matrix_elements(p: ModelParams, E_kappa: float) -> Tuple[float, float]:
    """<kappa_perp-|H|g_perp-> at E_kappa and the overlap scale W/sqrt(NW² + ΔV²)"""
    if p.N < 2:
        raise ScatteringError(f"On-shell elements need N >= 2, got N={p.N}")
    denominator = math.sqrt(p.N * (p.N - 1) * p.W ** 2 + p.N * p.dV ** 2)
    if denominator == 0:
        return 0.0, 0.0
    g_elem = -p.dV * E_kappa / denominator
    overlap_scale = p.W / math.sqrt(_coupling_norm_sq(p))
    return g_elem, overlap_scale


def kappa_kappa_element(p: ModelParams, E_kappa: float, E_lambda: float,
                        diagonal: Optional[bool] = None) -> float:
    """<lambda_perp-|H|kappa_perp-> with the exact N-dependent prefactor.

    ``diagonal`` defaults to comparing the two energies.
    """
    if p.N < 2:
        raise ScatteringError(f"Continuum element needs N >= 2, got N={p.N}")
    total = _coupling_norm_sq(p)
    reduced = (p.N - 1) * p.W ** 2 + p.dV ** 2
    if reduced == 0:
        raise ScatteringError("Continuum element undefined for W = 0 and dV = 0")
    if diagonal is None:
        diagonal = E_kappa == E_lambda
    delta = E_kappa if diagonal else 0.0
    return (total / reduced) * (delta - (p.W ** 2 / total) * (E_kappa + E_lambda))


def dyson_amplitude(p: ModelParams, E_kappa: float) -> complex:
    """Summed Lippmann-Schwinger amplitude <g_perp-|kappa~_perp-> = i (Δε/π)(ΔV/W)/E_kappa.

    E_kappa is measured from the energy shell.
    """
    if E_kappa == 0:
        raise ScatteringError("Summed amplitude has a pole on the energy shell (E_kappa = 0)")
    if p.W == 0:
        raise ScatteringError("Summed amplitude undefined without environment coupling (W = 0)")
    if abs(E_kappa) > half_bandwidth(p):
        logger.debug(f"E_kappa={E_kappa!r} lies outside the band")
    return 1j * (p.d_eps / math.pi) * (p.dV / p.W) / E_kappa


def gamma_in_band(p: ModelParams, E: float) -> float:
    """Γ(E) = π/Δε inside the band, 0 elsewhere"""
    return math.pi / p.d_eps if abs(E - p.band_center) < half_bandwidth(p) else 0.0


def principal_value_log(p: ModelParams, E: float) -> float:
    """ln|(E + a)/(E - a)|, the band integral of 1/(E - E_iota)"""
    a = half_bandwidth(p)
    x = E - p.band_center
    if abs(x) == a:
        raise ScatteringError(f"Principal value diverges at the band edge E={E!r}")
    return math.log(abs((x + a) / (x - a)))


def perturbative_estimates(p: ModelParams) -> PerturbativeEstimates:
    require_valid(p)
    minus, plus = coupling_estimates(p)
    g_elem, overlap_scale = onshell_matrix_elements(p, 1.0)
    return PerturbativeEstimates(
        coupling_minus=minus,
        coupling_plus=plus,
        g_elem_ratio=abs(g_elem),
        overlap_scale=overlap_scale,
        gamma_in_band=gamma_in_band(p, p.band_center),
    )


def perp_overlap(p: ModelParams) -> float:
    """<kappa_perp-|g_perp->, which vanishes only to order 1/N"""
    total = _coupling_norm_sq(p)
    reduced = (p.N - 1) * p.W ** 2 + p.dV ** 2
    nw2 = p.N * p.W ** 2
    if nw2 == 0 or reduced == 0:
        return 0.0
    g_wkg = p.dV / math.sqrt(total)
    kappa_wkg = p.W / math.sqrt(total)
    bracket = -2 * p.W * g_wkg / math.sqrt(total) - g_wkg * kappa_wkg
    return math.sqrt(total / nw2) * math.sqrt(total / reduced) * bracket


def g0_replacement_amplitude(p: ModelParams) -> float:
    """Amplitude obtained when the full Green operator is replaced by G0; independent of E_kappa"""
    reduced = (p.N - 1) * p.W ** 2 + p.dV ** 2
    if reduced == 0:
        raise ScatteringError("Amplitude undefined for W = 0 and dV = 0")
    return p.dV / math.sqrt(reduced)


def second_order_width(p: ModelParams) -> float:
    """Golden-rule width from the discarded second-order term, evaluated one spacing off shell"""
    g_elem, _ = onshell_matrix_elements(p, p.d_eps)
    return math.pi * g_elem ** 2 / p.d_eps


def telegraph_fourier_amplitude(p: ModelParams) -> float:
    """Prefactor of the sine series in the on-shell projection of g_alpha(t)"""
    total = _coupling_norm_sq(p)
    if p.W == 0:
        raise ScatteringError("Fourier amplitude undefined without environment coupling (W = 0)")
    return (1.0 / math.pi) * (p.dV / p.W) / math.sqrt(2 * p.N) * math.sqrt(p.N * p.W ** 2 / total)


def validate_against_exact(p: ModelParams, es_minus: EigenSystem) -> ScatteringValidation:
    """Compare |<g-|I>| of near-shell minus eigenstates with |dyson_amplitude|.

    ``es_minus`` is the eigensystem of H_minus in its g-, w-, kappa- basis, so g-
    is row 0. Only states with 2Δε < |E - E_g| < 50Δε take part.
    """
    require_valid(p)
    if es_minus.dim != p.N + 2:
        raise ScatteringError(f"Expected a minus block of dimension {p.N + 2}, got {es_minus.dim}")
    offsets = es_minus.eigenvalues - p.E_g
    near = (np.abs(offsets) > GUARD_SPACINGS * p.d_eps) & (np.abs(offsets) < REACH_SPACINGS * p.d_eps)
    n_states = int(np.sum(near))
    if n_states < MIN_NEAR_SHELL_STATES:
        raise ScatteringError(
            f"Only {n_states} near-shell states between {GUARD_SPACINGS:g} and {REACH_SPACINGS:g} "
            f"level spacings, need {MIN_NEAR_SHELL_STATES}")

    energies = offsets[near]
    exact = np.abs(es_minus.eigenvectors[0, near])
    if p.W == 0:
        predicted = np.full(n_states, math.nan)
    else:
        predicted = np.abs((p.d_eps / math.pi) * (p.dV / p.W) / energies)
    rows = pd.DataFrame({'E_kappa': energies, 'exact_overlap': exact, 'predicted_overlap': predicted})

    max_overlap = float(np.max(exact))
    if max_overlap <= DECOUPLED_OVERLAP:
        logger.info("g- is decoupled from the near-shell states, no slope to fit")
        return ScatteringValidation(math.nan, math.nan, n_states, max_overlap, rows)

    usable = exact > 0
    slope, _ = np.polyfit(np.log(np.abs(energies[usable])), np.log(exact[usable]), 1)
    scale_factor = float(np.median(exact[usable] / predicted[usable])) if p.W > 0 else math.nan
    logger.info(f"Near-shell overlaps: slope {slope:.4f}, scale factor {scale_factor:.4f} over {n_states} states")
    return ScatteringValidation(float(slope), scale_factor, n_states, max_overlap, rows)
