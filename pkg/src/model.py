import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.errors import ModelError

logger = logging.getLogger(__name__)

# CODATA reduced Planck constant converted to peV·s
HBAR_PEV_S = 6.582119569e-4

SIDES = ('alpha', 'beta')


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the two-sided model plus discretization choices.

    Energies are in peV, hbar in peV·s. ``band_center`` defaults to ``E_g`` so the
    energy shell lies in the middle of the continuum band.
    """
    E_g: float = 0.0
    E_w: float = 2.5
    V: float = 0.05
    dV: float = 0.018
    W: float = 0.00707
    d_eps: float = 2.22e-6
    N: int = 398
    band_center: Optional[float] = None
    hbar: float = HBAR_PEV_S
    degenerate_continuum: bool = False

    def __post_init__(self):
        if self.band_center is None:
            object.__setattr__(self, 'band_center', self.E_g)

    @property
    def dim(self) -> int:
        return 2 * self.N + 4

    def with_updates(self, **fields) -> 'ModelParams':
        """Return a copy with the given fields replaced"""
        return replace(self, **fields)


# Reference examples share E_g, E_w, Δε, V, W; only ΔV differs
EXAMPLE_DV = {1: 0.045, 2: 0.018, 3: 0.005}


def example_params(example: int, **overrides) -> ModelParams:
    """Parameter set of reference example 1, 2 or 3"""
    if example not in EXAMPLE_DV:
        raise ModelError(f"Unknown example {example}, expected one of {sorted(EXAMPLE_DV)}")
    return ModelParams(dV=EXAMPLE_DV[example]).with_updates(**overrides)


def four_level_params(p: ModelParams) -> ModelParams:
    """Same model with the environment switched off (W = 0)"""
    return p.with_updates(W=0.0)


def bandwidth(p: ModelParams) -> float:
    """Continuum bandwidth 2a, taken as N·Δε"""
    return p.N * p.d_eps


def half_bandwidth(p: ModelParams) -> float:
    return 0.5 * bandwidth(p)


def validate_params(p: ModelParams) -> List[str]:
    """Return every violated parameter invariant; an empty list means valid"""
    violations = []
    for name in ('E_g', 'E_w', 'V', 'dV', 'W', 'd_eps', 'band_center', 'hbar'):
        value = getattr(p, name)
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            violations.append(f"{name} must be a finite number, got {value!r}")
    if violations:
        return violations

    if p.V < 0:
        violations.append("V must be non-negative")
    if p.W < 0:
        violations.append("W must be non-negative")
    if p.d_eps <= 0:
        violations.append("d_eps must be positive")
    if not isinstance(p.N, (int, np.integer)) or isinstance(p.N, bool) or p.N < 1:
        violations.append(f"N must be an integer of at least 1, got {p.N!r}")
    if p.hbar <= 0:
        violations.append("hbar must be positive")
    if p.dV < 0:
        violations.append("dV must be non-negative")
    elif p.dV > p.V:
        violations.append("dV exceeds V")
    return violations


def require_valid(p: ModelParams) -> None:
    """Raise ModelError listing every violation"""
    violations = validate_params(p)
    if violations:
        raise ModelError("Invalid model parameters: " + "; ".join(violations))


@dataclass(frozen=True)
class BasisMap:
    """Bijection between basis labels and matrix indices.

    Fixed ordering: g_alpha, g_beta, w_alpha, w_beta, kappa_alpha_1..N, kappa_beta_1..N.
    """
    N: int
    labels: Tuple[str, ...] = field(init=False)
    index_of: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.N < 1:
            raise ModelError(f"Basis needs at least one continuum state per side, got N={self.N}")
        labels = ['g_alpha', 'g_beta', 'w_alpha', 'w_beta']
        for side in SIDES:
            labels.extend(kappa_label(side, k) for k in range(1, self.N + 1))
        object.__setattr__(self, 'labels', tuple(labels))
        object.__setattr__(self, 'index_of', {label: i for i, label in enumerate(labels)})

    @classmethod
    def for_params(cls, p: ModelParams) -> 'BasisMap':
        return cls(p.N)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.index_of[label]
        except KeyError:
            raise ModelError(f"Unknown basis label: {label}") from None

    def kappa_indices(self, side: str) -> np.ndarray:
        start = 4 if side == 'alpha' else 4 + self.N
        return np.arange(start, start + self.N)

    def side_indices(self, side: str, include_environment: bool) -> np.ndarray:
        """Indices of the remote and gateway states of a side, plus its continuum if requested"""
        if side not in SIDES:
            raise ModelError(f"Unknown side: {side}")
        local = np.array([self.index_of[f'g_{side}'], self.index_of[f'w_{side}']])
        if include_environment:
            return np.concatenate([local, self.kappa_indices(side)])
        return local


def kappa_label(side: str, k: int) -> str:
    return f'kappa_{side}_{k}'


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Dense real symmetric Hamiltonian in peV"""
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.entries))) if self.entries.size else 0.0


def continuum_energies(p: ModelParams) -> np.ndarray:
    """Uniform grid ε_k = band_center + (k − (N+1)/2)·Δε, identical for both sides"""
    require_valid(p)
    if p.degenerate_continuum:
        return np.full(p.N, float(p.band_center))
    k = np.arange(1, p.N + 1)
    return p.band_center + (k - (p.N + 1) / 2.0) * p.d_eps


def build_hamiltonian(p: ModelParams, b: Optional[BasisMap] = None) -> HamiltonianMatrix:
    """Assemble the real symmetric matrix of the two-sided model"""
    require_valid(p)
    if b is None:
        b = BasisMap.for_params(p)
    if b.N != p.N:
        raise ModelError(f"Basis has N={b.N} continuum states per side, parameters have N={p.N}")

    dim = b.dim
    H = np.zeros((dim, dim))
    eps = continuum_energies(p)

    def couple(i: int, j: int, value: float):
        H[i, j] = value
        H[j, i] = value

    for side in SIDES:
        other = 'beta' if side == 'alpha' else 'alpha'
        g, w = b.index(f'g_{side}'), b.index(f'w_{side}')
        H[g, g] = p.E_g
        H[w, w] = p.E_w
        couple(g, w, p.V)
        couple(g, b.index(f'w_{other}'), p.V - p.dV)

        kappas = b.kappa_indices(side)
        H[kappas, kappas] = eps
        # Environmental states only reach the gateway on their own side
        H[kappas, w] = p.W
        H[w, kappas] = p.W

    logger.info(f"Assembled {dim}x{dim} Hamiltonian (N={p.N}, dV={p.dV}, W={p.W})")
    H.setflags(write=False)
    return HamiltonianMatrix(H)
