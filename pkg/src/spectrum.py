import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from src.errors import ModelError, SpectrumError
from src.model import BasisMap, HamiltonianMatrix, ModelParams, require_valid
from src.symmetry import SymmetryTransform, block_hamiltonians
from src.utils.helpers import write_csv

logger = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-10
ORTHONORMALITY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues and orthonormal eigenvector columns.

    ``branches`` is set when the system was obtained block by block from the
    symmetry-adapted Hamiltonian; it then holds 'plus' or 'minus' per eigenstate.
    """
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    branches: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True)
class DegenerateReduction:
    """Closed-form minus-block eigenvalues for a fully degenerate continuum"""
    E1: float
    E2: float
    E3: float
    w_kappa_overlap: float
    g_overlap: float
    # leading-order estimate −(NW² + ΔV²)/E_w
    E3_approx: float = math.nan


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so that its largest-magnitude component is positive"""
    if vectors.size == 0:
        return vectors
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _as_array(H: Union[HamiltonianMatrix, np.ndarray]) -> np.ndarray:
    entries = H.entries if isinstance(H, HamiltonianMatrix) else np.asarray(H, dtype=float)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise SpectrumError(f"Expected a square matrix, got shape {entries.shape}")
    return entries


def diagonalize(H: Union[HamiltonianMatrix, np.ndarray]) -> EigenSystem:
    """Dense symmetric eigendecomposition with explicit residual verification.

    The matrix is split into the connected components of its coupling graph and
    each component is diagonalized separately, so decoupled subsystems keep
    exactly zero amplitude on each other.
    """
    entries = _as_array(H)
    if not np.array_equal(entries, entries.T):
        raise SpectrumError("Matrix is not symmetric")
    if not np.all(np.isfinite(entries)):
        raise SpectrumError("Matrix contains non-finite entries")

    dim = entries.shape[0]
    graph = csr_matrix(entries != 0)
    n_components, component_of = connected_components(graph, directed=False)
    logger.debug(f"Diagonalizing {dim}x{dim} matrix in {n_components} connected components")

    values = np.empty(dim)
    vectors = np.zeros((dim, dim))
    column = 0
    for component in range(n_components):
        idx = np.flatnonzero(component_of == component)
        sub = entries[np.ix_(idx, idx)]
        try:
            sub_values, sub_vectors = linalg.eigh(sub, driver='evd')
        except linalg.LinAlgError as e:
            cond = np.linalg.cond(sub)
            raise SpectrumError(
                f"Eigensolver failed on a {len(idx)}x{len(idx)} block (condition number {cond:.3e}): {e}"
            ) from e
        n = len(idx)
        values[column:column + n] = sub_values
        vectors[np.ix_(idx, np.arange(column, column + n))] = sub_vectors
        column += n

    order = np.argsort(values, kind='stable')
    values = values[order]
    vectors = _fix_signs(vectors[:, order])

    verify_eigensystem(entries, values, vectors)
    values.setflags(write=False)
    vectors.setflags(write=False)
    return EigenSystem(values, vectors)


def verify_eigensystem(entries: np.ndarray, values: np.ndarray, vectors: np.ndarray) -> None:
    """Check residuals and orthonormality; raise SpectrumError on violation"""
    if values.size == 0:
        return
    scale = max(1.0, float(np.max(np.abs(entries))))
    residuals = np.linalg.norm(entries @ vectors - vectors * values, axis=0)
    bounds = RESIDUAL_TOLERANCE * np.maximum(scale, np.abs(values))
    worst = int(np.argmax(residuals / bounds))
    if residuals[worst] > bounds[worst]:
        raise SpectrumError(
            f"Residual {residuals[worst]:.3e} of eigenstate {worst} (E={values[worst]!r}) "
            f"exceeds {bounds[worst]:.3e}")

    gram = vectors.T @ vectors
    deviation = float(np.max(np.abs(gram - np.eye(values.size))))
    if deviation > ORTHONORMALITY_TOLERANCE:
        raise SpectrumError(f"Eigenvectors not orthonormal: max deviation {deviation:.3e}")


def diagonalize_by_symmetry(H: HamiltonianMatrix, T: SymmetryTransform) -> EigenSystem:
    """Diagonalize H_plus and H_minus separately and return the result in the input basis"""
    H_plus, H_minus = block_hamiltonians(H, T)
    values, vectors, branches = [], [], []
    for branch, block, rows in (('plus', H_plus, T.plus_indices), ('minus', H_minus, T.minus_indices)):
        es = diagonalize(block)
        # Block eigenvectors live on the rows of U belonging to this branch
        values.append(es.eigenvalues)
        vectors.append(T.U[rows].T @ es.eigenvectors)
        branches.append(np.full(es.dim, branch))
        logger.debug(f"{branch} block: {es.dim} eigenstates in [{es.eigenvalues[0]:.6g}, {es.eigenvalues[-1]:.6g}] peV")

    values = np.concatenate(values)
    vectors = np.hstack(vectors)
    branches = np.concatenate(branches)
    order = np.argsort(values, kind='stable')
    values, vectors, branches = values[order], _fix_signs(vectors[:, order]), branches[order]

    verify_eigensystem(H.entries, values, vectors)
    logger.info(f"Diagonalized {H.dim}x{H.dim} Hamiltonian by symmetry blocks")
    for array in (values, vectors, branches):
        array.setflags(write=False)
    return EigenSystem(values, vectors, branches)


def block_eigensystem(H: HamiltonianMatrix, T: SymmetryTransform, branch: str) -> EigenSystem:
    """Eigensystem of a single block, expressed in that block's g, w, kappa basis"""
    H_plus, H_minus = block_hamiltonians(H, T)
    return diagonalize(H_plus if branch == 'plus' else H_minus)


def project_initial(es: EigenSystem, b: BasisMap, label: str = 'g_alpha') -> np.ndarray:
    """Coefficients c_I = <I|label> of a basis state on the eigenstates"""
    if b.dim != es.dim:
        raise SpectrumError(f"Basis dimension {b.dim} does not match eigensystem dimension {es.dim}")
    try:
        index = b.index(label)
    except ModelError as e:
        raise SpectrumError(str(e)) from None
    return np.array(es.eigenvectors[index, :])


def degenerate_reduction(p: ModelParams) -> DegenerateReduction:
    """Closed-form spectrum of H_minus when every continuum level sits on the shell.

    Energies are measured from the shell (E_g), which must coincide with the band
    center.
    """
    require_valid(p)
    if p.band_center != p.E_g:
        raise ModelError("Degenerate reduction assumes band_center == E_g")

    E_w = p.E_w - p.E_g
    coupling_sq = p.N * p.W ** 2 + p.dV ** 2
    if coupling_sq == 0.0:
        logger.warning("Degenerate reduction without any coupling, returning the trivial spectrum")
        return DegenerateReduction(p.E_g, p.E_g + E_w, p.E_g, 0.0, 0.0, E3_approx=p.E_g)

    root = math.sqrt(0.25 * E_w ** 2 + coupling_sq)
    E2 = 0.5 * E_w + root
    # E2·E3 = −(NW² + ΔV²); avoids cancellation in E_w/2 − root
    E3 = -coupling_sq / E2
    norm = math.sqrt(coupling_sq)
    return DegenerateReduction(
        E1=p.E_g,
        E2=E2 + p.E_g,
        E3=E3 + p.E_g,
        w_kappa_overlap=p.W / norm,
        g_overlap=p.dV / norm,
        E3_approx=(-coupling_sq / E_w + p.E_g) if E_w != 0.0 else math.nan,
    )


def g_perp_overlap(p: ModelParams) -> float:
    """<g-|g_perp-> = sqrt(NW² / (NW² + ΔV²))"""
    nw2 = p.N * p.W ** 2
    total = nw2 + p.dV ** 2
    return math.sqrt(nw2 / total) if total > 0 else 1.0


def write_eigenstates_csv(es: EigenSystem, b: BasisMap, path, label: str = 'g_alpha') -> None:
    """One row per eigenstate: index, E_I, |<label|I>|^2"""
    c = project_initial(es, b, label)
    frame = pd.DataFrame({
        'index': np.arange(es.dim),
        'E_peV': es.eigenvalues,
        'weight': c ** 2,
    })
    write_csv(frame, path)
