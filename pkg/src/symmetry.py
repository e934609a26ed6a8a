import logging
import math
import os
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import pandas as pd

from src.errors import SymmetryError
from src.model import BasisMap, HamiltonianMatrix, kappa_label
from src.utils.helpers import ensure_dir, write_csv

logger = logging.getLogger(__name__)

BRANCHES = ('plus', 'minus')
LEAKAGE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SymmetryTransform:
    """Orthogonal map from the input basis to the (x_alpha ± x_beta)/sqrt(2) basis.

    Row ordering inside each block is g, w, kappa_1..N; the plus block comes first.
    """
    U: np.ndarray
    plus_indices: np.ndarray
    minus_indices: np.ndarray
    labels: Tuple[str, ...]

    @property
    def dim(self) -> int:
        return self.U.shape[0]

    def block_indices(self, branch: str) -> np.ndarray:
        if branch == 'plus':
            return self.plus_indices
        if branch == 'minus':
            return self.minus_indices
        raise SymmetryError(f"Unknown branch: {branch}")


def pair_label(label: str, branch: str) -> str:
    """Name of the symmetry-adapted state built from an alpha label, e.g. g_alpha -> g+"""
    sign = '+' if branch == 'plus' else '-'
    if label.startswith('kappa_alpha_'):
        return f"kappa{sign}_{label.rsplit('_', 1)[1]}"
    return f"{label.split('_')[0]}{sign}"


def build_transform(b: BasisMap) -> SymmetryTransform:
    """Construct the exact ±1/sqrt(2) transform for every alpha/beta label pair"""
    alpha_labels = ['g_alpha', 'w_alpha'] + [kappa_label('alpha', k) for k in range(1, b.N + 1)]
    half = len(alpha_labels)
    s = 1.0 / math.sqrt(2.0)

    U = np.zeros((b.dim, b.dim))
    labels = []
    for offset, branch, sign in ((0, 'plus', 1.0), (half, 'minus', -1.0)):
        for row, label in enumerate(alpha_labels):
            partner = label.replace('alpha', 'beta')
            U[offset + row, b.index(label)] = s
            U[offset + row, b.index(partner)] = sign * s
            labels.append(pair_label(label, branch))

    U.setflags(write=False)
    return SymmetryTransform(
        U=U,
        plus_indices=np.arange(0, half),
        minus_indices=np.arange(half, 2 * half),
        labels=tuple(labels),
    )


def transform_hamiltonian(H: HamiltonianMatrix, T: SymmetryTransform) -> HamiltonianMatrix:
    """Return U H U^T and check that the two branches decouple"""
    if H.dim != T.dim:
        raise SymmetryError(f"Dimension mismatch: Hamiltonian {H.dim}, transform {T.dim}")
    Ht = T.U @ H.entries @ T.U.T
    # Restore exact symmetry lost to rounding in the two products
    Ht = 0.5 * (Ht + Ht.T)

    leakage = off_block_leakage(Ht, T)
    scale = H.max_abs()
    if leakage > LEAKAGE_TOLERANCE * max(scale, 1e-300):
        raise SymmetryError(
            f"Plus/minus blocks do not decouple: leakage {leakage:.3e} exceeds "
            f"{LEAKAGE_TOLERANCE:g} x max|H| = {LEAKAGE_TOLERANCE * scale:.3e}")
    logger.debug(f"Transformed Hamiltonian, off-block leakage {leakage:.3e}")
    Ht.setflags(write=False)
    return HamiltonianMatrix(Ht)


def off_block_leakage(entries: np.ndarray, T: SymmetryTransform) -> float:
    """Largest magnitude between the plus and minus blocks"""
    cross = entries[np.ix_(T.plus_indices, T.minus_indices)]
    return float(np.max(np.abs(cross))) if cross.size else 0.0


def extract_blocks(Ht: HamiltonianMatrix, T: SymmetryTransform) -> Tuple[np.ndarray, np.ndarray]:
    """Split the transformed Hamiltonian into H_plus and H_minus"""
    if Ht.dim != T.dim:
        raise SymmetryError(f"Dimension mismatch: Hamiltonian {Ht.dim}, transform {T.dim}")
    leakage = off_block_leakage(Ht.entries, T)
    if leakage > LEAKAGE_TOLERANCE * max(Ht.max_abs(), 1e-300):
        raise SymmetryError(f"Off-block leakage {leakage:.3e} signals a model assembly error")
    H_plus = np.array(Ht.entries[np.ix_(T.plus_indices, T.plus_indices)])
    H_minus = np.array(Ht.entries[np.ix_(T.minus_indices, T.minus_indices)])
    return H_plus, H_minus


def block_hamiltonians(H: HamiltonianMatrix, T: SymmetryTransform) -> Tuple[np.ndarray, np.ndarray]:
    """Transform and split in one step"""
    return extract_blocks(transform_hamiltonian(H, T), T)


def dump_blocks(H_plus: np.ndarray, H_minus: np.ndarray, T: SymmetryTransform, out_dir: str) -> None:
    """Write both blocks as labelled CSV matrices for inspection"""
    ensure_dir(out_dir)
    for branch, block in (('plus', H_plus), ('minus', H_minus)):
        labels = [T.labels[i] for i in T.block_indices(branch)]
        frame = pd.DataFrame(block, columns=labels)
        frame.insert(0, 'label', labels)
        write_csv(frame, os.path.join(out_dir, f'H_{branch}.csv'))
