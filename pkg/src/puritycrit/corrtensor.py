"""Correlation tensors ``t_{a1..ak} = Tr[rho s_a1 (x) ... (x) s_ak]``.

The tensor is stored densely with one axis per block of the partition;
axis ``l`` has length ``d_l^2`` and index 0 on that axis is the identity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import InvalidSubset
from .matcore import DensityMatrix, PartitionScheme, permute_factors, subsets_by_mask
from .subasis import generators

IMAG_WARN = 1e-10


@dataclass(frozen=True)
class CorrelationTensor:
    partition: PartitionScheme
    block_dims: tuple[int, ...]
    values: np.ndarray

    @property
    def k(self) -> int:
        return len(self.block_dims)

    def norm2(self) -> float:
        """Squared HS norm of the full tensor (identity components included)."""
        return float(np.sum(self.values ** 2))


def _block_ordered_matrix(rho: DensityMatrix, partition: PartitionScheme) -> np.ndarray:
    order = [i for b in partition.blocks for i in b]
    if order == list(range(rho.n)):
        return rho.matrix
    return permute_factors(rho.matrix, rho.dims, order)


def corr_tensor(rho: DensityMatrix, partition: PartitionScheme) -> CorrelationTensor:
    block_dims = partition.block_dims(rho.dims)
    k = len(block_dims)
    m = _block_ordered_matrix(rho, partition)
    # axes interleaved as (i1, j1, i2, j2, ...), then contracted block by block
    t = m.reshape(block_dims + block_dims)
    t = t.transpose([x for l in range(k) for x in (l, k + l)])
    t = t.reshape([dl * dl for dl in block_dims])
    for l, dl in enumerate(block_dims):
        # Tr[rho s] = sum_ij rho_ij s_ji
        basis = generators(dl).matrices.transpose(0, 2, 1).reshape(dl * dl, dl * dl)
        t = np.moveaxis(np.tensordot(basis, t, axes=([1], [l])), 0, l)
    imag = float(np.max(np.abs(t.imag))) if t.size else 0.0
    if imag > IMAG_WARN:
        warnings.warn(
            f"correlation tensor has imaginary residue {imag:.3e}; keeping the real part",
            RuntimeWarning, stacklevel=2)
    values = np.ascontiguousarray(t.real)
    values.setflags(write=False)
    return CorrelationTensor(partition, block_dims, values)


def _check_block_subset(T: CorrelationTensor, subset: Iterable[int]) -> tuple[int, ...]:
    s = tuple(sorted(set(int(l) for l in subset)))
    if not s:
        raise InvalidSubset("subset of blocks must be nonempty")
    if s[0] < 0 or s[-1] >= T.k:
        raise InvalidSubset(f"block subset {s} out of range for k={T.k}")
    return s


def subtensor(T: CorrelationTensor, subset: Iterable[int]) -> np.ndarray:
    """Entries with nontrivial generators exactly on the blocks in ``subset``."""
    s = _check_block_subset(T, subset)
    index = tuple(slice(1, None) if l in s else 0 for l in range(T.k))
    return T.values[index]


def subtensor_norm2(T: CorrelationTensor, subset: Iterable[int]) -> float:
    return float(np.sum(subtensor(T, subset) ** 2))


def full_support(T: CorrelationTensor) -> np.ndarray:
    """The ``t^(A1...Ak)`` block: every index runs over generators only."""
    return subtensor(T, range(T.k))


def decomposition_check(T: CorrelationTensor) -> float:
    """``| ||T||^2 - 1 - sum_S ||t^(S)||^2 |`` over nonempty block subsets S."""
    parts = [1.0] + [subtensor_norm2(T, s) for s in subsets_by_mask(T.k)]
    return abs(T.norm2() - math.fsum(parts))
