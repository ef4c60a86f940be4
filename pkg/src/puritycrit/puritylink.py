"""Subset purities, Renyi-2 entropies and the purity/uncertainty equalities.

The central identity expresses the full-support correlation norm of a
k-partition as an alternating sum over all nonempty block subsets S::

    ||t^(A1..Ak)||^2 = sum_S (-1)^(k-|S|) d_S P^S + (-1)^k

and the total uncertainty of all full-support generator products is
``U_T = N - ||t^(A1..Ak)||^2`` with ``N = prod_l (d_l^2 - 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corrtensor import corr_tensor
from .errors import DimensionMismatch, IncompleteMap, InvalidPurity, InvalidSubset, SizeLimit
from .matcore import (
    DensityMatrix,
    PartitionScheme,
    kron_all,
    partial_trace,
    permute_factors,
    subsets_by_mask,
)
from .subasis import generators

DEFAULT_MAX_TERMS = 100_000


@dataclass(frozen=True)
class PurityMap:
    """Purities of every nonempty subset of blocks, keyed by sorted block tuples."""

    partition: PartitionScheme
    block_dims: tuple[int, ...]
    entries: Mapping[tuple[int, ...], float]

    def __getitem__(self, subset) -> float:
        return self.entries[tuple(sorted(subset))]

    def subset_dim(self, subset: Sequence[int]) -> int:
        return math.prod(self.block_dims[l] for l in subset)


@dataclass(frozen=True)
class UncertaintyBudget:
    n_products: int
    total: float
    tnorm2: float


def purity(rho: DensityMatrix) -> float:
    """``Tr[rho^2]``, computed as the squared Frobenius norm."""
    m = rho.matrix
    return float(np.vdot(m, m).real)


def reduced_purities(rho: DensityMatrix, partition: PartitionScheme) -> PurityMap:
    block_dims = partition.block_dims(rho.dims)
    entries = {}
    for s in subsets_by_mask(partition.k):
        entries[s] = purity(partial_trace(rho, partition.factors_of(s)))
    return PurityMap(partition, block_dims, entries)


def purity_map_from_values(block_dims: Sequence[int], values: Mapping) -> PurityMap:
    """Build a PurityMap from explicit values (e.g. measured purities)."""
    k = len(block_dims)
    entries = {tuple(sorted(s)): float(p) for s, p in values.items()}
    return PurityMap(PartitionScheme.finest(k), tuple(block_dims), entries)


def renyi2(p: float) -> float:
    """Second Renyi entropy ``-ln P`` (natural log)."""
    if not p > 0:
        raise InvalidPurity(f"purity must be positive, got {p}")
    return -math.log(p)


def _signed_terms(pm: PurityMap, block_dims: Sequence[int], weight):
    k = len(block_dims)
    terms = []
    for s in subsets_by_mask(k):
        if s not in pm.entries:
            raise IncompleteMap(f"purity map is missing subset {list(s)}")
        sign = -1 if (k - len(s)) % 2 else 1
        d_s = math.prod(block_dims[l] for l in s)
        terms.append(sign * d_s * weight(pm.entries[s]))
    return terms


def tnorm2_from_purities(pm: PurityMap, block_dims: Sequence[int] | None = None) -> float:
    """Full-support correlation norm from the ``2^k - 1`` subset purities."""
    block_dims = tuple(pm.block_dims if block_dims is None else block_dims)
    k = len(block_dims)
    terms = _signed_terms(pm, block_dims, lambda p: p)
    terms.append(float((-1) ** k))
    return math.fsum(terms)


def uncertainty_count(block_dims: Sequence[int]) -> int:
    return math.prod(d * d - 1 for d in block_dims)


def total_uncertainty_from_purities(pm: PurityMap, block_dims: Sequence[int] | None = None
                                    ) -> UncertaintyBudget:
    block_dims = tuple(pm.block_dims if block_dims is None else block_dims)
    count = uncertainty_count(block_dims)
    t2 = tnorm2_from_purities(pm, block_dims)
    return UncertaintyBudget(count, count - t2, t2)


@lru_cache(maxsize=64)
def _full_support_operators(dims: tuple[int, ...], blocks: tuple[tuple[int, ...], ...]):
    """Every full-support generator product, embedded in the original factor order."""
    partition = PartitionScheme(blocks)
    block_dims = partition.block_dims(dims)
    order = [i for b in blocks for i in b]
    inverse = list(np.argsort(order))
    ordered_dims = [dims[i] for i in order]
    ops = []
    for combo in product(*(range(1, dl * dl) for dl in block_dims)):
        m = kron_all([generators(dl).matrices[a] for dl, a in zip(block_dims, combo)])
        ops.append(permute_factors(m, ordered_dims, inverse))
    ops = np.array(ops)
    squares = ops @ ops
    ops.setflags(write=False)
    squares.setflags(write=False)
    return ops, squares


def total_uncertainty_direct(rho: DensityMatrix, partition: PartitionScheme,
                             max_terms: int = DEFAULT_MAX_TERMS) -> float:
    """``sum_comb <s^2> - <s>^2`` by explicit enumeration of generator products."""
    block_dims = partition.block_dims(rho.dims)
    count = uncertainty_count(block_dims)
    if count > max_terms:
        raise SizeLimit(f"{count} generator products exceed the cap of {max_terms}")
    ops, squares = _full_support_operators(rho.dims, partition.blocks)
    m = rho.matrix
    ev = np.einsum("ij,nji->n", m, ops).real
    ev2 = np.einsum("ij,nji->n", m, squares).real
    return math.fsum(ev2) - math.fsum(ev * ev)


def _qubit_reduction(rho: DensityMatrix, block) -> DensityMatrix:
    factors = (block,) if isinstance(block, (int, np.integer)) else tuple(block)
    if not factors:
        raise InvalidSubset("qubit block must name at least one factor")
    red = partial_trace(rho, factors)
    if red.d != 2:
        raise DimensionMismatch(f"block {factors} has dimension {red.d}, expected a qubit")
    return red


def _qubit_factor(rho: DensityMatrix, block) -> int:
    factors = (block,) if isinstance(block, (int, np.integer)) else tuple(block)
    if len(factors) != 1 or rho.dims[factors[0]] != 2:
        raise DimensionMismatch(f"block {factors} is not a single qubit factor")
    return int(factors[0])


def bloch_vector(rho: DensityMatrix, block) -> np.ndarray:
    red = _qubit_reduction(rho, block)
    return np.einsum("ij,aji->a", red.matrix, generators(2).generators).real


def rest_single_qubit(rho: DensityMatrix, qubit_block) -> float:
    """Robertson-Schrodinger rest ``2(1 - P^A)``, the qubit's linear entropy."""
    return 2.0 * (1.0 - purity(_qubit_reduction(rho, qubit_block)))


def _variance(m: np.ndarray, op: np.ndarray) -> float:
    mean = np.einsum("ij,ji->", m, op).real
    second = np.einsum("ij,ji->", m, op @ op).real
    return float(second - mean * mean)


def rs_check_single_qubit(rho: DensityMatrix, qubit_block, i: int, j: int) -> float:
    """Residual of the saturated Robertson-Schrodinger equality for Paulis ``i != j``.

    The left side uses variances measured on the reduced state; the right
    side uses the Bloch components and the reduced purity.
    """
    if i == j or not {i, j} <= {1, 2, 3}:
        raise InvalidSubset(f"need two distinct Pauli labels in 1..3, got {i}, {j}")
    red = _qubit_reduction(rho, qubit_block)
    paulis = generators(2).matrices
    lhs = _variance(red.matrix, paulis[i]) * _variance(red.matrix, paulis[j])
    r = bloch_vector(red, 0)
    k = 6 - i - j
    rhs = r[k - 1] ** 2 + r[i - 1] ** 2 * r[j - 1] ** 2 + 2.0 * (1.0 - purity(red))
    return abs(lhs - rhs)


def rest_two_qubit_tdiag(pA: float, pB: float, pAB: float) -> float:
    return 2.0 * (pA + pB - 2.0 * pAB)


def uncertainty_sums_two_qubit(rho: DensityMatrix, blockA, blockB):
    """Variance sums ``(sum_i D^2 s_ii, sum_ij D^2 s_ij, sum_i D^2 s_i,A)``.

    Variances are taken on the two-qubit reduction over ``blockA`` then
    ``blockB``.
    """
    # a qubit block is a single factor since every factor has dimension >= 2
    a = _qubit_factor(rho, blockA)
    b = _qubit_factor(rho, blockB)
    if a == b:
        raise InvalidSubset("the two qubit blocks must be different")
    m = partial_trace(rho, (a, b)).matrix
    if a > b:
        m = permute_factors(m, (2, 2), (1, 0))
    paulis = generators(2).matrices
    var = np.array([[_variance(m, np.kron(paulis[a], paulis[b])) for b in (1, 2, 3)]
                    for a in (1, 2, 3)])
    eye = np.eye(2)
    single = sum(_variance(m, np.kron(paulis[a], eye)) for a in (1, 2, 3))
    return float(np.trace(var)), float(var.sum()), float(single)


def tnorm2_direct(rho: DensityMatrix, partition: PartitionScheme) -> float:
    """Full-support correlation norm read off the correlation tensor."""
    T = corr_tensor(rho, partition)
    idx = tuple(slice(1, None) for _ in range(T.k))
    return float(np.sum(T.values[idx] ** 2))
