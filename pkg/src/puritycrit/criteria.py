"""Entanglement and nonlocality criteria built on the purity equalities.

For a k-partition with block dimensions ``d_l`` the spread term

    D = sum_S (-1)^(k-|S|) d_S (1 - P^S)

is non-negative for every k-separable state, and equals
``prod_l (d_l - 1) - ||t^(A1..Ak)||^2``. A negative value therefore
certifies entanglement across the partition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corrtensor import CorrelationTensor, corr_tensor, full_support
from .errors import Inapplicable, InvalidFrame
from .matcore import DensityMatrix, PartitionScheme, eigh, permute_factors
from .puritylink import (
    PurityMap,
    _signed_terms,
    reduced_purities,
    renyi2,
    rest_two_qubit_tdiag,
    tnorm2_from_purities,
)
from .subasis import generators

VIOLATED = "violated"
SATISFIED = "satisfied"
INAPPLICABLE = "inapplicable"

# equality with a threshold counts as satisfied; violation must be strict
TIE_TOL = 1e-12


def _strictly_above(value: float, bound: float) -> bool:
    return value > bound + TIE_TOL


@dataclass(frozen=True)
class CriterionReport:
    partition: PartitionScheme
    block_dims: tuple[int, ...]
    purities: PurityMap
    tnorm2: float
    tnorm2_direct: float
    threshold: float
    delta_tilde: float
    verdicts: dict = field(default_factory=dict)
    auxiliary: dict = field(default_factory=dict)

    @property
    def entangled(self) -> bool:
        return self.verdicts.get("ksep") == VIOLATED


def ksep_threshold(block_dims: Sequence[int]) -> int:
    return math.prod(d - 1 for d in block_dims)


def ksep_delta_tilde(pm: PurityMap, block_dims: Sequence[int] | None = None) -> float:
    block_dims = tuple(pm.block_dims if block_dims is None else block_dims)
    return math.fsum(_signed_terms(pm, block_dims, lambda p: 1.0 - p))


def entropic_form(pm: PurityMap, block_dims: Sequence[int] | None = None) -> float:
    """Same sum as :func:`ksep_delta_tilde`, written with ``1 - exp(-S_2)``."""
    block_dims = tuple(pm.block_dims if block_dims is None else block_dims)
    return math.fsum(_signed_terms(pm, block_dims, lambda p: 1.0 - math.exp(-renyi2(p))))


def _is_two_qubit(partition: PartitionScheme, block_dims) -> bool:
    return partition.k == 2 and tuple(block_dims) == (2, 2)


def ksep_verdict(rho: DensityMatrix, partition: PartitionScheme) -> CriterionReport:
    """Evaluate the k-separability test by the purity route and the tensor route.

    CHSH and three-qudit GME checks are attached when the partition shape
    allows them; otherwise their verdicts read ``inapplicable``.
    """
    block_dims = partition.block_dims(rho.dims)
    pm = reduced_purities(rho, partition)
    T = corr_tensor(rho, partition)
    t2_pur = tnorm2_from_purities(pm, block_dims)
    t2_dir = float(np.sum(full_support(T) ** 2))
    threshold = float(ksep_threshold(block_dims))
    delta = ksep_delta_tilde(pm, block_dims)

    verdicts = {
        "ksep": VIOLATED if delta < -TIE_TOL else SATISFIED,
        "norm_form": VIOLATED if _strictly_above(t2_dir, threshold) else SATISFIED,
    }
    aux = {"entropic_form": entropic_form(pm, block_dims)}

    if _is_two_qubit(partition, block_dims):
        u, chsh = _chsh_from_tensor(T)
        verdicts["chsh"] = chsh
        aux["u"] = tuple(float(x) for x in u)
        aux["rest"] = rest_two_qubit_tdiag(pm[(0,)], pm[(1,)], pm[(0, 1)])
    else:
        verdicts["chsh"] = INAPPLICABLE

    if partition.k == 3 and len(set(block_dims)) == 1:
        lhs = _gme_purity_lhs(pm, block_dims[0])
        bound = gme_bound(block_dims[0])
        verdicts["gme3"] = VIOLATED if _strictly_above(t2_dir, bound) else SATISFIED
        aux["gme_bound"] = bound
        aux["gme_purity_lhs"] = lhs
    else:
        verdicts["gme3"] = INAPPLICABLE

    return CriterionReport(partition, block_dims, pm, t2_pur, t2_dir, threshold,
                           delta, verdicts, aux)


def gme_bound(d: int) -> float:
    """Three-qudit bound ``8 (d-1)(d^2-1) / d^3`` on the full-support norm."""
    return 8.0 * (d - 1) * (d * d - 1) / d ** 3


def _gme_purity_lhs(pm: PurityMap, d: int) -> float:
    singles = [pm[(i,)] for i in range(3)]
    pairs = [pm[s] for s in ((0, 1), (0, 2), (1, 2))]
    return math.fsum([d ** 3 * pm[(0, 1, 2)], d * math.fsum(singles),
                      -d * d * math.fsum(pairs), -1.0])


@dataclass(frozen=True)
class GMEResult:
    tnorm2: float
    bound: float
    verdict: str
    purity_lhs: float


def gme_three_qudit_check(rho: DensityMatrix, partition: PartitionScheme) -> GMEResult:
    block_dims = partition.block_dims(rho.dims)
    if partition.k != 3 or len(set(block_dims)) != 1:
        raise Inapplicable(
            f"GME bound needs exactly three blocks of equal dimension, got {block_dims}")
    d = block_dims[0]
    T = corr_tensor(rho, partition)
    t2 = float(np.sum(full_support(T) ** 2))
    bound = gme_bound(d)
    pm = reduced_purities(rho, partition)
    verdict = VIOLATED if _strictly_above(t2, bound) else SATISFIED
    return GMEResult(t2, bound, verdict, _gme_purity_lhs(pm, d))


def _chsh_from_tensor(T: CorrelationTensor):
    t = full_support(T)
    vals, _ = eigh(t.T @ t)
    u = np.clip(vals[::-1], 0.0, None)
    verdict = VIOLATED if _strictly_above(u[0] + u[1], 1.0) else SATISFIED
    return u, verdict


@dataclass(frozen=True)
class CHSHResult:
    u: tuple[float, float, float]
    verdict: str
    rest: float
    purity_form: str

    @property
    def u_sum(self) -> float:
        return self.u[0] + self.u[1]


def chsh_horodecki(rho: DensityMatrix, partition: PartitionScheme) -> CHSHResult:
    """Horodecki test: CHSH is violated iff the two largest eigenvalues of
    ``t^T t`` sum above 1.

    The purity form ``-R > u3`` is evaluated alongside, with ``R`` the
    two-qubit rest from the subset purities.
    """
    block_dims = partition.block_dims(rho.dims)
    if not _is_two_qubit(partition, block_dims):
        raise Inapplicable(f"CHSH criterion needs a 2x2 qubit bipartition, got {block_dims}")
    u, verdict = _chsh_from_tensor(corr_tensor(rho, partition))
    pm = reduced_purities(rho, partition)
    rest = rest_two_qubit_tdiag(pm[(0,)], pm[(1,)], pm[(0, 1)])
    purity_form = VIOLATED if _strictly_above(-rest, u[2]) else SATISFIED
    return CHSHResult(tuple(float(x) for x in u), verdict, rest, purity_form)


def bell_partial_sum(T: CorrelationTensor, axes) -> float:
    """Sum of squared correlations over two chosen directions per qubit.

    ``axes[l]`` is a ``2 x 3`` array whose rows are orthonormal Bloch
    directions for qubit block ``l``; the full-support tensor is projected
    onto them and the ``2^n`` squared entries are summed.
    """
    if any(d != 2 for d in T.block_dims):
        raise Inapplicable(f"Bell partial sum needs qubit blocks, got {T.block_dims}")
    axes = [np.asarray(a, dtype=float) for a in axes]
    if len(axes) != T.k:
        raise InvalidFrame(f"need one frame per qubit ({T.k}), got {len(axes)}")
    for a in axes:
        if a.shape != (2, 3) or np.max(np.abs(a @ a.T - np.eye(2))) > 1e-10:
            raise InvalidFrame("each frame must hold two orthonormal 3-vectors")
    t = full_support(T)
    for l, a in enumerate(axes):
        t = np.moveaxis(np.tensordot(a, t, axes=([1], [l])), 0, l)
    return float(np.sum(t ** 2))


def random_frame(rng) -> np.ndarray:
    """Two orthonormal Bloch directions drawn uniformly (first rows of a random rotation)."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    return q.T[:2]


def best_bell_partial_sum(T: CorrelationTensor, rng, restarts: int = 64) -> tuple[float, list]:
    """Largest partial sum over random frames (no global optimization)."""
    best, best_axes = -1.0, None
    for _ in range(restarts):
        axes = [random_frame(rng) for _ in range(T.k)]
        val = bell_partial_sum(T, axes)
        if val > best:
            best, best_axes = val, axes
    return best, best_axes


def t_diagonalize(t: np.ndarray):
    """Proper rotations ``O1, O2`` with ``O1^T t O2`` diagonal.

    Uses the SVD ``t = U S V^T``; a reflection in ``U`` or ``V`` is removed
    by negating the column paired with the smallest singular value and
    moving that sign into the diagonal.
    """
    t = np.asarray(t, dtype=float)
    U, S, Vt = np.linalg.svd(t)
    V = Vt.T
    diag = S.copy()
    if np.linalg.det(U) < 0:
        U[:, 2] *= -1
        diag[2] *= -1
    if np.linalg.det(V) < 0:
        V[:, 2] *= -1
        diag[2] *= -1
    return U, V, diag


def rotation_to_su2(O: np.ndarray) -> np.ndarray:
    """A unitary ``W`` with ``W s_j W^dagger = sum_i O_ij s_i`` for a proper rotation ``O``."""
    paulis = generators(2).generators
    # the adjoint action is linear in W, so solve it as a 4x4 null-space problem
    rows = []
    for j in range(3):
        target = np.einsum("i,iab->ab", O[:, j], paulis)
        # W s_j - target W = 0, vectorized over W (row-major)
        rows.append(np.kron(np.eye(2), paulis[j].T) - np.kron(target, np.eye(2)))
    A = np.vstack(rows)
    _, _, vh = np.linalg.svd(A)
    W = vh[-1].conj().reshape(2, 2)
    W = W / np.sqrt(np.linalg.det(W))
    return W


def t_diagonal_form(rho: DensityMatrix, partition: PartitionScheme):
    """Locally rotate a two-qubit state so its correlation matrix is diagonal.

    Returns the rotated state and the diagonal.
    """
    block_dims = partition.block_dims(rho.dims)
    if not _is_two_qubit(partition, block_dims):
        raise Inapplicable("T-diagonal form needs a 2x2 qubit bipartition")
    t = full_support(corr_tensor(rho, partition))
    O1, O2, diag = t_diagonalize(t)
    # rho -> (W_A x W_B) rho (...)^dagger maps t -> O_A t O_B^T
    W = np.kron(rotation_to_su2(O1.T), rotation_to_su2(O2.T))
    order = [i for b in partition.blocks for i in b]
    m = rho.matrix if order == [0, 1] else permute_factors(rho.matrix, rho.dims, order)
    m = W @ m @ W.conj().T
    if order != [0, 1]:
        m = permute_factors(m, (2, 2), list(np.argsort(order)))
    return DensityMatrix(rho.dims, (m + m.conj().T) / 2), diag
