"""Dense linear-algebra and density-matrix primitives.

Conventions
-----------
A state on ``n`` tensor factors with dimensions ``dims`` is a ``d x d``
complex array, ``d = prod(dims)``. Factor 0 is the slowest-varying
(most significant) index of the row-major flattening, i.e. the usual
``np.kron`` ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidPartition,
    InvalidSubset,
    NotHermitian,
    NotPSD,
    SizeLimit,
    TraceNotOne,
)

DEFAULT_MAX_DIM = 4096


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared across the library.

    ``herm`` is relative to the largest entry magnitude; the others are
    absolute.
    """

    herm: float = 1e-10
    trace: float = 1e-10
    psd: float = 1e-9
    eig: float = 1e-9

    def replace(self, **overrides) -> "Tolerances":
        unknown = set(overrides) - {"herm", "trace", "psd", "eig"}
        if unknown:
            raise KeyError(f"unknown tolerance(s): {sorted(unknown)}")
        return Tolerances(**{**self.__dict__, **overrides})


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class DensityMatrix:
    """A validated density operator together with its factor dimensions.

    Build instances through :func:`validate_density`; the constructor only
    checks shapes.
    """

    dims: tuple[int, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = tuple(int(x) for x in self.dims)
        object.__setattr__(self, "dims", dims)
        m = np.array(self.matrix, dtype=np.complex128)
        d = math.prod(dims)
        if m.shape != (d, d):
            raise DimensionMismatch(
                f"matrix shape {m.shape} does not match dims {dims} (d={d})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return len(self.dims)


@dataclass(frozen=True)
class PartitionScheme:
    """Ordered disjoint blocks of factor indices covering all factors."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(tuple(int(i) for i in b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not blocks:
            raise InvalidPartition("partition has no blocks")
        seen = set()
        for b in blocks:
            if not b:
                raise InvalidPartition("partition contains an empty block")
            for i in b:
                if i < 0:
                    raise InvalidPartition(f"negative factor index {i}")
                if i in seen:
                    raise InvalidPartition(f"factor {i} appears in more than one block")
                seen.add(i)

    @classmethod
    def parse(cls, text: str) -> "PartitionScheme":
        """Parse ``"0,1|2|3"``: comma-joined indices, ``|`` between blocks."""
        cleaned = "".join(text.split())
        if not cleaned:
            raise InvalidPartition("empty partition string")
        blocks = []
        for chunk in cleaned.split("|"):
            if not chunk:
                raise InvalidPartition(f"empty block in partition {text!r}")
            try:
                blocks.append(tuple(int(tok) for tok in chunk.split(",")))
            except ValueError:
                raise InvalidPartition(
                    f"non-integer factor index in block {chunk!r}") from None
        return cls(tuple(blocks))

    @classmethod
    def finest(cls, n: int) -> "PartitionScheme":
        return cls(tuple((i,) for i in range(n)))

    @property
    def k(self) -> int:
        return len(self.blocks)

    def __str__(self) -> str:
        return "|".join(",".join(str(i) for i in b) for b in self.blocks)

    def check(self, n_factors: int) -> None:
        """Raise :class:`InvalidPartition` unless the blocks cover ``range(n_factors)``."""
        covered = sorted(i for b in self.blocks for i in b)
        if covered != list(range(n_factors)):
            missing = sorted(set(range(n_factors)) - set(covered))
            extra = sorted(set(covered) - set(range(n_factors)))
            raise InvalidPartition(
                f"partition {self} does not cover factors 0..{n_factors - 1}"
                f" (missing {missing}, out of range {extra})")

    def block_dims(self, dims: Sequence[int]) -> tuple[int, ...]:
        self.check(len(dims))
        return tuple(math.prod(dims[i] for i in b) for b in self.blocks)

    def factors_of(self, subset: Iterable[int]) -> tuple[int, ...]:
        """Sorted factor indices belonging to the given block indices."""
        return tuple(sorted(i for l in subset for i in self.blocks[l]))


def subsets_by_mask(k: int):
    """Yield every nonempty subset of ``range(k)`` in ascending bitmask order."""
    for mask in range(1, 1 << k):
        yield tuple(l for l in range(k) if mask >> l & 1)


def set_partitions(n: int) -> list[PartitionScheme]:
    """All set partitions of ``range(n)`` (Bell-number many).

    Enumerated via restricted growth strings so the order is deterministic.
    """
    out = []

    def grow(prefix, top):
        if len(prefix) == n:
            blocks = [[] for _ in range(top + 1)]
            for i, b in enumerate(prefix):
                blocks[b].append(i)
            out.append(PartitionScheme(tuple(tuple(b) for b in blocks)))
            return
        for b in range(top + 2):
            grow(prefix + [b], max(top, b))

    if n < 1:
        return []
    grow([0], 0)
    return out


def kron(a: np.ndarray, b: np.ndarray, max_dim: int = DEFAULT_MAX_DIM) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) > max_dim:
        raise SizeLimit(f"Kronecker product of size {rows}x{cols} exceeds cap {max_dim}")
    return np.kron(a, b)


def kron_all(mats: Sequence[np.ndarray], max_dim: int = DEFAULT_MAX_DIM) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for m in mats:
        out = kron(out, m, max_dim)
    return out


def permute_factors(m: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder the tensor factors of an operator.

    Factor ``order[j]`` of the input becomes factor ``j`` of the output.
    """
    dims = tuple(dims)
    n = len(dims)
    if sorted(order) != list(range(n)):
        raise InvalidSubset(f"{order} is not a permutation of range({n})")
    t = np.asarray(m).reshape(dims + dims)
    t = t.transpose(list(order) + [n + i for i in order])
    d = math.prod(dims)
    return t.reshape(d, d)


def _check_subset(subset: Iterable[int], n: int) -> tuple[int, ...]:
    s = tuple(sorted(set(int(i) for i in subset)))
    if not s:
        raise InvalidSubset("subset of factors must be nonempty")
    if s[0] < 0 or s[-1] >= n:
        raise InvalidSubset(f"subset {s} out of range for {n} factors")
    return s


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on the factors in ``keep`` (returned in ascending order)."""
    dims = rho.dims
    n = len(dims)
    keep = _check_subset(keep, n)
    if len(keep) == n:
        return rho
    t = rho.matrix.reshape(dims + dims)
    rows = list(range(n))
    cols = [n + i if i in keep else i for i in range(n)]
    out = list(keep) + [n + i for i in keep]
    red = np.einsum(t, rows + cols, out)
    kept = tuple(dims[i] for i in keep)
    dk = math.prod(kept)
    return DensityMatrix(kept, red.reshape(dk, dk))


def partial_transpose(rho: DensityMatrix, block: Iterable[int]) -> np.ndarray:
    """Transpose the tensor indices of the factors in ``block``."""
    dims = rho.dims
    n = len(dims)
    block = _check_subset(block, n)
    axes = list(range(2 * n))
    for i in block:
        axes[i], axes[n + i] = n + i, i
    t = rho.matrix.reshape(dims + dims).transpose(axes)
    return t.reshape(rho.d, rho.d)


def hermiticity_defect(h: np.ndarray) -> float:
    """Max-norm of ``h - h^dagger`` relative to the largest entry magnitude."""
    h = np.asarray(h)
    scale = float(np.max(np.abs(h))) if h.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(h - h.conj().T))) / scale


def eigh(h: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.

    Backed by LAPACK through :func:`numpy.linalg.eigh`.
    """
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {h.shape}")
    defect = hermiticity_defect(h)
    if defect > tol.herm:
        raise NotHermitian(f"matrix is not Hermitian (relative defect {defect:.3e})", defect)
    return np.linalg.eigh(h)


def validate_density(m, dims: Sequence[int], tol: Tolerances = DEFAULT_TOL) -> DensityMatrix:
    """Check Hermiticity, unit trace and positivity, then wrap as a DensityMatrix.

    The stored matrix is the Hermitian part ``(m + m^dagger)/2``, which is
    a no-op for exactly Hermitian input.
    """
    m = np.asarray(m, dtype=np.complex128)
    dims = tuple(int(x) for x in dims)
    if any(x < 2 for x in dims):
        raise DimensionMismatch(f"factor dimensions must be >= 2, got {dims}")
    d = math.prod(dims)
    if m.shape != (d, d):
        raise DimensionMismatch(f"matrix shape {m.shape} does not match dims {dims}")
    if not np.all(np.isfinite(m)):
        raise NotHermitian("matrix has non-finite entries", float("inf"))
    defect = hermiticity_defect(m)
    if defect > tol.herm:
        raise NotHermitian(f"matrix is not Hermitian (relative defect {defect:.3e})", defect)
    h = (m + m.conj().T) / 2
    tr = float(np.trace(h).real)
    if abs(tr - 1.0) > tol.trace:
        raise TraceNotOne(f"trace is {tr!r}, expected 1 (deviation {tr - 1.0:.3e})", tr - 1.0)
    lam_min = float(np.linalg.eigvalsh(h)[0])
    if lam_min < -tol.psd:
        raise NotPSD(f"matrix has negative eigenvalue {lam_min:.3e}", lam_min)
    return DensityMatrix(dims, h)
