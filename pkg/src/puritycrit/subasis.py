"""Generalized Gell-Mann basis normalized to ``Tr[s_a s_b] = d delta_ab``.

Index 0 is the identity. Indices ``1 .. d^2-1`` follow a fixed order:
the ``d(d-1)/2`` symmetric off-diagonal generators, then the
antisymmetric ones (both over pairs ``j < k`` in lexicographic order),
then the ``d-1`` diagonal ones. For ``d = 2`` this is ``(X, Y, Z)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidDimension


@dataclass(frozen=True)
class GeneratorBasis:
    dim: int
    matrices: np.ndarray  # shape (d^2, d, d); matrices[0] is the identity

    @property
    def generators(self) -> np.ndarray:
        return self.matrices[1:]

    def __len__(self):
        return self.matrices.shape[0]


def _gell_mann(d: int) -> np.ndarray:
    pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
    mats = [np.eye(d, dtype=np.complex128)]
    for j, k in pairs:
        m = np.zeros((d, d), dtype=np.complex128)
        m[j, k] = m[k, j] = 1.0
        mats.append(m)
    for j, k in pairs:
        m = np.zeros((d, d), dtype=np.complex128)
        m[j, k] = -1j
        m[k, j] = 1j
        mats.append(m)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        mats.append(np.diag(np.sqrt(2.0 / (l * (l + 1))) * diag).astype(np.complex128))
    out = np.array(mats)
    # standard Gell-Mann matrices have Tr = 2 delta; rescale the generators only
    out[1:] *= np.sqrt(d / 2.0)
    return out


@lru_cache(maxsize=None)
def generators(d: int) -> GeneratorBasis:
    """Identity plus the ``d^2 - 1`` SU(d) generators for local dimension ``d``."""
    if int(d) != d or d < 2:
        raise InvalidDimension(f"local dimension must be an integer >= 2, got {d}")
    d = int(d)
    mats = _gell_mann(d)
    mats.setflags(write=False)
    return GeneratorBasis(d, mats)


def casimir_check(d: int) -> float:
    """Max-norm deviation of ``sum_a s_a^2`` from ``(d^2 - 1) * I``.

    This summed identity is what the total-uncertainty equality needs; the
    individual squares equal the identity only for ``d = 2``.
    """
    g = generators(d).generators
    total = np.einsum("aij,ajk->ik", g, g)
    return float(np.max(np.abs(total - (d * d - 1) * np.eye(d))))


def expand(h: np.ndarray) -> np.ndarray:
    """Coefficients ``c_a = Tr[h s_a] / d`` so that ``h = sum_a c_a s_a``."""
    h = np.asarray(h)
    d = h.shape[0]
    basis = generators(d).matrices
    return np.einsum("ij,aji->a", h, basis) / d
