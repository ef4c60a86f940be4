"""State factories, random ensembles and the negativity oracle.

Random functions take an ``rng`` argument that may be an integer seed, an
:class:`RngSeed`, or an existing :class:`numpy.random.Generator`. Seeds
are expanded into a Philox (counter-based) generator whose stream is
selected through the SeedSequence spawn key, so ``(seed, stream)`` pins
the sample sequence exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidPurity
from .matcore import DEFAULT_TOL, DensityMatrix, Tolerances, partial_transpose, validate_density
from .puritylink import purity
from .subasis import generators

BELL_STATES = ("phi+", "phi-", "psi+", "psi-")
ENSEMBLES = ("haar_pure", "hs_mixed", "bures_mixed", "fixed_purity")


@dataclass(frozen=True)
class RngSeed:
    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed) % 2**64, spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.Philox(ss))


def make_rng(rng=None, stream: int = 0) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngSeed):
        return rng.generator()
    if rng is None:
        rng = 0
    return RngSeed(int(rng), stream).generator()


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    dims: tuple[int, ...]
    target_purity: float | None = None
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.kind not in ENSEMBLES:
            raise ValueError(f"unknown ensemble {self.kind!r}; expected one of {ENSEMBLES}")
        object.__setattr__(self, "dims", tuple(int(x) for x in self.dims))
        if self.kind == "fixed_purity":
            d = math.prod(self.dims)
            if self.target_purity is None or not 1.0 / d <= self.target_purity <= 1.0:
                raise InvalidPurity(
                    f"target purity {self.target_purity} outside [1/{d}, 1]")

    def sample(self, rng) -> DensityMatrix:
        if self.kind == "haar_pure":
            return random_pure_haar(self.dims, rng)
        if self.kind == "hs_mixed":
            return random_mixed("hs", self.dims, rng)
        if self.kind == "bures_mixed":
            return random_mixed("bures", self.dims, rng)
        return random_fixed_purity(self.dims, self.target_purity, self.tolerance, rng)


def _dims(dims) -> tuple[int, ...]:
    if isinstance(dims, (int, np.integer)):
        return (int(dims),)
    return tuple(int(x) for x in dims)


def pure_state(psi: np.ndarray, dims: Sequence[int]) -> DensityMatrix:
    psi = np.asarray(psi, dtype=np.complex128)
    psi = psi / np.linalg.norm(psi)
    return validate_density(np.outer(psi, psi.conj()), dims)


def maximally_mixed(dims) -> DensityMatrix:
    dims = _dims(dims)
    d = math.prod(dims)
    return DensityMatrix(dims, np.eye(d) / d)


def tensor(*states: DensityMatrix) -> DensityMatrix:
    m = np.ones((1, 1), dtype=np.complex128)
    dims = ()
    for s in states:
        m = np.kron(m, s.matrix)
        dims = dims + s.dims
    return DensityMatrix(dims, m)


def bell_vector(which: str = "phi+") -> np.ndarray:
    s = 1 / math.sqrt(2)
    vecs = {
        "phi+": [s, 0, 0, s],
        "phi-": [s, 0, 0, -s],
        "psi+": [0, s, s, 0],
        "psi-": [0, s, -s, 0],
    }
    if which not in vecs:
        raise ValueError(f"unknown Bell state {which!r}; expected one of {BELL_STATES}")
    return np.array(vecs[which], dtype=np.complex128)


def bell_state(which: str = "phi+") -> DensityMatrix:
    return pure_state(bell_vector(which), (2, 2))


def werner(omega: float, which: str = "psi-") -> DensityMatrix:
    """``omega |Bell><Bell| + (1 - omega) I/4``; the singlet by default."""
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"Werner weight must lie in [0, 1], got {omega}")
    v = bell_vector(which)
    m = omega * np.outer(v, v.conj()) + (1 - omega) * np.eye(4) / 4
    return DensityMatrix((2, 2), m)


def bd_state(t11: float, t22: float, t33: float,
             tol: Tolerances = DEFAULT_TOL) -> DensityMatrix:
    """Bell-diagonal state ``(I + sum_i t_ii s_i (x) s_i) / 4``.

    Raises :class:`NotPSD` for points outside the Bell tetrahedron.
    """
    paulis = generators(2).generators
    m = np.eye(4, dtype=np.complex128)
    for t, s in zip((t11, t22, t33), paulis):
        m = m + t * np.kron(s, s)
    return validate_density(m / 4, (2, 2), tol)


def ghz_vector(n: int) -> np.ndarray:
    v = np.zeros(2 ** n, dtype=np.complex128)
    v[0] = v[-1] = 1 / math.sqrt(2)
    return v


def noisy_ghz(n: int, p: float) -> DensityMatrix:
    """``p |GHZ_n><GHZ_n| + (1 - p) I / 2^n``."""
    if n < 2:
        raise ValueError(f"noisy GHZ needs n >= 2 qubits, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing weight must lie in [0, 1], got {p}")
    v = ghz_vector(n)
    d = 2 ** n
    m = p * np.outer(v, v.conj()) + (1 - p) * np.eye(d) / d
    return DensityMatrix((2,) * n, m)


def ghz_threshold(n: int) -> float:
    """Mixing weight above which the noisy GHZ state is genuinely multipartite entangled."""
    return (2 ** (n - 1) - 1) / (2 ** n - 1)


def _ginibre(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def haar_unitary(d: int, rng=None) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with the phase fix."""
    rng = make_rng(rng)
    q, r = np.linalg.qr(_ginibre(rng, (d, d)))
    ph = np.diagonal(r)
    return q * (ph / np.abs(ph))


def random_pure_haar(dims, rng=None) -> DensityMatrix:
    dims = _dims(dims)
    rng = make_rng(rng)
    psi = _ginibre(rng, math.prod(dims))
    psi /= np.linalg.norm(psi)
    return DensityMatrix(dims, np.outer(psi, psi.conj()))


def random_mixed(ensemble: str, dims, rng=None) -> DensityMatrix:
    """Hilbert-Schmidt (``"hs"``) or Bures (``"bures"``) random mixed state."""
    dims = _dims(dims)
    rng = make_rng(rng)
    d = math.prod(dims)
    g = _ginibre(rng, (d, d))
    if ensemble == "hs":
        a = g
    elif ensemble == "bures":
        a = (np.eye(d) + haar_unitary(d, rng)) @ g
    else:
        raise ValueError(f"unknown ensemble {ensemble!r}; expected 'hs' or 'bures'")
    m = a @ a.conj().T
    m /= np.trace(m).real
    return DensityMatrix(dims, (m + m.conj().T) / 2)


def random_spectrum_fixed_purity(d: int, target: float, rng=None,
                                 max_attempts: int = 100_000) -> np.ndarray:
    """Eigenvalues on the simplex with ``sum(lam^2) == target``.

    A Dirichlet draw gives a direction from the centroid; the ray is
    stretched onto the purity sphere by a quadratic solve and rejected if
    it leaves the simplex. The Dirichlet concentration is halved after
    every 16 rejections so high-purity targets, which only exist near the
    simplex vertices, stay reachable in high dimension.
    """
    rng = make_rng(rng)
    if not 1.0 / d - 1e-15 <= target <= 1.0 + 1e-15:
        raise InvalidPurity(f"target purity {target} outside [1/{d}, 1]")
    c = 1.0 / d
    excess = max(target - c, 0.0)
    if excess == 0.0:
        return np.full(d, c)
    if target >= 1.0:
        lam = np.zeros(d)
        lam[rng.integers(d)] = 1.0
        return lam
    alpha = 1.0
    for attempt in range(max_attempts):
        if attempt and attempt % 16 == 0:
            alpha = max(alpha / 2, 1e-4)
        x = rng.dirichlet(np.full(d, alpha))
        if not np.all(np.isfinite(x)):
            continue
        v = x - c
        nv = float(v @ v)
        if nv == 0.0:
            continue
        lam = c + math.sqrt(excess / nv) * v
        if lam.min() >= 0.0:
            return lam
    raise InvalidPurity(f"could not reach purity {target} in {max_attempts} attempts")


def random_fixed_purity(dims, target_P: float, tol: float = 1e-6, rng=None) -> DensityMatrix:
    """Random state with a prescribed purity: random spectrum, Haar eigenbasis."""
    dims = _dims(dims)
    rng = make_rng(rng)
    d = math.prod(dims)
    lam = random_spectrum_fixed_purity(d, target_P, rng)
    u = haar_unitary(d, rng)
    m = (u * lam) @ u.conj().T
    rho = DensityMatrix(dims, (m + m.conj().T) / 2)
    got = purity(rho)
    if abs(got - target_P) > tol:
        raise InvalidPurity(f"sampled purity {got} misses target {target_P} by more than {tol}")
    return rho


def negativity(rho: DensityMatrix, block) -> float:
    """Doubled negativity ``2 * sum |negative eigenvalues of rho^T_block|``.

    With this convention a two-qubit Bell state scores 1.
    """
    block = (block,) if isinstance(block, (int, np.integer)) else tuple(block)
    ev = np.linalg.eigvalsh(partial_transpose(rho, block))
    return float(2.0 * max(0.0, -ev[ev < 0].sum()))
