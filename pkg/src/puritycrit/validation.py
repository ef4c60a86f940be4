"""Invariant suite run by ``puritycrit validate``.

Each check records a pass/fail assertion; the suite never stops at the
first failure so the digest lists every breach.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corrtensor import corr_tensor, decomposition_check, full_support
from .criteria import ksep_delta_tilde, ksep_threshold, ksep_verdict
from .experiments import mm_reduction_residual, substream
from .matcore import PartitionScheme, partial_trace, set_partitions
from .puritylink import (
    purity,
    reduced_purities,
    rs_check_single_qubit,
    tnorm2_from_purities,
    total_uncertainty_direct,
    total_uncertainty_from_purities,
)
from .states import negativity, random_mixed, random_pure_haar, werner
from .subasis import casimir_check

SUITE_DIMS = ((2, 2), (2, 3), (3, 3), (2, 2, 2))


@dataclass
class ValidationDigest:
    assertions: int = 0
    failures: list = field(default_factory=list)

    def check(self, ok: bool, label: str) -> None:
        self.assertions += 1
        if not ok:
            self.failures.append(label)

    @property
    def passed(self) -> bool:
        return not self.failures

    def render(self, limit: int = 20) -> str:
        head = f"{self.assertions} assertions, {len(self.failures)} failed"
        lines = [head] + [f"  FAIL {f}" for f in self.failures[:limit]]
        if len(self.failures) > limit:
            lines.append(f"  ... {len(self.failures) - limit} more")
        return "\n".join(lines)


def _state_checks(dg: ValidationDigest, rho, tag: str, tol: float) -> None:
    p = purity(rho)
    dg.check(1.0 / rho.d - tol <= p <= 1.0 + tol, f"{tag}: purity {p} out of range")
    dg.check(abs(np.trace(rho.matrix).real - 1.0) <= tol, f"{tag}: trace drift")
    for part in set_partitions(rho.n):
        pm = reduced_purities(rho, part)
        T = corr_tensor(rho, part)
        t2d = float(np.sum(full_support(T) ** 2))
        t2p = tnorm2_from_purities(pm)
        dg.check(abs(t2d - t2p) <= tol, f"{tag} [{part}]: norm routes differ by {abs(t2d - t2p):.2e}")
        dg.check(decomposition_check(T) <= tol, f"{tag} [{part}]: tensor decomposition")
        full = abs(T.norm2() - rho.d * p)
        dg.check(full <= tol, f"{tag} [{part}]: ||T||^2 != d P")
        delta = ksep_delta_tilde(pm)
        dg.check(abs(delta - (ksep_threshold(pm.block_dims) - t2p)) <= tol,
                 f"{tag} [{part}]: spread term vs norm form")
        budget = total_uncertainty_from_purities(pm)
        if budget.n_products <= 4096:
            ut = total_uncertainty_direct(rho, part)
            dg.check(abs(ut - budget.total) <= tol, f"{tag} [{part}]: uncertainty budget")
    for i in range(rho.n):
        red = partial_trace(rho, [i])
        dg.check(abs(np.trace(red.matrix).real - 1.0) <= tol, f"{tag}: reduction {i} trace")
        if rho.dims[i] == 2:
            for a, b in ((1, 2), (1, 3), (2, 3)):
                r = rs_check_single_qubit(rho, i, a, b)
                dg.check(r <= tol, f"{tag}: RS residual {r:.2e} on qubit {i} ({a},{b})")


def run_suite(samples: int = 110, seed: int = 0, tol: float = 1e-9) -> ValidationDigest:
    """Run all invariant checks; about 110 assertions per sample."""
    if samples < 1:
        raise ValueError("samples must be positive")
    dg = ValidationDigest()
    for d in range(2, 6):
        dg.check(casimir_check(d) <= 1e-12, f"Casimir identity at d={d}")
    for i, dims in enumerate(SUITE_DIMS):
        rng = substream(seed, 7, i)
        for s in range(samples):
            kind = s % 3
            if kind == 0:
                rho = random_mixed("hs", dims, rng)
            elif kind == 1:
                rho = random_mixed("bures", dims, rng)
            else:
                rho = random_pure_haar(dims, rng)
            _state_checks(dg, rho, f"{dims}#{s}", tol)
    part = PartitionScheme.parse("0|1")
    for w in np.linspace(0.0, 1.0, 41):
        rho = werner(float(w))
        rep = ksep_verdict(rho, part)
        dg.check(abs(purity(rho) - (1 + 3 * w * w) / 4) <= tol, f"Werner {w}: purity")
        dg.check(abs(rep.delta_tilde - (1 - 3 * w * w)) <= tol, f"Werner {w}: spread term")
        dg.check(abs(negativity(rho, [1]) - max(0.0, (3 * w - 1) / 2)) <= tol,
                 f"Werner {w}: negativity")
    for n in range(2, 7):
        dg.check(mm_reduction_residual(n, np.linspace(2.0 ** -n, 1.0, 5)) <= 1e-12,
                 f"maximally mixed reductions, n={n}")
    return dg

