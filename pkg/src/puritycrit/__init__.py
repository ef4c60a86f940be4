"""Purity-based entanglement and nonlocality criteria for multipartite states."""

from .corrtensor import CorrelationTensor, corr_tensor, full_support, subtensor
from .criteria import (
    chsh_horodecki,
    gme_three_qudit_check,
    ksep_delta_tilde,
    ksep_threshold,
    ksep_verdict,
)
from .errors import PurityCritError
from .matcore import DensityMatrix, PartitionScheme, Tolerances, validate_density
from .puritylink import purity, reduced_purities, tnorm2_from_purities
from .states import bell_state, noisy_ghz, werner

__all__ = [
    "CorrelationTensor",
    "DensityMatrix",
    "PartitionScheme",
    "PurityCritError",
    "Tolerances",
    "bell_state",
    "chsh_horodecki",
    "corr_tensor",
    "full_support",
    "gme_three_qudit_check",
    "ksep_delta_tilde",
    "ksep_threshold",
    "ksep_verdict",
    "noisy_ghz",
    "purity",
    "reduced_purities",
    "subtensor",
    "tnorm2_from_purities",
    "validate_density",
    "werner",
]
