"""Phonon analogs of polarizing beam splitters and wave plates for two trapped atoms.

Modules, from the bottom up: :mod:`fock` (truncated Fock space),
:mod:`hamiltonians` (trap/beam configuration, full and effective
Hamiltonians), :mod:`evolution` (propagators), :mod:`elements` (elements
and gates on logical states), :mod:`analysis` (mode-transform fits, RWA
scans, regime checks) and :mod:`cli`.
"""

__version__ = "0.1.0"

from .fock import ModeId, ModeLayout, annihilation, creation, decode_basis, encode_basis, pauli_ops
from .hamiltonians import (
    ElementKind,
    InteractionHamiltonian,
    LaserPair,
    TrapBeamConfig,
    build_effective,
    build_full_Hint_interaction_picture,
    element_duration,
    lamb_dicke,
    select_frequencies,
)
from .evolution import IntegratorSpec, Propagator, expm_hermitian, heisenberg_transform, propagate_time_dependent
from .elements import (
    GateReport,
    InternalPrep,
    LogicalEncoding,
    apply_element,
    cnot_truth_table,
    decoupling_check,
    pauli_x_gate,
    pauli_z_gate,
    prepare,
)
from .analysis import ModeTransformReport, RwaScanResult, extract_mode_transform, regime_report, rwa_scan
