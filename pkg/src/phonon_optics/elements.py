"""Optical elements and gates acting on single-phonon logical states.

The control qubit is the vibration direction (0 = x, 1 = y) and the target
qubit the mode type (0 = CM, 1 = breathing), so each logical basis state is
one phonon in one of the four modes.  Elements act through their effective
Hamiltonians with the internal level prepared in the eigenstate that
decouples it from the motion.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .evolution import HermitianSpectrum, Propagator
from .fock import ModeId, ModeLayout, encode_basis, number_op, partial_trace_internal, purity
from .hamiltonians import ElementKind, TrapBeamConfig, build_effective, element_duration

SQRT_HALF = 1.0 / math.sqrt(2.0)
# entries smaller than this are treated as zero when fixing the global phase
PHASE_FLOOR = 1e-8


class PreparationError(ValueError):
    """The internal level is not the eigenstate an element requires."""


class InternalPrep(enum.Enum):
    """Internal states used to decouple the atom from the phonons."""

    PLUS = "plus"  # (|e> + |g>)/sqrt2, +1 eigenvector of sigma_plus + sigma_minus
    PLUS_I = "plus-i"  # (|e> + i|g>)/sqrt2, -1 eigenvector of i(sigma_plus - sigma_minus)
    GROUND = "ground"

    @property
    def vector(self) -> np.ndarray:
        """Amplitudes in the order ``(g, e)``."""
        if self is InternalPrep.PLUS:
            return np.array([SQRT_HALF, SQRT_HALF], dtype=complex)
        if self is InternalPrep.PLUS_I:
            return np.array([1j * SQRT_HALF, SQRT_HALF], dtype=complex)
        return np.array([1.0, 0.0], dtype=complex)


def required_prep(kind: ElementKind) -> InternalPrep:
    return InternalPrep.PLUS_I if ElementKind(kind).is_hwp else InternalPrep.PLUS


@dataclass(frozen=True)
class LogicalEncoding:
    """Two qubits in one phonon: control picks the direction, target the mode type.

    In the ordering ``(n_ax, n_bx, n_ay, n_by)`` of the logical table the basis is
    ``|0,0> = (1,0,0,0)``, ``|0,1> = (0,1,0,0)``, ``|1,0> = (0,0,1,0)`` and
    ``|1,1> = (0,0,0,1)``.
    """

    labels: tuple[tuple[int, int], ...] = ((0, 0), (0, 1), (1, 0), (1, 1))

    @staticmethod
    def mode(control: int, target: int) -> ModeId:
        if control not in (0, 1) or target not in (0, 1):
            raise ValueError(f"logical bits must be 0 or 1, got ({control}, {target})")
        if target == 0:
            return ModeId.CM_Y if control else ModeId.CM_X
        return ModeId.BR_Y if control else ModeId.BR_X

    def counts(self, control: int, target: int) -> tuple[int, int, int, int]:
        """Phonon counts in layout order ``(CM_X, CM_Y, BR_X, BR_Y)``."""
        n = [0, 0, 0, 0]
        n[self.mode(control, target)] = 1
        return tuple(n)

    def all_counts(self) -> list[tuple[int, int, int, int]]:
        return [self.counts(c, t) for c, t in self.labels]


LOGICAL = LogicalEncoding()


def prepare(prep: InternalPrep, counts, layout: ModeLayout) -> np.ndarray:
    """Product state ``prep (x) |counts>``; ``counts`` in layout order."""
    psi = np.zeros(layout.dim, dtype=complex)
    amp = InternalPrep(prep).vector
    psi[encode_basis(layout, "g", counts)] = amp[0]
    psi[encode_basis(layout, "e", counts)] = amp[1]
    return psi


def _sector_defect(psi: np.ndarray, prep: InternalPrep) -> float:
    """Norm of the part of ``psi`` outside ``prep (x) motion``."""
    m = np.asarray(psi).reshape(2, -1)
    v = prep.vector
    inside = np.outer(v, v.conj() @ m)
    return float(np.linalg.norm(m - inside))


# eigendecompositions keyed by (kind, config, layout); all three are frozen
_SPECTRA: dict = {}


def _spectrum(kind: ElementKind, config: TrapBeamConfig, layout: ModeLayout) -> HermitianSpectrum:
    key = (kind, config, layout)
    if key not in _SPECTRA:
        if len(_SPECTRA) > 32:
            _SPECTRA.clear()
        _SPECTRA[key] = HermitianSpectrum(build_effective(kind, config, layout))
    return _SPECTRA[key]


def element_propagator(
    kind: ElementKind,
    config: TrapBeamConfig,
    layout: ModeLayout,
    theta: float | None = None,
    k: int = 1,
) -> Propagator:
    """Effective propagator of one element over its nominal duration."""
    kind = ElementKind(kind)
    t = element_duration(kind, config, theta=theta, k=k)
    U = _spectrum(kind, config, layout).propagator(t)
    return Propagator(U, t, f"{kind.value} effective")


def apply_element(
    psi: np.ndarray,
    kind: ElementKind,
    config: TrapBeamConfig,
    layout: ModeLayout,
    theta: float | None = None,
    k: int = 1,
    check_prep: bool = True,
) -> np.ndarray:
    """Evolve ``psi`` under one element's effective Hamiltonian.

    With ``check_prep`` the internal level of ``psi`` must be the decoupling
    eigenstate of the element; pass ``False`` to study the entangling regime.
    """
    kind = ElementKind(kind)
    psi = np.asarray(psi, dtype=complex)
    if check_prep:
        need = required_prep(kind)
        if _sector_defect(psi, need) > 1e-10 * max(1.0, np.linalg.norm(psi)):
            raise PreparationError(
                f"{kind.value} needs the internal state prepared in {need.name}"
            )
    t = element_duration(kind, config, theta=theta, k=k)
    return _spectrum(kind, config, layout).evolve(psi, t)


@dataclass(frozen=True)
class GateReport:
    """Logical action of an element, with diagnostics.

    ``matrix`` is the logical block after the global-phase convention (the
    first non-negligible diagonal entry, or failing that the first
    non-negligible entry in row-major order, is made real positive);
    ``global_phase`` is the phase that was removed.  ``target`` is the
    expected magnitude pattern as a 0/1 matrix.
    """

    name: str
    raw_matrix: np.ndarray
    matrix: np.ndarray
    global_phase: float
    target: np.ndarray
    leakage: np.ndarray
    min_purity: float
    conservation: dict

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.matrix)

    @property
    def phases(self) -> np.ndarray:
        """Entry phases; entries below ``PHASE_FLOOR`` in magnitude report 0."""
        return np.where(self.magnitudes > PHASE_FLOOR, np.angle(self.matrix), 0.0)

    @property
    def permutation_fidelity(self) -> float:
        """Smallest ``|U[i, j]|`` over the entries the target pattern selects."""
        return float(np.min(self.magnitudes[self.target.astype(bool)]))

    @property
    def pattern_matches(self) -> bool:
        """Each column's largest entry sits where the target puts it."""
        return bool(np.array_equal(np.argmax(self.magnitudes, axis=0), np.argmax(self.target, axis=0)))

    @property
    def max_leakage(self) -> float:
        return float(np.max(self.leakage))


def strip_global_phase(m: np.ndarray) -> tuple[np.ndarray, float]:
    """Rotate ``m`` so its reference entry is real positive; returns ``(m', phase)``."""
    m = np.asarray(m, dtype=complex)
    diag = np.diagonal(m)
    big = np.flatnonzero(np.abs(diag) > PHASE_FLOOR)
    if big.size:
        ref = diag[big[0]]
    else:
        flat = m.ravel()
        big = np.flatnonzero(np.abs(flat) > PHASE_FLOOR)
        if not big.size:
            return m.copy(), 0.0
        ref = flat[big[0]]
    phase = float(np.angle(ref))
    return m * np.exp(-1j * phase), phase


def _logical_block(
    kind: ElementKind,
    config: TrapBeamConfig,
    layout: ModeLayout,
    counts_list,
    prep: InternalPrep,
    theta=None,
    k: int = 1,
    n_samples: int = 21,
    conserved=(),
):
    """Evolve each basis column; collect amplitudes, purities and conservation."""
    spec = _spectrum(kind, config, layout)
    t_end = element_duration(kind, config, theta=theta, k=k)
    times = np.linspace(0.0, t_end, n_samples)
    inputs = np.stack([prepare(prep, n, layout) for n in counts_list], axis=1)
    ops = {name: op for name, op in conserved}
    start = {name: np.real(np.einsum("ij,ij->j", inputs.conj(), op @ inputs)) for name, op in ops.items()}
    drift = {name: 0.0 for name in ops}
    min_pur = 1.0
    for t in times:
        states = spec.evolve(inputs, t)
        for j in range(states.shape[1]):
            min_pur = min(min_pur, purity(partial_trace_internal(states[:, j])))
        for name, op in ops.items():
            now = np.real(np.einsum("ij,ij->j", states.conj(), op @ states))
            drift[name] = max(drift[name], float(np.max(np.abs(now - start[name]))))
    final = spec.evolve(inputs, t_end)
    block = inputs.conj().T @ final
    leakage = 1.0 - np.sum(np.abs(block) ** 2, axis=0)
    return block, np.maximum(leakage, 0.0), min_pur, drift


def _report(name, block, target, leakage, min_pur, drift) -> GateReport:
    stripped, phase = strip_global_phase(block)
    return GateReport(name, block, stripped, phase, np.asarray(target, dtype=float), leakage, min_pur, drift)


def conserved_quantities(kind: ElementKind, layout: ModeLayout) -> list:
    """``(name, operator)`` pairs an element's effective Hamiltonian conserves."""
    kind = ElementKind(kind)
    n = {m: number_op(layout, m) for m in ModeId}
    if kind is ElementKind.PBS:
        return [
            ("n_cy+n_by", n[ModeId.CM_Y] + n[ModeId.BR_Y]),
            ("n_cx", n[ModeId.CM_X]),
            ("n_bx", n[ModeId.BR_X]),
        ]
    if kind is ElementKind.HWP_CM:
        return [("n_cx+n_cy", n[ModeId.CM_X] + n[ModeId.CM_Y])]
    if kind is ElementKind.HWP_BR:
        return [("n_bx+n_by", n[ModeId.BR_X] + n[ModeId.BR_Y])]
    return [(f"n_{m.name.lower()}", n[m]) for m in ModeId]


CNOT_PATTERN = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
X_PATTERN = np.array([[0, 1], [1, 0]])
DIAG_PATTERN = np.eye(2, dtype=int)


def cnot_truth_table(config: TrapBeamConfig, layout: ModeLayout | None = None, n_samples: int = 21) -> GateReport:
    """The PBS element on the four logical states with the PLUS preparation."""
    layout = layout or ModeLayout(4)
    parts = _logical_block(
        ElementKind.PBS, config, layout, LOGICAL.all_counts(), InternalPrep.PLUS,
        n_samples=n_samples, conserved=conserved_quantities(ElementKind.PBS, layout),
    )
    return _report("cnot", parts[0], CNOT_PATTERN, *parts[1:])


def _direction_counts(cm: bool = True):
    x, y = (ModeId.CM_X, ModeId.CM_Y) if cm else (ModeId.BR_X, ModeId.BR_Y)
    out = []
    for mode in (x, y):
        n = [0, 0, 0, 0]
        n[mode] = 1
        out.append(tuple(n))
    return out


def pauli_x_gate(
    config: TrapBeamConfig,
    layout: ModeLayout | None = None,
    theta: float = math.pi / 4,
    n_samples: int = 21,
) -> GateReport:
    """HWP_CM on the direction qubit of one CM phonon; ``theta = pi/4`` gives X."""
    layout = layout or ModeLayout(4)
    parts = _logical_block(
        ElementKind.HWP_CM, config, layout, _direction_counts(), InternalPrep.PLUS_I,
        theta=theta, n_samples=n_samples, conserved=conserved_quantities(ElementKind.HWP_CM, layout),
    )
    return _report("x", parts[0], X_PATTERN, *parts[1:])


def pauli_z_gate(
    config: TrapBeamConfig,
    layout: ModeLayout | None = None,
    k: int = 2,
    n_samples: int = 21,
) -> GateReport:
    """QWP_CM on the direction qubit: ``k = 2`` gives Z, ``k = 1`` the phase gate S."""
    layout = layout or ModeLayout(4)
    parts = _logical_block(
        ElementKind.QWP_CM, config, layout, _direction_counts(), InternalPrep.PLUS,
        k=k, n_samples=n_samples, conserved=conserved_quantities(ElementKind.QWP_CM, layout),
    )
    return _report("z" if k == 2 else f"qwp-k{k}", parts[0], DIAG_PATTERN, *parts[1:])


def relative_phase(report: GateReport) -> float:
    """``arg(U[1,1]) - arg(U[0,0])`` wrapped to ``(-pi, pi]``.

    Under ``U = exp(-iHt)`` the QWP with ``k = 1`` gives ``-pi/2`` here: the
    y-phonon state lags the x-phonon state.
    """
    m = report.matrix
    d = float(np.angle(m[1, 1] * np.conj(m[0, 0])))
    return math.pi if d <= -math.pi else d


@dataclass(frozen=True)
class PurityTrace:
    """Internal purity, and drift of the conserved quantities, along one element."""

    times: np.ndarray
    purities: np.ndarray
    drift: dict

    @property
    def min_purity(self) -> float:
        return float(np.min(self.purities))


def decoupling_check(
    kind: ElementKind,
    config: TrapBeamConfig,
    prep: InternalPrep,
    n_samples: int = 21,
    layout: ModeLayout | None = None,
    theta: float | None = None,
    k: int = 1,
) -> PurityTrace:
    """Internal purity along one element, starting from ``prep`` (x) equal logical superposition."""
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    kind = ElementKind(kind)
    layout = layout or ModeLayout(4)
    if kind.is_hwp and theta is None:
        theta = math.pi / 4
    psi = sum(prepare(prep, n, layout) for n in LOGICAL.all_counts()) / 2.0
    spec = _spectrum(kind, config, layout)
    ops = conserved_quantities(kind, layout)
    start = {name: np.vdot(psi, op @ psi).real for name, op in ops}
    drift = {name: 0.0 for name, _ in ops}
    times = np.linspace(0.0, element_duration(kind, config, theta=theta, k=k), n_samples)
    purities = []
    for t in times:
        phi = spec.evolve(psi, t)
        purities.append(purity(partial_trace_internal(phi)))
        for name, op in ops:
            drift[name] = max(drift[name], abs(np.vdot(phi, op @ phi).real - start[name]))
    return PurityTrace(times, np.array(purities), drift)
