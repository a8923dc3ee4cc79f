"""Verification tools: mode-transform fits, RWA scans and regime checks."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.constants as const

from .elements import LOGICAL, InternalPrep, prepare, required_prep
from .evolution import (
    IntegratorSpec,
    Propagator,
    expm_hermitian,
    propagate_time_dependent,
)
from .fock import ModeId, ModeLayout, annihilation, safe_indices
from .hamiltonians import (
    DegenerateFrequencyWarning,
    ElementKind,
    InteractionHamiltonian,
    TrapBeamConfig,
    build_effective,
    element_duration,
    lamb_dicke,
    select_frequencies,
)

# ---------------------------------------------------------------------------
# mode transforms


@dataclass(frozen=True)
class ModeTransformReport:
    """Fit ``U^dag a_i U ~ sum_j c[i, j] a_j`` on ``sector (x) safe subspace``."""

    modes: tuple[ModeId, ...]
    coefficients: np.ndarray
    residual: float
    n_safe: int

    def coefficient(self, i: ModeId, j: ModeId) -> complex:
        return complex(self.coefficients[self.modes.index(i), self.modes.index(j)])

    def unitarity_error(self) -> float:
        c = self.coefficients
        return float(np.max(np.abs(c.conj().T @ c - np.eye(len(self.modes)))))


def extract_mode_transform(
    U,
    modes: Sequence[ModeId],
    sector: InternalPrep,
    layout: ModeLayout,
    n_safe: int | None = None,
) -> ModeTransformReport:
    """Least-squares fit of the Heisenberg-evolved ladder operators.

    The fit uses the states ``sector (x) |n>`` with at most ``n_safe``
    phonons in total (default ``n_max - 2``), where neither the truncation
    nor a quadratic generator can push amplitude out of the space.  The
    residual is the Frobenius norm of the misfit over those states.
    """
    if isinstance(U, Propagator):
        U = U.unitary
    U = np.asarray(U)
    modes = tuple(ModeId(m) for m in modes)
    n_safe = layout.n_max - 2 if n_safe is None else n_safe
    motional = [i for i in safe_indices(layout, n_safe) if layout.internal[i] == 0]
    counts = [tuple(layout.occupations[i]) for i in motional]
    basis = np.stack([prepare(sector, n, layout) for n in counts], axis=1)

    evolved = U @ basis
    design = np.stack([(annihilation(layout, m) @ basis).ravel() for m in modes], axis=1)
    coeffs = np.zeros((len(modes), len(modes)), dtype=complex)
    residual = 0.0
    for i, m in enumerate(modes):
        target = (U.conj().T @ (annihilation(layout, m) @ evolved)).ravel()
        sol, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
        if rank < len(modes):
            raise ValueError(
                f"fit basis is rank-deficient (rank {rank} < {len(modes)}); "
                f"raise n_safe (now {n_safe}) so every mode has a phonon to remove"
            )
        coeffs[i] = sol
        residual = max(residual, float(np.linalg.norm(design @ sol - target)))
    return ModeTransformReport(modes, coeffs, residual, n_safe)


# ---------------------------------------------------------------------------
# rotating-wave validation


@dataclass(frozen=True)
class RwaRow:
    omega: float
    gap: float
    ratio: float
    infidelity: float
    converged: bool
    steps: int
    convergence: float
    unitarity: float = 0.0  # max |U^dag U - I| over the propagated columns


@dataclass(frozen=True)
class RwaScanResult:
    """Rows ordered by decreasing ``Omega``."""

    kind: ElementKind
    rows: tuple[RwaRow, ...]
    degenerate: bool = False

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.rows)

    @property
    def monotone(self) -> bool:
        """Infidelity strictly decreases along the rows (all rows converged)."""
        if not self.all_converged:
            return False
        inf = [r.infidelity for r in self.rows]
        return all(a > b for a, b in zip(inf, inf[1:]))


def effective_rate(kind: ElementKind, config: TrapBeamConfig) -> float:
    """Coupling rate of the effective Hamiltonian, ``Omega`` times its Lamb-Dicke product."""
    eta = lamb_dicke(config)
    kind = ElementKind(kind)
    if kind is ElementKind.PBS:
        return config.Omega * eta.yc * eta.yb
    if kind is ElementKind.HWP_CM:
        return config.Omega * eta.xc * eta.yc
    if kind is ElementKind.HWP_BR:
        return config.Omega * eta.xb * eta.yb
    if kind is ElementKind.QWP_CM:
        return config.Omega * (eta.xc**2 + eta.yc**2)
    return config.Omega * (eta.xb**2 + eta.yb**2)


def logical_block_basis(kind: ElementKind, layout: ModeLayout) -> np.ndarray:
    """Columns ``prep (x) |logical>`` for the element's decoupling prep."""
    prep = required_prep(kind)
    return np.stack([prepare(prep, n, layout) for n in LOGICAL.all_counts()], axis=1)


def block_infidelity(U_a: np.ndarray, U_b: np.ndarray) -> float:
    """``1 - |Tr(A^dag B)|^2 / d^2`` for two ``d x d`` blocks."""
    d = U_a.shape[0]
    return float(1.0 - abs(np.trace(U_a.conj().T @ U_b)) ** 2 / d**2)


def _fastest_frequency(H: InteractionHamiltonian) -> float:
    Q = H.Q.tocoo()
    if not Q.nnz:
        return 0.0
    freq = H.energies[Q.row] - H.energies[Q.col]
    return float(np.max(np.abs(freq[None, :] - H.detunings[:, None])))


def _full_block(H: InteractionHamiltonian, V: np.ndarray, T: float, spec: IntegratorSpec | None):
    """Full-model propagator on the columns of ``V``, and the stepping record."""
    support = np.flatnonzero(np.any(V != 0, axis=1))
    idx = H.coupled_component(support)
    sub = H.subspace(idx)
    tau = sub.drive_period()
    # one stretch of the drive on the whole component pays off only when it is
    # reused more often than the component outnumbers the propagated columns
    if tau is not None and T / tau < len(idx) / V.shape[1]:
        tau = None
    if spec is None:
        span = T if tau is None else min(T, tau)
        rate = _fastest_frequency(sub) + sub.norm_bound()
        start = 2 ** max(4, math.ceil(math.log2(max(1.0, span * rate / 2.0))))
        spec = IntegratorSpec(steps=start, scheme="cf4")
    prop = propagate_time_dependent(sub, 0.0, T, spec, initial=V[idx], period=tau)
    full = np.zeros(V.shape, dtype=complex)
    full[idx] = prop.unitary
    return full, prop, prop.converged


def rwa_scan(
    config: TrapBeamConfig,
    kind: ElementKind,
    omegas: Sequence[float],
    integrator: IntegratorSpec | None = None,
    layout: ModeLayout | None = None,
    theta: float | None = None,
    k: int = 1,
) -> RwaScanResult:
    """Compare full and effective propagators over a list of Rabi couplings.

    For each ``Omega`` the full interaction-picture Hamiltonian (no terms
    dropped) is stepped over the element duration and compared with the
    effective propagator on ``prep (x) logical`` states.  ``gap`` is the
    smallest nonzero oscillation frequency among the dropped terms and
    ``ratio`` the effective coupling rate over it.  Without an explicit
    ``integrator`` a fourth-order scheme is used with a starting step count
    set from the fastest oscillation; step doubling runs until two results
    differ by less than ``1e-8``.
    """
    kind = ElementKind(kind)
    layout = layout or ModeLayout(3)
    if kind.is_hwp and theta is None:
        theta = math.pi / 4
    V = logical_block_basis(kind, layout)
    degenerate = False
    rows = []
    for omega in sorted({float(w) for w in omegas}, reverse=True):
        cfg = config.replace(Omega=omega)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DegenerateFrequencyWarning)
            lasers = select_frequencies(kind, cfg)
        degenerate |= any(issubclass(w.category, DegenerateFrequencyWarning) for w in caught)
        H = InteractionHamiltonian(cfg, layout, lasers)
        T = element_duration(kind, cfg, theta=theta, k=k)
        U_eff = expm_hermitian(build_effective(kind, cfg, layout), T).unitary
        U_full, prop, converged = _full_block(H, V, T, integrator)
        gap = H.detuning_gap()
        rows.append(
            RwaRow(
                omega=omega,
                gap=gap,
                ratio=effective_rate(kind, cfg) / gap,
                infidelity=block_infidelity(V.conj().T @ U_eff @ V, V.conj().T @ U_full),
                converged=converged,
                steps=int(prop.steps),
                convergence=float(prop.convergence) if prop.convergence is not None else math.nan,
                unitarity=float(np.max(np.abs(U_full.conj().T @ U_full - np.eye(V.shape[1])))),
            )
        )
    return RwaScanResult(kind, tuple(rows), degenerate)


# ---------------------------------------------------------------------------
# regime report

DOMINANCE = 1e2  # "much smaller" means at least this ratio


@dataclass(frozen=True)
class RegimeInputs:
    """Timescales quoted for the experiment; ``None`` skips the matching check."""

    lifetime: float | None = None
    damping_time: float | None = None
    distance: float | None = None
    n_principal: int | None = None


@dataclass(frozen=True)
class RegimeCheck:
    name: str
    value: float | None
    limit: float | None
    ratio: float | None
    passed: bool | None
    notice: str = ""


@dataclass(frozen=True)
class RegimeReport:
    durations: dict
    checks: tuple[RegimeCheck, ...] = field(default_factory=tuple)

    @property
    def all_pass(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def lines(self) -> list[str]:
        out = [f"duration {name}: {t:.3e} s" for name, t in self.durations.items()]
        for c in self.checks:
            if c.passed is None:
                out.append(f"{c.name}: skipped ({c.notice})")
            else:
                verdict = "pass" if c.passed else "FAIL"
                out.append(f"{c.name}: {verdict} value={c.value:.3e} limit={c.limit:.3e} ratio={c.ratio:.3e}")
        return out


def nominal_durations(config: TrapBeamConfig) -> dict:
    """Element durations at their gate settings (HWP at pi/4, QWP with k = 1 and 2)."""
    return {
        "pbs": element_duration(ElementKind.PBS, config),
        "hwp-cm": element_duration(ElementKind.HWP_CM, config, theta=math.pi / 4),
        "hwp-br": element_duration(ElementKind.HWP_BR, config, theta=math.pi / 4),
        "qwp-cm": element_duration(ElementKind.QWP_CM, config, k=1),
        "qwp-br": element_duration(ElementKind.QWP_BR, config, k=1),
        "qwp-cm-z": element_duration(ElementKind.QWP_CM, config, k=2),
    }


def dipole_rate(distance: float, n_principal: int) -> float:
    """Resonant dipole-dipole rate ``P^2 / (4 pi eps0 hbar r^3)`` with ``P = e a0 n^2``.

    The van der Waals shift is second order in this
    coupling and so smaller whenever this rate is small against the
    atomic level spacings; the estimate is an upper bound.
    """
    P = const.e * const.physical_constants["Bohr radius"][0] * n_principal**2
    return float(P**2 / (4 * math.pi * const.epsilon_0 * const.hbar * distance**3))


def regime_report(config: TrapBeamConfig, inputs: RegimeInputs = RegimeInputs()) -> RegimeReport:
    """Check that the longest element is short against the quoted timescales."""
    durations = nominal_durations(config)
    longest = max(durations.values())
    checks = []

    def timescale(name, limit, what):
        if limit is None:
            checks.append(RegimeCheck(name, None, None, None, None, f"no {what} given"))
            return
        ratio = limit / longest
        checks.append(RegimeCheck(name, longest, limit, ratio, ratio >= DOMINANCE))

    timescale("duration << lifetime", inputs.lifetime, "lifetime")
    timescale("duration << damping time", inputs.damping_time, "damping time")
    if inputs.distance is None or inputs.n_principal is None:
        checks.append(RegimeCheck("dipole rate << Omega", None, None, None, None, "distance or n not given"))
    else:
        rate = dipole_rate(inputs.distance, inputs.n_principal)
        ratio = config.Omega / rate
        checks.append(RegimeCheck("dipole rate << Omega", rate, config.Omega, ratio, ratio >= DOMINANCE))
    return RegimeReport(durations, tuple(checks))
