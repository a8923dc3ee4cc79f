"""Trap/beam configuration and the Hamiltonians of the driven atom pair.

Natural units with hbar = 1: energies are angular frequencies (rad/s) and
times are seconds.  SI constants only enter through the Lamb-Dicke
parameters.

Operator convention: ``a`` (CM) modes oscillate at ``mu``, ``b`` (breathing)
modes at ``nu``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.constants import hbar as HBAR

from .fock import ModeId, ModeLayout, annihilation, creation, number_op, pauli_ops

MAX_ORDER = 3


class DegenerateFrequencyWarning(UserWarning):
    """The laser-frequency rule collapsed to zero detuning."""


class ElementKind(enum.Enum):
    PBS = "pbs"
    HWP_CM = "hwp-cm"
    HWP_BR = "hwp-br"
    QWP_CM = "qwp-cm"
    QWP_BR = "qwp-br"

    @property
    def is_hwp(self) -> bool:
        return self in (ElementKind.HWP_CM, ElementKind.HWP_BR)

    @property
    def is_qwp(self) -> bool:
        return self in (ElementKind.QWP_CM, ElementKind.QWP_BR)


class LambDicke(NamedTuple):
    xc: float
    yc: float
    xb: float
    yb: float


@dataclass(frozen=True)
class LaserPair:
    """Two laser angular frequencies.

    ``offsets`` keeps the exact detunings from the atomic line; recovering
    them as ``omega_l - omega0`` loses precision when ``omega0`` is large.
    """

    omega1: float
    omega2: float
    offsets: tuple[float, float] | None = None

    def detunings(self, omega0: float) -> np.ndarray:
        if self.offsets is not None:
            return np.array(self.offsets, dtype=float)
        return np.array([self.omega1 - omega0, self.omega2 - omega0])


@dataclass(frozen=True)
class TrapBeamConfig:
    """Trap, atom and beam parameters (SI units, angular frequencies).

    ``Omega`` absorbs the LG amplitude normalisation; ``pol_sign`` selects the
    handedness, i.e. the sign in ``(x +/- i y)^|ell|``.
    """

    m: float
    w0: float
    mu_x: float
    mu_y: float
    nu_x: float
    nu_y: float
    omega0: float
    Omega: float
    ell: int = 2
    pol_sign: int = 1

    def __post_init__(self):
        for name in ("m", "w0", "mu_x", "mu_y", "nu_x", "nu_y", "omega0"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive, got {value!r}")
        if not (np.isfinite(self.Omega) and self.Omega >= 0):
            raise ValueError(f"Omega must be non-negative, got {self.Omega!r}")
        if self.pol_sign not in (1, -1):
            raise ValueError(f"pol_sign must be +1 or -1, got {self.pol_sign!r}")
        if int(self.ell) != self.ell:
            raise ValueError(f"ell must be an integer, got {self.ell!r}")
        bad = [f"{k}={v:.3g}" for k, v in lamb_dicke(self)._asdict().items() if not 0 < v < 1]
        if bad:
            raise ValueError("Lamb-Dicke parameters must lie in (0, 1): " + ", ".join(bad))

    def replace(self, **changes) -> "TrapBeamConfig":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return TrapBeamConfig(**fields)

    def swapped_xy(self) -> "TrapBeamConfig":
        return self.replace(mu_x=self.mu_y, mu_y=self.mu_x, nu_x=self.nu_y, nu_y=self.nu_x)

    @property
    def mode_frequencies(self) -> np.ndarray:
        """Angular frequencies in :class:`ModeId` order."""
        return np.array([self.mu_x, self.mu_y, self.nu_x, self.nu_y])


def lamb_dicke(config: TrapBeamConfig) -> LambDicke:
    """``eta = sqrt(hbar / (m * omega * w0**2))`` for each mode."""
    def eta(omega):
        if omega <= 0:
            raise ValueError(f"mode frequency must be positive, got {omega!r}")
        return math.sqrt(HBAR / (config.m * omega * config.w0**2))

    return LambDicke(eta(config.mu_x), eta(config.mu_y), eta(config.nu_x), eta(config.nu_y))


def motional_energies(config: TrapBeamConfig, layout: ModeLayout) -> np.ndarray:
    """Free phonon energy of each basis state (internal part excluded)."""
    return layout.occupations @ config.mode_frequencies


def build_H0(config: TrapBeamConfig, layout: ModeLayout) -> sp.csr_matrix:
    """``(omega0/2) sigma_z + sum_modes omega n``; diagonal."""
    sz = np.where(layout.internal == 1, 1.0, -1.0)
    diag = 0.5 * config.omega0 * sz + motional_energies(config, layout)
    return sp.diags(diag.astype(complex), format="csr")


def _quadrature(layout, mode):
    return annihilation(layout, mode) + creation(layout, mode)


def profile_bracket(config: TrapBeamConfig, layout: ModeLayout) -> sp.csr_matrix:
    """``(eta_xc X_a - eta_xb X_b) +/- i (eta_yc Y_a - eta_yb Y_b)``."""
    eta = lamb_dicke(config)
    x_part = eta.xc * _quadrature(layout, ModeId.CM_X) - eta.xb * _quadrature(layout, ModeId.BR_X)
    y_part = eta.yc * _quadrature(layout, ModeId.CM_Y) - eta.yb * _quadrature(layout, ModeId.BR_Y)
    return (x_part + 1j * config.pol_sign * y_part).tocsr()


def build_profile_operator(config: TrapBeamConfig, layout: ModeLayout) -> sp.csr_matrix:
    """Exact ``|ell|``-th power of the transverse-profile bracket."""
    order = abs(int(config.ell))
    if order > MAX_ORDER:
        raise NotImplementedError(f"|ell| <= {MAX_ORDER} supported, got ell={config.ell}")
    out = layout.identity()
    if order:
        bracket = profile_bracket(config, layout)
        for _ in range(order):
            out = out @ bracket
    return out.tocsr()


def select_frequencies(kind: ElementKind, config: TrapBeamConfig) -> LaserPair:
    """Laser pair that makes ``kind`` the resonant process."""
    kind = ElementKind(kind)
    w0 = config.omega0
    if kind is ElementKind.PBS:
        split = config.nu_y - config.mu_y
    elif kind is ElementKind.HWP_CM:
        split = config.mu_x - config.mu_y
    elif kind is ElementKind.HWP_BR:
        split = config.nu_x - config.nu_y
    else:
        return LaserPair(w0, w0, (0.0, 0.0))
    if abs(split) <= 1e-9 * float(config.mode_frequencies.max()):
        warnings.warn(
            f"{kind.name}: zero detuning split, both lasers sit at omega0",
            DegenerateFrequencyWarning,
            stacklevel=2,
        )
    return LaserPair(split + w0, -split + w0, (split, -split))


class InteractionHamiltonian:
    """Time-dependent coupling in the interaction picture of ``H0``.

    ``H(t) = M(t) [d(t) Q + conj(d(t)) Q^dag] M(t)^dag`` where
    ``Q = -(Omega/2) P sigma_plus``, ``d(t) = sum_l exp(-i (omega_l - omega0) t)``
    and ``M(t) = diag(exp(i E_k t))`` carries the free phonon phases.  No
    term is dropped.

    All ``H(t)`` share one sparsity pattern; :meth:`data_at` returns the
    entries on it, which is what the steppers in :mod:`evolution` consume.
    """

    def __init__(self, config: TrapBeamConfig, layout: ModeLayout, lasers: LaserPair):
        self.config = config
        self.lasers = lasers
        self.detunings = lasers.detunings(config.omega0)
        _, splus, _ = pauli_ops(layout)
        Q = (-0.5 * config.Omega * build_profile_operator(config, layout) @ splus).tocsr()
        self._setup(Q, motional_energies(config, layout), layout.internal)

    def _setup(self, Q, energies, internal):
        Q = sp.csr_matrix(Q)
        Q.eliminate_zeros()
        self.Q = Q
        self.energies = np.asarray(energies, dtype=float)
        self.internal = np.asarray(internal)
        # Q maps g -> e and Q^dag maps e -> g, so their patterns never overlap
        pattern = (Q + Q.conj().T).tocsr()
        pattern.sort_indices()
        self.pattern = pattern
        rows = np.repeat(np.arange(pattern.shape[0]), np.diff(pattern.indptr))
        cols = pattern.indices
        upper = self.internal[rows] == 1
        self._q_data = np.where(upper, pattern.data, 0.0)
        self._qh_data = np.where(upper, 0.0, pattern.data)
        self._rows, self._cols = rows, cols

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    def drive(self, t: float) -> complex:
        return complex(np.exp(-1j * self.detunings * t).sum())

    def data_at(self, t: float) -> np.ndarray:
        d = self.drive(t)
        ph = self.frame(t)
        return ph[self._rows] * np.conj(ph[self._cols]) * (d * self._q_data + np.conj(d) * self._qh_data)

    def norm_bound(self) -> float:
        """Bound on ``||H(t)||_2`` that holds for every ``t``."""
        if not self.pattern.nnz:
            return 0.0
        a = abs(self.pattern)
        return float(np.abs(self.detunings).size * math.sqrt(a.sum(axis=0).max() * a.sum(axis=1).max()))

    def __call__(self, t: float) -> sp.csr_matrix:
        p = self.pattern
        return sp.csr_matrix((self.data_at(t), p.indices, p.indptr), shape=p.shape)

    def subspace(self, indices) -> "InteractionHamiltonian":
        """The same coupling restricted to ``indices`` (an invariant subspace)."""
        idx = np.asarray(indices)
        sub = object.__new__(InteractionHamiltonian)
        sub.config, sub.lasers, sub.detunings = self.config, self.lasers, self.detunings
        sub._setup(self.Q[idx][:, idx], self.energies[idx], self.internal[idx])
        return sub

    def coupled_component(self, indices) -> np.ndarray:
        """Sorted indices of every state the coupling connects to ``indices``."""
        _, labels = connected_components(abs(self.pattern), directed=False)
        wanted = np.unique(labels[np.asarray(indices)])
        return np.flatnonzero(np.isin(labels, wanted))

    def secular_part(self, rel_tol: float = 1e-9) -> sp.csr_matrix:
        """Zero-frequency (time-averaged) part of ``H(t)``.

        Keeps the matrix elements of ``Q`` whose total oscillation frequency
        ``E_j - E_k - delta_l`` vanishes for some laser ``l``.
        """
        Q = self.Q.tocoo()
        freq = self.energies[Q.row] - self.energies[Q.col]
        data = np.zeros_like(Q.data)
        for delta in self.detunings:
            data = data + np.where(np.abs(freq - delta) < self._freq_tol(rel_tol), Q.data, 0.0)
        keep = sp.csr_matrix((data, (Q.row, Q.col)), shape=Q.shape)
        keep.eliminate_zeros()
        return (keep + keep.conj().T).tocsr()

    def detuning_gap(self, rel_tol: float = 1e-9) -> float:
        """Smallest nonzero oscillation frequency among the non-secular terms."""
        Q = self.Q.tocoo()
        if not Q.nnz:
            return math.inf
        freq = self.energies[Q.row] - self.energies[Q.col]
        gaps = np.abs(freq[None, :] - self.detunings[:, None]).ravel()
        gaps = gaps[gaps >= self._freq_tol(rel_tol)]
        return float(gaps.min()) if gaps.size else math.inf

    def frame(self, t: float) -> np.ndarray:
        """Diagonal of ``M(t)``, the free phonon phases ``exp(i E t)``."""
        return np.exp(1j * self.energies * t)

    def drive_period(self, max_multiple: int = 64, rel_tol: float = 1e-12) -> float | None:
        """Period ``tau`` of the drive, so that ``H(t + tau) = M(tau) H(t) M(tau)^dag``.

        This holds for any trap frequencies because ``M`` is diagonal; only
        the laser detunings need a common period.  With all detunings zero
        the drive is constant and every ``tau`` works; the shortest trap
        period is returned.  ``None`` means the detunings are incommensurate.
        """
        freqs = [abs(float(d)) for d in self.detunings if d != 0.0]
        if not freqs:
            return 2.0 * math.pi / float(np.max(self.config.mode_frequencies))
        ref = freqs[0]
        ratios = [Fraction(f / ref).limit_denominator(max_multiple) for f in freqs]
        if any(abs(float(r) * ref - f) > rel_tol * f for r, f in zip(ratios, freqs)):
            return None
        num = reduce(math.gcd, (r.numerator for r in ratios))
        den = reduce(math.lcm, (r.denominator for r in ratios))
        return 2.0 * math.pi / (ref * num / den)

    def _freq_tol(self, rel_tol):
        return rel_tol * float(np.max(self.config.mode_frequencies))


def build_full_Hint_interaction_picture(
    config: TrapBeamConfig, layout: ModeLayout, lasers: LaserPair
) -> InteractionHamiltonian:
    return InteractionHamiltonian(config, layout, lasers)


def _element_modes(kind: ElementKind):
    """Mode pair and Lamb-Dicke fields used by each effective Hamiltonian."""
    if kind in (ElementKind.HWP_CM, ElementKind.QWP_CM):
        return ModeId.CM_X, ModeId.CM_Y, "xc", "yc"
    return ModeId.BR_X, ModeId.BR_Y, "xb", "yb"


def build_effective(kind: ElementKind, config: TrapBeamConfig, layout: ModeLayout) -> sp.csr_matrix:
    """Time-independent element Hamiltonian left after the rotating-wave step."""
    kind = ElementKind(kind)
    eta = lamb_dicke(config)
    W = config.Omega
    sm, spl, _ = pauli_ops(layout)
    sx = spl + sm

    if kind is ElementKind.PBS:
        a, b = annihilation(layout, ModeId.CM_Y), annihilation(layout, ModeId.BR_Y)
        hop = a.conj().T @ b + a @ b.conj().T
        # (+/- i)^2 = -1, so the sign of the handedness drops out here
        h = -W * eta.yc * eta.yb * hop @ sx
    elif kind.is_hwp:
        mx, my, ex, ey = _element_modes(kind)
        ax, ay = annihilation(layout, mx), annihilation(layout, my)
        hop = ax.conj().T @ ay + ax @ ay.conj().T
        h = config.pol_sign * (-1j * W * getattr(eta, ex) * getattr(eta, ey)) * hop @ (spl - sm)
    else:
        mx, my, ex, ey = _element_modes(kind)
        ex2, ey2 = getattr(eta, ex) ** 2, getattr(eta, ey) ** 2
        phase = ex2 * number_op(layout, mx) - ey2 * number_op(layout, my) + (ex2 - ey2) * layout.identity()
        h = -W * phase @ sx
    return h.tocsr()


def element_duration(
    kind: ElementKind,
    config: TrapBeamConfig,
    theta: float | None = None,
    k: int = 1,
) -> float:
    """Pulse length that realises the element.

    PBS: ``Omega eta_yc eta_yb t = pi/2``.  HWP: rotation angle
    ``theta = Omega eta_x eta_y t / 2``.  QWP: ``k`` quarter-wave units of
    ``Omega (eta_x^2 + eta_y^2) t / 2 = pi/4``.
    """
    kind = ElementKind(kind)
    if config.Omega <= 0:
        raise ValueError("Omega = 0: no pulse length realises the element")
    eta = lamb_dicke(config)
    W = config.Omega
    if kind is ElementKind.PBS:
        return math.pi / (2 * W * eta.yc * eta.yb)
    _, _, ex, ey = _element_modes(kind)
    ex, ey = getattr(eta, ex), getattr(eta, ey)
    if kind.is_hwp:
        if theta is None:
            raise ValueError("HWP duration needs a rotation angle theta")
        if not 0 <= theta < math.pi:
            raise ValueError(f"theta must lie in [0, pi), got {theta!r}")
        return 2 * theta / (W * ex * ey)
    if k < 0:
        raise ValueError(f"repetition factor k must be non-negative, got {k!r}")
    return k * math.pi / (2 * W * (ex**2 + ey**2))
