"""Truncated Fock space for one two-level atom and four phonon modes.

Basis states are ``|s; n_cx, n_cy, n_bx, n_by>`` with the internal level
``s`` varying slowest, followed by the centre-of-mass (CM) x/y modes and the
breathing (BR) x/y modes.  Each mode is cut at ``n_max`` phonons, so the
dimension is ``2 * (n_max + 1) ** 4``.

Operators are returned as ``scipy.sparse`` CSR matrices; states are plain
complex ``numpy`` vectors.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

GROUND = 0
EXCITED = 1
_LEVELS = {"g": GROUND, "e": EXCITED, GROUND: GROUND, EXCITED: EXCITED}


class ModeId(enum.IntEnum):
    """Phonon modes, in layout order.  CM modes carry ``a``, breathing ``b``."""

    CM_X = 0
    CM_Y = 1
    BR_X = 2
    BR_Y = 3

    @property
    def is_cm(self) -> bool:
        return self in (ModeId.CM_X, ModeId.CM_Y)


@dataclass(frozen=True)
class ModeLayout:
    """Internal qubit tensored with four bosonic modes, each cut at ``n_max``."""

    n_max: int = 4

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ValueError(f"n_max must be an integer >= 2, got {self.n_max!r}")

    @property
    def levels(self) -> int:
        return self.n_max + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (2,) + (self.levels,) * 4

    @property
    def dim(self) -> int:
        return 2 * self.levels**4

    @cached_property
    def occupations(self) -> np.ndarray:
        """``(dim, 4)`` integer array of phonon counts per basis state."""
        idx = np.unravel_index(np.arange(self.dim), self.shape)
        occ = np.stack(idx[1:], axis=1)
        occ.setflags(write=False)
        return occ

    @cached_property
    def internal(self) -> np.ndarray:
        """Internal level (0 = g, 1 = e) of each basis state."""
        s = np.unravel_index(np.arange(self.dim), self.shape)[0]
        s.setflags(write=False)
        return s

    @cached_property
    def total_phonons(self) -> np.ndarray:
        n = self.occupations.sum(axis=1)
        n.setflags(write=False)
        return n

    def identity(self) -> sp.csr_matrix:
        return sp.identity(self.dim, dtype=complex, format="csr")


def encode_basis(layout: ModeLayout, s, counts: Sequence[int]) -> int:
    """Flat index of ``|s; counts>``; ``s`` is ``'g'``/``'e'`` or 0/1."""
    try:
        level = _LEVELS[s]
    except (KeyError, TypeError):
        raise ValueError(f"internal level must be 'g', 'e', 0 or 1, got {s!r}") from None
    counts = tuple(int(n) for n in counts)
    if len(counts) != 4:
        raise ValueError(f"expected four phonon counts, got {len(counts)}")
    for n in counts:
        if not 0 <= n <= layout.n_max:
            raise IndexError(f"phonon count {n} outside 0..{layout.n_max}")
    return int(np.ravel_multi_index((level,) + counts, layout.shape))


def decode_basis(layout: ModeLayout, index: int) -> tuple[str, tuple[int, int, int, int]]:
    """Inverse of :func:`encode_basis`; returns ``('g' | 'e', counts)``."""
    if not 0 <= index < layout.dim:
        raise IndexError(f"basis index {index} outside 0..{layout.dim - 1}")
    s, *counts = np.unravel_index(int(index), layout.shape)
    return ("g" if s == GROUND else "e"), tuple(int(n) for n in counts)


def basis_state(layout: ModeLayout, s, counts: Sequence[int]) -> np.ndarray:
    psi = np.zeros(layout.dim, dtype=complex)
    psi[encode_basis(layout, s, counts)] = 1.0
    return psi


def annihilation(layout: ModeLayout, mode: ModeId) -> sp.csr_matrix:
    """Ladder operator with ``<n-1|a|n> = sqrt(n)`` on ``mode``."""
    mode = ModeId(mode)
    occ = layout.occupations[:, mode]
    cols = np.flatnonzero(occ > 0)
    stride = layout.levels ** (3 - int(mode))
    rows = cols - stride
    data = np.sqrt(occ[cols]).astype(complex)
    return sp.csr_matrix((data, (rows, cols)), shape=(layout.dim, layout.dim))


def creation(layout: ModeLayout, mode: ModeId) -> sp.csr_matrix:
    return annihilation(layout, mode).conj().T.tocsr()


def number_op(layout: ModeLayout, mode: ModeId) -> sp.csr_matrix:
    occ = layout.occupations[:, ModeId(mode)]
    return sp.diags(occ.astype(complex), format="csr")


def pauli_ops(layout: ModeLayout) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
    """``(sigma_minus, sigma_plus, sigma_z)`` of the driven atom.

    ``sigma_minus = |g><e|`` and ``sigma_z = |e><e| - |g><g|``.
    """
    half = layout.dim // 2
    lower = sp.eye(layout.dim, k=half, dtype=complex, format="csr")
    raise_ = lower.T.tocsr()
    z = sp.diags(np.where(layout.internal == EXCITED, 1.0, -1.0).astype(complex), format="csr")
    return lower, raise_, z


def safe_projector(layout: ModeLayout, n_safe: int) -> sp.csr_matrix:
    """Projector onto basis states with at most ``n_safe`` phonons in total."""
    if n_safe > layout.n_max:
        raise ValueError(f"n_safe={n_safe} exceeds n_max={layout.n_max}")
    keep = (layout.total_phonons <= n_safe).astype(complex)
    return sp.diags(keep, format="csr")


def safe_indices(layout: ModeLayout, n_safe: int) -> np.ndarray:
    if n_safe > layout.n_max:
        raise ValueError(f"n_safe={n_safe} exceeds n_max={layout.n_max}")
    return np.flatnonzero(layout.total_phonons <= n_safe)


def partial_trace_internal(psi: np.ndarray) -> np.ndarray:
    """Reduced 2x2 density matrix of the internal level.

    Relies on the internal index varying slowest, so the amplitudes reshape
    to ``(2, motional_dim)``.
    """
    psi = np.asarray(psi)
    if psi.ndim != 1 or psi.size % 2:
        raise ValueError("state vector must be one-dimensional with even length")
    m = psi.reshape(2, -1)
    return m @ m.conj().T


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def _max_abs(a) -> float:
    if sp.issparse(a):
        return float(abs(a).max()) if a.nnz else 0.0
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_hermitian(a, tol: float = 1e-12) -> bool:
    """``max|A - A^dag| < tol``, measured relative to ``max(1, max|A|)``."""
    scale = max(1.0, _max_abs(a))
    diff = a - a.conj().T
    return _max_abs(diff) < tol * scale


def unitarity_error(u) -> float:
    u = u.toarray() if sp.issparse(u) else np.asarray(u)
    return _max_abs(u.conj().T @ u - np.eye(u.shape[1]))


def is_unitary(u, tol: float = 1e-10) -> bool:
    return unitarity_error(u) < tol
