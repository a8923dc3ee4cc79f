"""Propagators: exact ones for constant generators, stepped ones otherwise.

Convention throughout: ``U(t) = exp(-i H t)`` and operators transform as
``A -> U^dag A U``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .fock import is_hermitian, unitarity_error

UNITARITY_TOL = 1e-10
CONVERGENCE_TOL = 1e-8


class ConvergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class Propagator:
    """Result of an evolution.

    ``unitary`` is the full propagator, or only the propagated columns when
    the evolution was started from a subset of states.  ``convergence`` is
    the step-doubling distance for stepped propagators.
    """

    unitary: np.ndarray
    duration: float
    generator: str = ""
    steps: int | None = None
    convergence: float | None = None
    converged: bool = True

    def unitarity_error(self) -> float:
        return unitarity_error(self.unitary)


@dataclass(frozen=True)
class IntegratorSpec:
    """Stepping parameters.

    ``scheme`` is ``"midpoint"`` (one exponential per step at the midpoint,
    second order) or ``"cf4"`` (two exponentials at the Gauss nodes, fourth
    order).  With ``richardson`` on, the step count doubles until two
    successive results differ by less than ``tol``.
    """

    steps: int = 2048
    scheme: str = "midpoint"
    richardson: bool = True
    tol: float = CONVERGENCE_TOL
    max_steps: int = 2**18

    def __post_init__(self):
        if self.steps < 16:
            raise ValueError(f"steps must be >= 16, got {self.steps}")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {sorted(_SCHEMES)}")


class HermitianSpectrum:
    """Eigendecomposition of a Hermitian matrix, block by block.

    Blocks are the connected components of the sparsity graph, so generators
    that conserve a quantum number are diagonalised sector by sector.
    """

    def __init__(self, H, check: bool = True):
        if check and not is_hermitian(H):
            raise ValueError("generator is not Hermitian")
        Hs = sp.csr_matrix(H)
        self.dim = Hs.shape[0]
        pattern = (abs(Hs) + abs(Hs).T).tocsr()
        n_blocks, labels = connected_components(pattern, directed=False)
        self.blocks = []
        for b in range(n_blocks):
            idx = np.flatnonzero(labels == b)
            sub = Hs[idx][:, idx].toarray()
            w, v = np.linalg.eigh(0.5 * (sub + sub.conj().T))
            self.blocks.append((idx, w, v))

    def propagator(self, t: float) -> np.ndarray:
        U = np.zeros((self.dim, self.dim), dtype=complex)
        for idx, w, v in self.blocks:
            U[np.ix_(idx, idx)] = (v * np.exp(-1j * w * t)) @ v.conj().T
        return U

    def evolve(self, psi: np.ndarray, t: float) -> np.ndarray:
        psi = np.asarray(psi, dtype=complex)
        out = np.zeros_like(psi)
        for idx, w, v in self.blocks:
            phase = np.exp(-1j * w * t)
            coeff = v.conj().T @ psi[idx]
            out[idx] = v @ (phase[:, None] * coeff if coeff.ndim == 2 else phase * coeff)
        return out


def expm_hermitian(H, t: float, description: str = "") -> Propagator:
    """``exp(-i H t)`` for Hermitian ``H`` via eigendecomposition."""
    U = HermitianSpectrum(H).propagator(t)
    return Propagator(U, float(t), description)


def heisenberg_transform(U, A) -> np.ndarray:
    """``U^dag A U``; with ``U = exp(-iHt)`` this is ``exp(iHt) A exp(-iHt)``."""
    if isinstance(U, Propagator):
        U = U.unitary
    A = A.toarray() if sp.issparse(A) else np.asarray(A)
    return U.conj().T @ A @ U


# -- stepped propagation ----------------------------------------------------

_SQRT3 = math.sqrt(3.0)
# (nodes as fractions of the step, weights of H(node) in each exponential);
# exponentials are applied in list order.
_SCHEMES = {
    "midpoint": ((0.5,), ((1.0,),)),
    "cf4": (
        (0.5 - _SQRT3 / 6, 0.5 + _SQRT3 / 6),
        ((0.25 + _SQRT3 / 6, 0.25 - _SQRT3 / 6), (0.25 - _SQRT3 / 6, 0.25 + _SQRT3 / 6)),
    ),
}


def _operator_norm_bound(M) -> float:
    if sp.issparse(M):
        if not M.nnz:
            return 0.0
        a = abs(M)
        return float(math.sqrt(a.sum(axis=0).max() * a.sum(axis=1).max()))
    a = np.abs(M)
    return float(math.sqrt(a.sum(axis=0).max() * a.sum(axis=1).max()))


def _taylor_terms(x: float, eps: float = 1e-17) -> int:
    """Smallest order whose Taylor remainder bound for ``exp`` at norm ``x <= 1`` is below ``eps``."""
    k, term = 0, 1.0
    while term * math.e > eps:
        k += 1
        term *= x / k
    return max(k, 1)


def _expm_action(apply: Callable[[np.ndarray], np.ndarray], v: np.ndarray, norm: float) -> np.ndarray:
    """``exp(X) v`` for anti-Hermitian ``X`` given as ``apply``; ``norm >= ||X||``.

    Truncated Taylor series on ``ceil(norm)`` sub-steps, with the order
    chosen so the remainder stays below double precision.
    """
    substeps = max(1, math.ceil(norm))
    order = _taylor_terms(norm / substeps)
    for _ in range(substeps):
        term = v
        out = v.copy()
        for k in range(1, order + 1):
            term = apply(term) / (k * substeps)
            out += term
        v = out
    return v


def _run(hamiltonian, t0: float, t1: float, steps: int, scheme: str, state: np.ndarray) -> np.ndarray:
    nodes, weights = _SCHEMES[scheme]
    dt = (t1 - t0) / steps
    # objects exposing a fixed pattern are stepped without rebuilding matrices
    fixed = hasattr(hamiltonian, "data_at") and hasattr(hamiltonian, "pattern")
    if fixed:
        work = hamiltonian.pattern.astype(complex, copy=True)
        bound = hamiltonian.norm_bound() if hasattr(hamiltonian, "norm_bound") else None
    for n in range(steps):
        t = t0 + n * dt
        times = [t + c * dt for c in nodes]
        if fixed:
            datas = [hamiltonian.data_at(tj) for tj in times]
        else:
            mats = [hamiltonian(tj) for tj in times]
        for w in weights:
            if fixed:
                work.data[:] = sum(wj * dj for wj, dj in zip(w, datas) if wj)
                work.data *= -1j * dt
                X = work
                norm = bound * abs(dt) * sum(abs(wj) for wj in w) if bound is not None \
                    else _operator_norm_bound(X)
            else:
                X = -1j * dt * sum(wj * Mj for wj, Mj in zip(w, mats) if wj)
                norm = _operator_norm_bound(X)
            state = _expm_action(X.__matmul__, state, norm)
    return state


def propagate_time_dependent(
    hamiltonian,
    t0: float,
    t1: float,
    spec: IntegratorSpec = IntegratorSpec(),
    initial: np.ndarray | None = None,
    description: str = "",
    period: float | None = None,
) -> Propagator:
    """Ordered product of short-time exponentials from ``t0`` to ``t1``.

    ``hamiltonian`` is a callable ``t -> matrix``.  Objects that also expose
    a fixed sparse ``pattern`` and ``data_at(t)`` skip the matrix rebuild.
    ``initial`` restricts the evolution to its columns; each exponential is
    applied to them by a Taylor series summed to double precision.

    With ``period`` set, ``H`` must satisfy ``H(t + tau) = F H(t) F^dag``
    where ``F = hamiltonian.frame(tau)`` is diagonal (plain periodicity is
    ``frame`` returning ones).  One stretch ``V`` of length ``tau`` is then
    stepped on the full space and reused:
    ``U(t0 + N tau + r) = F^N U(t0 + r) (F^dag V)^N``.
    ``spec.steps`` then counts steps per ``tau``.  Step doubling checks the
    composed result either way.
    """
    if initial is None:
        dim = hamiltonian.dim if hasattr(hamiltonian, "dim") else hamiltonian(t0).shape[0]
        initial = np.eye(dim, dtype=complex)
    initial = np.asarray(initial, dtype=complex)

    if period is not None and period <= 0:
        raise ValueError(f"period must be positive, got {period}")
    periods = int((t1 - t0) // period) if period is not None else 0

    def run(steps):
        if periods == 0:
            return _run(hamiltonian, t0, t1, steps, spec.scheme, initial)
        full = np.eye(initial.shape[0], dtype=complex)
        one = _run(hamiltonian, t0, t0 + period, steps, spec.scheme, full)
        twist = np.conj(hamiltonian.frame(period))[:, None] * one
        state = np.linalg.matrix_power(twist, periods) @ initial
        rest = (t1 - t0) - periods * period
        if rest > 0:
            rest_steps = max(1, math.ceil(steps * rest / period))
            state = _run(hamiltonian, t0, t0 + rest, rest_steps, spec.scheme, state)
        return hamiltonian.frame(periods * period)[:, None] * state

    steps = spec.steps
    current = run(steps)
    if not spec.richardson:
        return Propagator(current, t1 - t0, description, steps)

    distance = math.inf
    while 2 * steps <= spec.max_steps:
        finer = run(2 * steps)
        distance = float(np.max(np.abs(finer - current)))
        steps, current = 2 * steps, finer
        if distance < spec.tol:
            return Propagator(current, t1 - t0, description, steps, distance, True)
    warnings.warn(
        f"step doubling stalled at {steps} steps with distance {distance:.3e} (tol {spec.tol:.1e})",
        ConvergenceWarning,
        stacklevel=2,
    )
    return Propagator(current, t1 - t0, description, steps, distance, False)


def evolve_samples(H, psi: np.ndarray, times: Sequence[float]) -> list[np.ndarray]:
    """States ``exp(-iHt) psi`` at each of ``times``."""
    spec = HermitianSpectrum(H)
    return [spec.evolve(psi, t) for t in times]
