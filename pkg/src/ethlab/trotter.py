"""First-order Trotter evolution over commuting groups, with a dense oracle.

One Trotter step is ``prod_groups prod_terms exp(-i c_j dt P_j)`` with
``dt = t / M``.  Inside a commuting group the per-term rotations are fused
exactly: all terms sharing an X mask form a generator that is block
diagonal on index pairs ``{j, j ^ x}``, whose exponential has a closed form
costing a handful of vector operations.  Since terms inside a group commute,
the fused product equals the term-by-term product.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg

from .pauli import PauliSum, group_commuting
from .statevector import (
    MAX_DENSE_QUBITS,
    apply_pauli_rotation,
    check_dense_qubits,
    matrix_exponential,
    n_qubits_of,
    pauli_index_action,
)

__all__ = [
    "TrotterPlan",
    "calibrate_steps",
    "exact_evolve",
    "exact_propagator",
    "trotter_error",
    "trotter_evolve",
    "trotter_series",
]

log = logging.getLogger(__name__)

# Registers up to this size run multi-step evolution through a dense step
# matrix raised by repeated squaring; larger ones stream the vector kernel.
DENSE_STEP_QUBITS = 6


def _order_terms(group: PauliSum) -> PauliSum:
    terms = sorted(group.terms, key=lambda t: (-abs(t[0]), t[1].x_mask, t[1].z_mask))
    return PauliSum(group.n_qubits, terms)


@dataclass
class _Block:
    # psi <- cos_r * psi + s * psi[perm]   (perm is None for diagonal blocks)
    perm: np.ndarray | None
    cos_r: np.ndarray
    s: np.ndarray | None


@dataclass
class TrotterPlan:
    """Grouped terms of ``h`` and a step count for total time ``t``."""

    groups: list[PauliSum]
    total_time: float
    steps: int
    _blocks: list[_Block] = field(default_factory=list, repr=False)
    _matrix: np.ndarray | None = field(default=None, repr=False)
    _powers: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("Trotter step count must be >= 1")

    @classmethod
    def from_hamiltonian(cls, h: PauliSum, total_time: float, steps: int) -> TrotterPlan:
        groups = [_order_terms(g) for g in group_commuting(h)]
        return cls(groups, float(total_time), int(steps))

    @property
    def n_qubits(self) -> int:
        return self.groups[0].n_qubits if self.groups else 0

    @property
    def dt(self) -> float:
        return self.total_time / self.steps

    def compile(self) -> list[_Block]:
        if self._blocks or not self.groups:
            return self._blocks
        dt = self.dt
        dim = 1 << self.n_qubits
        for g in self.groups:
            by_x: dict[int, np.ndarray] = {}
            perms: dict[int, np.ndarray] = {}
            for c, p in g.terms:
                perm, factor = pauli_index_action(p)
                if p.x_mask not in by_x:
                    by_x[p.x_mask] = np.zeros(dim, dtype=complex)
                    perms[p.x_mask] = perm
                by_x[p.x_mask] += c * factor
            for x, a in by_x.items():
                if x == 0:
                    # purely diagonal: phases exp(-i dt a_j), a_j real
                    self._blocks.append(_Block(None, np.exp(-1j * dt * a.real), None))
                    continue
                r = dt * np.abs(a)
                s = -1j * dt * np.sinc(r / np.pi) * a
                self._blocks.append(_Block(perms[x], np.cos(r), s))
        return self._blocks

    def step(self, psi: np.ndarray, n: int = 1) -> np.ndarray:
        """Apply ``n`` Trotter steps in place and return ``psi``.

        ``psi`` may be a single state or a ``(dim, k)`` block of columns.
        """
        blocks = self.compile()
        if self.n_qubits <= DENSE_STEP_QUBITS and n > 1:
            psi[:] = self.power(n) @ psi
            return psi
        col = (slice(None),) + (None,) * (psi.ndim - 1)
        for _ in range(n):
            for b in blocks:
                if b.perm is None:
                    psi *= b.cos_r[col]
                else:
                    psi[:] = b.cos_r[col] * psi + b.s[col] * psi[b.perm]
        return psi

    def matrix(self) -> np.ndarray:
        """Dense matrix of a single Trotter step."""
        if self._matrix is None:
            self._matrix = self.step(np.eye(1 << self.n_qubits, dtype=complex), 1)
        return self._matrix

    def power(self, n: int) -> np.ndarray:
        """Dense matrix of ``n`` steps, by repeated squaring of :meth:`matrix`."""
        if n not in self._powers:
            self._powers[n] = np.linalg.matrix_power(self.matrix(), n)
        return self._powers[n]

    def step_reference(self, psi: np.ndarray) -> np.ndarray:
        """One step as the literal product of per-term rotations (slow)."""
        dt = self.dt
        for g in self.groups:
            for c, p in g.terms:
                psi = apply_pauli_rotation(c * dt, p, psi)
        return psi


def _check_state(h: PauliSum, psi0: np.ndarray):
    if n_qubits_of(psi0) != h.n_qubits:
        raise ValueError(f"size mismatch: {h.n_qubits}-qubit Hamiltonian on {n_qubits_of(psi0)}-qubit state")


def trotter_evolve(h: PauliSum, psi0: np.ndarray, t: float, steps: int) -> np.ndarray:
    _check_state(h, psi0)
    if steps < 1:
        raise ValueError("Trotter step count must be >= 1")
    psi = np.array(psi0, dtype=complex)
    if not len(h):
        return psi
    plan = TrotterPlan.from_hamiltonian(h, t, steps)
    return plan.step(psi, steps)


def trotter_series(h: PauliSum, psi0: np.ndarray, times, steps_per_interval: int) -> np.ndarray:
    """States at each of the uniformly spaced ``times``.

    The state at ``times[k]`` equals ``trotter_evolve`` with
    ``steps_per_interval`` steps per grid interval (plus a proportional
    number for any offset ``times[0] > 0``), all at the same step size.
    """
    _check_state(h, psi0)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 1:
        raise ValueError("times must be a non-empty 1-D grid")
    m = int(steps_per_interval)
    if m < 1:
        raise ValueError("steps_per_interval must be >= 1")
    out = np.empty((len(times), psi0.shape[0]), dtype=complex)
    psi = np.array(psi0, dtype=complex)
    if len(times) == 1:
        out[0] = trotter_evolve(h, psi, times[0], m) if times[0] else psi
        return out
    dts = np.diff(times)
    interval = dts[0]
    if not np.allclose(dts, interval, rtol=1e-9, atol=0):
        raise ValueError("times must be uniformly spaced")
    if times[0]:
        n0 = max(1, math.ceil(m * times[0] / interval))
        psi = trotter_evolve(h, psi, times[0], n0)
    out[0] = psi
    if len(h):
        plan = TrotterPlan.from_hamiltonian(h, interval, m)
        for k in range(1, len(times)):
            out[k] = plan.step(psi, m)
    else:
        out[1:] = psi
    return out


def exact_propagator(h: PauliSum, t: float, max_qubits: int = MAX_DENSE_QUBITS) -> np.ndarray:
    check_dense_qubits(h.n_qubits, max_qubits)
    return matrix_exponential(-1j * t * h.to_matrix(), max_qubits)


# Above this size the full propagator is too costly; use the exponential's action.
_FULL_EXPM_QUBITS = 8


def exact_evolve(h: PauliSum, psi0: np.ndarray, t: float, max_qubits: int = MAX_DENSE_QUBITS) -> np.ndarray:
    """``exp(-i h t) psi0`` from the dense generator."""
    _check_state(h, psi0)
    check_dense_qubits(h.n_qubits, max_qubits)
    if t == 0 or not len(h):
        return np.array(psi0, dtype=complex)
    if h.n_qubits <= _FULL_EXPM_QUBITS:
        return exact_propagator(h, t, max_qubits) @ psi0
    return scipy.sparse.linalg.expm_multiply(-1j * t * h.to_sparse(), np.asarray(psi0, dtype=complex))


def trotter_error(h: PauliSum, psi0: np.ndarray, t: float, steps: int, max_qubits: int = MAX_DENSE_QUBITS) -> float:
    """``|| psi_trotter - psi_exact ||``."""
    check_dense_qubits(h.n_qubits, max_qubits)
    return float(np.linalg.norm(trotter_evolve(h, psi0, t, steps) - exact_evolve(h, psi0, t, max_qubits)))


def calibrate_steps(
    h: PauliSum,
    psi0: np.ndarray,
    t: float,
    tol: float = 1e-3,
    start: int = 1,
    max_steps: int = 1 << 22,
    exact: np.ndarray | None = None,
) -> tuple[int, float]:
    """Smallest ``start * 2**k`` steps with Trotter error below ``tol`` at time ``t``.

    Returns ``(steps, error)``; raises ``RuntimeError`` past ``max_steps``.
    """
    if exact is None:
        exact = exact_evolve(h, psi0, t)
    steps = max(1, int(start))
    while True:
        err = float(np.linalg.norm(trotter_evolve(h, psi0, t, steps) - exact))
        log.info("trotter calibration: t=%g steps=%d error=%.3e", t, steps, err)
        if err < tol:
            return steps, err
        if steps * 2 > max_steps:
            raise RuntimeError(f"Trotter error {err:.3e} above {tol:g} at {steps} steps")
        steps *= 2
