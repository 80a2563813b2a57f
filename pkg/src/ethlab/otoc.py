"""Out-of-time-ordered correlators: exact values and the randomized-measurement estimator.

The statistical estimator prepares ``psi_u = u|k0>`` with ``u`` a product of
single-qubit Haar unitaries and correlates two expectation values,

    a_u(t) = <psi_u| W(t) |psi_u>,      b_u(t) = <psi_u| V W(t) V |psi_u>,

as ``O(t) = mean(a*b) / mean(a*a)``.  Its large-ensemble limit is available
in closed form (:func:`otoc_ensemble_exact`) because the second moment of a
Haar-random qubit state is ``(I + SWAP)/6`` on each site.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .pauli import PauliString, PauliSum
from .rng import make_rng
from .statevector import (
    MAX_DENSE_QUBITS,
    apply_local_unitaries,
    apply_pauli,
    check_dense_qubits,
    init_basis_state,
    pauli_index_action,
    random_local_unitary,
)
from .trotter import calibrate_steps, exact_propagator, trotter_series

__all__ = [
    "EstimatorUnresolvedError",
    "OtocConfig",
    "OtocSeries",
    "commutator_growth",
    "otoc_ensemble_exact",
    "otoc_exact",
    "otoc_statistical",
]

log = logging.getLogger(__name__)

DENOMINATOR_FLOOR = 1e-12


class EstimatorUnresolvedError(RuntimeError):
    """The ensemble average of ``<W(t)>**2`` vanished at the requested size."""


@dataclass
class OtocConfig:
    W: PauliString
    V: PauliString
    times: np.ndarray
    ensemble_size: int = 100
    initial_label: str | None = None
    seed: int = 0
    trotter_steps: int | None = None  # per time interval; None calibrates
    trotter_tol: float = 1e-3

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.ensemble_size < 2:
            raise ValueError("ensemble_size must be >= 2")
        if self.W.n_qubits != self.V.n_qubits:
            raise ValueError("W and V act on different register sizes")
        if self.W.phase_exp or self.V.phase_exp:
            raise ValueError("W and V must be Hermitian (phase_exp 0)")
        if self.initial_label is None:
            self.initial_label = "0" * self.W.n_qubits


@dataclass
class OtocSeries:
    times: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    exact: np.ndarray | None = None
    ensemble_size: int = 0
    steps_per_interval: int = 0
    samples: dict = field(default_factory=dict, repr=False)

    def commutator(self) -> np.ndarray:
        return commutator_growth(self.estimate)


def commutator_growth(o) -> np.ndarray:
    """``C = 2 (1 - Re O)``."""
    return 2.0 * (1.0 - np.real(np.asarray(o)))


def _heisenberg(h: PauliSum, w: PauliString, t: float, max_qubits: int) -> np.ndarray:
    u = exact_propagator(h, t, max_qubits)
    return u.conj().T @ w.to_matrix() @ u


def otoc_exact(
    h: PauliSum,
    W: PauliString,
    V: PauliString,
    t: float,
    psi: np.ndarray | None = None,
    infinite_temperature: bool = False,
    max_qubits: int = MAX_DENSE_QUBITS,
) -> float:
    """``Re <W(t) V W(t) V>`` in the state ``psi`` or at infinite temperature."""
    check_dense_qubits(h.n_qubits, max_qubits)
    if (psi is None) == (not infinite_temperature):
        raise ValueError("give exactly one of psi or infinite_temperature=True")
    wt = _heisenberg(h, W, t, max_qubits)
    v = V.to_matrix()
    prod = wt @ v @ wt @ v
    if infinite_temperature:
        return float(np.trace(prod).real / prod.shape[0])
    return float(np.vdot(psi, prod @ psi).real)


def _haar_pair_moment(a: np.ndarray, b: np.ndarray, n: int) -> float:
    """``E_u <A>_u <B>_u`` over product Haar states: ``Tr[(A x B) prod_q (1 + SWAP_q)/6]``."""
    ta = a.reshape((2,) * (2 * n))
    tb = b.reshape((2,) * (2 * n))
    i_idx = list(range(n))
    j_idx = list(range(n, 2 * n))
    total = 0.0
    for swapped in itertools.product((False, True), repeat=n):
        a_cols = [j_idx[q] if s else i_idx[q] for q, s in enumerate(swapped)]
        b_cols = [i_idx[q] if s else j_idx[q] for q, s in enumerate(swapped)]
        total += np.einsum(ta, i_idx + a_cols, tb, j_idx + b_cols, []).real
    return float(total / 6**n)


def otoc_ensemble_exact(
    h: PauliSum,
    W: PauliString,
    V: PauliString,
    t: float,
    max_qubits: int = MAX_DENSE_QUBITS,
) -> float:
    """Large-ensemble limit ``E[a b] / E[a a]`` of :func:`otoc_statistical`.

    The local Haar average does not depend on the reference basis state.
    """
    check_dense_qubits(h.n_qubits, max_qubits)
    wt = _heisenberg(h, W, t, max_qubits)
    v = V.to_matrix()
    n = h.n_qubits
    num = _haar_pair_moment(wt, v @ wt @ v, n)
    den = _haar_pair_moment(wt, wt, n)
    if den < DENOMINATOR_FLOOR:
        raise EstimatorUnresolvedError(f"E<W(t)>^2 = {den:.3e} at t={t:g}")
    return num / den


def _expect_series(p: PauliString, states: np.ndarray) -> np.ndarray:
    perm, factor = pauli_index_action(p)
    return np.einsum("tj,tj->t", states.conj(), factor * states[:, perm]).real


def _ratio_with_jackknife(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-time ratio ``sum(a b)/sum(a a)`` and its jackknife standard error.

    ``a``, ``b`` have shape ``(R, T)``.
    """
    r = a.shape[0]
    ab, aa = a * b, a * a
    s_ab, s_aa = ab.sum(axis=0), aa.sum(axis=0)
    if np.any(s_aa / r < DENOMINATOR_FLOOR):
        bad = int(np.argmax(s_aa / r < DENOMINATOR_FLOOR))
        raise EstimatorUnresolvedError(f"mean <W(t)>^2 below {DENOMINATOR_FLOOR:g} at time index {bad} with R={r}")
    est = s_ab / s_aa
    loo = (s_ab - ab) / (s_aa - aa)
    se = np.sqrt((r - 1) / r * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))
    return est, se


def otoc_statistical(
    h: PauliSum,
    cfg: OtocConfig,
    with_exact: bool = True,
    workers: int = 1,
) -> OtocSeries:
    """Randomized-measurement OTOC estimate on the recorded time grid."""
    n = h.n_qubits
    times = cfg.times
    if cfg.W.n_qubits != n:
        raise ValueError("operators and Hamiltonian sizes differ")
    k0 = init_basis_state(cfg.initial_label)
    unitaries = [random_local_unitary(n, make_rng(cfg.seed, r)) for r in range(cfg.ensemble_size)]

    m = cfg.trotter_steps
    if m is None:
        if len(times) > 1 and len(h):
            probe = apply_local_unitaries(unitaries[0], k0)
            intervals = len(times) - 1
            total, err = calibrate_steps(h, probe, times[-1], cfg.trotter_tol, start=intervals)
            m = -(-total // intervals)
            log.info("otoc: %d Trotter steps per interval (error %.2e)", m, err)
        else:
            m = 1

    def one(r: int) -> tuple[np.ndarray, np.ndarray]:
        psi = apply_local_unitaries(unitaries[r], k0)
        s1 = trotter_series(h, psi, times, m)
        s2 = trotter_series(h, apply_pauli(cfg.V, psi), times, m)
        return _expect_series(cfg.W, s1), _expect_series(cfg.W, s2)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(cfg.ensemble_size)))
    else:
        results = [one(r) for r in range(cfg.ensemble_size)]
    a = np.array([x for x, _ in results])
    b = np.array([y for _, y in results])
    est, se = _ratio_with_jackknife(a, b)
    exact = np.array([otoc_ensemble_exact(h, cfg.W, cfg.V, t) for t in times]) if with_exact else None
    return OtocSeries(times, est, se, exact, cfg.ensemble_size, m, {"a": a, "b": b})
