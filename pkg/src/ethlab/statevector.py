"""Dense statevector kernels and small dense-matrix linear algebra.

States are plain complex ``numpy`` arrays of length ``2**n``.  Basis index
``j`` labels the bitstring ``q0 q1 ... q(n-1)`` with qubit 0 as the most
significant bit, so ``"101"`` is index 5.
"""

from __future__ import annotations

import csv
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.linalg

from .pauli import PauliString

__all__ = [
    "MAX_DENSE_QUBITS",
    "DimensionError",
    "apply_local_unitaries",
    "apply_pauli",
    "apply_pauli_rotation",
    "basis_labels",
    "check_dense_qubits",
    "dump_state_csv",
    "expectation_pauli",
    "frechet_exp",
    "init_basis_state",
    "init_plus_on",
    "inner",
    "matrix_exponential",
    "n_qubits_of",
    "pauli_index_action",
    "prepare_state",
    "probabilities",
    "random_local_unitary",
]

MAX_DENSE_QUBITS = 12
NORM_TOL = 1e-10


class DimensionError(ValueError):
    """Dense work requested above the configured qubit limit."""


def check_dense_qubits(n_qubits: int, max_qubits: int = MAX_DENSE_QUBITS) -> None:
    if n_qubits > max_qubits:
        raise DimensionError(f"{n_qubits} qubits exceeds the dense limit of {max_qubits}")


def n_qubits_of(psi: np.ndarray) -> int:
    dim = psi.shape[0]
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise ValueError(f"state dimension {dim} is not a power of two")
    return n


def _check_pauli_size(p: PauliString, psi: np.ndarray) -> None:
    if n_qubits_of(psi) != p.n_qubits:
        raise ValueError(f"size mismatch: {p.n_qubits}-qubit Pauli on {n_qubits_of(psi)}-qubit state")


def basis_labels(n_qubits: int) -> list[str]:
    return [format(j, f"0{n_qubits}b") for j in range(1 << n_qubits)]


def init_basis_state(bits: str) -> np.ndarray:
    bits = bits.replace(" ", "")
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"invalid bitstring {bits!r}")
    psi = np.zeros(1 << len(bits), dtype=complex)
    psi[int(bits, 2)] = 1.0
    return psi


_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_ALIGNED = [np.array(v, dtype=complex) / np.linalg.norm(v) for v in ([1, 0], [0, 1], [1, 1], [1, -1])]


def init_plus_on(psi: np.ndarray, qubit: int) -> np.ndarray:
    """Map ``|0> -> |+>`` (and ``|1> -> |->``) on one qubit.

    The qubit must be unentangled and sit in ``|0>``, ``|1>``, ``|+>`` or
    ``|->`` (up to phase); applying twice therefore returns the input.
    """
    n = n_qubits_of(psi)
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for {n} qubits")
    t = psi.reshape(1 << qubit, 2, -1)
    # Rank-1 test on the qubit-vs-rest reshaping, then alignment of the qubit factor.
    m = np.moveaxis(t, 1, 0).reshape(2, -1)
    s = np.linalg.svd(m, compute_uv=False)
    if s.size > 1 and s[1] > 1e-10 * max(s[0], 1.0):
        raise ValueError(f"qubit {qubit} is entangled with the rest of the register")
    u, _, _ = np.linalg.svd(m)
    local = u[:, 0]
    if not any(abs(abs(np.vdot(v, local)) - 1) < 1e-10 for v in _ALIGNED):
        raise ValueError(f"qubit {qubit} is not in a basis-aligned state")
    out = np.einsum("ab,ibj->iaj", _HADAMARD, t)
    return out.reshape(-1)


def prepare_state(label: str) -> np.ndarray:
    """State from a label over ``{0, 1, +}``, e.g. ``"00+"``."""
    label = label.replace(" ", "")
    psi = init_basis_state(label.replace("+", "0"))
    for q, ch in enumerate(label):
        if ch == "+":
            psi = init_plus_on(psi, q)
    return psi


def _index_mask(mask: int, n: int) -> int:
    # qubit q lives on index bit n-1-q
    return int(format(mask, f"0{n}b")[::-1], 2) if mask else 0


@lru_cache(maxsize=4096)
def _action_cached(n: int, x_mask: int, z_mask: int, phase_exp: int):
    dim = 1 << n
    xi, zi = _index_mask(x_mask, n), _index_mask(z_mask, n)
    idx = np.arange(dim, dtype=np.int64)
    perm = idx ^ xi
    # sigma(1,1) = Y = i X Z, so the string is i**(phase + n_y) X^x Z^z.
    base = 1j ** ((phase_exp + bin(x_mask & z_mask).count("1")) % 4)
    sign = 1 - 2 * (np.bitwise_count(perm & zi) & 1).astype(np.int64)
    factor = base * sign
    perm.setflags(write=False)
    factor.setflags(write=False)
    return perm, factor


def pauli_index_action(p: PauliString) -> tuple[np.ndarray, np.ndarray]:
    """``(perm, factor)`` with ``(p @ psi)[j] = factor[j] * psi[perm[j]]``."""
    return _action_cached(p.n_qubits, p.x_mask, p.z_mask, p.phase_exp)


def apply_pauli(p: PauliString, psi: np.ndarray) -> np.ndarray:
    _check_pauli_size(p, psi)
    perm, factor = pauli_index_action(p)
    return factor * psi[perm]


def apply_pauli_rotation(theta: float, p: PauliString, psi: np.ndarray) -> np.ndarray:
    """``exp(-i theta p) psi = cos(theta) psi - i sin(theta) p psi``."""
    if p.phase_exp != 0:
        raise ValueError("rotation generator must have phase_exp 0 (Hermitian)")
    return np.cos(theta) * psi - 1j * np.sin(theta) * apply_pauli(p, psi)


def inner(a: np.ndarray, b: np.ndarray) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    if a.shape != b.shape:
        raise ValueError(f"size mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def probabilities(psi: np.ndarray) -> np.ndarray:
    return np.abs(psi) ** 2


def expectation_pauli(p: PauliString, psi: np.ndarray) -> float:
    return float(np.vdot(psi, apply_pauli(p, psi)).real)


def random_local_unitary(n_qubits: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Independent Haar-random 2x2 unitaries, one per qubit."""
    out = []
    for _ in range(n_qubits):
        z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
        q, r = np.linalg.qr(z)
        d = np.diag(r)
        out.append(q * (d / np.abs(d)))
    return out


def apply_local_unitaries(us: list[np.ndarray], psi: np.ndarray) -> np.ndarray:
    """Apply ``us[0] (x) us[1] (x) ...`` to ``psi``."""
    n = n_qubits_of(psi)
    if len(us) != n:
        raise ValueError(f"{len(us)} local unitaries for {n} qubits")
    t = psi.reshape((2,) * n)
    for q, u in enumerate(us):
        t = np.moveaxis(np.tensordot(u, t, axes=([1], [q])), 0, q)
    return t.reshape(-1)


def _check_square(a: np.ndarray, max_qubits: int) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    check_dense_qubits(n_qubits_of(a[:, 0]) if a.shape[0] > 1 else 0, max_qubits)


def matrix_exponential(a: np.ndarray, max_qubits: int = MAX_DENSE_QUBITS) -> np.ndarray:
    """``exp(a)`` by Pade scaling and squaring."""
    a = np.asarray(a)
    _check_square(a, max_qubits)
    return scipy.linalg.expm(a)


def frechet_exp(a: np.ndarray, e: np.ndarray, max_qubits: int = MAX_DENSE_QUBITS) -> np.ndarray:
    """Directional derivative of ``exp`` at ``a`` along ``e``.

    Read off the upper-right block of ``exp([[a, e], [0, a]])``.
    """
    a, e = np.asarray(a), np.asarray(e)
    _check_square(a, max_qubits)
    if e.shape != a.shape:
        raise ValueError(f"direction shape {e.shape} does not match {a.shape}")
    d = a.shape[0]
    aug = np.zeros((2 * d, 2 * d), dtype=np.result_type(a, e, complex))
    aug[:d, :d] = a
    aug[d:, d:] = a
    aug[:d, d:] = e
    return scipy.linalg.expm(aug)[:d, d:]


def dump_state_csv(psi: np.ndarray, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "real", "imag"])
        for j, a in enumerate(psi):
            w.writerow([j, repr(float(a.real)), repr(float(a.imag))])
