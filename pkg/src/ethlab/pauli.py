"""Phase-exact algebra over N-qubit Pauli strings and real-weighted Pauli sums.

A Pauli string is stored as two integer bit masks plus a power of ``i``::

    P = i**phase_exp * prod_q sigma(x_q, z_q)

where ``sigma(0, 0) = I``, ``sigma(1, 0) = X``, ``sigma(0, 1) = Z`` and
``sigma(1, 1) = Y``.  Bit ``q`` of a mask refers to qubit ``q``.  With this
convention every string with ``phase_exp == 0`` is Hermitian, which is what
:class:`PauliSum` stores after canonicalization.

Labels are written with qubit 0 as the leftmost character, matching the
bitstring notation ``|q0 q1 ...>`` used by the statevector engine.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "COEFF_FLOOR",
    "HERMITICITY_TOL",
    "NonHermitianError",
    "PauliString",
    "PauliSum",
    "canonicalize",
    "commutes",
    "dump_pauli_sum",
    "group_commuting",
    "load_pauli_sum",
    "multiply",
]

COEFF_FLOOR = 1e-14
HERMITICITY_TOL = 1e-12

_LETTERS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS = {v: k for k, v in _LETTERS.items()}


class NonHermitianError(ValueError):
    """A Pauli sum kept an imaginary coefficient after phase folding."""


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True, slots=True)
class PauliString:
    n_qubits: int
    x_mask: int = 0
    z_mask: int = 0
    phase_exp: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        limit = 1 << self.n_qubits
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise ValueError(f"mask bits beyond qubit {self.n_qubits - 1}")
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    @classmethod
    def identity(cls, n_qubits: int) -> PauliString:
        return cls(n_qubits)

    @classmethod
    def from_label(cls, label: str, phase_exp: int = 0) -> PauliString:
        """Parse a label such as ``"XIZY"`` (qubit 0 first)."""
        x = z = 0
        for q, ch in enumerate(label.upper()):
            try:
                xb, zb = _BITS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {ch!r} in {label!r}") from None
            x |= xb << q
            z |= zb << q
        return cls(len(label), x, z, phase_exp)

    @classmethod
    def single(cls, letter: str, qubit: int, n_qubits: int) -> PauliString:
        """A single-qubit Pauli ``letter`` acting on ``qubit``."""
        if not 0 <= qubit < n_qubits:
            raise ValueError(f"qubit {qubit} out of range for {n_qubits} qubits")
        xb, zb = _BITS[letter.upper()]
        return cls(n_qubits, xb << qubit, zb << qubit)

    @property
    def label(self) -> str:
        return "".join(
            _LETTERS[(self.x_mask >> q) & 1, (self.z_mask >> q) & 1] for q in range(self.n_qubits)
        )

    @property
    def support(self) -> tuple[int, ...]:
        m = self.x_mask | self.z_mask
        return tuple(q for q in range(self.n_qubits) if (m >> q) & 1)

    @property
    def weight(self) -> int:
        return _popcount(self.x_mask | self.z_mask)

    @property
    def n_y(self) -> int:
        return _popcount(self.x_mask & self.z_mask)

    def without_phase(self) -> PauliString:
        return PauliString(self.n_qubits, self.x_mask, self.z_mask)

    def __mul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)

    def __str__(self) -> str:
        return ("", "i", "-", "-i")[self.phase_exp] + self.label

    def to_matrix(self) -> np.ndarray:
        """Dense ``2**n x 2**n`` matrix, qubit 0 as the most significant bit."""
        dim = 1 << self.n_qubits
        perm, factor = _index_action(self)
        mat = np.zeros((dim, dim), dtype=complex)
        # (P psi)[j] = factor[j] * psi[perm[j]]
        mat[np.arange(dim), perm] = factor
        return mat


def _index_action(p: PauliString):
    from .statevector import pauli_index_action

    return pauli_index_action(p)


def _check_sizes(a: PauliString, b: PauliString):
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"size mismatch: {a.n_qubits} vs {b.n_qubits} qubits")


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Return ``a @ b`` with the phase tracked exactly (mod 4)."""
    _check_sizes(a, b)
    ya, yb = a.x_mask & a.z_mask, b.x_mask & b.z_mask
    xa, xb = a.x_mask & ~a.z_mask, b.x_mask & ~b.z_mask
    za, zb = a.z_mask & ~a.x_mask, b.z_mask & ~b.x_mask
    # Per-qubit products that pick up +i (cyclic XY, YZ, ZX) and -i (anticyclic).
    plus = _popcount(xa & yb) + _popcount(ya & zb) + _popcount(za & xb)
    minus = _popcount(ya & xb) + _popcount(za & yb) + _popcount(xa & zb)
    phase = a.phase_exp + b.phase_exp + plus - minus
    return PauliString(a.n_qubits, a.x_mask ^ b.x_mask, a.z_mask ^ b.z_mask, phase)


def commutes(a: PauliString, b: PauliString) -> bool:
    """True iff ``a`` and ``b`` commute (even symplectic overlap)."""
    _check_sizes(a, b)
    return _popcount((a.x_mask & b.z_mask) ^ (a.z_mask & b.x_mask)) % 2 == 0


class PauliSum:
    """Real-weighted sum of phase-free Pauli strings.

    Instances built through :func:`canonicalize` (or the model builders)
    satisfy the Hermitian invariants: real coefficients, no duplicate
    strings, nothing below :data:`COEFF_FLOOR`.
    """

    __slots__ = ("n_qubits", "terms")

    def __init__(self, n_qubits: int, terms: Iterable[tuple[float, PauliString]] = ()):
        terms = tuple((float(c), p) for c, p in terms)
        for _, p in terms:
            if p.n_qubits != n_qubits:
                raise ValueError(f"term on {p.n_qubits} qubits in a {n_qubits}-qubit sum")
            if p.phase_exp != 0:
                raise ValueError("PauliSum terms must carry phase_exp 0; use canonicalize()")
        self.n_qubits = n_qubits
        self.terms = terms

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[float, PauliString]]:
        return iter(self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self.terms == other.terms

    def __repr__(self) -> str:
        return f"PauliSum(n_qubits={self.n_qubits}, n_terms={len(self.terms)})"

    def __add__(self, other: PauliSum) -> PauliSum:
        if self.n_qubits != other.n_qubits:
            raise ValueError("size mismatch")
        return canonicalize(self.terms + other.terms, self.n_qubits)

    def __mul__(self, scalar: float) -> PauliSum:
        return canonicalize(((scalar * c, p) for c, p in self.terms), self.n_qubits)

    __rmul__ = __mul__

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    @property
    def strings(self) -> list[PauliString]:
        return [p for _, p in self.terms]

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        mat = np.zeros((dim, dim), dtype=complex)
        rows = np.arange(dim)
        for c, p in self.terms:
            perm, factor = _index_action(p)
            mat[rows, perm] += c * factor
        return mat

    def to_sparse(self):
        """CSR matrix of the sum (``scipy.sparse``)."""
        import scipy.sparse

        dim = 1 << self.n_qubits
        rows = np.arange(dim)
        acc = scipy.sparse.csr_matrix((dim, dim), dtype=complex)
        by_x: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for c, p in self.terms:
            perm, factor = _index_action(p)
            if p.x_mask in by_x:
                by_x[p.x_mask] = (perm, by_x[p.x_mask][1] + c * factor)
            else:
                by_x[p.x_mask] = (perm, c * factor)
        for perm, vals in by_x.values():
            acc = acc + scipy.sparse.csr_matrix((vals, (rows, perm)), shape=(dim, dim))
        return acc


def canonicalize(
    terms: PauliSum | Iterable[tuple[complex, PauliString]],
    n_qubits: int | None = None,
    floor: float = COEFF_FLOOR,
    tol: float = HERMITICITY_TOL,
) -> PauliSum:
    """Fold phases into coefficients, merge duplicates and prune tiny terms.

    Raises :class:`NonHermitianError` if a merged coefficient keeps an
    imaginary part larger than ``tol``.
    """
    if isinstance(terms, PauliSum):
        n_qubits = terms.n_qubits
        terms = terms.terms
    merged: dict[tuple[int, int], complex] = {}
    for coeff, p in terms:
        if n_qubits is None:
            n_qubits = p.n_qubits
        elif p.n_qubits != n_qubits:
            raise ValueError(f"size mismatch: {p.n_qubits} vs {n_qubits} qubits")
        key = (p.x_mask, p.z_mask)
        merged[key] = merged.get(key, 0j) + complex(coeff) * 1j**p.phase_exp
    if n_qubits is None:
        raise ValueError("n_qubits required for an empty sum")
    out = []
    for (x, z), c in merged.items():
        if abs(c.imag) > tol:
            label = PauliString(n_qubits, x, z).label
            raise NonHermitianError(f"imaginary coefficient {c.imag:.3e} on {label}")
        if abs(c.real) >= floor:
            out.append((c.real, PauliString(n_qubits, x, z)))
    return PauliSum(n_qubits, out)


def group_commuting(h: PauliSum) -> list[PauliSum]:
    """Partition ``h`` into internally commuting groups.

    Greedy first-fit in term order: each term joins the first group whose
    members all commute with it.  Deterministic, not optimal.
    """
    groups: list[list[tuple[float, PauliString]]] = []
    for c, p in h.terms:
        for g in groups:
            if all(commutes(p, q) for _, q in g):
                g.append((c, p))
                break
        else:
            groups.append([(c, p)])
    return [PauliSum(h.n_qubits, g) for g in groups]


def dump_pauli_sum(h: PauliSum) -> str:
    """Text dump, one ``<coeff> <label>`` line per term."""
    return "".join(f"{c!r} {p.label}\n" for c, p in h.terms)


def load_pauli_sum(text: str | Sequence[str]) -> PauliSum:
    lines = text.splitlines() if isinstance(text, str) else list(text)
    terms = []
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        coeff, label = line.split()
        terms.append((float(coeff), PauliString.from_label(label)))
    if not terms:
        raise ValueError("empty Hamiltonian dump")
    return canonicalize(terms)
