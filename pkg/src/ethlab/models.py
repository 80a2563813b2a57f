"""Model Hamiltonians as canonical Pauli sums: PXP, sparse SYK and SXY4.

Majorana and SXY4 operator indices are 1-based (``chi_1 ... chi_2N``) as in
the usual SYK notation; qubits are 0-based everywhere, so ``chi_1`` and
``chi_2`` live on qubit 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .pauli import PauliString, PauliSum, canonicalize, multiply
from .rng import make_rng

__all__ = [
    "PxpConfig",
    "Sxy4Config",
    "SykConfig",
    "build_pxp",
    "build_sxy4",
    "build_syk",
    "draw_couplings",
    "jordan_wigner",
    "neel_label",
    "parity_string",
    "phi_count",
    "sxy4_operator",
]

ProjectorConvention = Literal["ground_is_zero", "ground_is_one"]


@dataclass(frozen=True)
class PxpConfig:
    """``projector_convention`` picks ``P = |0><0|`` (``ground_is_zero``)
    or ``P = |1><1| = (1 - Z)/2`` (``ground_is_one``)."""

    n_qubits: int
    projector_convention: ProjectorConvention = "ground_is_zero"

    def __post_init__(self):
        if self.n_qubits < 2:
            raise ValueError("PXP needs at least 2 qubits")
        if self.projector_convention not in ("ground_is_zero", "ground_is_one"):
            raise ValueError(f"unknown projector convention {self.projector_convention!r}")


@dataclass(frozen=True)
class SykConfig:
    n_majorana: int
    coupling_variance: float | None = None
    sparsity_p: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_majorana < 4 or self.n_majorana % 2:
            raise ValueError("n_majorana must be an even integer >= 4")
        if self.coupling_variance is None:
            object.__setattr__(self, "coupling_variance", 6.0 / self.n_majorana**3)
        if not self.coupling_variance > 0:
            raise ValueError("coupling_variance must be positive")
        if not 0.0 <= self.sparsity_p < 1.0:
            raise ValueError("sparsity_p must lie in [0, 1)")

    @property
    def n_qubits(self) -> int:
        return self.n_majorana // 2


@dataclass(frozen=True)
class Sxy4Config:
    n_qubits: int
    coupling_variance: float | None = None
    sparsity_p: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_qubits < 2:
            raise ValueError("SXY4 needs at least 2 qubits")
        if self.coupling_variance is None:
            object.__setattr__(self, "coupling_variance", 6.0 / (2 * self.n_qubits) ** 3)
        if not self.coupling_variance > 0:
            raise ValueError("coupling_variance must be positive")
        if not 0.0 <= self.sparsity_p < 1.0:
            raise ValueError("sparsity_p must lie in [0, 1)")

    @property
    def n_majorana(self) -> int:
        return 2 * self.n_qubits


def neel_label(n_qubits: int) -> str:
    return "".join("01"[q % 2] for q in range(n_qubits))


def parity_string(n_qubits: int) -> PauliString:
    """``Z (x) Z (x) ... (x) Z``."""
    return PauliString(n_qubits, 0, (1 << n_qubits) - 1)


def build_pxp(cfg: PxpConfig) -> PauliSum:
    """Open-boundary PXP chain with each ``P X P`` expanded into Pauli strings."""
    n = cfg.n_qubits
    s = 1.0 if cfg.projector_convention == "ground_is_zero" else -1.0
    terms = []
    for i in range(n):
        neighbours = [q for q in (i - 1, i + 1) if 0 <= q < n]
        # P_q = (1 + s Z_q)/2 on each neighbour; expand the product.
        for subset in itertools.product((0, 1), repeat=len(neighbours)):
            z = 0
            for q, use in zip(neighbours, subset):
                z |= use << q
            coeff = s ** sum(subset) / 2 ** len(neighbours)
            terms.append((coeff, PauliString(n, 1 << i, z)))
    return canonicalize(terms, n)


def jordan_wigner(k: int, n_qubits: int) -> PauliString:
    """Majorana ``chi_k`` (1-based) as a Pauli string.

    ``chi_{2m-1} = Z...Z X_m`` and ``chi_{2m} = Z...Z Y_m`` with the Z string
    on every qubit before ``m``.
    """
    if not 1 <= k <= 2 * n_qubits:
        raise ValueError(f"Majorana index {k} out of range 1..{2 * n_qubits}")
    m = (k - 1) // 2
    zs = (1 << m) - 1
    if k % 2:
        return PauliString(n_qubits, 1 << m, zs)
    return PauliString(n_qubits, 1 << m, zs | (1 << m))


def sxy4_operator(k: int, n_qubits: int) -> PauliString:
    """``O_{2m-1} = X_m``, ``O_{2m} = Y_m`` (1-based ``k``)."""
    if not 1 <= k <= 2 * n_qubits:
        raise ValueError(f"operator index {k} out of range 1..{2 * n_qubits}")
    m = (k - 1) // 2
    return PauliString(n_qubits, 1 << m, 0 if k % 2 else 1 << m)


def phi_count(indices: tuple[int, ...]) -> int:
    """Number of pairs ``(2m-1, 2m)`` present in a sorted index tuple.

    Equivalently, the number of qubits that receive both an X and a Y.
    """
    idx = tuple(indices)
    if len(idx) != 4 or any(a >= b for a, b in zip(idx, idx[1:])) or idx[0] < 1:
        raise ValueError(f"expected a strictly increasing 4-tuple of positive indices, got {idx}")
    s = set(idx)
    return sum(1 for a in idx if a % 2 and a + 1 in s)


def draw_couplings(n_majorana: int, variance: float, sparsity_p: float, rng: np.random.Generator):
    """Couplings over all sorted 4-tuples in lexicographic order.

    Returns ``(tuples, J, eta)``; ``eta`` is 0 with probability ``sparsity_p``.
    """
    tuples = list(itertools.combinations(range(1, n_majorana + 1), 4))
    # J is drawn before eta so the couplings do not depend on sparsity_p.
    J = rng.normal(0.0, np.sqrt(variance), len(tuples))
    eta = (rng.random(len(tuples)) >= sparsity_p).astype(np.int8)
    return tuples, J, eta


def _product(ops: list[PauliString]) -> PauliString:
    out = ops[0]
    for p in ops[1:]:
        out = multiply(out, p)
    return out


def build_syk(cfg: SykConfig) -> PauliSum:
    n = cfg.n_qubits
    tuples, J, eta = draw_couplings(cfg.n_majorana, cfg.coupling_variance, cfg.sparsity_p, make_rng(cfg.seed))
    chi = [None] + [jordan_wigner(k, n) for k in range(1, cfg.n_majorana + 1)]
    terms = [(j, _product([chi[a] for a in t])) for t, j, e in zip(tuples, J, eta) if e]
    return canonicalize(terms, n)


def build_sxy4(cfg: Sxy4Config) -> PauliSum:
    n = cfg.n_qubits
    tuples, J, eta = draw_couplings(cfg.n_majorana, cfg.coupling_variance, cfg.sparsity_p, make_rng(cfg.seed))
    ops = [None] + [sxy4_operator(k, n) for k in range(1, cfg.n_majorana + 1)]
    terms = []
    for t, j, e in zip(tuples, J, eta):
        if not e:
            continue
        p = _product([ops[a] for a in t])
        phased = PauliString(n, p.x_mask, p.z_mask, p.phase_exp + phi_count(t))
        terms.append((j, phased))
    return canonicalize(terms, n)
