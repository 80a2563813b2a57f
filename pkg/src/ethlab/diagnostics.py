"""Thermalization diagnostics: eigenstate averages and figure-level observables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import PauliSum
from .statevector import MAX_DENSE_QUBITS, basis_labels, check_dense_qubits, n_qubits_of

__all__ = [
    "EIGEN_TOL",
    "EmptyShellError",
    "EnsembleWindow",
    "SpectralDecomposition",
    "basis_histogram",
    "blockade_sector",
    "diagonal_ensemble_average",
    "energy_window",
    "eth_diagonal_scatter",
    "late_time_mean",
    "microcanonical_average",
    "parity_sector",
    "parity_sector_mass",
    "sector_uniformity",
    "spectral_decomposition",
    "survival_probability",
]

EIGEN_TOL = 1e-9


class EmptyShellError(ValueError):
    def __init__(self, center: float, half_width: float, nearest_distance: float):
        self.center = center
        self.half_width = half_width
        self.nearest_distance = nearest_distance
        super().__init__(
            f"no eigenvalue within {half_width:g} of {center:g}; nearest is {nearest_distance:.3e} away"
        )


@dataclass
class SpectralDecomposition:
    """Eigenpairs of ``H`` (ascending) and overlaps ``c_i = <E_i|psi>``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    overlaps: np.ndarray | None = None

    @property
    def weights(self) -> np.ndarray:
        """``|c_i|**2``."""
        if self.overlaps is None:
            raise ValueError("decomposition was built without a state")
        return np.abs(self.overlaps) ** 2

    def diagonal_elements(self, a) -> np.ndarray:
        """``A_ii = <E_i|A|E_i>`` for every eigenstate."""
        mat = _as_matrix(a)
        v = self.eigenvectors
        if mat.shape[0] != v.shape[0]:
            raise ValueError(f"dimension mismatch: operator {mat.shape[0]} vs spectrum {v.shape[0]}")
        return (v.conj() * (mat @ v)).sum(axis=0).real

    def evolve(self, t: float) -> np.ndarray:
        """Exact ``exp(-iHt) psi`` from the stored overlaps."""
        return self.eigenvectors @ (np.exp(-1j * self.eigenvalues * t) * self.overlaps)


@dataclass(frozen=True)
class EnsembleWindow:
    center: float
    half_width: float
    count: int


def _as_matrix(a) -> np.ndarray:
    if isinstance(a, PauliSum):
        return a.to_matrix()
    return np.asarray(a)


def spectral_decomposition(h, psi: np.ndarray | None = None, max_qubits: int = MAX_DENSE_QUBITS) -> SpectralDecomposition:
    mat = _as_matrix(h)
    check_dense_qubits(n_qubits_of(mat[:, 0]), max_qubits)
    if np.iscomplexobj(mat) and not np.any(mat.imag):
        mat = mat.real
    w, v = np.linalg.eigh(mat)
    c = None if psi is None else v.conj().T @ psi
    return SpectralDecomposition(w, v, c)


def survival_probability(psi0: np.ndarray, psi_t: np.ndarray) -> float:
    if psi0.shape != psi_t.shape:
        raise ValueError(f"size mismatch: {psi0.shape} vs {psi_t.shape}")
    return float(abs(np.vdot(psi0, psi_t)) ** 2)


def basis_histogram(psi: np.ndarray) -> dict[str, float]:
    """Basis-state probabilities keyed by bitstring (qubit 0 first)."""
    probs = np.abs(psi) ** 2
    return dict(zip(basis_labels(n_qubits_of(psi)), probs.tolist()))


def parity_sector(n_qubits: int, parity: int) -> np.ndarray:
    """Indices of basis states with ``(-1)**popcount == parity``."""
    if parity not in (1, -1):
        raise ValueError("parity must be +1 or -1")
    idx = np.arange(1 << n_qubits)
    odd = np.bitwise_count(idx) & 1
    return idx[odd == (parity == -1)]


def blockade_sector(n_qubits: int) -> np.ndarray:
    """Indices with no two adjacent 1s (the PXP-connected sector of ``|0...0>``)."""
    idx = np.arange(1 << n_qubits)
    return idx[(idx & (idx >> 1)) == 0]


def parity_sector_mass(psi: np.ndarray, parity: int) -> float:
    probs = np.abs(psi) ** 2
    return float(probs[parity_sector(n_qubits_of(psi), parity)].sum())


def sector_uniformity(psi_or_probs: np.ndarray, sector) -> tuple[float, float]:
    """``(L1, Linf)`` distances of the renormalized sector distribution to uniform.

    Accepts either amplitudes (complex) or a probability vector (real).
    """
    sector = np.asarray(sector, dtype=int)
    if sector.size == 0:
        raise ValueError("empty sector")
    x = np.asarray(psi_or_probs)
    probs = np.abs(x) ** 2 if np.iscomplexobj(x) else x
    p = probs[sector]
    total = p.sum()
    if total <= 0:
        raise ValueError("state has no weight on the sector")
    d = p / total - 1.0 / sector.size
    return float(np.abs(d).sum()), float(np.abs(d).max())


def diagonal_ensemble_average(decomp: SpectralDecomposition, a) -> float:
    """Infinite-time average ``sum_i |c_i|^2 A_ii``."""
    return float(decomp.weights @ decomp.diagonal_elements(a))


def energy_window(decomp: SpectralDecomposition, center: float, half_width: float) -> EnsembleWindow:
    e = decomp.eigenvalues
    inside = np.abs(e - center) <= half_width + EIGEN_TOL
    n = int(inside.sum())
    if n == 0:
        raise EmptyShellError(center, half_width, float(np.min(np.abs(e - center)) - half_width))
    return EnsembleWindow(float(center), float(half_width), n)


def microcanonical_average(decomp: SpectralDecomposition, a, center: float, half_width: float) -> float:
    """Unweighted mean of ``A_ii`` over eigenvalues in ``[center - dw, center + dw]``."""
    energy_window(decomp, center, half_width)
    inside = np.abs(decomp.eigenvalues - center) <= half_width + EIGEN_TOL
    return float(decomp.diagonal_elements(a)[inside].mean())


def eth_diagonal_scatter(decomp: SpectralDecomposition, a) -> list[tuple[float, float]]:
    return list(zip(decomp.eigenvalues.tolist(), decomp.diagonal_elements(a).tolist()))


def late_time_mean(series, fraction: float = 0.25) -> float:
    """Mean over the final ``fraction`` of recorded points."""
    s = np.asarray(series, dtype=float)
    if s.size == 0:
        raise ValueError("empty series")
    k = max(1, int(round(fraction * s.size)))
    return float(s[-k:].mean())
