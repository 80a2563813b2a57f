"""Scarred revivals versus thermalization in the PXP chain.

A Neel state on a blockaded chain keeps returning to itself, while the
all-zero state spreads over the constrained space and stays there.
Run with ``python3 demos/pxp_scars.py``.
"""

import numpy as np
from scipy.signal import find_peaks

from ethlab.diagnostics import spectral_decomposition
from ethlab.models import PxpConfig, build_pxp, neel_label
from ethlab.statevector import init_basis_state

N = 9
h = build_pxp(PxpConfig(N))
times = np.linspace(0, 30, 601)

for label in (neel_label(N), "0" * N):
    psi = init_basis_state(label)
    dec = spectral_decomposition(h, psi)
    weights = np.abs(dec.eigenvectors.T.conj() @ psi) ** 2
    survival = np.abs(np.exp(-1j * np.outer(times, dec.eigenvalues)) @ weights) ** 2
    peaks, _ = find_peaks(survival, height=0.2)
    late = survival[times > 15].mean()
    print(f"|{label}>: {len(peaks)} revivals above 0.2, late mean survival {late:.4f}, diagonal ensemble {np.sum(weights**2):.4f}")
    for p in peaks[:4]:
        print(f"    t={times[p]:5.2f}  F={survival[p]:.3f}")
