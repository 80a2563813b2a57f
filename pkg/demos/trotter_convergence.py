"""First-order Trotter convergence on a sparse SYK instance.

The error after a fixed time halves each time the step count doubles.
"""

import numpy as np

from ethlab.models import SykConfig, build_syk
from ethlab.statevector import init_basis_state
from ethlab.trotter import trotter_error

h = build_syk(SykConfig(6, coupling_variance=1.0, seed=0))
psi = init_basis_state("000")
ms = np.array([4, 8, 16, 32, 64])
errs = np.array([trotter_error(h, psi, 1.0, int(m)) for m in ms])
for m, e in zip(ms, errs):
    print(f"M={m:3d}  error={e:.3e}")
print(f"log-log slope {np.polyfit(np.log(ms), np.log(errs), 1)[0]:.3f}")
