"""Recover a hidden detuning pulse on two Rydberg atoms with GRAPE.

A random pulse produces a target state; optimization from a noisy guess
should drive the infidelity below 1e-3.  The state is recovered, the pulse
need not be: many detuning profiles reach the same two-atom state.
"""

import numpy as np

from ethlab.grape import PulseSchedule, RydbergLattice, grape_optimize, propagate
from ethlab.statevector import init_basis_state

MHZ = 2 * np.pi * 1e6
rng = np.random.default_rng(7)
lattice = RydbergLattice.chain(2, 12.0, 2 * np.pi * 862690e6)
hidden = PulseSchedule(rng.uniform(-1, 1, 64) * 5 * MHZ)
psi0 = init_basis_state("00")
target = propagate(hidden, lattice, psi0)

guess = hidden.with_delta(np.clip(hidden.delta + rng.normal(size=64) * 2 * MHZ, -hidden.delta_bound, hidden.delta_bound))
result = grape_optimize(guess, lattice, psi0, target, tol=1e-4)
print(f"blockade radius {lattice.blockade_radius(hidden.omega):.2f} um")
print(f"{result.termination} after {result.iterations} iterations, error {result.final_error:.2e}")
print(f"max pulse deviation {np.max(np.abs(result.pulse.delta - hidden.delta)) / MHZ:.3f} x 2pi MHz")
