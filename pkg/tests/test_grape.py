import json

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from ethlab.grape import (
    OMEGA_MAX,
    BlockadeError,
    PulseSchedule,
    RydbergLattice,
    build_rydberg_hamiltonian,
    fidelity_error,
    grape_gradient,
    grape_optimize,
    propagate,
    syk_targets,
)
from ethlab.models import SykConfig, build_syk
from ethlab.statevector import init_basis_state
from ethlab.trotter import exact_evolve

MHZ = 2 * np.pi * 1e6
C6 = 2 * np.pi * 862690e6  # rad/s um^6


def two_atoms(d=12.0):
    return RydbergLattice.chain(2, d, C6)


def fd_gradient(pulse, lat, psi0, tgt, rel_step=1e-6):
    h = rel_step * pulse.omega
    out = np.empty(pulse.n_slices)
    for j in range(pulse.n_slices):
        up, dn = pulse.delta.copy(), pulse.delta.copy()
        up[j] += h
        dn[j] -= h
        e_up = fidelity_error(propagate(pulse.with_delta(up), lat, psi0), tgt)
        e_dn = fidelity_error(propagate(pulse.with_delta(dn), lat, psi0), tgt)
        out[j] = (e_up - e_dn) / (2 * h)
    return out


class TestLattice:
    def test_blockade_radius(self):
        assert RydbergLattice(np.zeros((1, 2)), C6).blockade_radius(0.75 * MHZ) == pytest.approx(10.236, abs=1e-3)

    def test_rejects_close_atoms(self):
        with pytest.raises(BlockadeError, match="blockade radius"):
            RydbergLattice.chain(2, 5.0, C6).validate(0.75 * MHZ)

    def test_rejects_overlap(self):
        with pytest.raises(BlockadeError, match="overlapping"):
            RydbergLattice([[0, 0], [0, 0]], C6).validate(0.75 * MHZ)

    def test_geometric_chain(self):
        lat = RydbergLattice.chain(3, 11.0, C6, growth=1.15)
        np.testing.assert_allclose(lat.positions[:, 0], [0.0, 11.0, 23.65])

    def test_needs_positive_c6(self):
        with pytest.raises(ValueError):
            RydbergLattice([[0, 0]], 0.0)


class TestHamiltonian:
    def test_diagonal_without_drive(self):
        h = build_rydberg_hamiltonian(two_atoms(), 0.0, 0.0)
        assert np.allclose(h, np.diag(np.diag(h)))
        assert h[3, 3].real == pytest.approx(C6 / 12.0**6)

    def test_single_atom(self):
        om, de = 0.75 * MHZ, 2 * MHZ
        h = build_rydberg_hamiltonian(RydbergLattice([[0, 0]], C6), om, de)
        np.testing.assert_allclose(h, [[0, om / 2], [om / 2, -de]])

    def test_hermitian_with_phase(self):
        lat = RydbergLattice.chain(3, 11.0, C6, 1.1)
        h = build_rydberg_hamiltonian(lat, 1.5 * MHZ, -3 * MHZ, phi=0.7)
        assert np.max(np.abs(h - h.conj().T)) < 1e-12 * np.max(np.abs(h))


class TestPulse:
    def test_amplitude_limit(self):
        with pytest.raises(ValueError, match="omega"):
            PulseSchedule.constant(0.0, 4, omega=1.01 * OMEGA_MAX)

    def test_detuning_bound(self):
        with pytest.raises(ValueError, match="detuning"):
            PulseSchedule([30 * MHZ])

    def test_csv_round_trip(self, tmp_path):
        p = PulseSchedule(np.linspace(-1, 1, 5) * MHZ)
        p.to_csv(tmp_path / "p.csv")
        lines = (tmp_path / "p.csv").read_text().splitlines()
        assert lines[0] == "slice_index,t_start_us,delta_rad_per_s"
        assert lines[2].startswith("1,0.8,")
        np.testing.assert_array_equal(PulseSchedule.from_csv(tmp_path / "p.csv").delta, p.delta)


class TestPropagate:
    def test_zero_duration(self):
        psi = init_basis_state("01")
        np.testing.assert_array_equal(propagate(PulseSchedule([MHZ], duration=0.0), two_atoms(), psi), psi)

    def test_phase_only_without_drive(self):
        lat = two_atoms()
        out = propagate(PulseSchedule([0.0], omega=0.0), lat, init_basis_state("11"))
        assert abs(out[3]) == pytest.approx(1.0)
        assert np.angle(out[3]) == pytest.approx(np.angle(np.exp(-1j * C6 / 12.0**6 * 4e-6)))

    def test_constant_pulse_collapses_to_one_exponential(self):
        lat = RydbergLattice.chain(3, 11.0, C6, 1.15)
        pulse = PulseSchedule.constant(3 * MHZ, 16)
        psi0 = init_basis_state("000")
        h = build_rydberg_hamiltonian(lat, pulse.omega, 3 * MHZ)
        np.testing.assert_allclose(propagate(pulse, lat, psi0), scipy.linalg.expm(-1j * h * pulse.duration) @ psi0, atol=1e-10)

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.floats(-20, 20), min_size=1, max_size=12))
    def test_unitary(self, mhz):
        out = propagate(PulseSchedule(np.array(mhz) * MHZ), two_atoms(), init_basis_state("00"))
        assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-10)

    def test_frozen_final_state(self):
        pulse = PulseSchedule(np.linspace(-1, 1, 8) * 3 * MHZ)
        out = propagate(pulse, two_atoms(), init_basis_state("00"))
        np.testing.assert_allclose(out[0], 0.05232712849704052 - 0.01447117088761185j, atol=1e-12)
        np.testing.assert_allclose(out[3], -0.04130471827599265 + 0.978734202632206j, atol=1e-12)
        assert fidelity_error(out, init_basis_state("10")) == pytest.approx(0.9812871311587826, rel=1e-10)

    def test_returns_slice_propagators(self):
        pulse = PulseSchedule(np.linspace(-1, 1, 4) * MHZ)
        psi, us = propagate(pulse, two_atoms(), init_basis_state("00"), return_propagators=True)
        assert len(us) == 4
        np.testing.assert_allclose(us[3] @ us[2] @ us[1] @ us[0] @ init_basis_state("00"), psi, atol=1e-12)

    def test_state_size_checked(self):
        with pytest.raises(ValueError, match="state of shape"):
            propagate(PulseSchedule([0.0]), two_atoms(), init_basis_state("000"))


class TestFidelity:
    def test_limits(self):
        a, b = init_basis_state("01"), init_basis_state("10")
        assert fidelity_error(a, a) == 0.0
        assert fidelity_error(a, b) == 1.0
        assert fidelity_error(np.exp(1.3j) * a, a) == pytest.approx(0.0, abs=1e-15)
        with pytest.raises(ValueError, match="size mismatch"):
            fidelity_error(a, init_basis_state("0"))


class TestGradient:
    @pytest.mark.parametrize("seed", range(6))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        n = 2 + seed % 2
        lat = RydbergLattice.chain(n, rng.uniform(10.5, 13.0), C6, 1.1)
        pulse = PulseSchedule(rng.uniform(-5, 5, 12) * MHZ)
        tgt = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        tgt /= np.linalg.norm(tgt)
        psi0 = init_basis_state("0" * n)
        g = grape_gradient(pulse, lat, psi0, tgt)
        fd = fd_gradient(pulse, lat, psi0, tgt)
        assert np.max(np.abs(g - fd) / np.abs(fd)) < 1e-5

    def test_two_derivative_routes_agree(self):
        rng = np.random.default_rng(8)
        lat = RydbergLattice.chain(3, 11.0, C6, 1.15)
        pulse = PulseSchedule(rng.uniform(-5, 5, 10) * MHZ)
        tgt = init_basis_state("101")
        psi0 = init_basis_state("000")
        a = grape_gradient(pulse, lat, psi0, tgt, method="eigh")
        b = grape_gradient(pulse, lat, psi0, tgt, method="augmented")
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-14 * np.max(np.abs(a)))

    def test_stationary_at_exact_minimum(self):
        pulse = PulseSchedule(np.linspace(-2, 2, 8) * MHZ)
        lat, psi0 = two_atoms(), init_basis_state("00")
        tgt = propagate(pulse, lat, psi0)
        assert np.linalg.norm(grape_gradient(pulse, lat, psi0, tgt)) < 1e-8

    def test_frozen_gradient(self):
        pulse = PulseSchedule(np.linspace(-1, 1, 8) * 3 * MHZ)
        g = grape_gradient(pulse, two_atoms(), init_basis_state("00"), init_basis_state("10"))
        assert g[0] == pytest.approx(-1.2352175797280566e-08, rel=1e-8)
        assert g[3] == pytest.approx(2.0095912994468993e-08, rel=1e-8)

    def test_palindromic_symmetry(self):
        # Real H, a real target equal to the start state and a time-symmetric pulse give a
        # time-symmetric gradient.
        lat = two_atoms()
        d = np.array([1.0, -3.0, 2.0, 0.5]) * MHZ
        pulse = PulseSchedule(np.r_[d, d[::-1]])
        psi0 = init_basis_state("00")
        g = grape_gradient(pulse, lat, psi0, psi0)
        np.testing.assert_allclose(g, g[::-1], rtol=1e-9, atol=1e-12 * np.max(np.abs(g)))

    def test_unknown_method(self):
        with pytest.raises(ValueError, match="gradient method"):
            grape_gradient(PulseSchedule([0.0]), two_atoms(), init_basis_state("00"), init_basis_state("00"), "adam")


class TestOptimize:
    def test_self_consistent_target(self):
        pulse = PulseSchedule(np.linspace(-2, 2, 16) * MHZ)
        lat, psi0 = two_atoms(), init_basis_state("00")
        res = grape_optimize(pulse, lat, psi0, propagate(pulse, lat, psi0))
        assert res.iterations == 0
        assert res.final_error < 1e-12
        assert res.termination == "converged"

    def test_recovers_hidden_pulse(self):
        rng = np.random.default_rng([7, 0])
        lat = RydbergLattice.chain(2, 12.0, C6)
        hidden = PulseSchedule(rng.uniform(-5, 5, 64) * MHZ)
        psi0 = init_basis_state("00")
        guess = hidden.with_delta(hidden.delta + rng.normal(size=64) * 2 * MHZ)
        res = grape_optimize(guess, lat, psi0, propagate(hidden, lat, psi0), max_iters=500, tol=1e-4)
        assert res.final_error < 1e-3
        assert all(b <= a for a, b in zip(res.trace, res.trace[1:]))
        assert np.all(np.abs(res.pulse.delta) <= res.pulse.delta_bound)

    def test_iteration_budget(self):
        lat = RydbergLattice.chain(3, 11.0, C6, 1.15)
        res = grape_optimize(PulseSchedule.constant(0.0, 8), lat, init_basis_state("000"), init_basis_state("111"), max_iters=3)
        assert res.termination in {"max_iters", "stall", "stationary"}
        assert res.iterations <= 3
        assert res.final_error <= res.trace[0]

    def test_stationary_start(self):
        # zero drive leaves |00> untouched and the gradient vanishes identically
        lat = two_atoms()
        pulse = PulseSchedule.constant(0.0, 4, omega=0.0)
        res = grape_optimize(pulse, lat, init_basis_state("00"), init_basis_state("11"))
        assert res.termination == "stationary"
        assert res.final_error == pytest.approx(1.0)

    def test_result_json(self):
        pulse = PulseSchedule(np.zeros(4))
        lat, psi0 = two_atoms(), init_basis_state("00")
        doc = json.loads(grape_optimize(pulse, lat, psi0, propagate(pulse, lat, psi0)).to_json())
        assert doc["termination"] == "converged"
        assert doc["iterations"] == 0


class TestSykTargets:
    def test_targets_match_exact_evolution(self):
        h = build_syk(SykConfig(6, seed=1))
        psi0 = init_basis_state("000")
        ts = syk_targets(h, psi0, 0.3, 3, include_initial=True)
        np.testing.assert_array_equal(ts[0], psi0)
        for m, t in enumerate(ts):
            assert np.linalg.norm(t) == pytest.approx(1.0)
            np.testing.assert_allclose(t, exact_evolve(h, psi0, 0.3 * m), atol=1e-14)
        assert len(syk_targets(h, psi0, 0.3, 3)) == 3
