import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ethlab.diagnostics import (
    EmptyShellError,
    basis_histogram,
    blockade_sector,
    diagonal_ensemble_average,
    energy_window,
    eth_diagonal_scatter,
    late_time_mean,
    microcanonical_average,
    parity_sector,
    parity_sector_mass,
    sector_uniformity,
    spectral_decomposition,
    survival_probability,
)
from ethlab.models import PxpConfig, SykConfig, build_pxp, build_syk, neel_label
from ethlab.pauli import PauliString, load_pauli_sum
from ethlab.statevector import init_basis_state, prepare_state
from ethlab.trotter import exact_evolve, trotter_evolve


@pytest.fixture(scope="module")
def syk3():
    return build_syk(SykConfig(6, seed=0))


class TestSurvivalAndHistograms:
    def test_survival_basics(self):
        a, b = init_basis_state("01"), init_basis_state("10")
        assert survival_probability(a, a) == 1.0
        assert survival_probability(a, b) == 0.0
        with pytest.raises(ValueError, match="size mismatch"):
            survival_probability(a, init_basis_state("0"))

    def test_histogram(self):
        hist = basis_histogram(prepare_state("00+"))
        assert hist["000"] == pytest.approx(0.5)
        assert hist["001"] == pytest.approx(0.5)
        assert sum(hist.values()) == pytest.approx(1.0)
        assert basis_histogram(init_basis_state(neel_label(3)))["010"] == 1.0

    def test_syk_support_stays_in_even_sector(self, syk3):
        psi = trotter_evolve(syk3, init_basis_state("000"), 7.0, 200)
        hist = basis_histogram(psi)
        leak = sum(v for k, v in hist.items() if k not in {"000", "011", "101", "110"})
        assert leak < 1e-12


class TestSectors:
    def test_parity_sectors(self):
        np.testing.assert_array_equal(parity_sector(3, 1), [0, 3, 5, 6])
        np.testing.assert_array_equal(parity_sector(3, -1), [1, 2, 4, 7])
        with pytest.raises(ValueError):
            parity_sector(3, 0)

    def test_parity_mass(self, syk3):
        assert parity_sector_mass(init_basis_state("000"), 1) == 1.0
        assert parity_sector_mass(init_basis_state("001"), -1) == 1.0
        psi = exact_evolve(syk3, init_basis_state("000"), 4.0)
        assert parity_sector_mass(psi, -1) < 1e-10

    def test_blockade_sector_is_fibonacci(self):
        sizes = [blockade_sector(n).size for n in range(1, 8)]
        assert sizes == [2, 3, 5, 8, 13, 21, 34]

    def test_uniformity(self):
        sector = parity_sector(3, 1)
        uniform = np.zeros(8)
        uniform[sector] = 0.25
        assert sector_uniformity(uniform, sector) == (0.0, 0.0)
        l1, linf = sector_uniformity(init_basis_state("000"), sector)
        assert linf == pytest.approx(0.75)
        assert l1 == pytest.approx(1.5)

    def test_uniformity_rejects_empty(self):
        with pytest.raises(ValueError):
            sector_uniformity(np.ones(4) / 4, [])
        with pytest.raises(ValueError, match="no weight"):
            sector_uniformity(init_basis_state("00"), [1, 2])


class TestEnsembles:
    def test_eigenstate_start(self, syk3):
        dec = spectral_decomposition(syk3)
        v = dec.eigenvectors[:, 3]
        dec_v = spectral_decomposition(syk3, v)
        z0 = PauliString.from_label("ZII").to_matrix()
        assert diagonal_ensemble_average(dec_v, z0) == pytest.approx(np.vdot(v, z0 @ v).real, abs=1e-12)

    def test_identity_gives_one(self, syk3):
        dec = spectral_decomposition(syk3, init_basis_state("000"))
        assert diagonal_ensemble_average(dec, np.eye(8)) == pytest.approx(1.0)
        assert microcanonical_average(dec, np.eye(8), 0.0, 10.0) == pytest.approx(1.0)
        assert all(y == pytest.approx(1.0) for _, y in eth_diagonal_scatter(dec, np.eye(8)))
        assert len(eth_diagonal_scatter(dec, np.eye(8))) == 8

    def test_full_shell_is_normalized_trace(self):
        h = load_pauli_sum("0.4 XYZ\n0.9 ZZI\n-0.3 IXX\n0.2 YIY\n0.7 ZIX\n")
        dec = spectral_decomposition(h)
        proj = np.diag(init_basis_state("101").real)
        assert microcanonical_average(dec, proj, 0.0, 100.0) == pytest.approx(1 / 8)

    def test_diagonal_ensemble_equals_long_time_mean(self):
        h = load_pauli_sum("0.4 XYZ\n0.9 ZZI\n-0.3 IXX\n0.2 YIY\n0.7 ZIX\n0.5 XII\n")
        psi = init_basis_state("000")
        dec = spectral_decomposition(h, psi)
        assert np.min(np.diff(dec.eigenvalues)) > 1e-3
        z = PauliString.from_label("ZII").to_matrix()
        ts = np.linspace(0, 2000, 8001)
        traj = [np.vdot(s, z @ s).real for s in (dec.evolve(t) for t in ts)]
        de = diagonal_ensemble_average(dec, z)
        assert np.mean(traj) == pytest.approx(de, abs=0.02 * max(abs(de), 0.05))

    def test_evolve_matches_exact(self, syk3):
        psi = init_basis_state("000")
        dec = spectral_decomposition(syk3, psi)
        np.testing.assert_allclose(dec.evolve(5.0), exact_evolve(syk3, psi, 5.0), atol=1e-12)

    def test_frozen_diagonal_survival(self, syk3):
        dec = spectral_decomposition(syk3, init_basis_state("000"))
        assert dec.weights @ dec.weights == pytest.approx(0.22612770225944026, rel=1e-10)

    def test_empty_shell(self, syk3):
        dec = spectral_decomposition(syk3)
        gap_center = 100.0
        with pytest.raises(EmptyShellError) as info:
            energy_window(dec, gap_center, 0.1)
        assert info.value.nearest_distance > 0
        assert energy_window(dec, dec.eigenvalues[2], 0.0).count >= 1

    def test_weights_need_state(self, syk3):
        with pytest.raises(ValueError, match="without a state"):
            spectral_decomposition(syk3).weights

    def test_scar_outliers_in_pxp(self):
        # The Neel projector has eigenstate expectations far above the mean for a few PXP states.
        n = 8
        dec = spectral_decomposition(build_pxp(PxpConfig(n)))
        proj = np.zeros((1 << n, 1 << n))
        j = int(neel_label(n), 2)
        proj[j, j] = 1.0
        diag = dec.diagonal_elements(proj)
        assert diag.max() > 20 * np.median(diag[diag > 1e-14])

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000))
    def test_weights_sum_to_one(self, seed):
        h = build_syk(SykConfig(6, seed=seed))
        dec = spectral_decomposition(h, prepare_state("00+"))
        assert dec.weights.sum() == pytest.approx(1.0)


class TestLateTimeMean:
    def test_last_quarter(self):
        assert late_time_mean(np.arange(8.0)) == pytest.approx(6.5)

    def test_empty(self):
        with pytest.raises(ValueError):
            late_time_mean([])
