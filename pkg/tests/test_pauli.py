import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ethlab.pauli import (
    NonHermitianError,
    PauliString,
    PauliSum,
    canonicalize,
    commutes,
    dump_pauli_sum,
    group_commuting,
    load_pauli_sum,
    multiply,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)
SINGLE = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron_label(label):
    out = np.ones((1, 1), dtype=complex)
    for ch in label:
        out = np.kron(out, SINGLE[ch])
    return out


labels = st.integers(1, 4).flatmap(lambda n: st.text("IXYZ", min_size=n, max_size=n))
label_pairs = st.integers(1, 4).flatmap(
    lambda n: st.tuples(st.text("IXYZ", min_size=n, max_size=n), st.text("IXYZ", min_size=n, max_size=n))
)


class TestPauliString:
    def test_label_round_trip(self):
        p = PauliString.from_label("XIZY")
        assert p.label == "XIZY"
        assert p.support == (0, 2, 3)
        assert p.weight == 3
        assert p.n_y == 1

    def test_qubit_zero_is_leftmost(self):
        p = PauliString.single("X", 0, 3)
        assert p.label == "XII"
        assert p.x_mask == 1

    def test_invalid_letter(self):
        with pytest.raises(ValueError, match="invalid Pauli letter"):
            PauliString.from_label("XQ")

    def test_mask_out_of_range(self):
        with pytest.raises(ValueError):
            PauliString(2, x_mask=4)

    def test_single_qubit_products(self):
        xy = multiply(PauliString.from_label("X"), PauliString.from_label("Y"))
        assert (xy.label, xy.phase_exp) == ("Z", 1)
        yx = multiply(PauliString.from_label("Y"), PauliString.from_label("X"))
        assert (yx.label, yx.phase_exp) == ("Z", 3)
        zx = multiply(PauliString.from_label("Z"), PauliString.from_label("X"))
        assert (zx.label, zx.phase_exp) == ("Y", 1)

    def test_size_mismatch(self):
        with pytest.raises(ValueError, match="size mismatch"):
            multiply(PauliString.from_label("X"), PauliString.from_label("XX"))

    def test_matrix_matches_kron(self):
        for label in ("X", "Y", "ZX", "XYZ", "IYI"):
            np.testing.assert_allclose(PauliString.from_label(label).to_matrix(), kron_label(label))

    def test_str_shows_phase(self):
        assert str(PauliString.from_label("XZ", phase_exp=3)) == "-iXZ"

    @given(label_pairs)
    def test_product_matches_matrices(self, pair):
        a, b = (PauliString.from_label(s) for s in pair)
        np.testing.assert_allclose((a * b).to_matrix(), a.to_matrix() @ b.to_matrix(), atol=1e-12)

    @given(label_pairs)
    def test_commutes_matches_matrices(self, pair):
        a, b = (PauliString.from_label(s) for s in pair)
        ma, mb = a.to_matrix(), b.to_matrix()
        assert commutes(a, b) == np.allclose(ma @ mb, mb @ ma)

    @given(labels)
    def test_squares_to_identity(self, label):
        p = PauliString.from_label(label)
        sq = p * p
        assert sq.x_mask == sq.z_mask == 0
        assert sq.phase_exp == 0

    @given(label_pairs, st.text("IXYZ", min_size=4, max_size=4))
    def test_associative(self, pair, third):
        n = len(pair[0])
        a, b = (PauliString.from_label(s) for s in pair)
        c = PauliString.from_label(third[:n])
        assert (a * b) * c == a * (b * c)


class TestPauliSum:
    def test_canonicalize_merges_and_prunes(self):
        h = canonicalize(
            [(1.0, PauliString.from_label("XZ")), (0.5, PauliString.from_label("XZ")), (1e-16, PauliString.from_label("ZZ"))]
        )
        assert len(h) == 1
        assert h.terms[0][0] == pytest.approx(1.5)

    def test_canonicalize_folds_phase(self):
        # i * (i XX) = -XX
        h = canonicalize([(1j, PauliString.from_label("XX", phase_exp=1))])
        assert h.terms == ((-1.0, PauliString.from_label("XX")),)

    def test_non_hermitian_rejected(self):
        with pytest.raises(NonHermitianError, match="imaginary"):
            canonicalize([(1.0, PauliString.from_label("XY", phase_exp=1))])

    def test_phase_terms_rejected_in_constructor(self):
        with pytest.raises(ValueError, match="phase_exp 0"):
            PauliSum(1, [(1.0, PauliString.from_label("X", phase_exp=2))])

    def test_cancellation_leaves_empty_sum(self):
        p = PauliString.from_label("ZZ")
        h = canonicalize([(1.0, p), (-1.0, p)])
        assert len(h) == 0
        assert h.n_qubits == 2

    def test_add_and_scale(self):
        a = load_pauli_sum("1.0 XI\n2.0 IZ\n")
        b = load_pauli_sum("-1.0 XI\n")
        s = 3 * (a + b)
        assert s.terms == ((6.0, PauliString.from_label("IZ")),)

    def test_to_matrix_and_sparse_agree(self):
        h = load_pauli_sum("0.3 XYZ\n-1.2 ZZI\n0.7 IXX\n0.1 YII\n")
        dense = h.to_matrix()
        np.testing.assert_allclose(h.to_sparse().toarray(), dense)
        ref = 0.3 * kron_label("XYZ") - 1.2 * kron_label("ZZI") + 0.7 * kron_label("IXX") + 0.1 * kron_label("YII")
        np.testing.assert_allclose(dense, ref)
        np.testing.assert_allclose(dense, dense.conj().T)

    def test_dump_load_round_trip(self):
        h = load_pauli_sum(["# comment", "0.1 XX", "-0.30000000000000004 ZY"])
        assert load_pauli_sum(dump_pauli_sum(h)) == h
        assert dump_pauli_sum(h) == "0.1 XX\n-0.30000000000000004 ZY\n"

    def test_empty_dump_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            load_pauli_sum("\n# nothing\n")


class TestGrouping:
    def test_groups_commute_internally(self):
        h = load_pauli_sum("1 XX\n1 ZZ\n1 YY\n1 XI\n1 ZI\n1 IZ\n")
        groups = group_commuting(h)
        for g in groups:
            for _, p in g:
                assert all(commutes(p, q) for _, q in g)
        assert sum(len(g) for g in groups) == len(h)

    def test_first_fit_order(self):
        h = load_pauli_sum("1 XX\n1 ZZ\n1 XI\n1 ZI\n")
        labels = [[p.label for p in g.strings] for g in group_commuting(h)]
        assert labels == [["XX", "ZZ"], ["XI"], ["ZI"]]

    @settings(max_examples=50)
    @given(st.lists(st.text("IXYZ", min_size=3, max_size=3), min_size=1, max_size=12, unique=True))
    def test_partition_property(self, labs):
        h = canonicalize([(1.0, PauliString.from_label(s)) for s in labs], 3)
        groups = group_commuting(h)
        flat = [p.label for g in groups for p in g.strings]
        assert sorted(flat) == sorted(p.label for p in h.strings)
        for g in groups:
            assert all(commutes(a, b) for a in g.strings for b in g.strings)
