import itertools

import numpy as np
import pytest

from trdiff.fock import (ModeBasis, anticommutator_check, build_ladder, commutator_check,
                         xray_transition_element)


def test_basis_dimension_and_order():
    b = ModeBasis(3, 2)
    assert b.dim == 27
    assert tuple(b.states[0]) == (0, 0, 0) and tuple(b.states[1]) == (0, 0, 1)
    assert b.index((1, 0, 2)) == 11


def test_fermion_cap_enforced():
    with pytest.raises(ValueError):
        ModeBasis(2, 2, "fermion")


def test_boson_creation_amplitude():
    b = ModeBasis(1, 4)
    ad = build_ladder(b, 0, "create").matrix
    assert (b.ket([2]) @ (ad @ b.ket([1]))).real == pytest.approx(np.sqrt(2), abs=1e-15)


def test_create_is_adjoint_of_annihilate():
    for basis in (ModeBasis(2, 3), ModeBasis(3, 1, "fermion")):
        for m in range(basis.num_modes):
            a = build_ladder(basis, m, "annihilate").matrix.toarray()
            ad = build_ladder(basis, m, "create").matrix.toarray()
            assert np.array_equal(ad, a.conj().T)


def test_at_most_one_nonzero_per_column():
    for basis in (ModeBasis(3, 3), ModeBasis(4, 1, "fermion")):
        for m in range(basis.num_modes):
            for kind in ("create", "annihilate"):
                M = build_ladder(basis, m, kind).matrix.tocsc()
                assert np.diff(M.indptr).max() <= 1


def test_fermion_pauli_exclusion():
    b = ModeBasis(3, 1, "fermion")
    for m in range(3):
        bd = build_ladder(b, m, "create").matrix
        assert (bd @ bd).nnz == 0 or np.abs((bd @ bd).toarray()).max() == 0


def test_jordan_wigner_sign():
    b = ModeBasis(2, 1, "fermion")
    b2 = build_ladder(b, 1, "annihilate").matrix
    out = b2 @ b.ket((1, 1))
    assert np.array_equal(out, -b.ket((1, 0)))


def test_boson_number_operator_spectrum():
    b = ModeBasis(2, 5)
    for m in range(2):
        a = build_ladder(b, m, "annihilate").matrix
        N = (a.conj().T @ a).toarray()
        assert np.allclose(N, np.diag(b.states[:, m]), atol=0)


def test_fermion_number_is_projector():
    b = ModeBasis(3, 1, "fermion")
    for m in range(3):
        bm = build_ladder(b, m, "annihilate").matrix
        n = (bm.conj().T @ bm).toarray()
        assert np.array_equal(n @ n, n)


def test_commutator_interior_and_boundary():
    b = ModeBasis(2, 6)
    same = commutator_check(b, 0, 0)
    assert same.interior < 1e-14
    assert same.boundary == pytest.approx(7.0)  # [a, a^dag] = 1 - 7 on the top rung
    assert commutator_check(b, 0, 1) == (0.0, 0.0)


def test_commutator_matches_dense_enumeration():
    # dense oracle: build a and a^dag from explicit number-state enumeration
    cap = 4
    b = ModeBasis(1, cap)
    a = np.diag(np.sqrt(np.arange(1, cap + 1)), 1)
    assert np.allclose(build_ladder(b, 0, "annihilate").matrix.toarray(), a)


def test_anticommutators():
    b = ModeBasis(3, 1, "fermion")
    for i, j in itertools.product(range(3), repeat=2):
        mixed, pure = anticommutator_check(b, i, j)
        assert mixed < 1e-14 and pure < 1e-14
        if i != j:
            assert mixed == 0.0


def test_anticommutator_dense_oracle():
    # explicit Jordan-Wigner with Kronecker products
    sz = np.diag([1.0, -1.0])
    lower = np.array([[0.0, 1.0], [0.0, 0.0]])  # |1> -> |0> with basis (|0>, |1>)
    eye = np.eye(2)
    ops = [np.kron(lower, np.kron(eye, eye)),
           np.kron(sz, np.kron(lower, eye)),
           np.kron(sz, np.kron(sz, lower))]
    b = ModeBasis(3, 1, "fermion")
    for m in range(3):
        assert np.allclose(build_ladder(b, m, "annihilate").matrix.toarray(), ops[m])


def test_checks_reject_wrong_statistics():
    with pytest.raises(ValueError):
        commutator_check(ModeBasis(2, 1, "fermion"), 0, 0)
    with pytest.raises(ValueError):
        anticommutator_check(ModeBasis(2, 2), 0, 0)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_xray_element(n):
    assert abs(xray_transition_element(n) - 2 * np.sqrt(n)) < 1e-12


def test_xray_element_examples_and_errors():
    assert xray_transition_element(4) == pytest.approx(4.0, abs=1e-12)
    assert xray_transition_element(3, max_occ=6) == pytest.approx(2 * np.sqrt(3), abs=1e-12)
    with pytest.raises(ValueError):
        xray_transition_element(0)
    with pytest.raises(ValueError):
        xray_transition_element(5, max_occ=3)
