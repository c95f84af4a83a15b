import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from nvpair.spin import (
    EigenSolverError, SpinAlgebraError, eigh, expectation, is_hermitian, kron,
    kron_all, spin_operators,
)


@pytest.mark.parametrize("s", [0.5, 1])
def test_commutation_relations(s):
    S = spin_operators(s)
    comm = lambda a, b: a @ b - b @ a
    np.testing.assert_allclose(comm(S.sx, S.sy), 1j * S.sz, atol=1e-14)
    np.testing.assert_allclose(comm(S.sy, S.sz), 1j * S.sx, atol=1e-14)
    np.testing.assert_allclose(comm(S.sz, S.sx), 1j * S.sy, atol=1e-14)


@pytest.mark.parametrize("s", [0.5, 1])
def test_casimir(s):
    S = spin_operators(s)
    s2 = S.sx @ S.sx + S.sy @ S.sy + S.sz @ S.sz
    np.testing.assert_allclose(s2, s * (s + 1) * np.eye(S.dim), atol=1e-14)


def test_basis_order_descending_m():
    S = spin_operators(1)
    np.testing.assert_array_equal(np.diag(S.sz).real, [1, 0, -1])
    np.testing.assert_array_equal(S.m_values, [1, 0, -1])
    # ladder: S+ |0> = sqrt(2) |+1>
    assert S.splus[0, 1] == pytest.approx(np.sqrt(2))


def test_unsupported_spin():
    with pytest.raises(SpinAlgebraError):
        spin_operators(1.5)


def test_kron_all_associative():
    a, b, c = spin_operators(1).sx, spin_operators(0.5).sz, spin_operators(1).sy
    np.testing.assert_allclose(kron_all(a, b, c), kron(kron(a, b), c))
    np.testing.assert_allclose(kron_all(a, b, c), kron(a, kron(b, c)))


def _hermitian(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


@given(st.integers(1, 18), st.integers(0, 2**32 - 1))
def test_eigh_matches_reference(n, seed):
    h = _hermitian(n, seed)
    w, v = eigh(h)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(h), atol=1e-10)
    assert np.all(np.diff(w) >= 0)
    np.testing.assert_allclose(v.conj().T @ v, np.eye(n), atol=1e-10)
    np.testing.assert_allclose(h @ v, v * w, atol=1e-9)
    # phase convention: the largest component of each eigenvector is real positive
    idx = np.argmax(np.abs(v), axis=0)
    big = v[idx, np.arange(n)]
    np.testing.assert_allclose(big.imag, 0, atol=1e-12)
    assert np.all(big.real > 0)


def test_eigh_rejects_non_hermitian():
    with pytest.raises((SpinAlgebraError, EigenSolverError)):
        eigh(np.array([[0, 1], [0, 0]], dtype=complex))


def test_eigh_rejects_oversized():
    with pytest.raises((SpinAlgebraError, EigenSolverError)):
        eigh(np.eye(40))


@given(arrays(np.float64, (3,), elements=st.floats(-1, 1)))
def test_expectation_of_sz(c):
    if np.linalg.norm(c) < 1e-3:
        c = np.array([1.0, 0, 0])
    psi = c / np.linalg.norm(c)
    S = spin_operators(1)
    assert expectation(S.sz, psi) == pytest.approx(psi[0] ** 2 - psi[2] ** 2, abs=1e-12)


def test_is_hermitian():
    assert is_hermitian(spin_operators(1).sy)
    assert not is_hermitian(spin_operators(1).splus)
