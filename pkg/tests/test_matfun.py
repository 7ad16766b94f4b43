import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weylspec.errors import NonHermitian
from weylspec.matfun import (BoundaryCondition, as_hermitian, hermitian_eig, matrix_fn, principal_sqrt,
                             psd_check)

from conftest import rand_herm


def test_eig_identity():
    w, u = hermitian_eig(np.eye(2))
    assert np.allclose(w, [1, 1])
    assert np.allclose(u.conj().T @ u, np.eye(2))


def test_eig_swap():
    w, u = hermitian_eig([[0, 1], [1, 0]])
    assert np.allclose(w, [-1, 1])
    for k, sign in enumerate((-1, 1)):
        v = u[:, k] / u[0, k]
        assert np.allclose(v, [1, sign])


def test_eig_reconstruction(rng):
    m = rand_herm(rng, 4)
    w, u = hermitian_eig(m)
    assert np.abs((u * w) @ u.conj().T - m).max() < 1e-10


def test_eig_rejects_non_hermitian():
    with pytest.raises(NonHermitian):
        hermitian_eig([[0, 1], [0, 0]])


def test_matrix_fn_examples():
    z = np.zeros((2, 2))
    assert np.allclose(matrix_fn(z, np.sin), 0)
    assert np.allclose(matrix_fn(z, np.cos), np.eye(2))
    assert np.allclose(matrix_fn(0.5 * np.pi * np.eye(2), np.sin), np.eye(2))
    assert np.abs(matrix_fn([[0, np.pi / 2], [np.pi / 2, 0]], np.cos)).max() < 1e-15


def test_matrix_cos_against_taylor(rng):
    m = rand_herm(rng, 3, 0.5)
    acc, term = np.zeros((3, 3), complex), np.eye(3, dtype=complex)
    for k in range(30):
        acc += term
        term = -term @ m @ m / ((2 * k + 1) * (2 * k + 2))
    assert np.abs(matrix_fn(m, np.cos) - acc).max() < 1e-12


def test_principal_sqrt_examples():
    assert np.isclose(principal_sqrt(2j), 1 + 1j)
    assert np.isclose(principal_sqrt(4), 2)
    assert np.isclose(principal_sqrt(-1), 1j)


@given(st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_principal_sqrt_branch(z):
    w = principal_sqrt(z)
    assert w.imag >= 0
    assert abs(w * w - z) <= 1e-12 * max(1.0, abs(z))


@given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False)
       .filter(lambda z: z.imag != 0))
def test_principal_sqrt_conjugation(z):
    # off the cut the branch satisfies sqrt(conj z) = -conj(sqrt z)
    assert abs(principal_sqrt(np.conj(z)) + np.conj(principal_sqrt(z))) <= 1e-12 * max(1.0, abs(z))


def test_psd_check_tolerance():
    assert psd_check(np.eye(2))
    assert not psd_check(np.diag([1, -1e-3]), 1e-6)
    assert psd_check(np.diag([1, -1e-9]), 1e-6)


def test_as_hermitian_symmetrizes_roundoff():
    m = np.array([[1.0, 1 + 1e-14], [1.0, 2.0]])
    h = as_hermitian(m)
    assert np.allclose(h, h.conj().T, atol=0)


@settings(max_examples=25)
@given(st.integers(1, 4), st.integers(0, 2 ** 31))
def test_boundary_condition_identities(n, seed):
    rng = np.random.default_rng(seed)
    bc = BoundaryCondition.from_alpha(rand_herm(rng, n))
    assert np.abs(bc.sin @ bc.sin + bc.cos @ bc.cos - np.eye(n)).max() < 1e-10
    assert np.abs(bc.sin @ bc.cos - bc.cos @ bc.sin).max() < 1e-10


def test_named_boundary_conditions():
    assert np.allclose(BoundaryCondition.dirichlet(2).cos, np.eye(2))
    assert np.allclose(BoundaryCondition.neumann(2).sin, np.eye(2))
