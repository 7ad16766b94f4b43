import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weylspec.errors import GridMismatch
from weylspec.ivp import (conjugate_pair, fundamental_system, inverse_block, lagrange_identity, ode_residual,
                          solve_operator_ivp, solve_vector_ivp, wronskian_identities, wronskian_operator,
                          wronskian_vector)
from weylspec.matfun import BoundaryCondition, dagger, matrix_fn, principal_sqrt
from weylspec.potential import ConstantMatrix, CoupledChannel, DiagonalWells, Free
from weylspec.verify import random_potential

from conftest import rand_herm

GRID = np.linspace(-5, 5, 41)


def test_constant_and_linear_solutions():
    V = Free(2)
    s = solve_vector_ivp(V, 0, 0.0, [1, 0], [0, 0], grid=GRID)
    assert np.allclose(s.y, [1, 0])
    s = solve_vector_ivp(V, 0, 0.0, [0, 0], [0, 1], grid=GRID)
    assert np.allclose(s.y[:, 1], GRID) and np.allclose(s.y[:, 0], 0)


def test_cosh_solution():
    s = solve_vector_ivp(Free(1), -1, 0.0, [1], [0], grid=GRID)
    assert np.abs(s.y[:, 0] - np.cosh(GRID)).max() / np.cosh(5) < 1e-8


def test_forcing_matches_particular_solution():
    # -y'' = 2 with y(0) = y'(0) = 0 gives y = -x^2
    s = solve_vector_ivp(Free(1), 0, 0.0, [0], [0], f=lambda x: np.array([2.0]), grid=GRID)
    assert np.abs(s.y[:, 0] + GRID ** 2).max() < 1e-7


def test_operator_constant_potential(rng):
    V0 = rand_herm(rng, 3)
    z = 1.5 + 0.7j
    Y, _ = solve_operator_ivp(ConstantMatrix(V0), z, 0.0, np.eye(3), np.zeros((3, 3)), GRID)
    w, u = np.linalg.eigh(V0)
    k = principal_sqrt(z - w)
    ref = np.einsum("ij,gj,kj->gik", u, np.cos(k[None] * GRID[:, None]), u.conj())
    assert np.abs(Y - ref).max() / np.abs(ref).max() < 1e-8


def test_operator_columns_match_vector_solver(rng):
    V = CoupledChannel(0.4, [0.5, -0.5])
    Y0, Y1 = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
    Y, Yp = solve_operator_ivp(V, 1 + 1j, 0.3, Y0, Y1, GRID)
    for j in range(2):
        s = solve_vector_ivp(V, 1 + 1j, 0.3, Y0[:, j], Y1[:, j], grid=GRID)
        assert np.abs(Y[:, :, j] - s.y).max() < 1e-8 * np.abs(Y).max()


def test_free_fundamental_system_closed_form():
    z = 2j
    fp = fundamental_system(Free(2), z, 0.0, BoundaryCondition.dirichlet(2), GRID)
    k = principal_sqrt(z)
    assert np.abs(fp.theta - np.cos(k * GRID)[:, None, None] * np.eye(2)).max() < 1e-8 * np.cosh(5)
    assert np.abs(fp.phi - (np.sin(k * GRID) / k)[:, None, None] * np.eye(2)).max() < 1e-8 * np.cosh(5)


def test_coupled_theta_decouples():
    c, z = 0.6, 1 + 0.5j
    fp = fundamental_system(CoupledChannel(c), z, 0.0, BoundaryCondition.dirichlet(2), GRID)
    R = np.array([[1, 1], [-1, 1]]) / np.sqrt(2)  # columns are eigenvectors for -c, +c
    k = principal_sqrt(z - np.array([-c, c]))
    ref = np.einsum("ij,gj,kj->gik", R, np.cos(k[None] * GRID[:, None]), R)
    assert np.abs(fp.theta - ref).max() / np.abs(ref).max() < 1e-8


def test_block_inverse_at_reference_point(rng):
    bc = BoundaryCondition.from_alpha(rand_herm(rng, 2))
    V = DiagonalWells([1, 2], [1, 1], [0, 1])
    fp = fundamental_system(V, 1 + 1j, 0.0, bc, np.array([0.0]))
    inv = inverse_block(conjugate_pair(V, fp))
    assert np.abs(inv[0] @ fp.block()[0] - np.eye(4)).max() < 1e-14


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2 ** 31))
def test_wronskian_identities_property(n, seed):
    rng = np.random.default_rng(seed)
    V = random_potential(rng, n)
    bc = BoundaryCondition.from_alpha(rand_herm(rng, n))
    z = complex(rng.uniform(-2, 4), rng.uniform(0.5, 2) * rng.choice([-1, 1]))
    fp = fundamental_system(V, z, 0.2, bc, np.linspace(0.2, 5.2, 50), method="auto")
    res = wronskian_identities(fp, conjugate_pair(V, fp, method="auto"), relative=True)
    assert max(float(np.max(v)) for v in res.values()) < 1e-7


def test_wronskian_vector_examples():
    V = Free(1)
    c = solve_vector_ivp(V, 0, 0.0, [1], [0], grid=GRID)
    l = solve_vector_ivp(V, 0, 0.0, [0], [1], grid=GRID)
    assert np.allclose(wronskian_vector(c, l), 1)
    real = solve_vector_ivp(V, 2.0, 0.0, [1], [0.3], grid=GRID)
    assert np.abs(wronskian_vector(real, real)).max() < 1e-12


def test_wronskian_constant_for_real_z(rng):
    V = DiagonalWells([2, 1], [1, 2], [0, 0.5])
    a = solve_vector_ivp(V, 0.7, 0.0, rng.normal(size=2), rng.normal(size=2), grid=GRID)
    b = solve_vector_ivp(V, 0.7, 0.0, rng.normal(size=2), rng.normal(size=2), grid=GRID)
    W = wronskian_vector(a, b)
    assert np.abs(W - W[20]).max() < 1e-9 * max(1, abs(W[20]))


def test_wronskian_vector_grid_mismatch():
    V = Free(1)
    a = solve_vector_ivp(V, 0, 0.0, [1], [0], grid=GRID)
    b = solve_vector_ivp(V, 0, 0.0, [1], [0], grid=GRID[:-1])
    with pytest.raises(GridMismatch):
        wronskian_vector(a, b)


def test_wronskian_operator_examples():
    V = CoupledChannel(0.5)
    z = 0.5 + 1j
    fp = fundamental_system(V, z, 0.0, BoundaryCondition.dirichlet(2), GRID)
    fc = conjugate_pair(V, fp)
    W = wronskian_operator(dagger(fc.theta), dagger(fc.theta_prime), fp.phi, fp.phi_prime)
    assert np.abs(W - np.eye(2)).max() < 1e-8
    W = wronskian_operator(dagger(fc.theta), dagger(fc.theta_prime), fp.theta, fp.theta_prime)
    assert np.abs(W).max() < 1e-8
    x = np.linspace(0, 3, 7)
    assert np.allclose(wronskian_operator(np.cos(x)[:, None, None], -np.sin(x)[:, None, None],
                                          np.sin(x)[:, None, None], np.cos(x)[:, None, None]), 1)


def test_exact_and_rk_propagators_agree():
    V = DiagonalWells([2, 1], [1, 2], [0.5, 1.5])
    bc = BoundaryCondition.dirichlet(2)
    a = fundamental_system(V, 1 + 1j, 0.0, bc, GRID, method="rk")
    b = fundamental_system(V, 1 + 1j, 0.0, bc, GRID, method="exact")
    assert np.abs(a.phi - b.phi).max() / np.abs(b.phi).max() < 1e-8


def test_ode_residual_small():
    V = DiagonalWells([2.0], [1.0], [1.0])
    r = ode_residual(V, 1 + 1j, 0.0, [1], [0], [0.3, 2.2, 3.7])
    assert np.max(r) < 1e-6


def test_lagrange_identity():
    V = CoupledChannel(0.3, [0.5, 0.0])
    x = np.linspace(0, 2, 401)
    z, w = 1 + 1j, 2 - 0.5j
    fz = fundamental_system(V, z, 0.0, BoundaryCondition.dirichlet(2), x)
    fw = fundamental_system(V, np.conj(w), 0.0, BoundaryCondition.dirichlet(2), x)
    Vx = V(x)
    eye = np.eye(2)
    F, Fp = dagger(fw.phi), dagger(fw.phi_prime)
    Fpp = F @ (Vx - w * eye)  # (tau F^*)^* = w F
    G, Gp = fz.phi, fz.phi_prime
    Gpp = (Vx - z * eye) @ G
    lhs, rhs = lagrange_identity(V, x, F, Fp, Fpp, G, Gp, Gpp)
    assert np.abs(lhs - rhs).max() < 1e-7
