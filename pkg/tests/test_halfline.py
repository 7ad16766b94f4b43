import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import simpson

from weylspec.errors import SingularPencil
from weylspec.fdoracle import discretize, oracle_resolvent
from weylspec.halfline import (WeylFunction, greens_derivative_jump, greens_kernel, greens_matrix,
                               l2_identity_residual, lft_boundary_change, m_from_greens, m_function,
                               m_truncated, resolvent_apply, resolvent_form_batch, weyl_gram, weyl_solution,
                               weyl_solution_batch)
from weylspec.matfun import BoundaryCondition, dagger, im_part, principal_sqrt
from weylspec.potential import ConstantMatrix, CoupledChannel, DiagonalWells, Free, SampledTable

from conftest import rand_herm

DIR1 = BoundaryCondition.dirichlet(1)


def test_truncated_free_dirichlet():
    m = m_truncated(Free(1), 0.0, DIR1, 2j, 40.0)
    assert abs(m[0, 0] - (-1 + 1j)) < 1e-6


def test_truncated_constant_diagonal():
    v = np.array([0.5, -1.0, 2.0])
    z = 1 + 1j
    k = principal_sqrt(z - v)
    b = 40 / k.imag.min()
    m = m_truncated(ConstantMatrix(np.diag(v)), 0.0, BoundaryCondition.dirichlet(3), z, b)
    assert np.abs(m - np.diag(1j * k)).max() < 1e-6


@pytest.mark.parametrize("method", ["truncation", "tail"])
def test_free_neumann(method):
    wf = WeylFunction(Free(1), 0.0, BoundaryCondition.neumann(1), method=method)
    assert abs(wf(2j)[0, 0] - (0.5 + 0.5j)) < 1e-6


@pytest.mark.parametrize("method", ["truncation", "tail"])
def test_near_real_axis(method):
    wf = WeylFunction(Free(1), method=method)
    z = 4 + 0.01j
    assert abs(m_function(wf, z)[0, 0] - 1j * principal_sqrt(z)) < 1e-4


@pytest.mark.parametrize("V", [CoupledChannel(0.5, [0.3, -0.2]), DiagonalWells([2, 1], [1, 2], [0.5, 1])])
def test_methods_agree(V):
    bc = BoundaryCondition.from_alpha([[0.3, 0.1], [0.1, -0.2]])
    zs = [1 + 1j, -0.5 + 0.3j, 3 - 0.7j]
    a = WeylFunction(V, 0.0, bc, method="truncation")
    b = WeylFunction(V, 0.0, bc, method="tail")
    for z in zs:
        assert np.abs(a(z) - b(z)).max() < 1e-7


def test_real_z_rejected_by_truncation():
    with pytest.raises(ValueError, match="Im z must be nonzero"):
        WeylFunction(Free(1), method="truncation")(2.0)


def test_tail_gives_boundary_values():
    wf = WeylFunction(Free(1), method="tail")
    assert wf.boundary_values
    assert abs(wf(4.0)[0, 0] - 2j) < 1e-12


def test_truncation_gaps_shrink():
    wf = WeylFunction(DiagonalWells([2.0], [2.0], [1.0]), method="truncation")
    gaps = wf.truncation_gaps(1 + 0.5j, [10, 20, 40, 80, 160])
    assert gaps[-1] < gaps[0] and gaps[-1] < 1e-8


@pytest.mark.parametrize("V", [Free(1), DiagonalWells([2.0], [2.0], [1.0]), CoupledChannel(0.7),
                               SampledTable(np.linspace(0, 3, 31), np.sin(np.linspace(0, 3, 31)))])
def test_symmetry_and_herglotz(V):
    wf = WeylFunction(V, method="tail")
    for z in (1 + 1j, -2 + 0.5j, 5 + 2j):
        m, mc = wf(z), wf(np.conj(z))
        assert np.abs(mc - dagger(m)).max() < 1e-8
        assert np.linalg.eigvalsh(im_part(m)).min() > -1e-8


def test_weyl_solution_free():
    wf = WeylFunction(Free(1), method="truncation")
    x = np.linspace(0, 10, 101)
    psi, _ = weyl_solution(wf, 2j, x)
    assert np.abs(psi[:, 0, 0] - np.exp(1j * (1 + 1j) * x)).max() < 1e-6


def test_weyl_solution_normalization(rng):
    bc = BoundaryCondition.from_alpha(rand_herm(rng, 2))
    wf = WeylFunction(CoupledChannel(0.4, [0.2, -0.3]), 0.5, bc, method="tail")
    psi, dpsi = weyl_solution(wf, 1 + 1j, np.array([0.5, 1.0]))
    assert np.abs(bc.sin @ dpsi[0] + bc.cos @ psi[0] - np.eye(2)).max() < 1e-10


def test_weyl_solution_batch_matches_single():
    wf = WeylFunction(DiagonalWells([2.0], [2.0], [1.0]), method="tail")
    x = np.linspace(0, 6, 61)
    zs = np.array([1 + 1j, 2 - 0.3j])
    psi, _ = weyl_solution_batch(wf, zs, x)
    for k, z in enumerate(zs):
        assert np.abs(psi[k] - weyl_solution(wf, z, x)[0]).max() < 1e-12


@pytest.mark.parametrize("method", ["truncation", "tail"])
def test_weighted_l2_identity(rng, method):
    bc = BoundaryCondition.from_alpha(rand_herm(rng, 2, 0.5))
    wf = WeylFunction(CoupledChannel(0.5, DiagonalWells([2, 1], [1, 1], [1, 2])), 0.0, bc, method=method)
    for f in rng.normal(size=(5, 2)) + 1j * rng.normal(size=(5, 2)):
        assert l2_identity_residual(wf, 1 + 1j, f) < 1e-4 * np.vdot(f, f).real


def test_weyl_gram_is_positive():
    wf = WeylFunction(CoupledChannel(0.5), method="tail")
    g = weyl_gram(wf, 1 + 1j)
    assert np.abs(g - dagger(g)).max() < 1e-10
    assert np.linalg.eigvalsh(g).min() > 0


def test_greens_closed_form():
    wf = WeylFunction(Free(1), method="tail")
    k = 1 + 1j
    ref = np.sin(k) / k * np.exp(1j * k * 2)
    assert abs(greens_kernel(wf, 2j, 1.0, 2.0)[0, 0] - ref) < 1e-7


def test_greens_jump_and_diagonal_herglotz():
    wf = WeylFunction(CoupledChannel(0.5, [0.2, 0.0]), method="tail")
    for xp in (0.5, 1.7):
        assert np.abs(greens_derivative_jump(wf, 1 + 1j, xp) + np.eye(2)).max() < 1e-5
    G = greens_matrix(wf, 0.5 + 1j, np.linspace(0.1, 3, 7), np.linspace(0.1, 3, 7))
    diag = np.array([G[i, i] for i in range(7)])
    assert np.linalg.eigvalsh(im_part(diag)).min() > -1e-12


def test_greens_conjugate_symmetry():
    wf = WeylFunction(DiagonalWells([2, 1], [1, 1], [1, 2]), method="tail")
    xs = np.linspace(0, 3, 9)
    G = greens_matrix(wf, 1 + 1j, xs, xs)
    Gc = greens_matrix(wf, 1 - 1j, xs, xs)
    assert np.abs(G - dagger(np.swapaxes(Gc, 0, 1))).max() < 1e-7


def test_m_from_greens():
    wf = WeylFunction(CoupledChannel(0.5), method="tail")
    assert np.abs(m_from_greens(wf, 1 + 1j) - wf(1 + 1j)).max() < 1e-4


def test_resolvent_zero_and_linear(rng):
    wf = WeylFunction(Free(1), method="tail")
    x = np.linspace(0, 5, 201)
    assert np.all(resolvent_apply(wf, 2j, x, np.zeros_like(x)) == 0)
    u, v = rng.normal(size=(2, x.size))
    lhs = resolvent_apply(wf, 2j, x, 2 * u - 3j * v)
    rhs = 2 * resolvent_apply(wf, 2j, x, u) - 3j * resolvent_apply(wf, 2j, x, v)
    assert np.abs(lhs - rhs).max() < 1e-10


def test_resolvent_against_oracle():
    D = discretize(Free(1), (0, 40), h=1e-2)
    u = ((D.grid >= 1) & (D.grid <= 2)).astype(float)[:, None]
    wf = WeylFunction(Free(1), method="tail")
    v = resolvent_apply(wf, 2j, D.grid, u)
    ref = oracle_resolvent(D, 2j, u)
    assert np.linalg.norm(v - ref) / np.linalg.norm(ref) < 2e-3


def test_resolvent_form_batch():
    wf = WeylFunction(DiagonalWells([2.0], [2.0], [1.0]), method="tail")
    x = np.linspace(1, 2, 101)
    f, g = np.sin(np.pi * (x - 1)) ** 2, x * np.sin(np.pi * (x - 1)) ** 2
    zs = np.array([1 + 1j, -0.5 + 0.2j])
    S = resolvent_form_batch(wf, zs, x, f, g)
    for k, z in enumerate(zs):
        ref = simpson(f * resolvent_apply(wf, z, x, g)[:, 0], x=x)
        assert abs(S[k] - ref) < 1e-12


def test_lft_identity_and_neumann():
    wf = WeylFunction(Free(1), method="tail")
    m = wf(1 + 1j)
    assert np.allclose(lft_boundary_change(m, DIR1, DIR1), m)
    neu = BoundaryCondition.neumann(1)
    assert np.abs(lft_boundary_change(m, DIR1, neu) - wf.with_bc(neu)(1 + 1j)).max() < 1e-6


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2 ** 31))
def test_lft_preserves_herglotz(n, seed):
    rng = np.random.default_rng(seed)
    ba = BoundaryCondition.from_alpha(rand_herm(rng, n))
    bb = BoundaryCondition.from_alpha(rand_herm(rng, n))
    wf = WeylFunction(ConstantMatrix(rand_herm(rng, n)), 0.0, ba, method="tail")
    try:
        mb = lft_boundary_change(wf(1 + 1j), ba, bb)
    except SingularPencil:
        return
    assert np.linalg.eigvalsh(im_part(mb)).min() > -1e-8
    assert np.abs(mb - wf.with_bc(bb)(1 + 1j)).max() < 1e-6 * max(1.0, np.abs(mb).max())
