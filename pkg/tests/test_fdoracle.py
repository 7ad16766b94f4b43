import numpy as np
import pytest

from weylspec.errors import SingularShift
from weylspec.fdoracle import discretize, ghost_matrix, oracle_projection, oracle_resolvent
from weylspec.matfun import BoundaryCondition, principal_sqrt
from weylspec.potential import CoupledChannel, DiagonalWells, Free

from conftest import rand_herm


def test_matrix_is_hermitian(rng):
    bc = BoundaryCondition.from_alpha(rand_herm(rng, 2))
    D = discretize(CoupledChannel(0.5, [0.2, -0.1]), (0, 5), bc, h=0.05)
    A = D.matrix.toarray()
    assert np.abs(A - A.conj().T).max() < 1e-12
    g = ghost_matrix(bc, 0.05)
    assert np.abs(g - g.conj().T).max() < 1e-12


def test_dirichlet_box_eigenvalues_converge_quadratically():
    errs = []
    for K in (250, 500, 1000):
        D = discretize(Free(1), (0, np.pi), h=np.pi / K)
        errs.append(abs(D.lowest(1)[0][0] - 1.0))
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    assert 4 / 1.5 < r1 < 4 * 1.5 and 4 / 1.5 < r2 < 4 * 1.5


def test_neumann_box():
    D = discretize(Free(1), (0, np.pi), BoundaryCondition.neumann(1), h=np.pi / 1000)
    assert np.allclose(D.lowest(2)[0], [0.25, 2.25], atol=1e-4)


def test_matrix_channel_eig():
    D = discretize(Free(2), (0, np.pi), h=np.pi / 400)
    w, v = D.eig(0.5, 4.5)
    assert np.allclose(w, [1, 1, 4, 4], atol=1e-3)
    assert v.shape == (4, D.grid.size, 2)
    assert np.allclose([D.inner(x, x) for x in v], 1)


def test_resolvent_zero_linear_and_closed_form(rng):
    D = discretize(Free(1), (0, 40), h=1e-2)
    assert np.all(oracle_resolvent(D, 2j, np.zeros((D.grid.size, 1))) == 0)
    u, w = rng.normal(size=(2, D.grid.size, 1))
    lhs = oracle_resolvent(D, 2j, u + 2 * w)
    assert np.abs(lhs - oracle_resolvent(D, 2j, u) - 2 * oracle_resolvent(D, 2j, w)).max() < 1e-10
    # closed-form Dirichlet Green's function
    k = principal_sqrt(2j)
    x = D.grid
    u = np.exp(-4 * (x - 2) ** 2)
    G = np.where(x[:, None] <= x[None, :], np.sin(k * x)[:, None] * np.exp(1j * k * x)[None, :] / k,
                 np.exp(1j * k * x)[:, None] * np.sin(k * x)[None, :] / k)
    ref = G @ u * D.h
    v = oracle_resolvent(D, 2j, u[:, None])[:, 0]
    assert np.linalg.norm(v - ref) / np.linalg.norm(ref) < 2e-3


def test_resolvent_real_shift_rejected():
    D = discretize(Free(1), (0, 1), h=0.1)
    with pytest.raises(SingularShift):
        oracle_resolvent(D, 1.0, np.ones((D.grid.size, 1)))


def test_oracle_self_consistency():
    V = DiagonalWells([2.0], [1.0], [1.0])
    D = discretize(V, (0, 4), h=0.02)
    w, v = np.linalg.eigh(D.matrix.toarray())
    u = np.exp(-(D.grid - 1) ** 2)[:, None]
    z = 0.3 + 0.5j
    ref = v @ ((v.T @ u[:, 0]) / (w - z))
    assert np.abs(oracle_resolvent(D, z, u)[:, 0] - ref).max() < 1e-8
    P = oracle_projection(D, 1.0, 30.0)
    sel = (w > 1.0) & (w <= 30.0)
    assert np.abs(P.apply(u)[:, 0] - v[:, sel] @ (v[:, sel].T @ u[:, 0])).max() < 1e-8


def test_projection_properties():
    D = discretize(Free(1), (0, 40), h=0.02)
    P = oracle_projection(D, 1.0, 100.0)
    Pm = P.matrix()
    A = D.matrix.toarray()
    assert np.abs(Pm @ Pm - Pm).max() < 1e-10
    assert np.abs(A @ Pm - Pm @ A).max() < 1e-8 * np.abs(A).max()
    weyl = 40 / np.pi * (np.sqrt(100) - np.sqrt(1))
    assert abs(P.rank - weyl) / weyl < 0.05


def test_well_atom_weight():
    V = DiagonalWells([2.0], [2.0], [1.0])
    D = discretize(V, (0, 40), h=1e-3)
    ev, vec = D.lowest(1)
    assert abs(ev[0] + 0.7544027194) < 1e-5
    assert abs(D.atom_weight(vec[0])[0, 0].real - 0.7905226006) < 1e-4
