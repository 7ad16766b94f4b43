import numpy as np
import pytest
from scipy.integrate import quad, simpson

from weylspec.errors import PartitionMismatch
from weylspec.expansion import (ModelSpaceElement, TransformResult, apply_function_of_H, forward_transform,
                                indicator, inverse_transform, model_inner_product, support_and_spectrum)
from weylspec.fdoracle import discretize, oracle_projection
from weylspec.halfline import WeylFunction
from weylspec.herglotz import MatrixMeasure, assemble_measure
from weylspec.potential import CoupledChannel, DiagonalWells, Free
from weylspec.verify import bump

V = Free(1)


@pytest.fixture(scope="module")
def chi_transform():
    x = np.linspace(0, 1, 2001)
    return x, forward_transform(V, 0.0, None, np.ones_like(x), x, np.linspace(0, 200, 2001))


@pytest.fixture(scope="module")
def bump_transform():
    x = np.linspace(0.5, 2.5, 801)
    h = bump(x, 1, 2)
    return x, h, forward_transform(V, 0.0, None, h, x, np.linspace(0, 400, 4001))


def test_zero_signal():
    x = np.linspace(0, 1, 101)
    z = forward_transform(V, 0.0, None, np.zeros_like(x), x, np.linspace(0, 50, 201))
    assert np.all(z.cells == 0)
    assert np.all(inverse_transform(z, V, 0.0, None, x) == 0)


def test_chi_closed_form(chi_transform):
    _, tr = chi_transform
    lam = tr.lambdas
    assert np.abs(tr.cells[:, 0] - (1 - np.cos(np.sqrt(lam))) / lam).max() < 1e-8


def test_linearity(rng):
    x = np.linspace(0, 1, 201)
    meas = assemble_measure(WeylFunction(V, method="tail"), np.linspace(0, 50, 201))
    u, v = rng.normal(size=(2, x.size))
    a = forward_transform(V, 0.0, None, u - 2j * v, x, measure=meas).cells
    b = forward_transform(V, 0.0, None, u, x, measure=meas).cells
    c = forward_transform(V, 0.0, None, v, x, measure=meas).cells
    assert np.abs(a - b + 2j * c).max() < 1e-10


def test_parseval_chi_with_tail(chi_transform):
    # the window [0, 200] misses (2/pi) int_{sqrt 200}^oo (1 - cos k)^2 / k^2 dk
    _, tr = chi_transform
    a = np.sqrt(200)
    osc = [quad(lambda k: 1 / k ** 2, a, np.inf, weight="cos", wvar=c)[0] for c in (1, 2)]
    tail = 2 / np.pi * (1.5 / a - 2 * osc[0] + 0.5 * osc[1])
    assert abs(model_inner_product(tr, tr).real + tail - 1.0) < 2e-3


def test_indicator_inner_product():
    meas = MatrixMeasure([0.0, 1.0, 2.0, 3.0], np.array([np.eye(2), 2 * np.eye(2), [[1, 0.5], [0.5, 1]]]))
    e = np.array([1.0, 0.0])
    u = ModelSpaceElement(meas.breakpoints, np.array([e, e, 0 * e]), np.zeros((0, 2)))
    assert model_inner_product(u, u, meas) == pytest.approx(np.real(e @ meas.mass(0.0, 2.0) @ e))
    zero = MatrixMeasure(meas.breakpoints, np.zeros_like(meas.cell_mass))
    assert model_inner_product(u, u, zero) == 0


def test_partition_mismatch():
    meas = MatrixMeasure([0.0, 1.0], np.ones((1, 1, 1)))
    u = ModelSpaceElement(np.array([0.0, 2.0]), np.ones((1, 1)), np.zeros((0, 1)))
    with pytest.raises(PartitionMismatch):
        model_inner_product(u, u, meas)


def test_bump_parseval_and_round_trip(bump_transform):
    x, h, tr = bump_transform
    n2 = simpson(h ** 2, x=x)
    assert abs(model_inner_product(tr, tr).real - n2) < 5e-3 * n2
    back = inverse_transform(tr, V, 0.0, None, x)[:, 0]
    assert np.sqrt(simpson(np.abs(back - h) ** 2, x=x) / n2) < 5e-3


def test_identity_function(bump_transform):
    _, _, tr = bump_transform
    same = apply_function_of_H(tr, lambda lam: np.ones_like(lam))
    assert np.array_equal(same.cells, tr.cells)


def test_spectral_projection_against_oracle():
    # window edges sit midway between eigenvalues of the oracle box
    L = 60.0
    ev = (np.arange(1, 200) * np.pi / L) ** 2
    mid = lambda t: 0.5 * (ev[np.searchsorted(ev, t) - 1] + ev[np.searchsorted(ev, t)])  # noqa: E731
    l1, l2 = mid(1.0), mid(4.0)
    part = np.unique(np.concatenate([np.linspace(0, l1, 101), np.linspace(l1, l2, 301), np.linspace(l2, 10, 601)]))
    x = np.linspace(0.5, 2.5, 801)
    tr = forward_transform(V, 0.0, None, bump(x, 1, 2), x, part)
    rec = inverse_transform(apply_function_of_H(tr, indicator(l1, l2)), V, 0.0, None, x)[:, 0]
    D = discretize(V, (0, L), h=2e-3)
    ref = np.interp(x, D.grid, oracle_projection(D, l1, l2).apply(bump(D.grid, 1, 2)[:, None])[:, 0].real)
    assert np.sqrt(simpson(np.abs(rec - ref) ** 2, x=x) / simpson(ref ** 2, x=x)) < 5e-3


def test_transform_json_round_trip(bump_transform):
    _, _, tr = bump_transform
    s = tr.to_json()
    back = TransformResult.from_json(s)
    assert back.to_json() == s
    assert np.array_equal(back.cells, tr.cells)


def test_support_free(bump_transform):
    rep = support_and_spectrum(bump_transform[2].measure)
    assert rep.intervals == [(0.0, 400.0)] and rep.atoms == [] and rep.max_rank == 1


def test_support_well_atom():
    Vw = DiagonalWells([2.0], [2.0], [1.0])
    meas = assemble_measure(WeylFunction(Vw, method="tail"), np.linspace(-3, 20, 231))
    rep = support_and_spectrum(meas)
    D = discretize(Vw, (0, 40), h=1e-3)
    assert len(rep.atoms) == 1 and abs(rep.atoms[0] - D.lowest(1)[0][0]) < 1e-3
    assert rep.intervals[0][0] == pytest.approx(0.0)
    assert np.abs(meas.cell_mass[meas.midpoints < -1e-3]).max() < 1e-8


def test_matrix_transform_shapes():
    Vc = CoupledChannel(0.5)
    x = np.linspace(0, 2, 201)
    h = np.stack([bump(x, 0.5, 1.5), 1j * bump(x, 0.5, 1.5)], axis=1)
    tr = forward_transform(Vc, 0.0, None, h, x, np.linspace(-1, 50, 511))
    assert tr.cells.shape == (510, 2) and tr.dim == 2
    assert inverse_transform(tr, Vc, 0.0, None, x).shape == (201, 2)
