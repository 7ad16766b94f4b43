"""Full-line theory: ``m_+-``, the ``2n x 2n`` block Weyl matrix, Green's function and transform.

``m_-`` comes from the right half-line problem for the reflected potential
``V(2 x0 - x)`` with boundary datum ``-alpha``: if that problem has Weyl
function ``m~`` then ``m_-(z) = -m~(z)``. For ``V = 0`` and ``alpha = 0``
this gives ``m_+-(z) = +-i sqrt(z)``.
"""
from __future__ import annotations

import numpy as np

from .config import DEFAULT
from .errors import SingularW
from .expansion import (TransformResult, forward_transform, inverse_transform,
                        support_and_spectrum)
from .halfline import WeylFunction, _cumsimpson, weyl_gram, weyl_solution
from .herglotz import MatrixMeasure, assemble_measure
from .ivp import fundamental_system, wronskian_operator
from .matfun import BoundaryCondition, dagger, im_part
from .potential import Potential


class FullLineWeyl:
    """``m_+``, ``m_-`` and ``W = m_- - m_+`` at the reference point ``x0``.

    Calling the object returns the block matrix ``M(z)`` (batched), so it can be
    handed to :func:`weylspec.herglotz.assemble_measure` directly.
    """

    def __init__(self, V: Potential, x0: float = 0.0, bc: BoundaryCondition | None = None, *,
                 method: str = "tail", **kw):
        self.V = V
        self.x0 = float(x0)
        self.bc = bc if bc is not None else BoundaryCondition.dirichlet(V.dim)
        self.method = method
        self.right = WeylFunction(V, self.x0, self.bc, method=method, **kw)
        self.left = WeylFunction(V.reflected(self.x0), self.x0, self.bc.negated(), method=method, **kw)

    @property
    def dim(self) -> int:
        return self.V.dim

    @property
    def boundary_values(self) -> bool:
        return self.right.boundary_values and self.left.boundary_values

    def thresholds(self) -> np.ndarray:
        return np.unique(np.concatenate([self.V.thresholds("right"), self.V.thresholds("left")]))

    def m_plus(self, z):
        return self.right(z)

    def m_minus(self, z):
        return -self.left(z)

    def W(self, z):
        return self.m_minus(z) - self.m_plus(z)

    def _winv(self, W):
        c = np.linalg.cond(W)
        if np.any(~np.isfinite(c)) or np.any(c > DEFAULT.singular_cond):
            raise SingularW(f"W(z) condition {np.max(c):.2e}")
        return np.linalg.inv(W)

    def blocks(self, z):
        """``(M00, M01, M10, M11, M11_alt)`` with ``M11_alt = m_- W^{-1} m_+``."""
        mp, mm = self.m_plus(z), self.m_minus(z)
        Wi = self._winv(mm - mp)
        s = mm + mp
        return Wi, 0.5 * Wi @ s, 0.5 * s @ Wi, mp @ Wi @ mm, mm @ Wi @ mp

    def __call__(self, z):
        M00, M01, M10, M11, _ = self.blocks(z)
        top = np.concatenate([M00, M01], axis=-1)
        bot = np.concatenate([M10, M11], axis=-1)
        return np.concatenate([top, bot], axis=-2)

    # -- solutions on grids ------------------------------------------------

    def _psi(self, z, grid, side):
        """``psi_+`` (side=+1) or ``psi_-`` (side=-1) and derivative on ``grid``.

        The decaying direction uses the stable backward sweep, the other side
        continues ``theta + phi m`` from ``x0``.
        """
        grid = np.asarray(grid, dtype=float)
        z = complex(z)
        n = self.dim
        psi = np.empty((grid.size, n, n), complex)
        dpsi = np.empty_like(psi)
        if side > 0:
            own = grid >= self.x0
            if np.any(own):
                psi[own], dpsi[own] = weyl_solution(self.right, z, grid[own])
            m = self.m_plus(z)
        else:
            own = grid <= self.x0
            if np.any(own):
                refl = 2 * self.x0 - grid[own]
                order = np.argsort(refl)
                p, dp = weyl_solution(self.left, z, refl[order])
                inv = np.argsort(order)
                psi[own], dpsi[own] = p[inv], -dp[inv]
            m = self.m_minus(z)
        other = ~own
        if np.any(other):
            fp = fundamental_system(self.V, z, self.x0, self.bc, grid[other], method="auto")
            psi[other] = fp.theta + fp.phi @ m
            dpsi[other] = fp.theta_prime + fp.phi_prime @ m
        return psi, dpsi

    def psi_plus(self, z, grid):
        return self._psi(z, grid, +1)

    def psi_minus(self, z, grid):
        return self._psi(z, grid, -1)

    def measure(self, partition, **kw) -> MatrixMeasure:
        return fullline_measure(self, partition, **kw)


def half_line_pair(V: Potential, x0: float = 0.0, bc: BoundaryCondition | None = None, *,
                   method: str = "tail", **kw) -> FullLineWeyl:
    return FullLineWeyl(V, x0, bc, method=method, **kw)


def block_weyl(flw: FullLineWeyl, z):
    """Block Weyl matrix ``M(z)`` (``2n x 2n``)."""
    return flw(z)


def block_orderings_gap(flw: FullLineWeyl, z) -> float:
    *_, a, b = flw.blocks(z)
    return float(np.abs(a - b).max())


def fullline_greens_matrix(flw: FullLineWeyl, z: complex, xs, xps) -> np.ndarray:
    """``G(z, x, x')`` on all pairs of ``xs`` and ``xps``; shape ``(len(xs), len(xps), n, n)``."""
    xs = np.asarray(xs, dtype=float)
    xps = np.asarray(xps, dtype=float)
    z = complex(z)
    Wi = flw._winv(flw.W(z))
    pm_x, _ = flw.psi_minus(z, xs)
    pp_x, _ = flw.psi_plus(z, xs)
    pp_c, _ = flw.psi_plus(np.conj(z), xps)
    pm_c, _ = flw.psi_minus(np.conj(z), xps)
    lo = np.einsum("xij,jk,ylk->xyil", pm_x, Wi, pp_c.conj())
    hi = np.einsum("xij,jk,ylk->xyil", pp_x, Wi, pm_c.conj())
    return np.where((xs[:, None] <= xps[None, :])[..., None, None], lo, hi)


def fullline_greens(flw: FullLineWeyl, z: complex, x: float, xp: float) -> np.ndarray:
    return fullline_greens_matrix(flw, z, [x], [xp])[0, 0]


def fullline_resolvent_apply(flw: FullLineWeyl, z: complex, grid, u) -> np.ndarray:
    """``(H - z)^{-1} u`` for ``u`` sampled on ``grid`` and zero outside."""
    grid = np.asarray(grid, dtype=float)
    u = np.asarray(u, dtype=complex).reshape(grid.size, -1)
    z = complex(z)
    Wi = flw._winv(flw.W(z))
    pp, _ = flw.psi_plus(z, grid)
    pm, _ = flw.psi_minus(z, grid)
    pp_c, _ = flw.psi_plus(np.conj(z), grid)
    pm_c, _ = flw.psi_minus(np.conj(z), grid)
    left = _cumsimpson(np.einsum("gji,gj->gi", pm_c.conj(), u), grid)
    right = _cumsimpson(np.einsum("gji,gj->gi", pp_c.conj(), u), grid)
    right = right[-1] - right
    return np.einsum("gij,jk,gk->gi", pp, Wi, left) + np.einsum("gij,jk,gk->gi", pm, Wi, right)


def wronskian_profile(flw: FullLineWeyl, z: complex, xs) -> np.ndarray:
    """``W(psi_+(zbar)^*, psi_-(z))`` at each ``x`` in ``xs`` (constant, equal to ``m_- - m_+``)."""
    z = complex(z)
    pp, dpp = flw.psi_plus(np.conj(z), xs)
    pm, dpm = flw.psi_minus(z, xs)
    return wronskian_operator(dagger(pp), dagger(dpp), pm, dpm)


def l2_identity_residuals(flw: FullLineWeyl, z: complex, f) -> tuple[float, float]:
    """Residuals of ``Im z int_{x0}^{+-oo} ||psi_+- f||^2 = (f, Im m_+- f)`` for both rays."""
    z = complex(z)
    f = np.asarray(f, dtype=complex)
    out = []
    for sign, wf, m in ((1, flw.right, flw.m_plus(z)), (-1, flw.left, flw.m_minus(z))):
        lhs = sign * z.imag * np.vdot(f, weyl_gram(wf, z) @ f).real
        rhs = np.vdot(f, im_part(m) @ f).real
        out.append(abs(lhs - rhs))
    return out[0], out[1]


def fullline_measure(flw: FullLineWeyl, partition, **kw) -> MatrixMeasure:
    meas = assemble_measure(flw, partition, **kw)
    meas.metadata["block"] = 2 * flw.dim
    return meas


def fullline_transform(flw: FullLineWeyl, h, grid, partition=None, *, measure=None) -> TransformResult:
    """``(int theta^* h, int phi^* h)`` at the cell midpoints and atoms of ``Omega``."""
    if measure is None:
        measure = fullline_measure(flw, np.linspace(-10.0, 400.0, 4001) if partition is None else partition)
    return forward_transform(flw.V, flw.x0, flw.bc, h, grid, measure=measure, kind="full")


def fullline_inverse(tr: TransformResult, flw: FullLineWeyl, x_grid) -> np.ndarray:
    return inverse_transform(tr, flw.V, flw.x0, flw.bc, x_grid)


def fullline_spectrum(measure: MatrixMeasure, tol: float = 1e-8):
    return support_and_spectrum(measure, tol)
