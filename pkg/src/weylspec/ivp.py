"""Initial value problems for ``-y'' + V y = z y`` and fundamental systems.

Everything is built from one *basis* solve: the ``n x 2n`` matrix solution with
data ``(Y, Y') = (I, 0)`` and ``(0, I)`` at ``x0``. Any other solution is a
linear combination of its columns, which makes the vector and operator solvers
exactly linear in their data and column-consistent with each other.

Two propagators are available:

``"rk"``     adaptive Dormand-Prince 5(4), steps aligned to potential breakpoints;
``"exact"``  closed-form transfer matrices, for piecewise-constant potentials.

``"auto"`` picks ``"exact"`` whenever the potential is piecewise constant.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rk
from .config import DEFAULT
from .errors import GridMismatch
from .matfun import BoundaryCondition, dagger, hermitian_eig, principal_sqrt
from .potential import Potential


@dataclass(frozen=True)
class VectorSolution:
    z: complex
    x0: float
    grid: np.ndarray
    y: np.ndarray         # (G, n)
    y_prime: np.ndarray   # (G, n)


@dataclass(frozen=True)
class FundamentalPair:
    """``theta``, ``phi`` and derivatives on ``grid``; arrays are ``batch + (G, n, n)``."""

    z: complex | np.ndarray
    x0: float
    grid: np.ndarray
    theta: np.ndarray
    theta_prime: np.ndarray
    phi: np.ndarray
    phi_prime: np.ndarray
    bc: BoundaryCondition

    def block(self) -> np.ndarray:
        """The ``2n x 2n`` matrix ``[[theta, phi], [theta', phi']]`` per grid point."""
        top = np.concatenate([self.theta, self.phi], axis=-1)
        bot = np.concatenate([self.theta_prime, self.phi_prime], axis=-1)
        return np.concatenate([top, bot], axis=-2)


# ---------------------------------------------------------------- propagation


def _as_batch(z):
    za = np.asarray(z, dtype=complex)
    return za.reshape(-1), za.shape


def _split_grid(grid, x0):
    g = np.asarray(grid, dtype=float)
    right = np.flatnonzero(g >= x0)
    left = np.flatnonzero(g < x0)
    right = right[np.argsort(g[right], kind="stable")]
    left = left[np.argsort(-g[left], kind="stable")]
    return g, left, right


def _rk_propagate(V: Potential, zb, x0, Y0, Y1, targets, forcing=None, rtol=None, atol=None,
                  replay=None, record=False):
    rtol = DEFAULT.rtol if rtol is None else rtol
    atol = DEFAULT.atol if atol is None else atol
    n = V.dim

    def rhs(x, y):
        vx = V(x)
        dy = np.empty_like(y)
        dy[:, 0] = y[:, 1]
        dy[:, 1] = np.einsum("ij,bjk->bik", vx, y[:, 0]) - zb[:, None, None] * y[:, 0]
        if forcing is not None:
            dy[:, 1] -= np.asarray(forcing(x), dtype=complex).reshape(1, n, -1)
        return dy

    y0 = np.stack([Y0, Y1], axis=1)
    res = rk.integrate(rhs, x0, y0, targets, rtol=rtol, atol=atol, stops=V.breakpoints(),
                       replay=replay, record=record)
    ys, steps = res if record else (res, None)
    # ys: (T, B, 2, n, m)
    ys = np.moveaxis(ys, 0, 1)
    return ys[:, :, 0], ys[:, :, 1], steps


def _piece_transfer(vmat, zb, d):
    """Transfer coefficients in the eigenbasis of a constant block over signed lengths ``d``.

    Returns ``(U, c, s, ks)`` with arrays ``(B, T, n)`` such that in the eigenbasis
    ``Y(d) = c Y0 + s Y1`` and ``Y'(d) = ks Y0 + c Y1`` (row scaling).
    """
    w, u = hermitian_eig(vmat)
    k = principal_sqrt(zb[:, None] - w[None, :])[:, None, :]          # (B,1,n)
    dd = np.asarray(d, dtype=float)[None, :, None]                      # (1,T,1)
    kd = k * dd
    c = np.cos(kd)
    s = dd * np.sinc(kd / np.pi)
    ks = -k * np.sin(kd)
    return u, c, s, ks


def _exact_propagate(V: Potential, zb, x0, Y0, Y1, targets):
    edges, values = V.pieces()
    targets = np.asarray(targets, dtype=float)
    B = zb.size
    n, m = Y0.shape[-2:]
    outY = np.empty((B, targets.size, n, m), dtype=complex)
    outP = np.empty_like(outY)
    if targets.size == 0:
        return outY, outP
    sign = 1.0 if targets[-1] >= x0 else -1.0
    Y, P = Y0.astype(complex).copy(), Y1.astype(complex).copy()
    x = float(x0)
    k = int(np.searchsorted(edges, x, side="right") - 1) if sign > 0 else \
        int(np.searchsorted(edges, x, side="left") - 1)
    k = min(max(k, 0), len(values) - 1)
    done = 0
    while done < targets.size:
        lo, hi = edges[k], edges[k + 1]
        end = hi if sign > 0 else lo
        rest = targets[done:]
        if not np.isfinite(end):
            cnt = rest.size
        elif sign > 0:
            cnt = int(np.searchsorted(rest, end, side="right"))
        else:
            cnt = int(np.searchsorted(-rest, -end, side="right"))
        need_end = np.isfinite(end) and done + cnt < targets.size
        dists = np.concatenate([rest[:cnt] - x, [end - x]]) if need_end else rest[:cnt] - x
        if dists.size:
            u, c, s, ks = _piece_transfer(values[k], zb, dists)
            Yh = np.einsum("ij,bjk->bik", dagger(u), Y)[:, None]         # (B,1,n,m)
            Ph = np.einsum("ij,bjk->bik", dagger(u), P)[:, None]
            Yn = np.einsum("ij,btjk->btik", u, c[..., None] * Yh + s[..., None] * Ph)
            Pn = np.einsum("ij,btjk->btik", u, ks[..., None] * Yh + c[..., None] * Ph)
            outY[:, done:done + cnt] = Yn[:, :cnt]
            outP[:, done:done + cnt] = Pn[:, :cnt]
            if need_end:
                Y, P = Yn[:, -1], Pn[:, -1]
                x = end
        done += cnt
        k += 1 if sign > 0 else -1
    # targets equal to x0 are seeded exactly
    at0 = targets == x0
    outY[:, at0] = Y0[:, None]
    outP[:, at0] = Y1[:, None]
    return outY, outP


def propagate(V: Potential, z, x0: float, Y0, Y1, grid, *, method: str = "rk",
              rtol: float | None = None, atol: float | None = None):
    """Matrix solution of ``-Y'' + V Y = z Y`` with ``Y(x0) = Y0``, ``Y'(x0) = Y1``.

    ``z`` may be a scalar or an array (batched solve). ``Y0``/``Y1`` are ``(n, m)``
    or ``batch + (n, m)``. Returns ``(Y, Y')`` shaped ``batch + (G, n, m)``.
    """
    zb, zshape = _as_batch(z)
    B = zb.size
    Y0 = np.broadcast_to(np.asarray(Y0, dtype=complex), (B,) + np.shape(Y0)[-2:]).copy() \
        if np.ndim(Y0) == 2 else np.asarray(Y0, dtype=complex).reshape((B,) + np.shape(Y0)[-2:])
    Y1 = np.broadcast_to(np.asarray(Y1, dtype=complex), Y0.shape).copy() \
        if np.ndim(Y1) == 2 else np.asarray(Y1, dtype=complex).reshape(Y0.shape)
    V.check_grid(grid)
    g, left, right = _split_grid(grid, x0)
    if method == "auto":
        method = "exact" if V.pieces() is not None else "rk"
    outY = np.empty((B, g.size) + Y0.shape[-2:], dtype=complex)
    outP = np.empty_like(outY)
    for idx in (right, left):
        if idx.size == 0:
            continue
        if method == "exact":
            Yg, Pg = _exact_propagate(V, zb, x0, Y0, Y1, g[idx])
        else:
            Yg, Pg, _ = _rk_propagate(V, zb, x0, Y0, Y1, g[idx], rtol=rtol, atol=atol)
        outY[:, idx] = Yg
        outP[:, idx] = Pg
    return outY.reshape(zshape + outY.shape[1:]), outP.reshape(zshape + outP.shape[1:])


def _basis(V, z, x0, grid, method="rk"):
    n = V.dim
    eye, zero = np.eye(n), np.zeros((n, n))
    Y0 = np.concatenate([eye, zero], axis=1)
    Y1 = np.concatenate([zero, eye], axis=1)
    return propagate(V, z, x0, Y0, Y1, grid, method=method)


# ---------------------------------------------------------------- public solvers


def solve_operator_ivp(V: Potential, z, x0: float, Y0, Y1, grid, *, method: str = "rk"):
    """``B(H)``-valued solution on ``grid``; returns ``(Y, Y')`` with shape ``(G, n, m)``."""
    Y, P = _basis(V, z, x0, grid, method)
    n = V.dim
    D = np.concatenate([np.asarray(Y0, dtype=complex), np.asarray(Y1, dtype=complex)], axis=-2)
    return Y @ D, P @ D


def solve_vector_ivp(V: Potential, z: complex, x0: float, h0, h1, f=None, grid=None, *,
                     method: str = "rk") -> VectorSolution:
    """Solve ``-y'' + (V - z) y = f`` with ``y(x0) = h0``, ``y'(x0) = h1``.

    The forcing ``f`` is a callable ``x -> C^n``. The inhomogeneous part is
    integrated on the step sequence of the homogeneous basis so the result is
    exactly linear in ``(h0, h1, f)``.
    """
    grid = np.asarray(grid, dtype=float)
    V.check_grid(grid)
    n = V.dim
    h0 = np.asarray(h0, dtype=complex).reshape(n)
    h1 = np.asarray(h1, dtype=complex).reshape(n)
    Y, P = _basis(V, z, x0, grid, method)
    y = Y @ np.concatenate([h0, h1])
    yp = P @ np.concatenate([h0, h1])
    if f is not None:
        g, left, right = _split_grid(grid, x0)
        zb = np.array([complex(z)])
        zero = np.zeros((1, n, 1), dtype=complex)
        for idx in (right, left):
            if idx.size == 0:
                continue
            eye = np.concatenate([np.eye(n), np.zeros((n, n))], axis=1)[None]
            _, _, steps = _rk_propagate(V, zb, x0, eye, np.zeros_like(eye), g[idx], record=True)
            Yf, Pf, _ = _rk_propagate(V, zb, x0, zero, zero, g[idx], forcing=f, replay=steps)
            y[idx] += Yf[0, :, :, 0]
            yp[idx] += Pf[0, :, :, 0]
    return VectorSolution(complex(z), float(x0), grid, y, yp)


def fundamental_system(V: Potential, z, x0: float, bc: BoundaryCondition, grid, *,
                       method: str = "rk") -> FundamentalPair:
    """``theta``/``phi`` with ``theta(x0)=cos a``, ``theta'(x0)=sin a``,
    ``phi(x0)=-sin a``, ``phi'(x0)=cos a``; ``z`` may be batched."""
    grid = np.asarray(grid, dtype=float)
    Y, P = _basis(V, z, x0, grid, method)
    s, c = bc.sin, bc.cos
    D_theta = np.concatenate([c, s], axis=0)
    D_phi = np.concatenate([-s, c], axis=0)
    fp = FundamentalPair(z, float(x0), grid, Y @ D_theta, P @ D_theta, Y @ D_phi, P @ D_phi, bc)
    at0 = grid == x0
    if np.any(at0):
        fp.theta[..., at0, :, :] = c
        fp.theta_prime[..., at0, :, :] = s
        fp.phi[..., at0, :, :] = -s
        fp.phi_prime[..., at0, :, :] = c
    return fp


def conjugate_pair(V: Potential, fp: FundamentalPair, method: str = "rk") -> FundamentalPair:
    """Fundamental system at ``conj(z)`` on the same grid."""
    return fundamental_system(V, np.conj(fp.z), fp.x0, fp.bc, fp.grid, method=method)


# ---------------------------------------------------------------- Wronskians


def wronskian_vector(f1: VectorSolution, f2: VectorSolution) -> np.ndarray:
    """``(f1, f2') - (f1', f2)`` per grid point (conjugate linear in ``f1``)."""
    if f1.grid.shape != f2.grid.shape or np.any(f1.grid != f2.grid):
        raise GridMismatch("solutions live on different grids")
    return (np.einsum("gi,gi->g", f1.y.conj(), f2.y_prime)
            - np.einsum("gi,gi->g", f1.y_prime.conj(), f2.y))


def wronskian_operator(F1, F1p, F2, F2p) -> np.ndarray:
    """``F1 F2' - F1' F2`` per grid point."""
    F1, F1p, F2, F2p = map(np.asarray, (F1, F1p, F2, F2p))
    if F1.shape[:-2] != F2.shape[:-2]:
        raise GridMismatch("operator solutions live on different grids")
    return F1 @ F2p - F1p @ F2


def inverse_block(fp_conj: FundamentalPair) -> np.ndarray:
    """The claimed two-sided inverse ``[[phi'(zbar)^*, -phi(zbar)^*], [-theta'(zbar)^*, theta(zbar)^*]]``."""
    top = np.concatenate([dagger(fp_conj.phi_prime), -dagger(fp_conj.phi)], axis=-1)
    bot = np.concatenate([-dagger(fp_conj.theta_prime), dagger(fp_conj.theta)], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def wronskian_identities(fp: FundamentalPair, fp_conj: FundamentalPair,
                         relative: bool = False) -> dict[str, np.ndarray]:
    """Residual norms (per grid point) of the eight Wronskian identities and block inverses.

    With ``relative=True`` each residual is divided by ``max(1, |block| |inverse|)``
    at that point, the size of the products that cancel in the identities.
    """
    th, thp, ph, php = fp.theta, fp.theta_prime, fp.phi, fp.phi_prime
    tb, tbp, pb, pbp = (dagger(a) for a in (fp_conj.theta, fp_conj.theta_prime,
                                            fp_conj.phi, fp_conj.phi_prime))
    n = th.shape[-1]
    eye = np.eye(n)
    norm = lambda a: np.abs(a).max(axis=(-1, -2))  # noqa: E731
    res = {
        "f": norm(tbp @ th - tb @ thp),
        "g": norm(pbp @ ph - pb @ php),
        "h": norm(pbp @ th - pb @ thp - eye),
        "i": norm(tb @ php - tbp @ ph - eye),
        # right-inverse identities; the adjoints here are of the conj(z) pair, un-daggered
        "j": norm(ph @ tb - th @ pb),
        "k": norm(php @ tbp - thp @ pbp),
        "l": norm(php @ tb - thp @ pb - eye),
        "m": norm(th @ pbp - ph @ tbp - eye),
    }
    blk = fp.block()
    inv = inverse_block(fp_conj)
    eye2 = np.eye(2 * n)
    res["left_inverse"] = norm(inv @ blk - eye2)
    res["right_inverse"] = norm(blk @ inv - eye2)
    if relative:
        scale = np.maximum(1.0, norm(blk) * norm(inv))
        res = {k: v / scale for k, v in res.items()}
    return res


# ---------------------------------------------------------------- residual checks


def ode_residual(V: Potential, z: complex, x0: float, h0, h1, points, f=None,
                 spacing: float = 1e-3, method: str = "rk") -> np.ndarray:
    """``|-y'' + (V - z) y - f|`` at ``points`` with ``y''`` from 5-point differences.

    The stencil points are landing points of the integrator, so the difference
    quotient sees the solution itself rather than an interpolant.
    """
    pts = np.asarray(points, dtype=float)
    offs = spacing * np.arange(-2, 3)
    stencil = (pts[:, None] + offs[None, :]).ravel()
    sol = solve_vector_ivp(V, z, x0, h0, h1, f=f, grid=stencil, method=method)
    y = sol.y.reshape(pts.size, 5, -1)
    ypp = (-y[:, 0] + 16 * y[:, 1] - 30 * y[:, 2] + 16 * y[:, 3] - y[:, 4]) / (12 * spacing ** 2)
    vy = np.einsum("pij,pj->pi", V(pts), y[:, 2])
    r = -ypp + vy - z * y[:, 2]
    if f is not None:
        r -= np.array([np.asarray(f(p), dtype=complex).reshape(-1) for p in pts])
    return np.linalg.norm(r, axis=-1)


def lagrange_identity(V: Potential, x, F, Fp, Fpp, G, Gp, Gpp):
    """Both sides of Green's formula for operator-valued ``F``, ``G`` sampled on ``x``.

    Returns ``(integral, boundary)`` where the integral of
    ``(tau F^*)^* G - F (tau G)`` is taken by composite Simpson.
    """
    from scipy.integrate import simpson

    Vx = V(np.asarray(x, dtype=float))
    tauFstar_star = -Fpp + F @ Vx
    tauG = -Gpp + Vx @ G
    integrand = tauFstar_star @ G - F @ tauG
    lhs = simpson(integrand, x=x, axis=0)
    W = F @ Gp - Fp @ G
    return lhs, W[-1] - W[0]
