"""Half-line Weyl-Titchmarsh m-function, Weyl solution and Green's function on ``[a, oo)``.

Two evaluators are provided.

* ``method="truncation"`` caps the half-line at ``b`` with a Dirichlet (or
  Neumann) condition, integrates the capped solution back to ``a`` with QR
  renormalization, and doubles ``b`` until ``m_b`` settles. Valid for
  ``Im z != 0``.
* ``method="tail"`` starts from the exact decaying solution of the constant
  tail ``V = V_inf`` beyond ``x_c`` and integrates back to ``a``. It works for
  any ``z`` in the closed upper half-plane and returns boundary values
  ``m(lambda + i0)`` on the real axis.

Both share the normalization ``sin(a) psi'(a) + cos(a) psi(a) = I``.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .config import DEFAULT
from .errors import SingularNormalization, SingularPencil, TruncationNotConverged
from .ivp import fundamental_system, propagate
from .matfun import BoundaryCondition, dagger, hermitian_eig, principal_sqrt
from .potential import Potential


def _normalize(bc: BoundaryCondition, U, P, cond_max=None):
    """``m = (cos U' - sin U) N^{-1}`` and ``N = sin U' + cos U`` (batched)."""
    cond_max = DEFAULT.singular_cond if cond_max is None else cond_max
    N = bc.sin @ P + bc.cos @ U
    c = np.linalg.cond(N)
    if np.any(~np.isfinite(c)) or np.any(c > cond_max):
        raise SingularNormalization(f"normalization matrix condition {np.max(c):.2e}")
    Ninv = np.linalg.inv(N)
    return (bc.cos @ P - bc.sin @ U) @ Ninv, Ninv


def _backward_sweep(V, zb, start, U0, P0, a, grid=None, seg=1.0, method="auto"):
    """Integrate the batch ``(U, U')`` from ``start`` down to ``a`` with QR renormalization.

    Returns ``(U_a, P_a, vals)`` where ``vals`` holds per-grid-point
    ``(U_seg, P_seg, Minv_factor_index)`` data for reconstructing the solution.
    """
    B, n = zb.size, V.dim
    U, P = U0, P0
    x = float(start)
    grid = np.empty(0) if grid is None else np.asarray(grid, dtype=float)
    Ug = np.zeros((B, grid.size, n, n), dtype=complex)
    Pg = np.zeros_like(Ug)
    seg_of = np.full(grid.size, -1)
    Rs = []
    k = 0
    while True:
        x_end = max(x - seg, a)
        inside = np.flatnonzero((grid <= x) & (grid >= x_end) & (seg_of < 0))
        targets, inv = np.unique(np.concatenate([grid[inside], [x_end]]), return_inverse=True)
        Yt, Pt = propagate(V, zb, x, U, P, targets[::-1], method=method)
        Yt, Pt = Yt[:, ::-1][:, inv], Pt[:, ::-1][:, inv]
        Ug[:, inside] = Yt[:, :-1]
        Pg[:, inside] = Pt[:, :-1]
        seg_of[inside] = k
        U, P = Yt[:, -1], Pt[:, -1]
        x = x_end
        if x <= a:
            break
        S = np.concatenate([U, P], axis=-2)
        Q, R = np.linalg.qr(S)
        U, P = Q[:, :n], Q[:, n:]
        Rs.append(R)
        k += 1
    return U, P, (Ug, Pg, seg_of, Rs)


def _assemble_psi(vals, Ninv):
    """``psi(x) = U_seg(x) (N T_k)^{-1}`` with ``T_k = R_{K-1} ... R_k``."""
    Ug, Pg, seg_of, Rs = vals
    K = len(Rs)
    factors = [None] * (K + 1)
    factors[K] = Ninv
    for k in range(K - 1, -1, -1):
        factors[k] = np.linalg.solve(Rs[k], factors[k + 1])
    psi = np.empty_like(Ug)
    dpsi = np.empty_like(Pg)
    for k in np.unique(seg_of[seg_of >= 0]):
        sel = seg_of == k
        f = factors[k][:, None]
        psi[:, sel] = Ug[:, sel] @ f
        dpsi[:, sel] = Pg[:, sel] @ f
    return psi, dpsi, factors[0]


def tail_sqrt(V_inf, zb):
    """``i sqrt(z - V_inf)`` as a batch of matrices (decaying tail exponent)."""
    w, u = hermitian_eig(V_inf)
    k = principal_sqrt(zb[:, None] - w[None, :])
    return np.einsum("ij,bj,kj->bik", u, 1j * k, u.conj()), (w, u, k)


@dataclass
class Truncation:
    b_initial: float | None = None
    b_max_factor: int = 2 ** 10
    growth: float = 2.0
    tol: float = 1e-8


class WeylFunction:
    """Evaluator ``z -> m_alpha(z)`` for ``-d^2/dx^2 + V`` on ``[a, oo)``.

    Parameters
    ----------
    V : Potential
    a : float
        Regular left endpoint.
    bc : BoundaryCondition
        Boundary datum at ``a``; Dirichlet when omitted.
    method : {"truncation", "tail"}
    truncation : Truncation
        Doubling schedule for ``method="truncation"``.
    cap : {"dirichlet", "neumann"}
        Condition imposed at the truncation point.
    propagator : {"auto", "rk", "exact"}
    """

    def __init__(self, V: Potential, a: float = 0.0, bc: BoundaryCondition | None = None, *,
                 method: str = "truncation", truncation: Truncation | None = None,
                 cap: str = "dirichlet", propagator: str = "auto", seg: float = 1.0):
        self.V = V
        self.a = float(a)
        self.bc = bc if bc is not None else BoundaryCondition.dirichlet(V.dim)
        if method not in ("truncation", "tail"):
            raise ValueError(f"unknown method {method!r}")
        self.method = method
        self.truncation = truncation or Truncation()
        self.cap = cap
        self.propagator = propagator
        self.seg = seg
        self._cache: dict[complex, tuple[np.ndarray, float]] = {}
        self._lock = threading.Lock()

    @property
    def dim(self) -> int:
        return self.V.dim

    @property
    def boundary_values(self) -> bool:
        return self.method == "tail"

    def thresholds(self) -> np.ndarray:
        return self.V.thresholds("right")

    # -- truncated problem -------------------------------------------------

    def _b0(self, z: complex) -> float:
        if self.truncation.b_initial is not None:
            return float(self.truncation.b_initial)
        lam = np.linalg.eigvalsh(self.V.tail("right")[1])
        kappa = np.min(principal_sqrt(z - lam).imag)
        return 20.0 * max(1.0, 1.0 / kappa) if kappa > 0 else 20.0

    def _cap_data(self, B):
        n = self.dim
        eye, zero = np.eye(n, dtype=complex), np.zeros((n, n), dtype=complex)
        U0, P0 = (zero, eye) if self.cap == "dirichlet" else (eye, zero)
        return np.broadcast_to(U0, (B, n, n)).copy(), np.broadcast_to(P0, (B, n, n)).copy()

    def m_truncated(self, z: complex, b: float, grid=None):
        """``m_b(z)`` of the problem capped at ``b``; optionally ``psi_b`` on ``grid``."""
        if b <= self.a:
            raise ValueError("truncation point must exceed a")
        zb = np.array([complex(z)])
        xc, vinf = self._tail_start()
        start = min(b, xc)
        if start < b:
            # constant tail: the capped solution is known in closed form on [xc, b]
            U0, P0, tail_fn = self._capped_tail(zb, vinf, b, start)
        else:
            U0, P0 = self._cap_data(1)
            tail_fn = None
        if grid is not None:
            grid = np.asarray(grid, dtype=float)
            inner = grid <= start if start > self.a else np.zeros(grid.size, bool)
        if start > self.a:
            U, P, vals = _backward_sweep(self.V, zb, start, U0, P0, self.a,
                                         None if grid is None else grid[inner], self.seg, self.propagator)
        else:
            U, P, vals = U0, P0, None
        m, Ninv = _normalize(self.bc, U, P)
        if grid is None:
            return m[0]
        psi = np.empty((grid.size, self.dim, self.dim), dtype=complex)
        dpsi = np.empty_like(psi)
        f0 = Ninv
        if vals is not None:
            p, dp, f0 = _assemble_psi(vals, Ninv)
            psi[inner], dpsi[inner] = p[0], dp[0]
        if np.any(~inner):
            E, dE = tail_fn(grid[~inner])
            psi[~inner], dpsi[~inner] = E @ f0[0], dE @ f0[0]
        return m[0], psi, dpsi

    def _capped_tail(self, zb, vinf, b, start):
        """Capped solution on the constant tail, right-normalized at ``start``.

        Dirichlet cap: ``u_j = -sin(k_j (b - x)) / k_j``. Dividing by ``cos(k_j (b - start))``
        keeps it bounded for any ``b``.
        """
        w, u = hermitian_eig(vinf)
        k = principal_sqrt(zb[0] - w)
        dirichlet = self.cap == "dirichlet"

        def modes(x):
            d = b - np.atleast_1d(x)[:, None]
            d0 = b - start
            # ratios sin(kd)/cos(kd0), cos(kd)/cos(kd0) with only decaying exponentials
            den = 1.0 + np.exp(2j * k * d0)
            rs = (np.exp(1j * k * (d + d0)) - np.exp(1j * k * (d0 - d))) / (1j * den)
            rc = (np.exp(1j * k * (d + d0)) + np.exp(1j * k * (d0 - d))) / den
            y, yp = (-rs / k, rc) if dirichlet else (rc, k * rs)
            E = np.einsum("ij,gj,kj->gik", u, y, u.conj())
            dE = np.einsum("ij,gj,kj->gik", u, yp, u.conj())
            return E, dE

        E, dE = modes(start)
        return E, dE, modes

    def _m_truncation(self, z: complex):
        if z.imag == 0:
            raise ValueError("Im z must be nonzero")
        key = complex(z)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        tr = self.truncation
        b = self._b0(z)
        b_max = b * tr.b_max_factor
        prev = self.m_truncated(z, self.a + b)
        while True:
            b_next = b * tr.growth
            if b_next > b_max * (1 + 1e-12):
                raise TruncationNotConverged(f"m(z) not converged for z={z} up to b={b_max}")
            cur = self.m_truncated(z, self.a + b_next)
            gap = np.abs(cur - prev).max()
            b = b_next
            if gap < tr.tol * max(1.0, np.abs(cur).max()):
                break
            prev = cur
        with self._lock:
            self._cache.setdefault(key, (cur, self.a + b))
        return cur, self.a + b

    def truncation_gaps(self, z: complex, bs) -> np.ndarray:
        """``|m_{b_{k+1}} - m_{b_k}|`` along an explicit schedule (diagnostic)."""
        ms = [self.m_truncated(z, self.a + b) for b in bs]
        return np.array([np.abs(ms[i + 1] - ms[i]).max() for i in range(len(ms) - 1)])

    # -- tail matching -----------------------------------------------------

    def _tail_start(self):
        xc, vinf = self.V.tail("right")
        return max(float(xc), self.a), vinf

    def _tail_sweep(self, zb, grid=None):
        xc, vinf = self._tail_start()
        iK, _ = tail_sqrt(vinf, zb)
        n = self.dim
        U0 = np.broadcast_to(np.eye(n, dtype=complex), (zb.size, n, n)).copy()
        if grid is not None:
            grid = np.asarray(grid, dtype=float)
            inner = grid[grid <= xc] if xc > self.a else grid[:0]
        else:
            inner = None
        if xc > self.a:
            U, P, vals = _backward_sweep(self.V, zb, xc, U0, iK, self.a, inner, self.seg, self.propagator)
        else:
            U, P = U0, iK
            vals = (np.zeros((zb.size, 0 if inner is None else inner.size, n, n), complex),) * 2 + \
                (np.zeros(0 if inner is None else inner.size, int), [])
        return U, P, vals, (xc, vinf)

    def _m_tail(self, zb):
        U, P, _, _ = self._tail_sweep(zb)
        m, _ = _normalize(self.bc, U, P)
        return m

    # -- public --------------------------------------------------------------

    def __call__(self, z):
        za = np.asarray(z, dtype=complex)
        if self.method == "tail":
            out = self._m_tail(za.reshape(-1))
            return out.reshape(za.shape + out.shape[1:])
        if za.ndim == 0:
            return self._m_truncation(complex(za))[0]
        flat = [self._m_truncation(complex(v))[0] for v in za.reshape(-1)]
        return np.array(flat).reshape(za.shape + (self.dim, self.dim))

    def truncation_length(self, z: complex) -> float:
        return self._m_truncation(complex(z))[1] if self.method == "truncation" else np.inf

    def with_bc(self, bc: BoundaryCondition) -> "WeylFunction":
        return WeylFunction(self.V, self.a, bc, method=self.method, truncation=self.truncation,
                            cap=self.cap, propagator=self.propagator, seg=self.seg)


def m_truncated(V: Potential, a: float, bc: BoundaryCondition, z: complex, b: float, **kw):
    return WeylFunction(V, a, bc, **kw).m_truncated(z, b)


def m_function(wf: WeylFunction, z):
    return wf(z)


def weyl_solution(wf: WeylFunction, z: complex, grid):
    """``psi(z, x) = theta(z, x, a) + phi(z, x, a) m(z)`` and its derivative on ``grid``.

    Computed by the stable backward sweep (never by forward growth of ``theta``/``phi``).
    """
    grid = np.asarray(grid, dtype=float)
    z = complex(z)
    if wf.method == "truncation":
        _, b = wf._m_truncation(z)
        if np.any(grid > b):
            raise ValueError(f"grid extends beyond the truncation point {b}")
        _, psi, dpsi = wf.m_truncated(z, b, grid)
        return psi, dpsi
    psi, dpsi = _tail_psi(wf, np.array([z]), grid)
    return psi[0], dpsi[0]


def weyl_solution_batch(wf: WeylFunction, zs, grid):
    """:func:`weyl_solution` for an array of ``z``; shapes ``(B, G, n, n)``."""
    zs = np.asarray(zs, dtype=complex).reshape(-1)
    grid = np.asarray(grid, dtype=float)
    if wf.method == "tail":
        return _tail_psi(wf, zs, grid)
    out = [weyl_solution(wf, z, grid) for z in zs]
    return np.array([o[0] for o in out]), np.array([o[1] for o in out])


def _tail_psi(wf, zb, grid):
    U, P, vals, (xc, vinf) = wf._tail_sweep(zb, grid)
    _, Ninv = _normalize(wf.bc, U, P)
    B, n = zb.size, wf.dim
    psi = np.empty((B, grid.size, n, n), dtype=complex)
    dpsi = np.empty_like(psi)
    inner = grid <= xc if xc > wf.a else np.zeros(grid.size, bool)
    p, dp, f0 = _assemble_psi(vals, Ninv)
    psi[:, inner], dpsi[:, inner] = p, dp
    outer = ~inner
    if np.any(outer):
        _, (w, u, k) = tail_sqrt(vinf, zb)
        e = np.exp(1j * k[:, None, :] * (grid[outer] - xc)[None, :, None])          # (B, G, n)
        E = np.einsum("ij,bgj,kj->bgik", u, e, u.conj())
        dE = np.einsum("ij,bgj,kj->bgik", u, 1j * k[:, None, :] * e, u.conj())
        psi[:, outer] = E @ f0[:, None]
        dpsi[:, outer] = dE @ f0[:, None]
    return psi, dpsi


def _phi(wf, z, grid):
    fp = fundamental_system(wf.V, z, wf.a, wf.bc, grid, method=wf.propagator)
    return fp.phi, fp.phi_prime


def greens_matrix(wf: WeylFunction, z: complex, xs, xps):
    """Green's function ``G(z, x, x')`` for all pairs of the sorted grids ``xs``, ``xps``."""
    xs = np.asarray(xs, dtype=float)
    xps = np.asarray(xps, dtype=float)
    z = complex(z)
    phi_x, _ = _phi(wf, z, xs)
    psi_x, _ = weyl_solution(wf, z, xs)
    phi_b, _ = _phi(wf, np.conj(z), xps)
    psi_b, _ = weyl_solution(wf, np.conj(z), xps)
    lower = xs[:, None] <= xps[None, :]
    G_lo = np.einsum("xij,ykj->xyik", phi_x, psi_b.conj())
    G_hi = np.einsum("xij,ykj->xyik", psi_x, phi_b.conj())
    return np.where(lower[..., None, None], G_lo, G_hi)


def greens_kernel(wf: WeylFunction, z: complex, x: float, xp: float) -> np.ndarray:
    return greens_matrix(wf, z, [x], [xp])[0, 0]


def greens_derivative_jump(wf: WeylFunction, z: complex, xp: float, h: float = 1e-4) -> np.ndarray:
    """``d/dx G(x'+0, x') - d/dx G(x'-0, x')`` by one-sided second-order differences."""
    xs = np.array([xp - 2 * h, xp - h, xp, xp + h, xp + 2 * h])
    G = greens_matrix(wf, z, xs, [xp])[:, 0]
    right = (-3 * G[2] + 4 * G[3] - G[4]) / (2 * h)
    left = (3 * G[2] - 4 * G[1] + G[0]) / (2 * h)
    return right - left


def resolvent_apply(wf: WeylFunction, z: complex, grid, u) -> np.ndarray:
    """``v = (H - z)^{-1} u`` for ``u`` sampled on ``grid`` (shape ``(G, n)``), zero elsewhere.

    ``v(x) = psi(z,x) int_a^x phi(zbar,.)^* u + phi(z,x) int_x^oo psi(zbar,.)^* u``
    with cumulative Simpson quadrature.
    """
    grid = np.asarray(grid, dtype=float)
    u = np.asarray(u, dtype=complex).reshape(grid.size, -1)
    z = complex(z)
    phi_z, _ = _phi(wf, z, grid)
    psi_z, _ = weyl_solution(wf, z, grid)
    phi_c, _ = _phi(wf, np.conj(z), grid)
    psi_c, _ = weyl_solution(wf, np.conj(z), grid)
    a1 = np.einsum("gji,gj->gi", phi_c.conj(), u)
    a2 = np.einsum("gji,gj->gi", psi_c.conj(), u)
    c1 = _cumsimpson(a1, grid)
    c2 = _cumsimpson(a2, grid)
    c2 = c2[-1] - c2
    return np.einsum("gij,gj->gi", psi_z, c1) + np.einsum("gij,gj->gi", phi_z, c2)


def resolvent_form_batch(wf: WeylFunction, zs, grid, f, g) -> np.ndarray:
    """``S(z) = (f, (H - z)^{-1} g)`` for every ``z`` in ``zs``; ``f``, ``g`` sampled on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    zs = np.asarray(zs, dtype=complex).reshape(-1)
    f = np.asarray(f, dtype=complex).reshape(grid.size, -1)
    g = np.asarray(g, dtype=complex).reshape(grid.size, -1)
    phi_z = fundamental_system(wf.V, zs, wf.a, wf.bc, grid, method=wf.propagator).phi
    phi_c = fundamental_system(wf.V, zs.conj(), wf.a, wf.bc, grid, method=wf.propagator).phi
    psi_z, _ = weyl_solution_batch(wf, zs, grid)
    psi_c, _ = weyl_solution_batch(wf, zs.conj(), grid)
    c1 = _cumsimpson(np.moveaxis(np.einsum("bgji,gj->bgi", phi_c.conj(), g), 1, 0), grid)
    c2 = _cumsimpson(np.moveaxis(np.einsum("bgji,gj->bgi", psi_c.conj(), g), 1, 0), grid)
    c2 = c2[-1] - c2
    v = np.einsum("bgij,gbj->bgi", psi_z, c1) + np.einsum("bgij,gbj->bgi", phi_z, c2)
    integrand = np.einsum("gi,bgi->bg", f.conj(), v)
    return simpson(integrand.real, x=grid, axis=1) + 1j * simpson(integrand.imag, x=grid, axis=1)


def _cumsimpson(y, x):
    # scipy's cumulative Simpson is real-only
    def f(v):
        return cumulative_simpson(v, x=x, axis=0, initial=0)
    return f(y.real) + 1j * f(y.imag)


def lft_boundary_change(m_alpha, bc_alpha: BoundaryCondition, bc_beta: BoundaryCondition,
                        cond_max: float | None = None) -> np.ndarray:
    """``m_beta = (C + D m_alpha)(A + B m_alpha)^{-1}``."""
    cond_max = DEFAULT.singular_cond if cond_max is None else cond_max
    sa, ca, sb, cb = bc_alpha.sin, bc_alpha.cos, bc_beta.sin, bc_beta.cos
    A = cb @ ca + sb @ sa
    B = -cb @ sa + sb @ ca
    C = -sb @ ca + cb @ sa
    D = sb @ sa + cb @ ca
    m = np.asarray(m_alpha, dtype=complex)
    den = A + B @ m
    c = np.linalg.cond(den)
    if np.any(~np.isfinite(c)) or np.any(c > cond_max):
        raise SingularPencil(f"A + B m has condition {np.max(c):.2e}")
    return (C + D @ m) @ np.linalg.inv(den)


def m_from_greens(wf: WeylFunction, z: complex, h: float = 1e-3) -> np.ndarray:
    """Recover ``m`` from the boundary values of ``G`` and its derivatives at ``a``.

    The derivatives are one-sided second-order differences in the region ``x < x'``.
    """
    a = wf.a
    xs = a + h * np.array([0.0, 1.0, 2.0])
    xps = a + h * np.array([3.0, 4.0, 5.0])
    G = greens_matrix(wf, z, xs, xps)
    # extrapolate both arguments to a with quadratic stencils
    w0 = np.array([-3.0, 4.0, -1.0]) / (2 * h)      # derivative at the first node
    # value / derivative at x = a from nodes a, a+h, a+2h
    vx = np.array([1.0, 0.0, 0.0])
    dx = w0
    # x' nodes a+3h..a+5h: extrapolate value and derivative to a
    t = (xps - a) / h
    Lv = _lagrange_weights(t, 0.0)
    Ld = _lagrange_deriv_weights(t, 0.0) / h
    def comb(wx, wy):
        return np.einsum("x,y,xyij->ij", wx, wy, G)
    G00 = comb(vx, Lv)
    Gx = comb(dx, Lv)
    Gxp = comb(vx, Ld)
    Gxxp = comb(dx, Ld)
    s, c = wf.bc.sin, wf.bc.cos
    left = np.concatenate([-s, c], axis=1)
    blk = np.block([[G00, Gxp], [Gx, Gxxp]])
    return left @ blk @ dagger(left)


def _lagrange_weights(t, t0):
    w = np.ones_like(t)
    for i in range(t.size):
        for j in range(t.size):
            if i != j:
                w[i] *= (t0 - t[j]) / (t[i] - t[j])
    return w


def _lagrange_deriv_weights(t, t0):
    n = t.size
    w = np.zeros(n)
    for i in range(n):
        tot = 0.0
        for k in range(n):
            if k == i:
                continue
            prod = 1.0 / (t[i] - t[k])
            for j in range(n):
                if j != i and j != k:
                    prod *= (t0 - t[j]) / (t[i] - t[j])
            tot += prod
        w[i] = tot
    return w


def weyl_gram(wf: WeylFunction, z: complex, grid=None) -> np.ndarray:
    """``int_a^oo psi(z,x)^* psi(z,x) dx`` (Simpson on ``[a, c]`` plus the exact constant tail).

    For the truncation evaluator the integral runs to the converged ``b``.
    """
    z = complex(z)
    if wf.method == "truncation":
        end = wf.truncation_length(z)
    else:
        end = max(wf._tail_start()[0], wf.a)
    if grid is None:
        grid = (np.linspace(wf.a, end, max(int(200 * (end - wf.a)), 2) + 1) if end > wf.a
                else np.array([wf.a]))
    psi, _ = weyl_solution(wf, z, grid)
    gram = simpson(dagger(psi) @ psi, x=grid, axis=0) if grid.size > 1 else 0.0
    if wf.method == "tail":
        xc, vinf = end, wf._tail_start()[1]
        w, u = hermitian_eig(vinf)
        k = principal_sqrt(z - w)
        p0 = psi[-1]
        # psi(x) = U e^{ik(x-xc)} U^* psi(xc) beyond xc
        c = u.conj().T @ p0
        gram = gram + dagger(c) @ np.diag(1.0 / (2 * k.imag)) @ c
    return gram


def l2_identity_residual(wf: WeylFunction, z: complex, f) -> float:
    """``|Im z int ||psi f||^2 - (f, Im m f)|`` for one vector ``f``."""
    z = complex(z)
    m = wf(z)
    f = np.asarray(f, dtype=complex)
    lhs = z.imag * np.vdot(f, weyl_gram(wf, z) @ f).real
    rhs = np.vdot(f, ((m - dagger(m)) / 2j) @ f).real
    return abs(lhs - rhs)
