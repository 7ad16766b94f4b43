"""Finite-difference oracle for ``-d^2/dx^2 + V`` on a truncated interval.

Cell-centred grid ``x_j = lo + (j - 1/2) h``. The left boundary condition
``sin(alpha) u'(lo) + cos(alpha) u(lo) = 0`` is imposed through a ghost value
``u_0 = Gamma u_1`` with ``Gamma`` Hermitian, which keeps the matrix Hermitian.
The right end always carries a Dirichlet cap (``u_{K+1} = -u_K``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import eigsh, spsolve

from .errors import SingularShift
from .matfun import BoundaryCondition, hermitian_eig
from .potential import Potential


def ghost_matrix(bc: BoundaryCondition, h: float) -> np.ndarray:
    """``Gamma`` with ``u_0 = Gamma u_1`` from ``sin (u_1 - u_0)/h + cos (u_0 + u_1)/2 = 0``."""
    w, u = hermitian_eig(bc.alpha)
    s, c = np.sin(w), np.cos(w)
    g = (s + 0.5 * h * c) / (s - 0.5 * h * c)
    return (u * g) @ u.conj().T


@dataclass
class DiscretizedOperator:
    grid: np.ndarray
    h: float
    dim: int
    lo: float
    hi: float
    bc: BoundaryCondition
    matrix: sp.csr_matrix
    bands: np.ndarray      # lower banded storage, bands[d, j] = A[j + d, j]
    gamma: np.ndarray

    @property
    def size(self) -> int:
        return self.grid.size * self.dim

    def _flat(self, u):
        u = np.asarray(u, dtype=complex)
        return u.reshape(self.size)

    def _shape(self, v):
        return v.reshape(self.grid.size, self.dim)

    def apply(self, u) -> np.ndarray:
        """``H u`` for ``u`` of shape ``(K, n)``."""
        return self._shape(self.matrix @ self._flat(u))

    def _pack(self, w, v):
        order = np.argsort(w)
        w, v = w[order], v[:, order] / np.sqrt(self.h)
        return w, np.moveaxis(v, 1, 0).reshape(w.size, self.grid.size, self.dim)

    def eig(self, lam_min: float, lam_max: float):
        """Eigenpairs with eigenvalues in ``(lam_min, lam_max]``.

        Eigenvectors are returned as functions on the grid, shape ``(m, K, n)``,
        normalized by ``h sum |v|^2 = 1``.
        """
        if self.dim == 1:
            d, e = self.bands[0].real, self.bands[1, :-1].real
            w, v = eigh_tridiagonal(d, e, select="v", select_range=(lam_min, lam_max))
            return self._pack(w, v.astype(complex))
        # shift-invert about the midpoint, widening until the interval is exhausted
        mid, half = 0.5 * (lam_min + lam_max), 0.5 * (lam_max - lam_min)
        k = 8
        while True:
            k = min(k, self.size - 2)
            w, v = eigsh(self.matrix, k=k, sigma=mid, which="LM")
            if np.abs(w - mid).max() > half or k >= self.size - 2:
                break
            k *= 2
        keep = (w > lam_min) & (w <= lam_max)
        return self._pack(w[keep], v[:, keep])

    def lowest(self, count: int):
        if self.dim == 1:
            d, e = self.bands[0].real, self.bands[1, :-1].real
            w, v = eigh_tridiagonal(d, e, select="i", select_range=(0, count - 1))
            return self._pack(w, v.astype(complex))
        floor = float(np.min(self.bands[0].real) - 2 * np.abs(self.bands[1:]).sum(axis=0).max()) - 1.0
        w, v = eigsh(self.matrix, k=count, sigma=floor, which="LM")
        return self._pack(w, v)

    def inner(self, u, v) -> complex:
        return complex(self.h * np.vdot(self._flat(u), self._flat(v)))

    def boundary_data(self, v):
        """``(v(lo), v'(lo))`` from the ghost relation, second order at ``lo``."""
        v1 = np.asarray(v)[..., 0, :]
        v0 = v1 @ self.gamma.T
        return 0.5 * (v0 + v1), (v1 - v0) / self.h

    def atom_weight(self, v) -> np.ndarray:
        """``c c^*`` with ``c = cos(alpha) v'(lo) - sin(alpha) v(lo)`` for one normalized eigenvector."""
        val, der = self.boundary_data(v)
        c = self.bc.cos @ der - self.bc.sin @ val
        return np.outer(c, c.conj())


def discretize(V: Potential, domain, bc: BoundaryCondition | None = None, h: float = 1e-2) -> DiscretizedOperator:
    """Assemble the Hermitian finite-difference matrix on ``domain = (lo, hi)``."""
    lo, hi = map(float, domain)
    if not (h > 0 and hi > lo):
        raise ValueError("need h > 0 and a nonempty domain")
    n = V.dim
    bc = bc if bc is not None else BoundaryCondition.dirichlet(n)
    K = int(round((hi - lo) / h))
    h = (hi - lo) / K
    x = lo + (np.arange(1, K + 1) - 0.5) * h
    Vx = V(x).astype(complex)
    gamma = ghost_matrix(bc, h)
    eye = np.eye(n)
    diag = Vx + (2.0 / h ** 2) * eye
    diag[0] = diag[0] - gamma / h ** 2
    diag[-1] = diag[-1] + eye / h ** 2
    if K == 1:
        diag[0] = Vx[0] + (3.0 * eye - gamma) / h ** 2
    diag = 0.5 * (diag + np.conj(np.swapaxes(diag, 1, 2)))
    off = sp.kron(sp.diags([np.ones(K - 1), np.ones(K - 1)], [-1, 1]), sp.identity(n), format="csr")
    A = (sp.block_diag(list(diag), format="csr") - off / h ** 2).tocsr()
    # lower banded storage: bands[d, j] = A[j + d, j]
    N = K * n
    bands = np.zeros((n + 1, N), dtype=complex)
    for d in range(n + 1):
        bands[d, : N - d] = A.diagonal(-d)
    if np.abs(bands.imag).max() == 0:
        bands = bands.real
    return DiscretizedOperator(x, h, n, lo, hi, bc, A, bands, gamma)


def oracle_resolvent(D: DiscretizedOperator, z: complex, u) -> np.ndarray:
    """Solve ``(D - z) v = u``."""
    z = complex(z)
    if z.imag == 0:
        raise SingularShift("Im z must be nonzero")
    M = (D.matrix - z * sp.identity(D.size, format="csr")).tocsc()
    v = spsolve(M, D._flat(u))
    if not np.all(np.isfinite(v)):
        raise SingularShift(f"shifted matrix singular at z={z}")
    return D._shape(v)


@dataclass
class Projection:
    """Spectral projection onto eigenvalues in ``(lam1, lam2]``."""

    eigenvalues: np.ndarray
    vectors: np.ndarray      # (m, K, n), h-normalized
    h: float

    def apply(self, u, F=None) -> np.ndarray:
        u = np.asarray(u, dtype=complex)
        coef = self.h * np.einsum("mkn,kn->m", self.vectors.conj(), u)
        if F is not None:
            coef = coef * F(self.eigenvalues)
        return np.einsum("m,mkn->kn", coef, self.vectors)

    def matrix(self) -> np.ndarray:
        """Projection as a matrix on ``l^2`` with weight ``h`` (rank ``m``)."""
        v = self.vectors.reshape(self.vectors.shape[0], -1)
        return self.h * v.T @ v.conj()

    @property
    def rank(self) -> int:
        return self.eigenvalues.size


def oracle_projection(D: DiscretizedOperator, lam1: float, lam2: float) -> Projection:
    if not lam1 < lam2:
        raise ValueError("need lam1 < lam2")
    w, v = D.eig(lam1, lam2)
    keep = (w > lam1) & (w <= lam2)
    return Projection(w[keep], v[keep], D.h)
