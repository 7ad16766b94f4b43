"""Hermitian matrix functional calculus and validated linear-algebra helpers."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import DEFAULT
from .errors import NonHermitian


def as_hermitian(m, tol: float | None = None) -> np.ndarray:
    """Return ``(m + m^*)/2`` after checking that ``m`` is Hermitian.

    The defect is measured relative to ``max |m_ij|``; anything above ``tol``
    raises :class:`NonHermitian`.
    """
    tol = DEFAULT.herm if tol is None else tol
    a = np.atleast_2d(np.asarray(m, dtype=complex))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonHermitian(f"expected a square matrix, got shape {a.shape}")
    scale = max(np.abs(a).max(initial=0.0), 1.0)
    defect = np.abs(a - a.conj().T).max(initial=0.0)
    if defect > tol * scale:
        raise NonHermitian(f"Hermiticity defect {defect:.3e} exceeds {tol:.1e}")
    return 0.5 * (a + a.conj().T)


def dagger(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(a, -1, -2))


def re_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dagger(a))


def im_part(a: np.ndarray) -> np.ndarray:
    """Operator imaginary part ``(a - a^*) / 2i`` (batched)."""
    return (a - dagger(a)) / 2j


def hermitian_eig(m, tol: float | None = None):
    """Eigen-decomposition ``m = U diag(w) U^*`` with ascending ``w``.

    Eigenvector phases are fixed so that the largest-magnitude component of
    each column is real and positive, making the output deterministic.
    """
    h = as_hermitian(m, tol)
    w, u = np.linalg.eigh(h)
    idx = np.argmax(np.abs(u), axis=0)
    piv = u[idx, np.arange(u.shape[1])]
    u = u * (np.abs(piv) / piv)[None, :]
    return w, u


def matrix_fn(m, f: Callable[[np.ndarray], np.ndarray], tol: float | None = None) -> np.ndarray:
    w, u = hermitian_eig(m, tol)
    return (u * np.asarray(f(w))[None, :]) @ u.conj().T


def from_pairs(a) -> np.ndarray:
    """Complex array from trailing ``[re, im]`` pairs, keeping signed zeros."""
    a = np.asarray(a, dtype=float)
    out = np.empty(a.shape[:-1], dtype=complex)
    out.real, out.imag = a[..., 0], a[..., 1]
    return out


def principal_sqrt(z):
    """Square root with ``Im w >= 0``; positive reals map to positive reals."""
    w = np.sqrt(np.asarray(z, dtype=complex))
    w = np.where(w.imag < 0, -w, w)
    return w[()] if w.ndim == 0 else w


def psd_check(m, tol: float = 1e-8) -> bool:
    return bool(np.linalg.eigvalsh(as_hermitian(m)).min() >= -tol)


def min_eig(m) -> float:
    """Smallest eigenvalue of the Hermitian part (no validation, batched)."""
    return float(np.linalg.eigvalsh(re_part(np.asarray(m))).min())


def cond(m) -> float:
    return float(np.linalg.cond(m))


@dataclass(frozen=True)
class BoundaryCondition:
    """Self-adjoint boundary datum ``alpha`` together with ``sin(alpha)``, ``cos(alpha)``."""

    alpha: np.ndarray
    sin: np.ndarray
    cos: np.ndarray

    @classmethod
    def from_alpha(cls, alpha, tol: float | None = None) -> "BoundaryCondition":
        a = as_hermitian(alpha)
        bc = cls(a, matrix_fn(a, np.sin), matrix_fn(a, np.cos))
        bc.check(tol)
        return bc

    @classmethod
    def dirichlet(cls, n: int) -> "BoundaryCondition":
        return cls.from_alpha(np.zeros((n, n)))

    @classmethod
    def neumann(cls, n: int) -> "BoundaryCondition":
        return cls.from_alpha(0.5 * np.pi * np.eye(n))

    @property
    def dim(self) -> int:
        return self.alpha.shape[0]

    def negated(self) -> "BoundaryCondition":
        return BoundaryCondition(-self.alpha, -self.sin, self.cos)

    def check(self, tol: float | None = None) -> None:
        tol = DEFAULT.ident if tol is None else tol
        s, c = self.sin, self.cos
        eye = np.eye(self.dim)
        if np.abs(s @ s + c @ c - eye).max() > tol:
            raise NonHermitian("sin^2(alpha) + cos^2(alpha) != I")
        if np.abs(s @ c - c @ s).max() > tol:
            raise NonHermitian("sin(alpha) and cos(alpha) do not commute")
        for b in (s, c):
            w = np.linalg.eigvalsh(as_hermitian(b, max(tol, DEFAULT.herm)))
            if w.min() < -1 - tol or w.max() > 1 + tol:
                raise NonHermitian("spectrum of sin/cos(alpha) outside [-1, 1]")
