"""Eigenfunction-expansion transform and the step-function model space.

The half-line transform is ``h_hat(lambda) = int phi(lambda, x, a)^* h(x) dx``
in ``C^n``; its full-line analogue stacks ``int theta^* h`` and
``int phi^* h`` into ``C^{2n}``. Model-space elements are step functions on
the measure partition with separate values at the atoms, and the pairing is
``sum_cells u_c^* Omega(cell) v_c + sum_atoms u^* Omega({lambda}) v``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .errors import PartitionMismatch
from .herglotz import MatrixMeasure, assemble_measure
from .ivp import fundamental_system
from .matfun import BoundaryCondition, from_pairs
from .potential import Potential

CHUNK = 256


@dataclass
class ModelSpaceElement:
    """Step function: one ``C^k`` value per cell plus one per atom."""

    breakpoints: np.ndarray
    cells: np.ndarray            # (K, k)
    atoms: np.ndarray            # (A, k)

    def __add__(self, other):
        _same_partition(self.breakpoints, other.breakpoints)
        return ModelSpaceElement(self.breakpoints, self.cells + other.cells, self.atoms + other.atoms)

    def scaled(self, c):
        return ModelSpaceElement(self.breakpoints, c * self.cells, c * self.atoms)


@dataclass
class TransformResult:
    """Transform samples at cell midpoints and at the atoms of ``measure``."""

    measure: MatrixMeasure
    cells: np.ndarray            # (K, k)
    atoms: np.ndarray            # (A, k)
    kind: str = "half"           # "half" (phi only) or "full" (theta and phi)
    x0: float = 0.0
    bc_alpha: np.ndarray | None = None
    source: dict = field(default_factory=dict)

    @property
    def lambdas(self) -> np.ndarray:
        return self.measure.midpoints

    def element(self) -> ModelSpaceElement:
        return ModelSpaceElement(self.measure.breakpoints, self.cells, self.atoms)

    def replace(self, cells, atoms) -> "TransformResult":
        return TransformResult(self.measure, cells, atoms, self.kind, self.x0, self.bc_alpha, dict(self.source))

    def to_dict(self) -> dict:
        def vecs(a):
            return [[[float(v.real), float(v.imag)] for v in row] for row in a]
        d = {"measure": self.measure.to_dict(), "cells": vecs(self.cells), "atoms": vecs(self.atoms),
             "kind": self.kind, "x0": float(self.x0), "source": self.source}
        if self.kind == "full":
            d["block"] = 2 * self.dim
        if self.bc_alpha is not None:
            d["alpha"] = [[[float(v.real), float(v.imag)] for v in row] for row in self.bc_alpha]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d) -> "TransformResult":
        def vecs(a, k):
            arr = np.asarray(a, dtype=float).reshape(-1, k, 2)
            return from_pairs(arr)
        meas = MatrixMeasure.from_dict(d["measure"])
        k = meas.dim
        alpha = None
        if "alpha" in d:
            a = np.asarray(d["alpha"], dtype=float)
            alpha = from_pairs(a)
        return cls(meas, vecs(d["cells"], k), vecs(d["atoms"], k), d.get("kind", "half"),
                   float(d.get("x0", 0.0)), alpha, dict(d.get("source", {})))

    @classmethod
    def from_json(cls, s: str) -> "TransformResult":
        return cls.from_dict(json.loads(s))

    @property
    def dim(self) -> int:
        """Dimension ``n`` of the underlying space (``k = n`` or ``2n``)."""
        k = self.measure.dim
        return k // 2 if self.kind == "full" else k


def _same_partition(b1, b2):
    if b1.shape != b2.shape or np.any(b1 != b2):
        raise PartitionMismatch("partitions differ")


def basis_on_grid(V: Potential, x0: float, bc: BoundaryCondition, lams, grid, kind: str = "half"):
    """``phi(lambda, x, x0)`` (half) or ``[theta, phi]`` (full) on ``grid``: shape ``(B, G, n, k)``."""
    lams = np.asarray(lams, dtype=complex)
    grid = np.asarray(grid, dtype=float)
    out = []
    for i in range(0, lams.size, CHUNK):
        fp = fundamental_system(V, lams[i:i + CHUNK], x0, bc, grid, method="auto")
        out.append(fp.phi if kind == "half" else np.concatenate([fp.theta, fp.phi], axis=-1))
    if not out:
        n = V.dim
        return np.zeros((0, grid.size, n, n if kind == "half" else 2 * n), complex)
    return np.concatenate(out)


def _transform_at(V, x0, bc, lams, grid, h, kind):
    h = np.asarray(h, dtype=complex).reshape(grid.size, -1)
    res = []
    for i in range(0, len(lams), CHUNK):
        B = basis_on_grid(V, x0, bc, lams[i:i + CHUNK], grid, kind)
        integrand = np.einsum("bgnk,gn->bgk", B.conj(), h)
        res.append(simpson(integrand.real, x=grid, axis=1) + 1j * simpson(integrand.imag, x=grid, axis=1))
    k = V.dim if kind == "half" else 2 * V.dim
    return np.concatenate(res) if res else np.zeros((0, k), complex)


def forward_transform(V: Potential, a: float, bc: BoundaryCondition | None, h, grid, partition=None, *,
                      measure: MatrixMeasure | None = None, kind: str = "half") -> TransformResult:
    """Transform of ``h`` sampled on ``grid`` (zero outside it).

    The measure is assembled from the tail-matched Weyl function when not supplied.
    """
    bc = bc if bc is not None else BoundaryCondition.dirichlet(V.dim)
    grid = np.asarray(grid, dtype=float)
    if measure is None:
        if partition is None:
            partition = np.linspace(-10.0, 400.0, 4001)
        if kind == "half":
            from .halfline import WeylFunction
            measure = assemble_measure(WeylFunction(V, a, bc, method="tail"), partition)
        else:
            from .fullline import half_line_pair
            measure = half_line_pair(V, a, bc).measure(partition)
    cells = _transform_at(V, a, bc, measure.midpoints, grid, h, kind)
    atoms = _transform_at(V, a, bc, measure.atom_locations, grid, h, kind)
    src = {"grid_min": float(grid[0]), "grid_max": float(grid[-1]), "grid_size": int(grid.size)}
    return TransformResult(measure, cells, atoms, kind, float(a), bc.alpha, src)


def model_inner_product(u, v, measure: MatrixMeasure | None = None) -> complex:
    """``sum_cells u^* Omega v + sum_atoms u^* Omega v``; conjugate-linear in ``u``."""
    if measure is None:
        measure = u.measure if isinstance(u, TransformResult) else v.measure
    eu = u.element() if isinstance(u, TransformResult) else u
    ev = v.element() if isinstance(v, TransformResult) else v
    _same_partition(eu.breakpoints, measure.breakpoints)
    _same_partition(ev.breakpoints, measure.breakpoints)
    s = np.einsum("ki,kij,kj->", eu.cells.conj(), measure.cell_mass, ev.cells)
    if measure.atom_locations.size:
        s = s + np.einsum("ki,kij,kj->", eu.atoms.conj(), measure.atom_masses, ev.atoms)
    return complex(s)


def inverse_transform(tr: TransformResult, V: Potential, a: float, bc: BoundaryCondition | None, x_grid):
    """``h(x) = int basis(lambda, x) dOmega(lambda) h_hat(lambda)`` on ``x_grid``; shape ``(G, n)``."""
    bc = bc if bc is not None else BoundaryCondition.dirichlet(V.dim)
    x_grid = np.asarray(x_grid, dtype=float)
    meas = tr.measure
    lams = np.concatenate([meas.midpoints, meas.atom_locations])
    weighted = np.concatenate([np.einsum("kij,kj->ki", meas.cell_mass, tr.cells),
                               np.einsum("kij,kj->ki", meas.atom_masses, tr.atoms)])
    out = np.zeros((x_grid.size, V.dim), complex)
    for i in range(0, lams.size, CHUNK):
        B = basis_on_grid(V, a, bc, lams[i:i + CHUNK], x_grid, tr.kind)
        out += np.einsum("bgnk,bk->gn", B, weighted[i:i + CHUNK])
    return out


def apply_function_of_H(tr: TransformResult, F) -> TransformResult:
    """Multiplication by ``F(lambda)`` in the model space."""
    fc = np.asarray(F(tr.measure.midpoints), dtype=complex).reshape(-1, 1)
    fa = np.asarray(F(tr.measure.atom_locations), dtype=complex).reshape(-1, 1)
    return tr.replace(tr.cells * fc, tr.atoms * fa)


def indicator(lam1: float, lam2: float):
    """``chi_{(lam1, lam2]}``."""
    return lambda lam: ((np.asarray(lam) > lam1) & (np.asarray(lam) <= lam2)).astype(float)


@dataclass
class SpectrumReport:
    intervals: list            # merged (lo, hi) cells with mass above tol
    atoms: list                # atom locations
    max_rank: int              # largest numerical rank of a cell mass

    def to_dict(self):
        return {"intervals": [[float(a), float(b)] for a, b in self.intervals],
                "atoms": [float(x) for x in self.atoms], "max_rank": int(self.max_rank)}


def support_and_spectrum(measure: MatrixMeasure, tol: float = 1e-8) -> SpectrumReport:
    """Support of the measure as merged intervals plus atoms; checks the multiplicity bound."""
    bp = measure.breakpoints
    w = np.linalg.eigvalsh(0.5 * (measure.cell_mass + np.conj(np.swapaxes(measure.cell_mass, 1, 2))))
    ranks = (w > tol).sum(axis=1) if w.size else np.zeros(0, int)
    if ranks.size and ranks.max() > measure.dim:
        raise ValueError("cell mass rank exceeds the dimension")
    massive = ranks > 0
    intervals = []
    k = 0
    while k < massive.size:
        if massive[k]:
            j = k
            while j + 1 < massive.size and massive[j + 1]:
                j += 1
            intervals.append((bp[k], bp[j + 1]))
            k = j + 1
        else:
            k += 1
    atoms = [float(x) for x, m in zip(measure.atom_locations, measure.atom_masses)
             if np.linalg.eigvalsh(m).max() > tol]
    return SpectrumReport(intervals, atoms, int(ranks.max()) if ranks.size else 0)
