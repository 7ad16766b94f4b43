"""Invariant suites run against one problem (potential, reference point, boundary datum).

Every suite returns a list of :class:`Check` rows ``(name, residual, tol, passed)``.
Random inputs come from a seeded generator, so a repeated run reproduces the
report exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .expansion import forward_transform, inverse_transform, model_inner_product
from .fdoracle import discretize, oracle_resolvent
from .fullline import FullLineWeyl, block_orderings_gap, fullline_greens_matrix, fullline_resolvent_apply
from .halfline import (Truncation, WeylFunction, greens_derivative_jump, greens_matrix,
                       l2_identity_residual, lft_boundary_change, resolvent_apply, resolvent_form_batch)
from .herglotz import assemble_measure, neville
from .ivp import conjugate_pair, fundamental_system, wronskian_identities
from .matfun import BoundaryCondition, dagger, im_part
from .potential import CoupledChannel, ConstantMatrix, DiagonalWells, Potential

STONE_EPS = (1e-1, 5e-2, 2.5e-2, 1.25e-2)


@dataclass
class Problem:
    V: Potential
    a: float = 0.0
    bc: BoundaryCondition | None = None
    window: tuple[float, float] = (0.0, 400.0)
    cells: int = 4000

    def __post_init__(self):
        if self.bc is None:
            self.bc = BoundaryCondition.dirichlet(self.V.dim)

    @property
    def dim(self) -> int:
        return self.V.dim


@dataclass
class Check:
    name: str
    residual: float
    tol: float

    def __post_init__(self):
        self.residual = float(self.residual)
        self.tol = float(self.tol)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tol)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name} residual={self.residual!r} tol={self.tol!r}"


@dataclass
class Report:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def text(self) -> str:
        return "\n".join(c.line() for c in self.checks) + "\n"

    def to_dict(self) -> dict:
        return {"passed": self.passed,
                "checks": [{"name": c.name, "residual": float(c.residual), "tol": float(c.tol),
                            "passed": c.passed} for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def random_hermitian(rng, n: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (a + a.conj().T)


def random_potential(rng, n: int) -> Potential:
    """Constant, square-well or coupled potential with random parameters."""
    kind = rng.integers(3)
    if kind == 0:
        return ConstantMatrix(random_hermitian(rng, n))
    if kind == 1:
        return DiagonalWells(rng.uniform(0.5, 3, n), rng.uniform(0.5, 2, n), rng.uniform(0.5, 2, n))
    if n == 1:
        return DiagonalWells([rng.uniform(0.5, 3)], [1.0], [1.0])
    return CoupledChannel(rng.uniform(0.2, 1.0), rng.uniform(-1, 1, n), n)


def random_z(rng, count: int, im_min: float = 0.5) -> np.ndarray:
    re = rng.uniform(-2, 4, count)
    im = rng.uniform(im_min, 2, count) * rng.choice([-1, 1], count)
    return re + 1j * im


def bump(x, lo: float, hi: float) -> np.ndarray:
    """``sin^4`` bump supported on ``[lo, hi]``."""
    x = np.asarray(x, dtype=float)
    t = (x - lo) / (hi - lo)
    return np.where((t >= 0) & (t <= 1), np.sin(np.pi * t) ** 4, 0.0)


def _vectors(rng, count, n):
    return rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))


def _tol(overrides, name, default):
    return float(overrides.get(name, default)) if overrides else default


def spectral_floor(V: Potential, a: float) -> float:
    """A point below the spectrum's bulk, used as the lower window edge."""
    x = np.linspace(a, a + 50.0, 2001)
    w = np.linalg.eigvalsh(V(x)).min()
    return float(min(0.0, np.floor(w) - 1.0))


# ---------------------------------------------------------------- suites


def suite_wronskian(p: Problem, rng, tol=None) -> list:
    grid = np.linspace(p.a, p.a + 5.0, 50)
    worst = {}
    for z in random_z(rng, 5):
        fp = fundamental_system(p.V, z, p.a, p.bc, grid, method="auto")
        res = wronskian_identities(fp, conjugate_pair(p.V, fp, method="auto"), relative=True)
        for k, v in res.items():
            worst[k] = max(worst.get(k, 0.0), float(np.max(v)))
    return [Check(f"wronskian_{k}", worst[k], _tol(tol, f"wronskian_{k}", 1e-7)) for k in sorted(worst)]


def suite_herglotz(p: Problem, rng, tol=None) -> list:
    wf = WeylFunction(p.V, p.a, p.bc, method="tail")
    zs = np.array([x + 1j * y for x in (-1.0, 1.0, 3.0) for y in (0.5, 1.0, 2.0)])
    m, mc = wf(zs), wf(zs.conj())
    psd = max(0.0, -float(np.linalg.eigvalsh(im_part(m)).min()))
    sym = float(np.abs(mc - dagger(m)).max())
    out = [Check("herglotz_psd", psd, _tol(tol, "herglotz_psd", 1e-8)),
           Check("herglotz_symmetry", sym, _tol(tol, "herglotz_symmetry", 1e-8))]
    # weighted L2 identity with the truncation evaluator
    wt = WeylFunction(p.V, p.a, p.bc, method="truncation", truncation=Truncation(tol=1e-10))
    worst = 0.0
    for f in _vectors(rng, 10, p.dim):
        worst = max(worst, l2_identity_residual(wt, 1 + 1j, f) / np.vdot(f, f).real)
    out.append(Check("weyl_l2_identity", worst, _tol(tol, "weyl_l2_identity", 1e-4)))
    flw = FullLineWeyl(p.V, p.a, p.bc)
    M = flw(zs)
    out.append(Check("block_psd", max(0.0, -float(np.linalg.eigvalsh(im_part(M)).min())),
                     _tol(tol, "block_psd", 1e-8)))
    out.append(Check("block_orderings", max(block_orderings_gap(flw, z) for z in zs),
                     _tol(tol, "block_orderings", 1e-8)))
    return out


def suite_lft(p: Problem, rng, tol=None) -> list:
    z = 1 + 1j
    wf = WeylFunction(p.V, p.a, p.bc, method="tail")
    m_alpha = wf(z)
    out = []
    for name, beta in (("neumann", BoundaryCondition.neumann(p.dim)),
                       ("random", BoundaryCondition.from_alpha(random_hermitian(rng, p.dim, 0.7)))):
        direct = wf.with_bc(beta)(z)
        mapped = lft_boundary_change(m_alpha, p.bc, beta)
        out.append(Check(f"lft_{name}", float(np.abs(direct - mapped).max()), _tol(tol, f"lft_{name}", 1e-6)))
    return out


def suite_parseval(p: Problem, rng, tol=None) -> list:
    wf = WeylFunction(p.V, p.a, p.bc, method="tail")
    lo = min(p.window[0], spectral_floor(p.V, p.a))
    meas = assemble_measure(wf, np.linspace(lo, p.window[1], p.cells + 1))
    x = np.linspace(p.a + 1.0, p.a + 2.0, 401)
    coef = _vectors(rng, 1, p.dim)[0]
    coef = coef / np.linalg.norm(coef)
    h = bump(x, p.a + 1.0, p.a + 2.0)[:, None] * coef[None, :]
    norm2 = simpson(np.sum(np.abs(h) ** 2, axis=1), x=x)
    tr = forward_transform(p.V, p.a, p.bc, h, x, measure=meas)
    pars = abs(model_inner_product(tr, tr).real - norm2) / norm2
    back = inverse_transform(tr, p.V, p.a, p.bc, x)
    rt = np.sqrt(simpson(np.sum(np.abs(back - h) ** 2, axis=1), x=x) / norm2)
    return [Check("parseval", pars, _tol(tol, "parseval", 5e-3)),
            Check("roundtrip", float(rt), _tol(tol, "roundtrip", 5e-3))]


def stone_sides(wf: WeylFunction, grid, f, g, F, lam1: float, lam2: float, *, cells: int = 600,
                eps_schedule=STONE_EPS, q: int = 8):
    """``(f, F(H) E((lam1, lam2]) g)`` from the measure and from resolvent quadrature."""
    meas = assemble_measure(wf, np.linspace(lam1, lam2, cells + 1))
    fh = forward_transform(wf.V, wf.a, wf.bc, f, grid, measure=meas)
    gh = forward_transform(wf.V, wf.a, wf.bc, g, grid, measure=meas)
    lam = meas.midpoints
    measure_side = np.einsum("ki,kij,kj->", fh.cells.conj(), meas.cell_mass * F(lam)[:, None, None], gh.cells)
    if meas.atom_locations.size:
        fa = F(meas.atom_locations)
        measure_side += np.einsum("ki,kij,kj->", fh.atoms.conj(), meas.atom_masses * fa[:, None, None], gh.atoms)
    nodes, weights = np.polynomial.legendre.leggauss(q)
    vals = []
    for eps in eps_schedule:
        edges = np.linspace(lam1, lam2, int(np.ceil((lam2 - lam1) / (4 * eps))) + 1)
        half = 0.5 * np.diff(edges)[:, None]
        L = (0.5 * (edges[:-1] + edges[1:])[:, None] + half * nodes).ravel()
        W = (half * weights).ravel()
        z = L + 1j * eps
        s1 = np.concatenate([resolvent_form_batch(wf, z[i:i + 256], grid, f, g) for i in range(0, z.size, 256)])
        s2 = np.concatenate([resolvent_form_batch(wf, z[i:i + 256], grid, g, f) for i in range(0, z.size, 256)])
        # S(lam - i eps) = conj((g, R(lam + i eps) f))
        vals.append(np.sum(W * F(L) * (s1 - s2.conj())) / (2j * np.pi))
    return complex(measure_side), complex(neville(np.asarray(eps_schedule), np.asarray(vals)))


def suite_stone(p: Problem, rng, tol=None) -> list:
    wf = WeylFunction(p.V, p.a, p.bc, method="tail")
    x = np.linspace(p.a + 1.0, p.a + 2.0, 201)
    c1, c2 = _vectors(rng, 2, p.dim)
    f = bump(x, p.a + 1.0, p.a + 2.0)[:, None] * c1
    g = (np.cos(3 * (x - p.a)) * bump(x, p.a + 1.0, p.a + 2.0))[:, None] * c2
    ms, rs = stone_sides(wf, x, f, g, lambda lam: lam ** 2, 1.0, 4.0)
    scale = max(abs(ms), 1e-12)
    return [Check("stone", abs(ms - rs) / scale, _tol(tol, "stone", 5e-3))]


def _rel_l2(u, v):
    return float(np.linalg.norm(u - v) / np.linalg.norm(v))


def suite_greens(p: Problem, rng, tol=None) -> list:
    wf = WeylFunction(p.V, p.a, p.bc, method="tail")
    z = 1 + 1j
    xs = np.linspace(p.a, p.a + 3.0, 13)
    G = greens_matrix(wf, z, xs, xs)
    Gc = greens_matrix(wf, np.conj(z), xs, xs)
    sym = float(np.abs(G - dagger(np.swapaxes(Gc, 0, 1))).max())
    jump = max(float(np.abs(greens_derivative_jump(wf, z, xp) + np.eye(p.dim)).max())
               for xp in (p.a + 0.7, p.a + 1.9))
    out = [Check("greens_symmetry", sym, _tol(tol, "greens_symmetry", 1e-7)),
           Check("greens_jump", jump, _tol(tol, "greens_jump", 1e-5))]
    # half-line resolvent against the finite-difference oracle
    D = discretize(p.V, (p.a, p.a + 30.0), p.bc, h=5e-3)
    worst = 0.0
    for k, c in enumerate(_vectors(rng, 3, p.dim)):
        u = np.exp(-4 * (D.grid - p.a - 1.0 - 0.5 * k) ** 2)[:, None] * c
        worst = max(worst, _rel_l2(resolvent_apply(wf, z, D.grid, u), oracle_resolvent(D, z, u)))
    out.append(Check("resolvent_half", worst, _tol(tol, "resolvent_half", 2e-3)))
    # full line: symmetry and oracle on a wide box
    flw = FullLineWeyl(p.V, p.a, p.bc)
    ys = np.linspace(p.a - 2.0, p.a + 2.0, 9)
    F = fullline_greens_matrix(flw, z, ys, ys)
    Fc = fullline_greens_matrix(flw, np.conj(z), ys, ys)
    out.append(Check("greens_symmetry_full", float(np.abs(F - dagger(np.swapaxes(Fc, 0, 1))).max()),
                     _tol(tol, "greens_symmetry_full", 1e-7)))
    D = discretize(p.V, (p.a - 30.0, p.a + 30.0), BoundaryCondition.dirichlet(p.dim), h=5e-3)
    worst = 0.0
    for k, c in enumerate(_vectors(rng, 3, p.dim)):
        u = np.exp(-4 * (D.grid - p.a + 1.0 - k) ** 2)[:, None] * c
        worst = max(worst, _rel_l2(fullline_resolvent_apply(flw, z, D.grid, u), oracle_resolvent(D, z, u)))
    out.append(Check("resolvent_full", worst, _tol(tol, "resolvent_full", 2e-3)))
    return out


SUITES = {
    "wronskian": suite_wronskian,
    "herglotz": suite_herglotz,
    "lft": suite_lft,
    "parseval": suite_parseval,
    "stone": suite_stone,
    "greens": suite_greens,
}


def run(problem: Problem, suite: str = "all", *, seed: int = 0, tol: dict | None = None) -> Report:
    """Run one suite (or ``"all"``) with a fresh generator per suite."""
    names = list(SUITES) if suite == "all" else [suite]
    for n in names:
        if n not in SUITES:
            raise KeyError(f"unknown suite {n!r}; choose from {', '.join(['all', *SUITES])}")
    report = Report()
    for n in names:
        rng = np.random.default_rng([seed, list(SUITES).index(n)])
        report.checks.extend(SUITES[n](problem, rng, tol))
    return report
