"""Matrix-valued Herglotz functions: Stieltjes inversion, atoms, Nevanlinna data.

An *evaluator* is any callable ``M(z)`` accepting an array of complex points
and returning matrices of shape ``z.shape + (n, n)``; scalar-valued callables
are promoted to ``1 x 1``. Evaluators may expose

* ``boundary_values`` (bool): ``M(lambda)`` at real ``lambda`` returns the
  boundary value ``M(lambda + i0)``;
* ``thresholds()``: real points where the density may have square-root behaviour.

Measures are stored as cell masses on a partition ``(l_k, l_{k+1}]`` with the
point masses (atoms) kept in a separate list.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .config import DEFAULT
from .errors import KernelMismatch, NotHerglotz, PartitionMismatch
from .matfun import dagger, from_pairs, im_part, re_part

EPS_SCHEDULE = (1e-1, 5e-2, 2.5e-2, 1.25e-2)
ETA_SCHEDULE = (1e2, 4e2, 1.6e3, 6.4e3)


def evaluate(M, z, chunk: int = 4096) -> np.ndarray:
    """Evaluate ``M`` on an array of points, promoting scalar output to ``1 x 1``."""
    z = np.asarray(z, dtype=complex)
    flat = z.reshape(-1)
    parts = []
    for i in range(0, max(flat.size, 1), chunk):
        zc = flat[i:i + chunk]
        try:
            v = np.asarray(M(zc), dtype=complex)
        except (TypeError, ValueError):
            v = np.array([np.asarray(M(complex(t)), dtype=complex) for t in zc])
        if v.shape == zc.shape:
            v = v[:, None, None]
        elif v.ndim == 1 and zc.size == 1:
            v = v.reshape(1, 1, 1)
        elif v.ndim == 2 and zc.size == 1:
            v = v[None]
        parts.append(v)
    out = np.concatenate(parts) if parts else np.empty((0, 1, 1), complex)
    return out.reshape(z.shape + out.shape[-2:])


def _thresholds(M) -> np.ndarray:
    f = getattr(M, "thresholds", None)
    return np.sort(np.atleast_1d(f())) if callable(f) else np.empty(0)


def neville(xs, ys, x0: float = 0.0):
    """Polynomial extrapolation of ``ys`` (leading axis) to ``x0``."""
    xs = np.asarray(xs, dtype=float)
    p = [np.asarray(y, dtype=complex) for y in ys]
    m = len(p)
    for k in range(1, m):
        for i in range(m - k):
            p[i] = ((x0 - xs[i + k]) * p[i] + (xs[i] - x0) * p[i + 1]) / (xs[i] - xs[i + k])
    return p[0]


def psd_project(m, clip: float | None = None, hard: float | None = None, what: str = "matrix"):
    """Hermitian part with negative eigenvalues zeroed; errors beyond ``hard`` (relative)."""
    clip = DEFAULT.psd_clip if clip is None else clip
    hard = DEFAULT.psd_hard if hard is None else hard
    h = re_part(np.asarray(m, dtype=complex))
    w, u = np.linalg.eigh(h)
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    if w.size and w.min() < -hard * scale:
        raise NotHerglotz(f"{what} has eigenvalue {w.min():.3e}")
    w = np.where(w < 0, 0.0, w)
    return (u * w) @ u.conj().T


# -- measures ---------------------------------------------------------------

@dataclass
class MatrixMeasure:
    """Nonnegative ``n x n`` matrix measure: cell masses on ``(l_k, l_{k+1}]`` plus atoms."""

    breakpoints: np.ndarray
    cell_mass: np.ndarray                 # (K, n, n)
    atom_locations: np.ndarray = field(default_factory=lambda: np.empty(0))
    atom_masses: np.ndarray | None = None  # (A, n, n)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.breakpoints = np.asarray(self.breakpoints, dtype=float)
        self.cell_mass = np.asarray(self.cell_mass, dtype=complex)
        if self.breakpoints.size and np.any(np.diff(self.breakpoints) <= 0):
            raise PartitionMismatch("breakpoints must be strictly increasing")
        if self.cell_mass.shape[0] != max(self.breakpoints.size - 1, 0):
            raise PartitionMismatch("one mass per cell required")
        self.atom_locations = np.asarray(self.atom_locations, dtype=float).reshape(-1)
        n = self.dim
        if self.atom_masses is None:
            self.atom_masses = np.zeros((0, n, n), dtype=complex)
        self.atom_masses = np.asarray(self.atom_masses, dtype=complex).reshape(-1, n, n)

    @property
    def dim(self) -> int:
        return self.cell_mass.shape[-1]

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.breakpoints[1:] + self.breakpoints[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def total(self) -> np.ndarray:
        return self.cell_mass.sum(axis=0) + self.atom_masses.sum(axis=0)

    def mass(self, lo: float, hi: float) -> np.ndarray:
        """Mass of ``(lo, hi]``; ``lo``/``hi`` must be breakpoints."""
        bp = self.breakpoints
        i, j = np.searchsorted(bp, [lo, hi])
        if i >= bp.size or j >= bp.size or bp[i] != lo or bp[j] != hi:
            raise PartitionMismatch(f"({lo}, {hi}] is not a union of cells")
        sel = (self.atom_locations > lo) & (self.atom_locations <= hi)
        return self.cell_mass[i:j].sum(axis=0) + self.atom_masses[sel].sum(axis=0)

    def merged(self, k: int) -> "MatrixMeasure":
        """Merge cells ``k`` and ``k + 1``."""
        bp = np.delete(self.breakpoints, k + 1)
        cm = np.concatenate([self.cell_mass[:k], self.cell_mass[k:k + 1] + self.cell_mass[k + 1:k + 2],
                             self.cell_mass[k + 2:]])
        return MatrixMeasure(bp, cm, self.atom_locations, self.atom_masses, dict(self.metadata))

    def check(self, tol: float = 1e-9) -> None:
        for what, ms in (("cell mass", self.cell_mass), ("atom", self.atom_masses)):
            if ms.size == 0:
                continue
            if np.abs(ms - dagger(ms)).max() > tol * max(1.0, np.abs(ms).max()):
                raise NotHerglotz(f"{what} not Hermitian")
            w = np.linalg.eigvalsh(re_part(ms))
            if w.min() < -tol * max(1.0, np.abs(w).max()):
                raise NotHerglotz(f"{what} not PSD ({w.min():.3e})")

    def to_dict(self) -> dict:
        def mats(a):
            return [[[[float(v.real), float(v.imag)] for v in row] for row in m] for m in a]
        return {
            "dim": self.dim,
            "breakpoints": [float(b) for b in self.breakpoints],
            "cell_mass": mats(self.cell_mass),
            "atoms": [{"location": float(l), "mass": mats([m])[0]}
                      for l, m in zip(self.atom_locations, self.atom_masses)],
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "MatrixMeasure":
        n = int(d["dim"])

        def mats(a):
            arr = np.asarray(a, dtype=float).reshape(-1, n, n, 2)
            return from_pairs(arr)
        atoms = d.get("atoms", [])
        return cls(np.asarray(d["breakpoints"], dtype=float), mats(d["cell_mass"]),
                   np.array([a["location"] for a in atoms], dtype=float),
                   mats([a["mass"] for a in atoms]) if atoms else np.zeros((0, n, n), complex),
                   dict(d.get("metadata", {})))

    @classmethod
    def from_json(cls, s: str) -> "MatrixMeasure":
        return cls.from_dict(json.loads(s))


@dataclass
class ControlMeasure:
    """Scalar measure ``mu(B) = sum_j 2^{-j} (e_j, Omega(B) e_j)`` with the null sets of ``Omega``."""

    measure: MatrixMeasure

    @property
    def weights(self) -> np.ndarray:
        return 2.0 ** -np.arange(1, self.measure.dim + 1)

    def cells(self) -> np.ndarray:
        d = np.real(np.einsum("kii->ki", self.measure.cell_mass))
        return d @ self.weights

    def atoms(self) -> np.ndarray:
        d = np.real(np.einsum("kii->ki", self.measure.atom_masses))
        return d @ self.weights

    def same_null_sets(self, tol: float = 1e-12) -> bool:
        mu_zero = self.cells() <= tol
        om_zero = np.abs(self.measure.cell_mass).max(axis=(1, 2), initial=0.0) <= tol * 2 ** self.measure.dim
        return bool(np.all(mu_zero == om_zero))


# -- inversion --------------------------------------------------------------

def _gauss(lo, hi, q):
    t, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (hi - lo) * t + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def _im_samples(M, lam, eps, subtract=None):
    vals = evaluate(M, lam + 1j * eps)
    if subtract is not None:
        vals = vals - subtract(lam + 1j * eps)
    imv = im_part(vals)
    w = np.linalg.eigvalsh(imv) if imv.size else np.zeros(1)
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    if w.size and w.min() < -DEFAULT.psd_hard * scale:
        raise NotHerglotz(f"Im M has eigenvalue {w.min():.3e} at some sample")
    return imv


def _poisson_integral(M, lam1, lam2, eps, quad_points, subtract=None):
    # panels no wider than 4 eps so the smoothed atoms are resolved
    panels = max(1, int(np.ceil((lam2 - lam1) / (4 * eps))))
    edges = np.linspace(lam1, lam2, panels + 1)
    t, w = np.polynomial.legendre.leggauss(quad_points)
    half = 0.5 * np.diff(edges)
    nodes = (edges[:-1, None] + edges[1:, None]) * 0.5 + half[:, None] * t[None, :]
    weights = half[:, None] * w[None, :]
    imv = _im_samples(M, nodes.reshape(-1), eps, subtract)
    return np.einsum("k,kij->ij", weights.reshape(-1), imv) / np.pi


def stieltjes_invert(M, lam1: float, lam2: float, eps_schedule=EPS_SCHEDULE, quad_points: int = 64,
                     order: int | None = None, subtract=None, project: bool = True) -> np.ndarray:
    """``pi^{-1} int_{lam1}^{lam2} Im M(lambda + i eps) d lambda`` extrapolated to ``eps = 0``.

    ``order`` is the degree of the extrapolating polynomial in ``eps``
    (default: use the whole schedule). ``subtract`` is an optional callable
    removed from ``M`` before integration (used to split off known atoms).
    """
    if not lam1 < lam2:
        raise ValueError("need lam1 < lam2")
    eps = np.asarray(eps_schedule, dtype=float)
    order = eps.size - 1 if order is None else order
    vals = [_poisson_integral(M, lam1, lam2, e, quad_points, subtract) for e in eps]
    res = neville(eps[: order + 1], vals[: order + 1]) if order > 0 else vals[-1]
    return psd_project(res, what="extrapolated mass") if project else re_part(res)


def point_mass(M, lam: float, eps_schedule=(1e-4, 5e-5, 2.5e-5, 1.25e-5), tol_re: float = 1e-4) -> np.ndarray:
    """``lim eps Im M(lambda + i eps)`` by polynomial extrapolation in ``eps``.

    Warns when ``eps Re M(lambda + i eps)`` stays above ``tol_re`` (relative to
    the mass) for every ``eps`` in the schedule.
    """
    eps = np.asarray(eps_schedule, dtype=float)
    vals = evaluate(M, lam + 1j * eps)
    im = np.array([e * im_part(v) for e, v in zip(eps, vals)])
    re = np.array([e * re_part(v) for e, v in zip(eps, vals)])
    w = np.linalg.eigvalsh(im)
    if w.min() < -DEFAULT.psd_hard * max(1.0, np.abs(w).max()):
        raise NotHerglotz(f"Im M negative near lambda={lam}")
    # a small location error d adds w d / eps to eps Re M, so extrapolating it
    # would amplify noise; the smallest raw value is the honest diagnostic
    scale = max(1.0, float(np.abs(im).max()))
    if min(float(np.abs(r).max()) for r in re) > tol_re * scale:
        warnings.warn(f"eps Re M(lambda + i eps) does not vanish at lambda={lam}", RuntimeWarning)
    return psd_project(neville(eps, im), what="point mass")


def asymptotic_linear_term(M, eta_schedule=ETA_SCHEDULE) -> np.ndarray:
    """``lim M(i eta) / (i eta)``, extrapolated in ``eta^{-1/2}``."""
    eta = np.asarray(eta_schedule, dtype=float)
    vals = evaluate(M, 1j * eta)
    q = np.array([v / (1j * e) for v, e in zip(vals, eta)])
    D = re_part(neville(eta ** -0.5, q))
    return psd_project(D, hard=1e-6, what="linear term")


def nevanlinna_function(measure: MatrixMeasure, C, D):
    """Evaluator ``C + D z + int dOmega [1/(lambda - z) - lambda/(1 + lambda^2)]`` (cell midpoints)."""
    C = np.atleast_2d(np.asarray(C, dtype=complex))
    D = np.atleast_2d(np.asarray(D, dtype=complex))
    lam = np.concatenate([measure.midpoints, measure.atom_locations])
    mass = np.concatenate([measure.cell_mass, measure.atom_masses])

    def M(z):
        z = np.asarray(z, dtype=complex)
        k = 1.0 / (lam[None, :] - z.reshape(-1, 1)) - (lam / (1 + lam ** 2))[None, :]
        out = C + D * z.reshape(-1, 1, 1) + np.einsum("zk,kij->zij", k, mass)
        return out.reshape(z.shape + C.shape)
    return M


def nevanlinna_residual(M, measure: MatrixMeasure, C, D, test_points) -> float:
    zs = np.asarray(list(test_points), dtype=complex)
    rec = nevanlinna_function(measure, C, D)(zs)
    return float(np.abs(evaluate(M, zs) - rec).max())


def herglotz_kernel_decomposition(M, z_samples, tol: float = 1e-8, agree: float = 1e-6):
    """Common kernel of ``Im M(z)`` over the samples: ``(dimension, projector)``."""
    zs = np.asarray(list(z_samples), dtype=complex)
    if zs.size < 2 or np.any(zs.imag <= 0):
        raise ValueError("need at least two samples in the upper half-plane")
    projs = []
    for v in evaluate(M, zs):
        w, u = np.linalg.eigh(im_part(v))
        ker = u[:, w < tol]
        projs.append(ker @ ker.conj().T)
    dims = [int(round(np.trace(p).real)) for p in projs]
    if len(set(dims)) != 1 or any(np.abs(p - projs[0]).max() > agree for p in projs[1:]):
        raise KernelMismatch(f"kernel dimensions {dims} or projectors differ across samples")
    n = projs[0].shape[0]
    if dims[0] == n:
        warnings.warn("Im M vanishes identically: M is a constant Hermitian function", RuntimeWarning)
    return dims[0], projs[0]


# -- measure assembly -------------------------------------------------------

def _cell_rules(lo, hi, thr, q):
    """Quadrature nodes/weights on ``[lo, hi]``, graded at thresholds via ``lambda = t +- u^2``."""
    cuts = [lo] + [t for t in thr if lo < t < hi] + [hi]
    X, Wt = [], []
    for p, r in zip(cuts[:-1], cuts[1:]):
        at_p = np.any(np.isclose(thr, p, rtol=0, atol=1e-12 * max(1, abs(p)))) if len(thr) else False
        at_r = np.any(np.isclose(thr, r, rtol=0, atol=1e-12 * max(1, abs(r)))) if len(thr) else False
        segs = [(p, r, at_p, at_r)]
        if at_p and at_r:
            mid = 0.5 * (p + r)
            segs = [(p, mid, True, False), (mid, r, False, True)]
        for s0, s1, g0, g1 in segs:
            if g0 or g1:
                u, w = _gauss(0.0, np.sqrt(s1 - s0), q)
                lam = s0 + u ** 2 if g0 else s1 - u ** 2
                X.append(lam)
                Wt.append(2 * u * w)
            else:
                x, w = _gauss(s0, s1, q)
                X.append(x)
                Wt.append(w)
    return np.concatenate(X), np.concatenate(Wt)


def find_atoms(M, lo: float, hi: float, spacing: float, *, eps_final: float = 1e-6,
               atom_tol: float = 1e-7, samples=None):
    """Locate atoms of the measure of ``M`` in ``(lo, hi)``.

    ``g(lambda) = eps lambda_max(Im M(lambda + i eps))`` is scanned with
    ``eps = spacing``; local maxima are refined while ``eps`` shrinks by 8 per
    level and are kept when ``g`` no longer depends on ``eps`` and
    :func:`point_mass` confirms a nonzero weight.
    """
    lam = np.arange(lo + 0.5 * spacing, hi, spacing) if samples is None else np.asarray(samples)
    if lam.size < 3:
        return np.empty(0), np.zeros((0,) + evaluate(M, np.array([1j])).shape[1:], complex)
    eps = spacing

    def g(x, e):
        v = evaluate(M, np.atleast_1d(x) + 1j * e)
        return e * np.linalg.eigvalsh(im_part(v))[..., -1]
    gv = g(lam, eps)
    cand = []
    for k in range(1, lam.size - 1):
        if gv[k] >= gv[k - 1] and gv[k] > gv[k + 1] and gv[k] > atom_tol:
            nb = np.concatenate([gv[max(0, k - 4):max(0, k - 2)], gv[k + 3:k + 5]])
            if nb.size == 0 or gv[k] > 1.5 * nb.max():
                cand.append(lam[k])
    locs, masses = [], []
    for c in cand:
        x, e = c, eps
        while e > eps_final:
            span = 3 * e
            e = e / 8
            grid = np.linspace(x - span, x + span, 49)
            k = int(np.argmax(g(grid, e)))
            step = grid[1] - grid[0]
            r = minimize_scalar(lambda t: -g(t, e)[0], bounds=(grid[k] - step, grid[k] + step),
                                method="bounded", options={"xatol": e * 1e-3})
            x = float(r.x)
        # eps Im M is flat in eps at an atom; a threshold singularity decays like eps^(1/2)
        flat = g(x, 8 * e)[0] > 0.8 * g(x, 64 * e)[0]
        w = point_mass(M, x, eps_schedule=(64 * e, 32 * e, 16 * e, 8 * e)) if flat else None
        if flat and np.linalg.eigvalsh(w).max() > atom_tol:
            locs.append(x)
            masses.append(w)
    n = evaluate(M, np.array([1j])).shape[-1]
    return np.array(locs), (np.array(masses) if masses else np.zeros((0, n, n), complex))


def assemble_measure(M, partition, *, quad_points: int | None = None, eps_schedule=EPS_SCHEDULE,
                     atoms: bool | tuple = True, atom_tol: float = 1e-7) -> MatrixMeasure:
    """Measure of the Herglotz evaluator ``M`` on ``partition``.

    With boundary values the density ``Im M(lambda + i0) / pi`` is integrated
    directly, graded at thresholds. Otherwise each cell uses
    :func:`stieltjes_invert` with the detected atoms' poles removed first.
    ``atoms`` may be ``False`` (no detection) or a precomputed ``(locations, masses)``.
    """
    bp = np.asarray(partition, dtype=float)
    boundary = bool(getattr(M, "boundary_values", False))
    thr = _thresholds(M)
    if bp.size < 2:
        n = evaluate(M, np.array([1j])).shape[-1]
        return MatrixMeasure(bp, np.zeros((0, n, n), complex), metadata={"boundary_values": boundary})
    if atoms is True:
        spacing = float(np.min(np.diff(bp)))
        locs, masses = find_atoms(M, bp[0], bp[-1], spacing, atom_tol=atom_tol)
    elif atoms is False:
        locs, masses = np.empty(0), None
    else:
        locs, masses = atoms
    n = evaluate(M, np.array([1j])).shape[-1]
    masses = np.zeros((0, n, n), complex) if masses is None else np.asarray(masses, complex)
    meta = {"boundary_values": boundary}
    if boundary:
        q = 8 if quad_points is None else quad_points
        nodes, weights, owner = [], [], []
        for k in range(bp.size - 1):
            x, w = _cell_rules(bp[k], bp[k + 1], thr, q)
            nodes.append(x)
            weights.append(w)
            owner.append(np.full(x.size, k))
        nodes, weights, owner = map(np.concatenate, (nodes, weights, owner))
        imv = im_part(evaluate(M, nodes.astype(complex)))
        cm = np.zeros((bp.size - 1, n, n), complex)
        np.add.at(cm, owner, weights[:, None, None] * imv / np.pi)
        meta.update(quad_points=q, thresholds=[float(t) for t in thr])
    else:
        q = 64 if quad_points is None else quad_points

        def poles(z):
            z = np.asarray(z, dtype=complex)
            if locs.size == 0:
                return np.zeros(z.shape + (n, n), complex)
            return np.einsum("zk,kij->zij", 1.0 / (locs[None, :] - z.reshape(-1, 1)), masses).reshape(
                z.shape + (n, n))
        cm = np.array([stieltjes_invert(M, bp[k], bp[k + 1], eps_schedule, q, subtract=poles, project=False)
                       for k in range(bp.size - 1)])
        meta.update(quad_points=q, eps_schedule=[float(e) for e in eps_schedule],
                    order=len(eps_schedule) - 1)
    cm = np.array([psd_project(c, what="cell mass") for c in cm]) if cm.size else cm.reshape(0, n, n)
    inside = (locs > bp[0]) & (locs <= bp[-1]) if locs.size else np.zeros(0, bool)
    return MatrixMeasure(bp, cm, locs[inside], masses[inside], meta)
