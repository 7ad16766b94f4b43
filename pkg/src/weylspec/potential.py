"""Matrix-valued potentials ``x -> V(x)`` (Hermitian ``n x n``).

All families are piecewise continuous and constant outside a compact set,
which is what the integrators and the tail-matched Weyl functions rely on.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigError, GridOutsideDomain
from .matfun import as_hermitian, from_pairs


class Potential:
    """Base class. Subclasses implement :meth:`_eval` on a 1-D array of points."""

    dim: int
    domain: tuple[float, float] = (-np.inf, np.inf)

    def __call__(self, x):
        xs = np.asarray(x, dtype=float)
        out = self._eval(np.atleast_1d(xs))
        return out[0] if xs.ndim == 0 else out

    def _eval(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def breakpoints(self) -> np.ndarray:
        """Points where ``V`` has a jump or a kink."""
        return np.empty(0)

    def pieces(self):
        """``(edges, values)`` if ``V`` is piecewise constant, else ``None``.

        ``edges`` has ``K+1`` entries starting at ``-inf`` and ending at ``+inf``;
        ``values[k]`` holds on ``[edges[k], edges[k+1])``.
        """
        return None

    def tail(self, side: str = "right"):
        """``(x_c, V_inf)`` such that ``V = V_inf`` beyond ``x_c`` on ``side``."""
        raise NotImplementedError

    def thresholds(self, side: str = "right") -> np.ndarray:
        return np.linalg.eigvalsh(self.tail(side)[1])

    def reflected(self, x0: float) -> "Potential":
        return Reflected(self, x0)

    def check_grid(self, grid) -> None:
        g = np.asarray(grid, dtype=float)
        lo, hi = self.domain
        if g.size and (g.min() < lo or g.max() > hi):
            raise GridOutsideDomain(f"grid [{g.min()}, {g.max()}] leaves domain ({lo}, {hi})")

    def to_dict(self) -> dict:
        raise NotImplementedError


class PiecewiseConstant(Potential):
    """Potential given by constant Hermitian blocks between sorted edges."""

    def __init__(self, edges, values):
        edges = np.asarray(edges, dtype=float)
        values = np.array([as_hermitian(v) for v in values])
        if edges[0] != -np.inf or edges[-1] != np.inf or len(values) != len(edges) - 1:
            raise ConfigError("edges must run from -inf to inf with one value per piece")
        if np.any(np.diff(edges) <= 0):
            raise ConfigError("edges must be strictly increasing")
        self._edges = edges
        self._values = values
        self.dim = values.shape[1]

    def _eval(self, x):
        k = np.searchsorted(self._edges, x, side="right") - 1
        return self._values[np.clip(k, 0, len(self._values) - 1)]

    def breakpoints(self):
        return self._edges[1:-1].copy()

    def pieces(self):
        return self._edges, self._values

    def tail(self, side="right"):
        if side == "right":
            return (self._edges[-2] if len(self._edges) > 2 else -np.inf), self._values[-1]
        return (self._edges[1] if len(self._edges) > 2 else np.inf), self._values[0]

    def to_dict(self):
        return {"family": "piecewise", "edges": _finite_list(self._edges),
                "values": [_mat_to_list(v) for v in self._values]}


class Free(PiecewiseConstant):
    def __init__(self, n: int = 1):
        super().__init__([-np.inf, np.inf], [np.zeros((n, n))])

    def to_dict(self):
        return {"family": "free", "dim": self.dim}


class ConstantMatrix(PiecewiseConstant):
    def __init__(self, v0):
        super().__init__([-np.inf, np.inf], [np.atleast_2d(v0)])

    def to_dict(self):
        return {"family": "constant", "V0": _mat_to_list(self._values[0])}


def _merge_pieces(channel_edges: list[np.ndarray], value_at) -> tuple[np.ndarray, list]:
    pts = np.unique(np.concatenate([np.empty(0)] + channel_edges))
    edges = np.concatenate([[-np.inf], pts, [np.inf]])
    mids = [(pts[0] - 1.0) if len(pts) else 0.0]
    mids += [0.5 * (pts[i] + pts[i + 1]) for i in range(len(pts) - 1)]
    if len(pts):
        mids.append(pts[-1] + 1.0)
    return edges, [value_at(m) for m in mids]


class DiagonalWells(PiecewiseConstant):
    """Square wells per channel: ``V_jj = background_j - depth_j`` on ``|x - c_j| < w_j/2``."""

    def __init__(self, depths, widths, centers, background=None):
        self.depths = np.atleast_1d(np.asarray(depths, dtype=float))
        n = self.depths.size
        self.widths = np.broadcast_to(np.asarray(widths, dtype=float), (n,)).copy()
        self.centers = np.broadcast_to(np.asarray(centers, dtype=float), (n,)).copy()
        self.background = (np.zeros(n) if background is None
                           else np.broadcast_to(np.asarray(background, dtype=float), (n,)).copy())
        if np.any(self.widths < 0):
            raise ConfigError("well widths must be nonnegative")
        lo = self.centers - 0.5 * self.widths
        hi = self.centers + 0.5 * self.widths
        ch_edges = [np.array([lo[j], hi[j]]) for j in range(n) if self.widths[j] > 0 and self.depths[j] != 0]

        def value_at(x):
            inside = (x > lo) & (x < hi)
            return np.diag(self.background - np.where(inside, self.depths, 0.0))

        edges, values = _merge_pieces(ch_edges, value_at)
        super().__init__(edges, values)

    def to_dict(self):
        return {"family": "wells", "depths": self.depths.tolist(), "widths": self.widths.tolist(),
                "centers": self.centers.tolist(), "background": self.background.tolist()}


class CoupledChannel(PiecewiseConstant):
    """``c (E_12 + E_21)`` plus a diagonal part (constants or :class:`DiagonalWells`)."""

    def __init__(self, coupling: float, diagonal=None, n: int = 2):
        if isinstance(diagonal, DiagonalWells):
            base = diagonal
        else:
            d = np.zeros(n) if diagonal is None else np.atleast_1d(np.asarray(diagonal, dtype=float))
            base = ConstantMatrix(np.diag(d))
        if base.dim < 2:
            raise ConfigError("coupled-channel potential needs n >= 2")
        self.coupling = float(coupling)
        self.diagonal = base
        off = np.zeros((base.dim, base.dim))
        off[0, 1] = off[1, 0] = self.coupling
        edges, vals = base.pieces()
        super().__init__(edges, [v + off for v in vals])

    def to_dict(self):
        return {"family": "coupled", "coupling": self.coupling, "diagonal": self.diagonal.to_dict()}


class SampledTable(Potential):
    """Piecewise-linear interpolation of Hermitian samples; clamped outside the table."""

    def __init__(self, x, samples):
        self.x = np.asarray(x, dtype=float)
        if self.x.ndim != 1 or self.x.size < 1 or np.any(np.diff(self.x) <= 0):
            raise ConfigError("table grid must be strictly increasing")
        s = np.asarray(samples, dtype=complex)
        if s.ndim == 1:
            s = s[:, None, None]
        if s.shape[0] != self.x.size:
            raise ConfigError("one sample per grid point required")
        self.samples = np.array([as_hermitian(v) for v in s])
        self.dim = self.samples.shape[1]

    def _eval(self, x):
        xc = np.clip(x, self.x[0], self.x[-1])
        if self.x.size == 1:
            return np.broadcast_to(self.samples[0], (x.size, self.dim, self.dim)).copy()
        k = np.clip(np.searchsorted(self.x, xc, side="right") - 1, 0, self.x.size - 2)
        t = ((xc - self.x[k]) / (self.x[k + 1] - self.x[k]))[:, None, None]
        return (1 - t) * self.samples[k] + t * self.samples[k + 1]

    def breakpoints(self):
        return self.x.copy()

    def tail(self, side="right"):
        return (self.x[-1], self.samples[-1]) if side == "right" else (self.x[0], self.samples[0])

    def to_dict(self):
        return {"family": "table", "x": self.x.tolist(),
                "samples": [_mat_to_list(v) for v in self.samples]}


class Reflected(Potential):
    """``x -> V(2 x0 - x)``."""

    def __init__(self, base: Potential, x0: float):
        self.base, self.x0 = base, float(x0)
        self.dim = base.dim
        lo, hi = base.domain
        self.domain = (2 * self.x0 - hi, 2 * self.x0 - lo)

    def _eval(self, x):
        return self.base._eval(2 * self.x0 - x)

    def breakpoints(self):
        return np.sort(2 * self.x0 - self.base.breakpoints())

    def pieces(self):
        p = self.base.pieces()
        if p is None:
            return None
        edges, vals = p
        return (2 * self.x0 - edges)[::-1], vals[::-1]

    def tail(self, side="right"):
        xc, v = self.base.tail("left" if side == "right" else "right")
        return 2 * self.x0 - xc, v

    def to_dict(self):
        return {"family": "reflected", "x0": self.x0, "base": self.base.to_dict()}


def _mat_to_list(m):
    m = np.asarray(m)
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def _list_to_mat(rows):
    a = np.asarray(rows, dtype=float)
    if a.ndim == 3 and a.shape[-1] == 2:
        return from_pairs(a)
    return a.astype(complex)


def _finite_list(edges):
    return [None if not np.isfinite(e) else float(e) for e in edges]


def from_dict(d: dict) -> Potential:
    """Build a potential from its JSON description (see README for the schema)."""
    try:
        fam = d["family"]
        if fam == "free":
            return Free(int(d.get("dim", 1)))
        if fam == "constant":
            return ConstantMatrix(_list_to_mat(d["V0"]))
        if fam == "wells":
            return DiagonalWells(d["depths"], d["widths"], d["centers"], d.get("background"))
        if fam == "coupled":
            diag = d.get("diagonal")
            if isinstance(diag, dict):
                inner = from_dict(diag)
                if isinstance(inner, ConstantMatrix):
                    diag = np.real(np.diag(inner(0.0)))
                else:
                    diag = inner
            return CoupledChannel(d["coupling"], diag, int(d.get("dim", 2)))
        if fam == "table":
            return SampledTable(d["x"], [_list_to_mat(s) for s in d["samples"]])
        if fam == "piecewise":
            edges = [(-np.inf if i == 0 else np.inf) if e is None else e for i, e in enumerate(d["edges"])]
            return PiecewiseConstant(edges, [_list_to_mat(v) for v in d["values"]])
        if fam == "reflected":
            return Reflected(from_dict(d["base"]), d["x0"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad potential description: {exc}") from exc
    raise ConfigError(f"unknown potential family {fam!r}")
