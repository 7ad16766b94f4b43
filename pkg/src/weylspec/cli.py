"""Command-line front end.

Every subcommand reads a JSON problem description (``--config``), writes its
results into ``--out`` and exits with 0 (ok), 1 (verification failed),
2 (usage or configuration error) or 3 (numerical non-convergence).
"""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np
from scipy.integrate import simpson
from threadpoolctl import threadpool_limits

from . import verify as _verify
from .errors import (ConfigError, GridMismatch, GridOutsideDomain, NonHermitian, PartitionMismatch,
                     WeylError)
from .expansion import forward_transform, inverse_transform, support_and_spectrum
from .fullline import FullLineWeyl, fullline_greens_matrix
from .halfline import Truncation, WeylFunction, greens_matrix
from .herglotz import EPS_SCHEDULE, MatrixMeasure, assemble_measure
from .matfun import BoundaryCondition
from .potential import Potential, from_dict

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

TOP_KEYS = {"potential", "dim", "alpha", "geometry", "numerics", "z", "points", "seed"}
GEOMETRY_KEYS = {"kind", "a", "x0"}
NUMERIC_KEYS = {"method", "truncation_tol", "window", "cells", "eps_schedule", "quad_points"}
POINT_KEYS = {"x", "xp"}


@dataclass
class ProblemConfig:
    potential: Potential
    bc: BoundaryCondition
    kind: str = "half"
    a: float = 0.0
    method: str = "tail"
    truncation_tol: float = 1e-8
    window: tuple | None = None
    cells: int = 4000
    eps_schedule: tuple = EPS_SCHEDULE
    quad_points: int | None = None
    z: list = field(default_factory=list)
    x: list = field(default_factory=list)
    xp: list = field(default_factory=list)
    seed: int = 0

    @property
    def dim(self) -> int:
        return self.potential.dim

    def weyl(self) -> WeylFunction:
        return WeylFunction(self.potential, self.a, self.bc, method=self.method,
                            truncation=Truncation(tol=self.truncation_tol))

    def full(self) -> FullLineWeyl:
        return FullLineWeyl(self.potential, self.a, self.bc, method=self.method,
                            truncation=Truncation(tol=self.truncation_tol))

    def partition(self) -> np.ndarray:
        lo, hi = self.window if self.window is not None else (
            _verify.spectral_floor(self.potential, self.a), 400.0)
        if hi <= lo:
            return np.array([float(lo)])
        return np.linspace(lo, hi, self.cells + 1)

    def problem(self) -> _verify.Problem:
        win = tuple(self.window) if self.window is not None else (0.0, 400.0)
        return _verify.Problem(self.potential, self.a, self.bc, win, self.cells)


def _complex(v, what):
    if isinstance(v, (int, float, complex)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
        return complex(v[0], v[1])
    raise ConfigError(f"{what}: expected a number or an [re, im] pair, got {v!r}")


def _matrix(rows, what):
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ConfigError(f"{what}: expected a nested row-major array")
    m = np.array([[_complex(v, what) for v in r] for r in rows])
    if m.ndim != 2:
        raise ConfigError(f"{what}: ragged matrix")
    return m


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(extra)}")


def parse_config(d: dict) -> ProblemConfig:
    """Validate a configuration document and build the module inputs."""
    _check_keys(d, TOP_KEYS, "config")
    if "potential" not in d:
        raise ConfigError("config: 'potential' is required")
    V = from_dict(d["potential"])
    n = V.dim
    if "dim" in d and int(d["dim"]) != n:
        raise ConfigError(f"config: dim {d['dim']} does not match the potential ({n})")
    alpha = d.get("alpha", "dirichlet")
    if alpha == "dirichlet":
        bc = BoundaryCondition.dirichlet(n)
    elif alpha == "neumann":
        bc = BoundaryCondition.neumann(n)
    else:
        a = _matrix(alpha, "alpha")
        if a.shape != (n, n):
            raise ConfigError(f"alpha has shape {a.shape}, expected {(n, n)}")
        bc = BoundaryCondition.from_alpha(a)
    geo = d.get("geometry", {})
    _check_keys(geo, GEOMETRY_KEYS, "geometry")
    kind = geo.get("kind", "half")
    if kind not in ("half", "full"):
        raise ConfigError(f"geometry.kind must be 'half' or 'full', got {kind!r}")
    a = float(geo.get("x0" if kind == "full" else "a", geo.get("a", geo.get("x0", 0.0))))
    num = d.get("numerics", {})
    _check_keys(num, NUMERIC_KEYS, "numerics")
    method = num.get("method", "tail")
    if method not in ("tail", "truncation"):
        raise ConfigError(f"numerics.method must be 'tail' or 'truncation', got {method!r}")
    window = num.get("window")
    if window is not None:
        if len(window) != 2:
            raise ConfigError("numerics.window must be [lo, hi]")
        window = (float(window[0]), float(window[1]))
    cells = int(num.get("cells", 4000))
    if cells < 1:
        raise ConfigError("numerics.cells must be positive")
    pts = d.get("points", {})
    _check_keys(pts, POINT_KEYS, "points")
    return ProblemConfig(
        V, bc, kind, a, method, float(num.get("truncation_tol", 1e-8)), window, cells,
        tuple(float(e) for e in num.get("eps_schedule", EPS_SCHEDULE)),
        None if num.get("quad_points") is None else int(num["quad_points"]),
        [_complex(z, "z") for z in d.get("z", [])],
        [float(x) for x in pts.get("x", [])], [float(x) for x in pts.get("xp", [])],
        int(d.get("seed", 0)))


def load_config(path) -> ProblemConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(doc)


# ---------------------------------------------------------------- output helpers


def fmt(v) -> str:
    """Shortest round-trip representation of a float."""
    return repr(float(v))


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(r if isinstance(r, str) else fmt(r) for r in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _entries(prefix, m):
    n = m.shape[-1]
    head = [f"{prefix}{i}{j}_{p}" for i in range(n) for j in range(n) for p in ("re", "im")]
    vals = [v for i in range(n) for j in range(n) for v in (m[i, j].real, m[i, j].imag)]
    return head, vals


def density_rows(meas: MatrixMeasure):
    """``(lambda, kind, eigenvalues...)``: mass/width for cells, mass for atoms."""
    k = meas.dim
    herm = lambda a: 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))  # noqa: E731
    rows = []
    if meas.cell_mass.size:
        dens = np.linalg.eigvalsh(herm(meas.cell_mass) / meas.widths[:, None, None])
        rows += [[lam, "cell", *w] for lam, w in zip(meas.midpoints, dens)]
    if meas.atom_masses.size:
        w = np.linalg.eigvalsh(herm(meas.atom_masses))
        rows += [[lam, "atom", *ww] for lam, ww in zip(meas.atom_locations, w)]
    return ["lambda", "kind", *[f"eig{i}" for i in range(k)]], rows


def read_signal(path, n: int):
    """CSV with header ``x,re0,im0,...``; returns ``(x, h)`` with ``h`` of shape ``(G, n)``."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read signal {path}: {exc}") from exc
    if data.shape[1] != 1 + 2 * n:
        raise ConfigError(f"signal has {data.shape[1] - 1} value columns, expected {2 * n} for dimension {n}")
    x = data[:, 0]
    if x.size < 3 or np.any(np.diff(x) <= 0):
        raise ConfigError("signal grid must be increasing with at least 3 points")
    return x, data[:, 1::2] + 1j * data[:, 2::2]


def _z_list(cfg: ProblemConfig, zs):
    z = [_complex(json.loads(s) if s.strip().startswith("[") else complex(s.replace(" ", "")), "--z")
         for s in zs] if zs else list(cfg.z)
    if not z:
        raise ConfigError("no evaluation points: give --z or a 'z' list in the config")
    for v in z:
        if v.imag == 0:
            raise ConfigError("Im z must be nonzero")
    return z


def _tol_overrides(items):
    out = {}
    for it in items:
        if "=" not in it:
            raise ConfigError(f"--tol expects KEY=VALUE, got {it!r}")
        k, v = it.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError as exc:
            raise ConfigError(f"--tol {k}: {exc}") from exc
    return out


# ---------------------------------------------------------------- commands


class _Ctx:
    def __init__(self, config, out, threads, tol):
        self.cfg = load_config(config)
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.threads = threads
        self.tol = _tol_overrides(tol)
        if "truncation" in self.tol:
            self.cfg.truncation_tol = self.tol["truncation"]


def _common(f):
    f = click.option("--tol", multiple=True, metavar="KEY=VALUE",
                     help="Tolerance override (a verify check name, or 'truncation').")(f)
    f = click.option("--threads", type=click.IntRange(1), default=None, help="Cap on BLAS threads.")(f)
    f = click.option("--out", type=click.Path(file_okay=False), default=".", show_default=True,
                     help="Output directory.")(f)
    f = click.option("--config", "config", type=click.Path(dir_okay=False), required=True,
                     help="JSON problem description.")(f)
    return f


def _run(body, config, out, threads, tol):
    """Run ``body(ctx)`` and translate library errors into exit codes."""
    try:
        ctx = _Ctx(config, out, threads, tol)
        with threadpool_limits(limits=threads):
            code = body(ctx)
    except (ConfigError, NonHermitian, GridMismatch, GridOutsideDomain, PartitionMismatch) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    except (WeylError, np.linalg.LinAlgError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)
    sys.exit(code or EXIT_OK)


@click.group()
def main():
    """Weyl-Titchmarsh spectral computations for matrix Schroedinger operators."""


@main.command("m-function")
@_common
@click.option("--z", "zs", multiple=True, help="Spectral parameter, e.g. 2j or [0, 2].")
def m_function_cmd(config, out, threads, tol, zs):
    """Tabulate m(z) (half-line) or m_+ and m_- (full line)."""
    def body(ctx):
        cfg = ctx.cfg
        z = _z_list(cfg, zs)
        rows = []
        if cfg.kind == "half":
            wf = cfg.weyl()
            for v in z:
                head, vals = _entries("m", wf(v))
                b = wf.truncation_length(v) if cfg.method == "truncation" else wf._tail_start()[0]
                rows.append([v.real, v.imag, *vals, b])
            header = ["z_re", "z_im", *head, "b"]
        else:
            flw = cfg.full()
            for v in z:
                hp, vp = _entries("mp", flw.m_plus(v))
                hm, vm = _entries("mm", flw.m_minus(v))
                rows.append([v.real, v.imag, *vp, *vm])
            header = ["z_re", "z_im", *hp, *hm]
        path = ctx.out / "m_function.csv"
        write_csv(path, header, rows)
        click.echo(path.read_text(), nl=False)
    _run(body, config, out, threads, tol)


def _measure_outputs(ctx, meas, stem):
    (ctx.out / f"{stem}.json").write_text(meas.to_json())
    header, rows = density_rows(meas)
    write_csv(ctx.out / f"{stem}_density.csv", header, rows)
    rep = support_and_spectrum(meas)
    (ctx.out / f"{stem}_spectrum.json").write_text(json.dumps(rep.to_dict(), sort_keys=True))
    click.echo(f"cells={meas.cell_mass.shape[0]} atoms={meas.atom_locations.size} "
               f"support={rep.to_dict()['intervals']} atom_locations={rep.to_dict()['atoms']}")


def _assemble(cfg, M):
    return assemble_measure(M, cfg.partition(), quad_points=cfg.quad_points, eps_schedule=cfg.eps_schedule)


@main.command("spectral-measure")
@_common
def spectral_measure_cmd(config, out, threads, tol):
    """Half-line spectral measure on the configured window."""
    def body(ctx):
        _measure_outputs(ctx, _assemble(ctx.cfg, ctx.cfg.weyl()), "measure")
    _run(body, config, out, threads, tol)


@main.command("fullline-measure")
@_common
def fullline_measure_cmd(config, out, threads, tol):
    """Block (2n x 2n) full-line spectral measure."""
    def body(ctx):
        meas = _assemble(ctx.cfg, ctx.cfg.full())
        meas.metadata["block"] = 2 * ctx.cfg.dim
        _measure_outputs(ctx, meas, "fullline_measure")
    _run(body, config, out, threads, tol)


@main.command("greens")
@_common
@click.option("--z", "zs", multiple=True, help="Spectral parameter, e.g. 2j or [0, 2].")
def greens_cmd(config, out, threads, tol, zs):
    """Green's function on the configured point pairs."""
    def body(ctx):
        cfg = ctx.cfg
        z = _z_list(cfg, zs)
        if not cfg.x or not cfg.xp:
            raise ConfigError("greens needs points.x and points.xp")
        xs, xps = np.sort(cfg.x), np.sort(cfg.xp)
        rows = []
        head = []
        for v in z:
            G = (greens_matrix(cfg.weyl(), v, xs, xps) if cfg.kind == "half"
                 else fullline_greens_matrix(cfg.full(), v, xs, xps))
            for i, x in enumerate(xs):
                for j, xp in enumerate(xps):
                    head, vals = _entries("G", G[i, j])
                    rows.append([v.real, v.imag, x, xp, *vals])
        write_csv(ctx.out / "greens.csv", ["z_re", "z_im", "x", "xp", *head], rows)
        click.echo(f"wrote {len(rows)} rows")
    _run(body, config, out, threads, tol)


@main.command("expand")
@_common
@click.option("--signal", type=click.Path(dir_okay=False), required=True,
              help="CSV with header x,re0,im0,... sampled on an increasing grid.")
@click.option("--roundtrip", is_flag=True, help="Also reconstruct the signal and report the L2 error.")
def expand_cmd(config, out, threads, tol, signal, roundtrip):
    """Eigenfunction-expansion transform of a sampled signal."""
    def body(ctx):
        cfg = ctx.cfg
        x, h = read_signal(signal, cfg.dim)
        M = cfg.weyl() if cfg.kind == "half" else cfg.full()
        meas = _assemble(cfg, M)
        if cfg.kind == "full":
            meas.metadata["block"] = 2 * cfg.dim
        tr = forward_transform(cfg.potential, cfg.a, cfg.bc, h, x, measure=meas, kind=cfg.kind)
        (ctx.out / "transform.json").write_text(tr.to_json())
        if roundtrip:
            back = inverse_transform(tr, cfg.potential, cfg.a, cfg.bc, x)
            cols = ["x", *[f"{p}{i}" for i in range(cfg.dim) for p in ("re", "im")]]
            rows = [[xi, *[v for c in b for v in (c.real, c.imag)]] for xi, b in zip(x, back)]
            write_csv(ctx.out / "reconstruction.csv", cols, rows)
            norm = np.sqrt(simpson(np.sum(np.abs(h) ** 2, axis=1), x=x))
            err = np.sqrt(simpson(np.sum(np.abs(back - h) ** 2, axis=1), x=x))
            rel = err / norm if norm > 0 else err
            click.echo(f"roundtrip_rel_l2={fmt(rel)}")
        click.echo(f"cells={tr.cells.shape[0]} atoms={tr.atoms.shape[0]}")
    _run(body, config, out, threads, tol)


@main.command("verify")
@_common
@click.argument("suite", default="all")
def verify_cmd(config, out, threads, tol, suite):
    """Run an invariant suite (wronskian, herglotz, lft, parseval, stone, greens or all)."""
    def body(ctx):
        if suite != "all" and suite not in _verify.SUITES:
            raise ConfigError(f"unknown suite {suite!r}; choose from all, {', '.join(_verify.SUITES)}")
        rep = _verify.run(ctx.cfg.problem(), suite, seed=ctx.cfg.seed, tol=ctx.tol)
        (ctx.out / "verify_report.json").write_text(rep.to_json())
        (ctx.out / "verify_report.txt").write_text(rep.text())
        click.echo(rep.text(), nl=False)
        return EXIT_OK if rep.passed else EXIT_VERIFY
    _run(body, config, out, threads, tol)


if __name__ == "__main__":
    main()
