"""Adaptive Dormand-Prince 5(4) integrator for array-valued (complex) linear ODEs.

Steps always land exactly on requested output points and on potential
breakpoints, so no interpolation error enters the output and no step
straddles a kink. The accepted step sequence can be replayed, which makes
solutions for different data exactly linear in that data.
"""
from __future__ import annotations

import numpy as np

from .errors import StepSizeUnderflow

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _landing_points(x_start, targets, stops):
    targets = np.asarray(targets, dtype=float)
    sign = 1.0 if (targets.size == 0 or targets[-1] >= x_start) else -1.0
    lo, hi = sorted((x_start, targets[-1] if targets.size else x_start))
    st = np.asarray(stops, dtype=float)
    st = st[(st > lo) & (st < hi)]
    pts = np.unique(np.concatenate([targets, st]))
    if sign < 0:
        pts = pts[::-1]
    is_target = np.isin(pts, targets)
    return sign, pts, is_target


def integrate(rhs, x_start: float, y0: np.ndarray, targets, *, rtol: float = 1e-10,
              atol: float = 1e-12, stops=(), max_steps: int = 2_000_000, replay=None,
              record: bool = False):
    """Integrate ``y' = rhs(x, y)`` from ``x_start`` through monotone ``targets``.

    Parameters
    ----------
    rhs : callable
        ``rhs(x, y) -> dy`` with ``dy.shape == y.shape``.
    targets : array_like
        Output abscissae, monotone in the integration direction. Entries equal
        to ``x_start`` return ``y0``.
    stops : array_like
        Points that must be step endpoints (discontinuities of the coefficients).
    replay : sequence of float, optional
        Use exactly these step endpoints instead of adaptive control.
    record : bool
        Also return the list of accepted step endpoints.

    Returns
    -------
    ys : ndarray, shape ``(len(targets),) + y0.shape``
    steps : list of float (only if ``record``)
    """
    y = np.array(y0, dtype=complex)
    targets = np.asarray(targets, dtype=float)
    out = np.empty((targets.size,) + y.shape, dtype=complex)
    if targets.size == 0:
        return (out, []) if record else out
    sign, pts, is_target = _landing_points(x_start, targets, stops)
    if np.any(sign * np.diff(np.concatenate([[x_start], targets])) < 0):
        raise ValueError("targets must be monotone away from x_start")
    order = {float(t): i for i, t in enumerate(targets)}
    steps: list[float] = []
    x = float(x_start)
    nsteps = 0
    h = None
    if replay is not None:
        replay = list(replay)
    for p, tgt in zip(pts, is_target):
        if p == x:
            if tgt:
                out[order[float(p)]] = y
            continue
        if replay is not None:
            while replay and sign * (replay[0] - x) <= 0:
                replay.pop(0)
            while sign * (p - x) > 0:
                xn = replay.pop(0) if replay else p
                if sign * (xn - p) > 0:
                    xn = p
                y, _ = _dp_step(rhs, x, y, xn - x, sign)
                x = xn
        else:
            k1 = None
            if h is None:
                h = _initial_step(rhs, x, y, sign, rtol, atol, abs(p - x))
            while sign * (p - x) > 0:
                nsteps += 1
                if nsteps > max_steps:
                    raise StepSizeUnderflow(f"more than {max_steps} steps near x={x}")
                last = abs(h) >= abs(p - x) * (1 - 1e-12)
                hh = (p - x) if last else sign * abs(h)
                ynew, err, k7 = _dp_step(rhs, x, y, hh, sign, k1=k1, want_err=True)
                scale = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
                en = float(np.max(np.abs(err) / scale)) if err.size else 0.0
                if en <= 1.0:
                    x = p if last else x + hh
                    y = ynew
                    k1 = k7
                    steps.append(x)
                    fac = 5.0 if en == 0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
                    if not (last and abs(hh) < abs(h)):
                        h = abs(hh) * fac
                else:
                    fac = max(0.1, 0.9 * en ** -0.2) if np.isfinite(en) else 0.1
                    h = abs(hh) * fac
                    if h < 1e-14 * max(1.0, abs(x)):
                        raise StepSizeUnderflow(f"step size underflow at x={x}")
        if tgt:
            out[order[float(p)]] = y
    return (out, steps) if record else out


def _nudge(x, h):
    return x + h * 1e-12


def _dp_step(rhs, x, y, h, sign, k1=None, want_err=False):
    # end stages are evaluated just inside the step so one-sided coefficient values are used
    ks = []
    if k1 is None:
        k1 = rhs(_nudge(x, h), y)
    ks.append(k1)
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks) if a != 0.0)
        xi = x + _C[i] * h
        if i >= 5:
            xi = x + h - h * 1e-12
        ks.append(rhs(xi, yi))
    ynew = y + h * sum(b * k for b, k in zip(_B, ks) if b != 0.0)
    if not want_err:
        return ynew, ks[6]
    err = h * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
    return ynew, err, ks[6]


def _initial_step(rhs, x, y, sign, rtol, atol, span):
    f0 = rhs(_nudge(x, sign), y)
    scale = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean(np.abs(y / scale) ** 2)) if y.size else 0.0
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2)) if y.size else 0.0
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    return min(h0, span)
