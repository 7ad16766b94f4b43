"""Default numerical tolerances shared by every module."""
from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-12       # relative Hermiticity defect accepted (then symmetrized)
    ident: float = 1e-10      # sin^2 + cos^2 = I, commutator
    eig_residual: float = 1e-10
    wronskian: float = 1e-8
    ode_residual: float = 1e-6
    green: float = 1e-6
    sym: float = 1e-8         # m(z) = m(conj z)^*
    psd: float = 1e-8
    rtol: float = 1e-10       # integrator
    atol: float = 1e-12
    singular_cond: float = 1e12
    truncation: float = 1e-8  # m_{2b} vs m_b
    psd_clip: float = 1e-9
    psd_hard: float = 1e-6

    def updated(self, **kw) -> "Tolerances":
        return replace(self, **kw)


DEFAULT = Tolerances()
