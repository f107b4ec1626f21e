"""Cross-check of the analytic damping rates against the drift-matrix eigenvalues."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cooling import cooling_rates
from .dynamics import build_drift, effective_mode
from .params import SystemParams

# denominators below this fraction of kappa_m are treated as exact zeros
ZERO_FLOOR = 1e-6


@dataclass(frozen=True)
class OraclePoint:
    delta_c: float
    analytic_shift: float
    oracle_shift: float
    kappa_th: float
    kappa_rp: float

    def deviation(self, floor: float) -> float:
        return abs(self.oracle_shift - self.analytic_shift) / max(abs(self.analytic_shift), floor)


def oracle_comparison(p: SystemParams, detunings, kernel=None) -> list[OraclePoint]:
    """Analytic ``kappa_th + kappa_rp`` against ``kappa_eff - kappa_m`` from the eigenvalues."""
    out = []
    for d in np.asarray(detunings, dtype=float):
        q = p.at_detuning(d)
        rates = cooling_rates(q)
        mode = effective_mode(build_drift(q, kernel), q)
        out.append(
            OraclePoint(float(d), rates.kappa_th + rates.kappa_rp, mode.kappa_eff - q.mech.kappa_m, rates.kappa_th, rates.kappa_rp)
        )
    return out


def max_deviation(points, kappa_m: float) -> float:
    """Largest pointwise relative deviation between oracle and analytic damping shifts."""
    floor = ZERO_FLOOR * kappa_m
    return max(pt.deviation(floor) for pt in points)


def detuning_grid(p: SystemParams, span: float = 3.0, points: int = 21) -> np.ndarray:
    return np.linspace(-span, span, points) * p.cavity.kappa_c
