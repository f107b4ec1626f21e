"""Analytic photothermal and radiation-pressure damping rates.

Sign convention: a positive rate adds mechanical damping (cooling); the
effective amplitude decay rate is ``kappa_m + kappa_th + kappa_rp``.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .params import SystemParams
from .steadystate import mean_fields

MIN_OMEGA_TAU = 10.0


class OutOfRegimeError(ValueError):
    pass


class SweepError(RuntimeError):
    def __init__(self, index, delta_c, cause):
        self.index = index
        self.delta_c = delta_c
        self.cause = cause
        super().__init__(f"grid point {index} (delta_c={delta_c!r} rad/s): {cause}")


@dataclass(frozen=True)
class CoolingResult:
    kappa_th: float
    kappa_rp: float
    kappa_eff: float


def _omega_ratio_effective(p: SystemParams) -> complex:
    oc = p.exciton.omega_c_coupling
    if oc == 0:
        return 0j
    return p.omega_in / oc


def kappa_th(p: SystemParams, min_omega_tau: float = MIN_OMEGA_TAU) -> float:
    """Photothermal damping rate for slow thermalization (omega_m tau_th >> 1).

    Raises :class:`OutOfRegimeError` if ``omega_m * tau_th < min_omega_tau``;
    use :mod:`phototherm.dynamics` there instead.
    """
    om, tau = p.mech.omega_m, p.phototherm.tau_th
    if om * tau < min_omega_tau:
        raise OutOfRegimeError(
            f"omega_m*tau_th = {om * tau:.3g} < {min_omega_tau:g}; "
            "the slow-kernel rate does not apply, use the dynamics oracle"
        )
    kc, dc = p.cavity.kappa_c, p.cavity.delta_c
    r = _omega_ratio_effective(p)
    rc = r.conjugate()
    pre = (
        p.input_rate
        * 2.0 * p.mech.g0
        / ((kc**2 + dc**2) * om * tau)
        * p.phototherm.eta_th_over_gamma
        * p.omega_c2_over_gamma
    )
    brace = (1 + r) * (dc * rc + 1j * kc) / (kc - 1j * (om + dc)) + (1 + rc) * (dc * r - 1j * kc) / (
        kc - 1j * (om - dc)
    )
    value = pre * 0.5 * (brace + brace.conjugate())
    if abs(value.imag) > 1e-12 * max(abs(value.real), abs(pre) * abs(brace), 1e-300):
        raise ArithmeticError(f"non-real photothermal rate residue {value.imag!r}")
    return float(value.real)


def kappa_rp(p: SystemParams) -> float:
    """Radiation-pressure sideband damping rate using the full mean cavity field.

    Amplitude-rate convention, matching ``kappa_m`` (HWHM).
    """
    g0 = p.mech.g0
    if g0 == 0:
        return 0.0
    kc, dc, om = p.cavity.kappa_c, p.cavity.delta_c, p.mech.omega_m
    n = abs(mean_fields(p).a_bar) ** 2
    return float(g0**2 * n * (kc / (kc**2 + (dc + om) ** 2) - kc / (kc**2 + (dc - om) ** 2)))


def cooling_rates(p: SystemParams, min_omega_tau: float = MIN_OMEGA_TAU) -> CoolingResult:
    th = kappa_th(p, min_omega_tau)
    rp = kappa_rp(p)
    return CoolingResult(th, rp, p.mech.kappa_m + th + rp)


def _threads(workers):
    if workers is None:
        workers = int(os.environ.get("PHOTOTHERM_THREADS", "1") or 1)
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def sweep(p: SystemParams, detuning_grid, workers: int | None = None, min_omega_tau: float = MIN_OMEGA_TAU):
    """Rates over a detuning grid, as a list of ``(delta_c, CoolingResult)`` in grid order."""
    grid = [float(x) for x in np.asarray(detuning_grid, dtype=float).ravel()]
    if not grid:
        raise ValueError("detuning grid is empty")
    bad = [i for i, x in enumerate(grid) if not np.isfinite(x)]
    if bad:
        raise ValueError(f"non-finite detuning at grid index {bad[0]}")

    def one(item):
        i, dc = item
        try:
            return dc, cooling_rates(p.at_detuning(dc), min_omega_tau)
        except Exception as exc:
            raise SweepError(i, dc, exc) from exc

    n = _threads(workers)
    if n == 1 or len(grid) < 2:
        return [one(item) for item in enumerate(grid)]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(one, enumerate(grid)))
