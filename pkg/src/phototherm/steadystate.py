"""Classical steady state of the driven cavity-exciton system."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .params import SystemParams

SINGULAR_RTOL = 1e-30


class SingularParametersError(ArithmeticError):
    pass


@dataclass(frozen=True)
class MeanFields:
    a_bar: complex
    c_bar_sum: complex
    a_in_bar: float
    a_out_bar: complex


def _denominator(p: SystemParams) -> tuple[complex, float]:
    kc, dc = p.cavity.kappa_c, p.cavity.delta_c
    g = p.exciton.gamma
    oc, oi = p.exciton.omega_c_coupling, p.omega_in
    lead = (kc - 1j * dc) * g
    den = lead + (oc + oi) * (oc - oi).conjugate()
    return den, abs(lead)


def mean_fields(p: SystemParams) -> MeanFields:
    """Closed-form mean cavity amplitude and summed exciton amplitude.

    The input amplitude is taken real and positive,
    ``a_in = sqrt(P_in / (hbar omega_L))``; all phases are relative to it.
    """
    kc, dc = p.cavity.kappa_c, p.cavity.delta_c
    g = p.exciton.gamma
    oc, oi = p.exciton.omega_c_coupling, p.omega_in
    a_in = math.sqrt(p.input_rate)
    den, lead = _denominator(p)
    if abs(den) < SINGULAR_RTOL * lead:
        raise SingularParametersError(f"mean-field denominator {den!r} vanishes")
    pre = math.sqrt(2.0 / kc) * a_in
    a_bar = -pre * (kc * g + oi * (oc - oi).conjugate()) / den
    c_sum = pre * (1j * kc * oc - dc * oi) / den
    a_out = a_in + math.sqrt(2.0 * kc) * a_bar - 1j * math.sqrt(2.0 / kc) * oi.conjugate() * c_sum
    return MeanFields(complex(a_bar), complex(c_sum), a_in, complex(a_out))


def output_field(fields: MeanFields, p: SystemParams) -> complex:
    """Reflected amplitude including the direct exciton/free-field channel."""
    kc = p.cavity.kappa_c
    return (
        fields.a_in_bar
        + math.sqrt(2.0 * kc) * fields.a_bar
        - 1j * math.sqrt(2.0 / kc) * p.omega_in.conjugate() * fields.c_bar_sum
    )


def reflectance(p: SystemParams) -> float:
    """|a_out / a_in|^2, independent of the drive power."""
    unit = p.replace(drive={"power_in": p.drive.power_in if p.drive.power_in > 0 else 1e-3})
    f = mean_fields(unit)
    return abs(output_field(f, unit) / f.a_in_bar) ** 2


def absorbed_fraction(p: SystemParams) -> float:
    """1 - |a_out/a_in|^2 on cavity resonance, from the full steady state."""
    return 1.0 - reflectance(p.at_detuning(0.0))
