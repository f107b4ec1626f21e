"""Memory kernel built from a discrete bath of damped phonon modes."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import curve_fit

from .dynamics import MAX_KERNEL_TERMS, KernelLimitError, SumOfExponentials

BATH_HEADER = ["kappa_mu_rad_s", "omega_mu_rad_s", "weight_re", "weight_im"]


class EnvelopeError(ValueError):
    pass


class BathFileError(ValueError):
    pass


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class BathMode:
    kappa_mu: float
    omega_mu: float
    weight: complex = 1.0 + 0j


@dataclass(frozen=True)
class BathSpec:
    modes: tuple

    def __init__(self, modes):
        modes = tuple(m if isinstance(m, BathMode) else BathMode(*m) for m in modes)
        if not modes:
            raise ValueError("bath needs at least one mode")
        for m in modes:
            if not m.kappa_mu > 0:
                raise ValueError(f"bath mode decay rate must be positive, got {m.kappa_mu}")
        object.__setattr__(self, "modes", modes)


@dataclass(frozen=True)
class KernelSamples:
    times: np.ndarray
    values: np.ndarray
    truncated: bool = False


@dataclass(frozen=True)
class ExponentialFit:
    tau: float
    amplitude: float
    residual: float


def _check_grid(t):
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or len(t) < 2:
        raise ValueError("time grid needs at least two points")
    if t[0] != 0:
        raise ValueError("time grid must start at 0")
    dt = np.diff(t)
    if np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise ValueError("time grid must be uniform and increasing")
    return t


def synthesize_kernel(bath: BathSpec, t_grid) -> KernelSamples:
    """Sample ``sum_mu w_mu exp(-(kappa_mu + i omega_mu) t)``, normalized to unit trapezoid integral."""
    t = _check_grid(t_grid)
    k = np.array([m.kappa_mu for m in bath.modes])
    w = np.array([m.omega_mu for m in bath.modes])
    amp = np.array([m.weight for m in bath.modes], dtype=complex)
    values = (amp * np.exp(-np.outer(t, k + 1j * w))).sum(axis=1)
    norm = np.trapezoid(values, t)
    if abs(norm) == 0:
        raise ValueError("kernel integrates to zero and cannot be normalized")
    truncated = bool(t[-1] < 3.0 / k.min())
    if truncated:
        warnings.warn(
            f"time grid ends at {t[-1]:.3g} s, shorter than 3/min(kappa_mu) = {3.0 / k.min():.3g} s",
            TruncationWarning,
            stacklevel=2,
        )
    return KernelSamples(t, values / norm, truncated)


def fit_exponential(samples: KernelSamples) -> ExponentialFit:
    """Least-squares fit of ``A exp(-t/tau)`` to the kernel magnitude."""
    t = np.asarray(samples.times, dtype=float)
    y = np.abs(np.asarray(samples.values))
    if len(t) < 10:
        raise ValueError("need at least 10 samples")
    n = max(1, len(y) // 10)
    head, tail = y[:n].mean(), y[-n:].mean()
    if not tail < head * (1 - 1e-6):
        raise EnvelopeError("kernel magnitude is not decaying")

    pos = y > 0
    slope, icpt = np.polyfit(t[pos], np.log(y[pos]), 1, w=np.sqrt(y[pos]))
    if not slope < 0:
        raise EnvelopeError("kernel magnitude is not decaying")
    p0 = (float(np.exp(icpt)), -1.0 / slope)

    def model(t, a, tau):
        return a * np.exp(-t / tau)

    (a, tau), _ = curve_fit(model, t, y, p0=p0, xtol=1e-15, ftol=1e-15, gtol=1e-15, maxfev=10000)
    resid = float(np.sqrt(np.mean((y - model(t, a, tau)) ** 2)) / y.max())
    return ExponentialFit(float(tau), float(a), resid)


def kernel_to_spec(bath: BathSpec) -> SumOfExponentials:
    """Kernel spec for the dynamics module, weights normalized to unit analytic integral."""
    if len(bath.modes) > MAX_KERNEL_TERMS:
        raise KernelLimitError(f"{len(bath.modes)} bath modes exceed the limit of {MAX_KERNEL_TERMS}")
    s = np.array([m.kappa_mu + 1j * m.omega_mu for m in bath.modes])
    integral = np.array([m.weight for m in bath.modes], dtype=complex) / s
    total = integral.sum()
    if abs(total) == 0:
        raise ValueError("bath kernel integrates to zero")
    amps = integral / total
    return SumOfExponentials([(a, m.kappa_mu, m.omega_mu) for a, m in zip(amps, bath.modes)])


def load_bath(path) -> BathSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise BathFileError(f"cannot read bath file: {exc}") from None
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise BathFileError(f"{path}: empty bath file")
    if [c.strip() for c in rows[0]] != BATH_HEADER:
        raise BathFileError(f"{path}: line 1: expected header {','.join(BATH_HEADER)}")
    modes = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 4:
            raise BathFileError(f"{path}: line {lineno}: expected 4 columns")
        try:
            k, w, wr, wi = (float(x) for x in row)
        except ValueError:
            raise BathFileError(f"{path}: line {lineno}: unparsable number") from None
        if not k > 0:
            raise BathFileError(f"{path}: line {lineno}: decay rate must be positive, got {k}")
        modes.append(BathMode(k, w, complex(wr, wi)))
    if not modes:
        raise BathFileError(f"{path}: no bath modes")
    try:
        return BathSpec(modes)
    except ValueError as exc:
        raise BathFileError(f"{path}: {exc}") from None


def write_bath(path, bath: BathSpec) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(BATH_HEADER) + "\n")
        for m in bath.modes:
            w = complex(m.weight)
            fh.write(f"{float(m.kappa_mu)!r},{float(m.omega_mu)!r},{w.real!r},{w.imag!r}\n")
