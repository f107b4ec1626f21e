"""Noise-free linear dynamics of the fluctuations, used as an exact oracle.

The state vector is ``(a, a+, b, b+, c, c+, m1, m1+, ...)`` where ``c`` is the
summed exciton amplitude and each ``m`` pair realizes one exponential term of
the memory kernel as an auxiliary ODE variable,
``dm/dt = s (A c - m)`` with ``s = rate + i*frequency`` and integral weight
``A``. The mechanical force term is ``-i (h* sum m + h sum m+)`` with
``h = eta_th * c_bar_sum``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .params import SystemParams
from .steadystate import mean_fields

MAX_KERNEL_TERMS = 64
EIG_COND_LIMIT = 1e12
SINGULAR_GAP = 1e-9  # relative to omega_m
# rms departure of log|b| from a straight line that counts as beating
BEAT_LOG_RMS = 1e-3

A, AD, B, BD, C, CD = range(6)


class KernelLimitError(ValueError):
    pass


class AmbiguousModeError(RuntimeError):
    def __init__(self, candidates):
        self.candidates = list(candidates)
        super().__init__("cannot identify mechanical eigenvalue; candidates: " + ", ".join(f"{z:.6g}" for z in candidates))


class InsufficientSpanError(ValueError):
    pass


class BeatingWarning(RuntimeWarning):
    pass


class NearSingularError(ArithmeticError):
    def __init__(self, index, omega, cond):
        self.index, self.omega, self.cond = index, omega, cond
        super().__init__(f"near-singular resolvent at grid index {index} (omega={omega:.6g}, cond={cond:.3g})")


# --------------------------------------------------------------------------
# memory kernels


@dataclass(frozen=True)
class Exponential:
    tau_th: float

    def __post_init__(self):
        if not self.tau_th > 0:
            raise ValueError("tau_th must be positive")

    def terms(self):
        return [(1.0 + 0j, 1.0 / self.tau_th, 0.0)]


@dataclass(frozen=True)
class Instantaneous:
    def terms(self):
        return []


@dataclass(frozen=True)
class SumOfExponentials:
    """Kernel ``M(t) = sum_k A_k s_k exp(-s_k t)`` with ``s_k = rate_k + i freq_k``.

    ``A_k`` is the integral weight of term ``k``; the weights sum to one.
    """

    terms_: tuple = field(default=())

    def __init__(self, terms):
        terms = tuple((complex(a), float(r), float(w)) for a, r, w in terms)
        if not terms:
            raise ValueError("kernel needs at least one term")
        if len(terms) > MAX_KERNEL_TERMS:
            raise KernelLimitError(f"{len(terms)} kernel terms exceed the limit of {MAX_KERNEL_TERMS}")
        if any(r <= 0 for _, r, _ in terms):
            raise ValueError("kernel decay rates must be positive")
        total = sum(a for a, _, _ in terms)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"kernel weights sum to {total}, expected 1")
        object.__setattr__(self, "terms_", terms)

    def terms(self):
        return list(self.terms_)


KernelSpec = Exponential | Instantaneous | SumOfExponentials


@dataclass(frozen=True)
class DriftMatrix:
    matrix: np.ndarray
    labels: tuple
    kernel: object
    omega_m: float

    @property
    def dimension(self):
        return self.matrix.shape[0]


@dataclass(frozen=True)
class EffectiveMode:
    kappa_eff: float
    omega_eff: float
    eigenvalue: complex


@dataclass(frozen=True)
class RingdownTrace:
    times: np.ndarray
    values: np.ndarray
    fallback: bool = False


@dataclass(frozen=True)
class DampingFit:
    kappa: float
    omega: float
    log_residual: float
    phase_residual: float
    beating: bool


def pairing_permutation(n):
    """Index map sending each variable to its conjugate partner."""
    perm = np.arange(n)
    perm[0::2] += 1
    perm[1::2] -= 1
    return perm


def build_drift(p: SystemParams, kernel=None, reverse_feed: str | None = None) -> DriftMatrix:
    """Generator ``G`` of ``dz/dt = G z`` for the linearized mean-value equations.

    ``kernel`` defaults to ``Exponential(p.phototherm.tau_th)``.
    ``reverse_feed`` ("eta" or "zero") overrides the parameter set and controls
    the direct mechanical drive of the excitons, ``-i h (b + b+)``.
    """
    if kernel is None:
        kernel = Exponential(p.phototherm.tau_th)
    terms = kernel.terms()
    if len(terms) > MAX_KERNEL_TERMS:
        raise KernelLimitError(f"{len(terms)} kernel terms exceed the limit of {MAX_KERNEL_TERMS}")
    feed = p.phototherm.reverse_feed if reverse_feed is None else reverse_feed
    if feed not in ("eta", "zero"):
        raise ValueError("reverse_feed must be 'eta' or 'zero'")

    mf = mean_fields(p)
    kc, dc = p.cavity.kappa_c, p.cavity.delta_c
    om, km, g0 = p.mech.omega_m, p.mech.kappa_m, p.mech.g0
    gamma = p.exciton.gamma
    oc, oi = p.exciton.omega_c_coupling, p.omega_in
    a = mf.a_bar
    h = p.eta_th * mf.c_bar_sum

    n = 6 + 2 * len(terms)
    G = np.zeros((n, n), dtype=complex)
    G[A, A] = -(kc - 1j * dc)
    G[A, B] = G[A, BD] = -1j * g0 * a

    G[B, B] = -(km + 1j * om)
    G[B, A] = -1j * g0 * np.conj(a)
    G[B, AD] = -1j * g0 * a

    G[C, C] = -gamma
    G[C, A] = -1j * (oi + oc)
    if feed == "eta":
        G[C, B] = G[C, BD] = -1j * h

    if terms:
        for k, (amp, rate, freq) in enumerate(terms):
            m = 6 + 2 * k
            s = rate + 1j * freq
            G[m, m] = -s
            G[m, C] = s * amp
            G[B, m] = -1j * np.conj(h)
            G[B, m + 1] = -1j * h
    else:
        G[B, C] = -1j * np.conj(h)
        G[B, CD] = -1j * h

    perm = pairing_permutation(n)
    for row in range(0, n, 2):
        G[row + 1] = np.conj(G[row][perm])

    labels = ["a", "a+", "b", "b+", "c", "c+"]
    for k in range(len(terms)):
        labels += [f"m{k + 1}", f"m{k + 1}+"]
    return DriftMatrix(G, tuple(labels), kernel, om)


def eigenvalues(G: DriftMatrix) -> np.ndarray:
    return np.linalg.eigvals(G.matrix)


def effective_mode(G: DriftMatrix, p: SystemParams | None = None) -> EffectiveMode:
    """Mechanical eigenvalue: the one with imaginary part closest to ``-omega_m``.

    ``b`` evolves as ``exp(-i omega_m t)``, so its eigenvalue sits near
    ``-kappa - i omega``; the conjugate partner sits near ``+i omega``.
    """
    om = p.mech.omega_m if p is not None else G.omega_m
    ev = eigenvalues(G)
    near = ev[np.abs(np.abs(ev.imag) - om) < 0.1 * om]
    if len(near) > 2:
        raise AmbiguousModeError(near)
    lam = ev[np.argmin(np.abs(ev.imag + om))]
    return EffectiveMode(float(-lam.real), float(abs(lam.imag)), complex(lam))


def _initial_state(n, initial_b):
    z0 = np.zeros(n, dtype=complex)
    z0[B] = initial_b
    z0[BD] = np.conj(initial_b)
    return z0


def simulate_ringdown(G: DriftMatrix, initial_b: complex, t_final: float, n_steps: int) -> RingdownTrace:
    """Exact free evolution of ``b`` from ``b(0) = initial_b``, all else zero.

    Uses the eigendecomposition of ``G``; when the eigenvector matrix is badly
    conditioned it falls back to a matrix exponential per step and flags the trace.
    """
    if n_steps < 2:
        raise ValueError("n_steps must be at least 2")
    if not t_final > 0:
        raise ValueError("t_final must be positive")
    t = np.linspace(0.0, t_final, n_steps)
    M = G.matrix
    z0 = _initial_state(M.shape[0], initial_b)
    lam, V = np.linalg.eig(M)
    if np.linalg.cond(V) <= EIG_COND_LIMIT:
        coeff = np.linalg.solve(V, z0)
        values = (np.exp(np.outer(t, lam)) * (V[B] * coeff)).sum(axis=1)
        return RingdownTrace(t, values, False)
    step = scipy.linalg.expm(M * (t[1] - t[0]))
    values = np.empty(n_steps, dtype=complex)
    z = z0
    for i in range(n_steps):
        values[i] = z[B]
        z = step @ z
    return RingdownTrace(t, values, True)


def fit_damping(trace: RingdownTrace) -> DampingFit:
    """Decay rate and frequency of a ring-down by linear regression.

    ``log|b|`` is regressed against time for the rate and the unwrapped phase
    for the frequency; ``b ~ exp(-(kappa + i omega) t)``. A log-envelope that
    departs from a straight line by more than ``BEAT_LOG_RMS`` (rms) is
    flagged as beating between eigenmodes.
    """
    t = np.asarray(trace.times, dtype=float)
    b = np.asarray(trace.values, dtype=complex)
    if len(t) < 3:
        raise InsufficientSpanError("need at least 3 samples")
    if np.any(b == 0):
        raise InsufficientSpanError("trace contains zero amplitude")
    span = t[-1] - t[0]
    logb = np.log(np.abs(b))
    phase = np.unwrap(np.angle(b))
    kslope, kint = np.polyfit(t, logb, 1)
    pslope, pint = np.polyfit(t, phase, 1)
    kappa, omega = -kslope, -pslope
    periods = abs(omega) * span / (2 * np.pi)
    if periods < 3:
        raise InsufficientSpanError(f"trace covers {periods:.3g} oscillation periods, need 3")
    if abs(kappa) * span < 1:
        raise InsufficientSpanError(f"trace covers {abs(kappa) * span:.3g} decay times, need 1")
    log_res = float(np.sqrt(np.mean((logb - (kslope * t + kint)) ** 2)))
    phase_res = float(np.sqrt(np.mean((phase - (pslope * t + pint)) ** 2)))
    beating = log_res > BEAT_LOG_RMS
    if beating:
        warnings.warn("non-monotone envelope: several eigenmodes contribute", BeatingWarning, stacklevel=2)
    return DampingFit(float(kappa), float(omega), log_res, phase_res, beating)


def susceptibility(G: DriftMatrix, omega_grid) -> np.ndarray:
    """Mechanical response ``b`` to a unit drive of ``b`` at ``exp(-i omega t)``.

    Solves ``(-i omega I - G) x = e_b`` per frequency; the resonance sits at
    ``omega ~ +omega_eff`` with half-width ``kappa_eff``.
    """
    w = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    M = G.matrix
    n = M.shape[0]
    ev = np.linalg.eigvals(M)
    dist = np.abs((-1j * w)[:, None] - ev[None, :]).min(axis=1)
    bad = np.flatnonzero(~(dist > SINGULAR_GAP * G.omega_m))
    if bad.size:
        i = int(bad[0])
        cond = np.linalg.norm(M, 2) / dist[i] if dist[i] > 0 else np.inf
        raise NearSingularError(i, float(w[i]), float(cond))
    lhs = (-1j * w)[:, None, None] * np.eye(n) - M
    rhs = np.zeros((len(w), n, 1), dtype=complex)
    rhs[:, B, 0] = 1.0
    return np.linalg.solve(lhs, rhs)[:, B, 0]


def lorentzian_hwhm(omega_grid, chi) -> float:
    """Half width at half maximum of ``|chi|^2`` around its peak, by linear interpolation."""
    w = np.asarray(omega_grid, dtype=float)
    y = np.abs(np.asarray(chi)) ** 2
    i = int(np.argmax(y))
    half = 0.5 * y[i]
    left = i
    while left > 0 and y[left] > half:
        left -= 1
    right = i
    while right < len(y) - 1 and y[right] > half:
        right += 1
    if y[left] > half or y[right] > half:
        raise ValueError("grid does not bracket the half-maximum points")
    wl = np.interp(half, [y[left], y[left + 1]], [w[left], w[left + 1]])
    wr = np.interp(half, [y[right], y[right - 1]], [w[right], w[right - 1]])
    return float(0.5 * (wr - wl))


def susceptibility_linewidth(G: DriftMatrix, mode: EffectiveMode, n_points: int = 20001, span: float = 12.0) -> float:
    """HWHM of ``|chi|^2`` scanned over ``omega_eff +/- span*kappa_eff``."""
    width = span * abs(mode.kappa_eff)
    w = np.linspace(mode.omega_eff - width, mode.omega_eff + width, n_points)
    return lorentzian_hwhm(w, susceptibility(G, w))
