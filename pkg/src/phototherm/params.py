"""Physical parameter sets, unit handling and geometry-derived couplings.

All rates and frequencies are stored as angular quantities in rad/s. The
exciton-continuum weight is absorbed into the effective couplings, so the
cavity/free-field exciton couplings and the photothermal coupling are the
effective ones throughout.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

HBAR = 1.054571817e-34  # J s
C_LIGHT = 299792458.0  # m/s
TWO_PI = 2.0 * math.pi

OMEGA_IN_MODES = ("geometry", "zero", "explicit")
REVERSE_FEED_MODES = ("eta", "zero")


class ConfigError(ValueError):
    """Raised for malformed configuration documents."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class HierarchyWarning(UserWarning):
    """Scale separation gamma >> kappa_c >> kappa_m, omega_m is weak."""


def _require(cond, msg):
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class CavityParams:
    kappa_c: float
    delta_c: float
    length_L: float

    def __post_init__(self):
        _require(self.kappa_c > 0, "kappa_c must be positive")
        _require(self.length_L > 0, "length_L must be positive")
        _require(math.isfinite(self.delta_c), "delta_c must be finite")


@dataclass(frozen=True)
class MechParams:
    omega_m: float
    kappa_m: float
    g0: float

    def __post_init__(self):
        _require(self.omega_m > 0, "omega_m must be positive")
        _require(self.kappa_m > 0, "kappa_m must be positive")
        _require(math.isfinite(self.g0), "g0 must be finite")


@dataclass(frozen=True)
class ExcitonParams:
    """Exciton channel.

    ``omega_in_coupling`` is only used when ``omega_in_mode == "explicit"``;
    in ``"geometry"`` mode the free-field coupling is recomputed from the
    membrane/cavity geometry at the current detuning.
    """

    gamma: float
    omega_c_coupling: float
    omega_in_coupling: complex = 0j
    omega_in_mode: str = "geometry"

    def __post_init__(self):
        _require(self.gamma > 0, "gamma must be positive")
        _require(
            isinstance(self.omega_c_coupling, (int, float)) and self.omega_c_coupling >= 0,
            "omega_c_coupling must be real and nonnegative",
        )
        _require(self.omega_in_mode in OMEGA_IN_MODES, f"omega_in_mode must be one of {OMEGA_IN_MODES}")
        object.__setattr__(self, "omega_in_coupling", complex(self.omega_in_coupling))


@dataclass(frozen=True)
class PhotothermalParams:
    eta_th_over_gamma: float
    tau_th: float
    reverse_feed: str = "eta"

    def __post_init__(self):
        _require(self.tau_th > 0, "tau_th must be positive")
        _require(math.isfinite(self.eta_th_over_gamma), "eta_th_over_gamma must be finite")
        _require(self.reverse_feed in REVERSE_FEED_MODES, f"reverse_feed must be one of {REVERSE_FEED_MODES}")


@dataclass(frozen=True)
class DriveParams:
    power_in: float
    lambda_L: float

    def __post_init__(self):
        _require(self.power_in >= 0, "power_in must be nonnegative")
        _require(self.lambda_L > 0, "lambda_L must be positive")


@dataclass(frozen=True)
class MembraneGeometry:
    thickness_d: float

    def __post_init__(self):
        _require(self.thickness_d > 0, "thickness_d must be positive")


@dataclass(frozen=True)
class SystemParams:
    cavity: CavityParams
    mech: MechParams
    exciton: ExcitonParams
    phototherm: PhotothermalParams
    drive: DriveParams
    geometry: MembraneGeometry
    hierarchy_factor: float = field(default=10.0, compare=False)

    def __post_init__(self):
        _require(
            self.geometry.thickness_d < self.drive.lambda_L,
            "membrane thickness must be below the drive wavelength",
        )
        if self.exciton.gamma < self.hierarchy_factor * self.cavity.kappa_c:
            raise ValueError(
                f"gamma/kappa_c = {self.exciton.gamma / self.cavity.kappa_c:.3g} "
                f"is below the required factor {self.hierarchy_factor:g}"
            )

    @property
    def omega_L(self) -> float:
        return TWO_PI * C_LIGHT / self.drive.lambda_L

    @property
    def input_rate(self) -> float:
        """|a_in|^2 = P_in / (hbar omega_L), photons per second."""
        return self.drive.power_in / (HBAR * self.omega_L)

    @property
    def eta_th(self) -> float:
        return self.phototherm.eta_th_over_gamma * self.exciton.gamma

    @property
    def omega_c2_over_gamma(self) -> float:
        return self.exciton.omega_c_coupling**2 / self.exciton.gamma

    @property
    def omega_in(self) -> complex:
        """Effective free-field exciton coupling at the configured detuning."""
        mode = self.exciton.omega_in_mode
        if mode == "zero":
            return 0j
        if mode == "explicit":
            return self.exciton.omega_in_coupling
        r = omega_ratio(
            self.drive.lambda_L, self.geometry.thickness_d, self.cavity.length_L, self.cavity.delta_c
        )
        return r * self.exciton.omega_c_coupling

    def at_detuning(self, delta_c: float) -> "SystemParams":
        return dataclasses.replace(self, cavity=dataclasses.replace(self.cavity, delta_c=float(delta_c)))

    def replace(self, **groups) -> "SystemParams":
        """Replace fields inside parameter groups, e.g. ``replace(mech={"g0": 0.0})``."""
        kw = {}
        for name, changes in groups.items():
            if isinstance(changes, dict):
                kw[name] = dataclasses.replace(getattr(self, name), **changes)
            else:
                kw[name] = changes
        return dataclasses.replace(self, **kw)

    def check_hierarchy(self, factor: float | None = None) -> list[str]:
        """Warn (never raise) when gamma >> kappa_c >> kappa_m, omega_m is violated."""
        factor = self.hierarchy_factor if factor is None else factor
        problems = []
        g, kc = self.exciton.gamma, self.cavity.kappa_c
        om, km = self.mech.omega_m, self.mech.kappa_m
        if g < factor * kc:
            problems.append(f"gamma/kappa_c = {g / kc:.3g} < {factor:g}")
        if kc < factor * om:
            problems.append(f"kappa_c/omega_m = {kc / om:.3g} < {factor:g}")
        if kc < factor * km:
            problems.append(f"kappa_c/kappa_m = {kc / km:.3g} < {factor:g}")
        for msg in problems:
            warnings.warn(msg, HierarchyWarning, stacklevel=2)
        return problems


def omega_ratio(lambda_L, d, L, delta_c):
    """Ratio of free-field to cavity exciton coupling in the good-cavity limit.

    Returns ``-(i/sqrt2) exp(i(k d/2 - 2 L delta_c / c)) sin(k d/2)`` with
    ``k = 2 pi / lambda_L``. Works elementwise on arrays of ``delta_c``.
    """
    if lambda_L <= 0 or d < 0 or L <= 0:
        raise ValueError("lengths must be positive")
    half = math.pi * d / lambda_L
    phase = half - 2.0 * L * np.asarray(delta_c, dtype=float) / C_LIGHT
    out = -1j / math.sqrt(2.0) * np.exp(1j * phase) * math.sin(half)
    return complex(out) if np.ndim(out) == 0 else out


def coupling_from_absorption(f_abs: float, kappa_c: float) -> float:
    """Omega_c^2/gamma from the on-resonance absorbed power fraction, f_abs*kappa_c/4."""
    if not 0.0 <= f_abs <= 1.0:
        raise ValueError(f"f_abs must lie in [0, 1], got {f_abs}")
    if kappa_c <= 0:
        raise ValueError("kappa_c must be positive")
    return f_abs * kappa_c / 4.0


# --------------------------------------------------------------------------
# configuration documents

# base name -> (group, field, kind); kind selects which unit suffixes apply
_RATE_SUFFIXES = {"_hz": TWO_PI, "_rad_s": 1.0}
_KEYS = {
    "kappa_c": ("rate",),
    "delta_c": ("rate",),
    "length_L": ("m",),
    "omega_m": ("rate",),
    "kappa_m": ("rate",),
    "g0": ("rate",),
    "gamma": ("rate",),
    "eta_th_over_gamma": ("none",),
    "tau_th": ("s",),
    "power_in": ("w",),
    "lambda_L": ("m",),
    "thickness_d": ("m",),
    "f_abs": ("none",),
    "omega_c2_over_gamma": ("rate",),
    "omega_c": ("rate",),
    "omega_in_re": ("rate",),
    "omega_in_im": ("rate",),
    "omega_in_mode": ("text",),
    "reverse_feed": ("text",),
    "hierarchy_factor": ("none",),
}
_MANDATORY = [
    "kappa_c", "delta_c", "length_L", "omega_m", "kappa_m", "g0", "gamma",
    "eta_th_over_gamma", "tau_th", "power_in", "lambda_L", "thickness_d",
]
_SIMPLE_SUFFIX = {"m": "_m", "s": "_s", "w": "_w"}


def _split_key(key: str, lineno: int):
    """Map a document key to (base, scale). Raises on unknown key or bad suffix."""
    if key in _KEYS and _KEYS[key][0] in ("none", "text"):
        return key, 1.0
    for base, (kind,) in _KEYS.items():
        if kind == "rate":
            for suffix, scale in _RATE_SUFFIXES.items():
                if key == base + suffix:
                    return base, scale
        elif kind in _SIMPLE_SUFFIX and key == base + _SIMPLE_SUFFIX[kind]:
            return base, 1.0
    # known base with a wrong suffix
    for base, (kind,) in sorted(_KEYS.items(), key=lambda kv: -len(kv[0])):
        if key.startswith(base + "_") or key == base:
            if kind == "rate":
                expected = "_hz or _rad_s"
            elif kind in _SIMPLE_SUFFIX:
                expected = _SIMPLE_SUFFIX[kind]
            else:
                expected = "no suffix"
            raise ConfigError(f"unit-suffix mismatch, expected {expected}", key, lineno)
    raise ConfigError("unknown key", key, lineno)


def parse_config(text: str) -> SystemParams:
    """Parse a flat ``key = value`` document into :class:`SystemParams`.

    Keys ending in ``_hz`` are multiplied by 2*pi; ``_rad_s`` keys are taken
    verbatim. Errors name the offending key and line.
    """
    values: dict[str, float | str] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", None, lineno)
        key, _, value = (s.strip() for s in line.partition("="))
        base, scale = _split_key(key, lineno)
        if base in values:
            raise ConfigError("duplicate quantity", key, lineno)
        if _KEYS[base][0] == "text":
            values[base] = value
        else:
            try:
                num = float(value)
            except ValueError:
                raise ConfigError(f"cannot parse number {value!r}", key, lineno) from None
            if not math.isfinite(num):
                raise ConfigError(f"non-finite number {value!r}", key, lineno)
            values[base] = num * scale
        lines[base] = lineno

    def need(base):
        if base not in values:
            kind = _KEYS[base][0]
            suffix = {"rate": "_hz", "none": ""}.get(kind, _SIMPLE_SUFFIX.get(kind, ""))
            if base == "kappa_m":
                suffix = "_rad_s"
            raise ConfigError("missing mandatory key", base + suffix)
        return values[base]

    for base in _MANDATORY:
        need(base)
    couplings = [k for k in ("f_abs", "omega_c2_over_gamma", "omega_c") if k in values]
    if not couplings:
        raise ConfigError("missing mandatory key", "f_abs")
    if len(couplings) > 1:
        raise ConfigError("give only one of f_abs, omega_c2_over_gamma, omega_c", couplings[1], lines[couplings[1]])

    kappa_c = values["kappa_c"]
    gamma = values["gamma"]
    try:
        if "f_abs" in values:
            oc = math.sqrt(coupling_from_absorption(values["f_abs"], kappa_c) * gamma)
        elif "omega_c2_over_gamma" in values:
            if values["omega_c2_over_gamma"] < 0:
                raise ValueError("omega_c2_over_gamma must be nonnegative")
            oc = math.sqrt(values["omega_c2_over_gamma"] * gamma)
        else:
            oc = values["omega_c"]
    except ValueError as exc:
        key = couplings[0]
        raise ConfigError(str(exc), key, lines.get(key)) from None

    mode = values.get("omega_in_mode", "geometry")
    if mode not in OMEGA_IN_MODES:
        raise ConfigError(f"omega_in_mode must be one of {OMEGA_IN_MODES}", "omega_in_mode", lines["omega_in_mode"])
    omega_in = 0j
    if mode == "explicit":
        for k in ("omega_in_re", "omega_in_im"):
            if k not in values:
                raise ConfigError("required when omega_in_mode = explicit", k + "_hz")
        omega_in = complex(values["omega_in_re"], values["omega_in_im"])

    try:
        return SystemParams(
            cavity=CavityParams(kappa_c, values["delta_c"], values["length_L"]),
            mech=MechParams(values["omega_m"], values["kappa_m"], values["g0"]),
            exciton=ExcitonParams(gamma, oc, omega_in, mode),
            phototherm=PhotothermalParams(
                values["eta_th_over_gamma"], values["tau_th"], values.get("reverse_feed", "eta")
            ),
            drive=DriveParams(values["power_in"], values["lambda_L"]),
            geometry=MembraneGeometry(values["thickness_d"]),
            hierarchy_factor=values.get("hierarchy_factor", 10.0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def serialize_config(p: SystemParams) -> str:
    """Inverse of :func:`parse_config`; rates are written as ``_rad_s`` with full precision."""
    def num(x):
        return repr(float(x))

    rows = [
        ("kappa_c_rad_s", num(p.cavity.kappa_c)),
        ("delta_c_rad_s", num(p.cavity.delta_c)),
        ("length_L_m", num(p.cavity.length_L)),
        ("omega_m_rad_s", num(p.mech.omega_m)),
        ("kappa_m_rad_s", num(p.mech.kappa_m)),
        ("g0_rad_s", num(p.mech.g0)),
        ("gamma_rad_s", num(p.exciton.gamma)),
        ("omega_c_rad_s", num(p.exciton.omega_c_coupling)),
        ("omega_in_mode", p.exciton.omega_in_mode),
        ("eta_th_over_gamma", num(p.phototherm.eta_th_over_gamma)),
        ("tau_th_s", num(p.phototherm.tau_th)),
        ("reverse_feed", p.phototherm.reverse_feed),
        ("power_in_w", num(p.drive.power_in)),
        ("lambda_L_m", num(p.drive.lambda_L)),
        ("thickness_d_m", num(p.geometry.thickness_d)),
        ("hierarchy_factor", num(p.hierarchy_factor)),
    ]
    if p.exciton.omega_in_mode == "explicit":
        rows.append(("omega_in_re_rad_s", num(p.exciton.omega_in_coupling.real)))
        rows.append(("omega_in_im_rad_s", num(p.exciton.omega_in_coupling.imag)))
    return "".join(f"{k} = {v}\n" for k, v in rows)


def load_config(path) -> SystemParams:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


# --------------------------------------------------------------------------
# reference parameter sets

COMMON = {
    "length_L": 2.9e-2,
    "thickness_d": 160e-9,
    "g0": TWO_PI * -5.1,
    "kappa_c": TWO_PI * 258e6,
    "omega_m": TWO_PI * 23.4e3,
    "tau_th": 6.6e-3,
}

# label, lambda_L [m], P_in [W], kappa_m [1/s], f_abs, Omega_c^2/gamma [rad/s], eta_th/gamma
DATASETS = (
    ("dataset-1", 870e-9, 20e-6, 1.8, 0.50, TWO_PI * 32.3e6, 0.075),
    ("dataset-2", 852e-9, 25e-6, 2.2, 0.55, TWO_PI * 35.4e6, 0.046),
    ("dataset-3", 852e-9, 25e-6, 2.2, 0.55, TWO_PI * 35.4e6, 0.076),
    ("dataset-4", 852e-9, 25e-6, 2.2, 0.55, TWO_PI * 35.4e6, 0.062),
)

# exciton decoherence rate is not reported; any value with gamma >> kappa_c
# leaves the analytic rate unchanged
DEFAULT_GAMMA = TWO_PI * 1e12


def experiment_params(
    *,
    lambda_L: float,
    power_in: float,
    kappa_m: float,
    f_abs: float,
    eta_th_over_gamma: float,
    delta_c: float = 0.0,
    gamma: float = DEFAULT_GAMMA,
    omega_in_mode: str = "geometry",
) -> SystemParams:
    """Parameters of the membrane experiment with the shared cavity/membrane values."""
    kc = COMMON["kappa_c"]
    oc = math.sqrt(coupling_from_absorption(f_abs, kc) * gamma)
    return SystemParams(
        cavity=CavityParams(kc, delta_c, COMMON["length_L"]),
        mech=MechParams(COMMON["omega_m"], kappa_m, COMMON["g0"]),
        exciton=ExcitonParams(gamma, oc, 0j, omega_in_mode),
        phototherm=PhotothermalParams(eta_th_over_gamma, COMMON["tau_th"]),
        drive=DriveParams(power_in, lambda_L),
        geometry=MembraneGeometry(COMMON["thickness_d"]),
    )


def dataset_params(row: int, delta_c: float = 0.0, **kw) -> SystemParams:
    """Parameters for one of the four measured datasets (``row`` counts from 1)."""
    label, lam, power, km, f_abs, _, eta = DATASETS[row - 1]
    return experiment_params(
        lambda_L=lam, power_in=power, kappa_m=km, f_abs=f_abs, eta_th_over_gamma=eta, delta_c=delta_c, **kw
    )


def desk_params(
    hierarchy: float = 100.0,
    *,
    omega_tau: float | None = None,
    delta_c: float = 0.0,
    tau_th: float | None = None,
    eta_th_over_gamma: float = 1.0,
    f_abs: float = 1e-3,
    g0: float = TWO_PI * -5.1e-3,
    kappa_m: float = 0.5,
    power_in: float | None = None,
    omega_in_mode: str = "geometry",
) -> SystemParams:
    """Compressed-hierarchy parameter family for oracle comparisons.

    ``omega_m = 2 pi x 100 rad/s``, ``kappa_c = hierarchy * omega_m``,
    ``gamma = hierarchy * kappa_c`` and ``omega_m tau_th = omega_tau``
    (default ``6.3 * hierarchy``). The drive power scales as ``hierarchy**2`` so
    the photothermal damping shift stays a few times ``kappa_m``. The small
    ``g0`` keeps the radiation-pressure spring shift well below ``omega_m``.
    """
    om = TWO_PI * 100.0
    kc = hierarchy * om
    gamma = hierarchy * kc
    if tau_th is None:
        tau_th = (omega_tau if omega_tau is not None else 2 * math.pi * hierarchy) / om
    if power_in is None:
        power_in = 2e-7 * (hierarchy / 100.0) ** 2 * (1e-3 / f_abs) if f_abs > 0 else 0.0
    oc = math.sqrt(coupling_from_absorption(f_abs, kc) * gamma)
    return SystemParams(
        cavity=CavityParams(kc, delta_c, COMMON["length_L"]),
        mech=MechParams(om, kappa_m, g0),
        exciton=ExcitonParams(gamma, oc, 0j, omega_in_mode),
        phototherm=PhotothermalParams(eta_th_over_gamma, tau_th),
        drive=DriveParams(power_in, 870e-9),
        geometry=MembraneGeometry(COMMON["thickness_d"]),
    )
