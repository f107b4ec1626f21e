"""Linewidth-vs-detuning datasets and the single-parameter photothermal fit."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .cooling import kappa_rp, kappa_th
from .params import TWO_PI, SystemParams, coupling_from_absorption

META_KEYS = {
    "label": ("label", str),
    "lambda_l_m": ("lambda_L", float),
    "power_in_w": ("power_in", float),
    "kappa_m_rad_s": ("kappa_m", float),
    "f_abs": ("f_abs", float),
    "beam_x": ("beam_x", float),
    "beam_y": ("beam_y", float),
}


class DatasetError(ValueError):
    pass


class UnidentifiableFitError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetMeta:
    label: str = ""
    lambda_L: float | None = None
    power_in: float | None = None
    kappa_m: float | None = None
    f_abs: float | None = None
    beam_x: float | None = None
    beam_y: float | None = None

    @property
    def beam_position(self):
        if self.beam_x is None or self.beam_y is None:
            return None
        return (self.beam_x, self.beam_y)


@dataclass(frozen=True)
class Dataset:
    delta_c: np.ndarray  # rad/s
    kappa: np.ndarray  # rad/s, measured effective linewidth
    sigma: np.ndarray | None = None
    meta: DatasetMeta = field(default_factory=DatasetMeta)

    def __post_init__(self):
        d = np.asarray(self.delta_c, dtype=float)
        k = np.asarray(self.kappa, dtype=float)
        if d.shape != k.shape or d.ndim != 1:
            raise DatasetError("detuning and linewidth columns must be 1-d and equally long")
        object.__setattr__(self, "delta_c", d)
        object.__setattr__(self, "kappa", k)
        if self.sigma is not None:
            s = np.asarray(self.sigma, dtype=float)
            if s.shape != d.shape:
                raise DatasetError("sigma column length mismatch")
            if np.any(~(s > 0)):
                raise DatasetError("sigma values must be positive")
            object.__setattr__(self, "sigma", s)

    def __len__(self):
        return len(self.delta_c)


@dataclass(frozen=True)
class FitResult:
    eta_over_gamma: float
    stderr: float
    residual_rms: float
    n_points: int


@dataclass(frozen=True)
class ModeProfile21:
    eta_max_over_gamma: float
    mode: tuple
    positions: tuple
    residuals: tuple

    def shape(self, x, y):
        return mode_shape(x, y, self.mode)


def load_dataset(path) -> Dataset:
    """Read a dataset CSV; detunings in Hz are converted to rad/s."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read dataset: {exc}") from None
    meta = {}
    header = None
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if body.startswith("meta"):
                key, sep, value = body[4:].strip().partition("=")
                key = key.strip().lower()
                if not sep or key not in META_KEYS:
                    raise DatasetError(f"{path}: line {lineno}: bad metadata entry {body!r}")
                name, conv = META_KEYS[key]
                try:
                    meta[name] = conv(value.strip())
                except ValueError:
                    raise DatasetError(f"{path}: line {lineno}: cannot parse {key}") from None
            continue
        cells = [c.strip() for c in next(csv.reader([stripped]))]
        if header is None:
            if cells[:2] != ["delta_c_hz", "kappa_eff_rad_s"] or len(cells) > 3 or (
                len(cells) == 3 and cells[2] != "sigma_rad_s"
            ):
                raise DatasetError(f"{path}: line {lineno}: expected header delta_c_hz,kappa_eff_rad_s[,sigma_rad_s]")
            header = cells
            continue
        if len(cells) != len(header):
            raise DatasetError(f"{path}: line {lineno}: expected {len(header)} columns, got {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise DatasetError(f"{path}: line {lineno}: unparsable number") from None
        if not all(math.isfinite(v) for v in rows[-1]):
            raise DatasetError(f"{path}: line {lineno}: non-finite value")
        if len(header) == 3 and not rows[-1][2] > 0:
            raise DatasetError(f"{path}: line {lineno}: sigma must be positive")
    if header is None:
        raise DatasetError(f"{path}: missing header")
    arr = np.array(rows, dtype=float).reshape(-1, len(header))
    sigma = arr[:, 2] if len(header) == 3 else None
    return Dataset(arr[:, 0] * TWO_PI, arr[:, 1], sigma, DatasetMeta(**meta))


def write_dataset(path, data: Dataset) -> None:
    m = data.meta
    lines = []
    for key, (name, _) in META_KEYS.items():
        value = getattr(m, name)
        if value is None or value == "":
            continue
        lines.append(f"#meta {key}={value if isinstance(value, str) else repr(float(value))}")
    cols = ["delta_c_hz", "kappa_eff_rad_s"] + (["sigma_rad_s"] if data.sigma is not None else [])
    lines.append(",".join(cols))
    for i in range(len(data)):
        row = [data.delta_c[i] / TWO_PI, data.kappa[i]]
        if data.sigma is not None:
            row.append(data.sigma[i])
        lines.append(",".join(format(float(v), ".17g") for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def params_for_dataset(params: SystemParams, meta: DatasetMeta) -> SystemParams:
    """Overlay dataset metadata (wavelength, power, kappa_m, f_abs) on a parameter set."""
    changes = {}
    if meta.lambda_L is not None or meta.power_in is not None:
        changes["drive"] = replace(
            params.drive,
            lambda_L=params.drive.lambda_L if meta.lambda_L is None else meta.lambda_L,
            power_in=params.drive.power_in if meta.power_in is None else meta.power_in,
        )
    if meta.kappa_m is not None:
        changes["mech"] = replace(params.mech, kappa_m=meta.kappa_m)
    if meta.f_abs is not None:
        oc2g = coupling_from_absorption(meta.f_abs, params.cavity.kappa_c)
        changes["exciton"] = replace(params.exciton, omega_c_coupling=math.sqrt(oc2g * params.exciton.gamma))
    return replace(params, **changes) if changes else params


def model_terms(data: Dataset, params: SystemParams, include_rp: bool = True):
    """Per-point unit-coupling shape ``S_i`` and fixed baseline ``kappa_m (+ kappa_rp)``."""
    unit = params.replace(phototherm={"eta_th_over_gamma": 1.0})
    shape = np.array([kappa_th(unit.at_detuning(d)) for d in data.delta_c])
    base = np.full(len(data), params.mech.kappa_m)
    if include_rp:
        base = base + np.array([kappa_rp(params.at_detuning(d)) for d in data.delta_c])
    return shape, base


def fit_eta(data: Dataset, params: SystemParams, include_rp: bool = True, use_meta: bool = True) -> FitResult:
    """Weighted closed-form fit of eta_th/gamma, the only free parameter.

    The photothermal rate is linear in eta_th/gamma, so with shape
    ``S_i`` (rate at unit coupling) and weights ``w_i = 1/sigma_i^2``,
    ``eta = sum w S (y - base) / sum w S^2``. The standard error is scaled by
    the reduced chi-square of the residuals.
    """
    n = len(data)
    if n < 2:
        raise UnidentifiableFitError(f"need at least 2 points, got {n}")
    if use_meta:
        params = params_for_dataset(params, data.meta)
    S, base = model_terms(data, params, include_rp)
    y = data.kappa - base
    w = np.ones(n) if data.sigma is None else 1.0 / data.sigma**2
    sww = float(np.sum(w * S * S))
    scale = max(np.max(np.abs(y)), params.mech.kappa_m)
    if not np.max(np.abs(S)) > 1e-30 * scale or sww == 0:
        raise UnidentifiableFitError("photothermal shape vanishes at every detuning; eta_th/gamma is unidentifiable")
    eta = float(np.sum(w * S * y) / sww)
    r = y - eta * S
    chi2 = float(np.sum(w * r * r))
    stderr = math.sqrt(chi2 / (n - 1)) / math.sqrt(sww)
    return FitResult(eta, stderr, float(np.sqrt(np.mean(r * r))), n)


def synthesize_dataset(
    params: SystemParams,
    delta_c,
    eta_over_gamma: float | None = None,
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
    include_rp: bool = True,
    label: str = "synthetic",
    beam_position=None,
    f_abs: float | None = None,
) -> Dataset:
    """Model linewidths on a detuning grid, optionally with multiplicative Gaussian noise.

    With ``noise > 0`` the returned dataset carries ``sigma = noise * |model|``.
    """
    if eta_over_gamma is not None:
        params = params.replace(phototherm={"eta_th_over_gamma": eta_over_gamma})
    d = np.asarray(delta_c, dtype=float)
    y = np.array([params.mech.kappa_m + kappa_th(params.at_detuning(x)) for x in d])
    if include_rp:
        y = y + np.array([kappa_rp(params.at_detuning(x)) for x in d])
    sigma = None
    if noise > 0:
        rng = np.random.default_rng() if rng is None else rng
        # the noise model is known, so report it as per-point uncertainty
        sigma = np.maximum(noise * np.abs(y), np.finfo(float).tiny)
        y = y * (1.0 + noise * rng.standard_normal(len(y)))
    bx, by = beam_position if beam_position is not None else (None, None)
    meta = DatasetMeta(
        label=label,
        lambda_L=params.drive.lambda_L,
        power_in=params.drive.power_in,
        kappa_m=params.mech.kappa_m,
        f_abs=f_abs,
        beam_x=bx,
        beam_y=by,
    )
    return Dataset(d, y, sigma, meta)


def mode_shape(x, y, mode=(2, 1)):
    """Drumhead mode ``sin(m pi x) sin(n pi y)`` on normalized membrane coordinates."""
    m, n = mode
    return np.sin(m * np.pi * np.asarray(x)) * np.sin(n * np.pi * np.asarray(y))


def mode_profile_check(fits, mode=(2, 1)) -> ModeProfile21:
    """Fit ``|eta(x, y)| = eta_max |phi(x, y)|`` to positioned fit results.

    ``fits`` is a sequence of ``((x, y), FitResult or float)``.
    """
    fits = list(fits)
    if not fits:
        raise ValueError("need at least one positioned fit")
    pos = np.array([tuple(map(float, xy)) for xy, _ in fits])
    if np.any((pos < 0) | (pos > 1)):
        raise ValueError("beam positions must lie in [0, 1] x [0, 1]")
    eta = np.abs([f.eta_over_gamma if isinstance(f, FitResult) else float(f) for _, f in fits])
    phi = np.abs(mode_shape(pos[:, 0], pos[:, 1], mode))
    denom = float(np.sum(phi * phi))
    if denom == 0:
        raise UnidentifiableFitError("all beam positions lie on nodal lines")
    eta_max = float(np.sum(eta * phi) / denom)
    resid = eta - eta_max * phi
    return ModeProfile21(eta_max, tuple(mode), tuple(map(tuple, pos)), tuple(float(r) for r in resid))
