import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phototherm.cooling import (
    OutOfRegimeError,
    SweepError,
    cooling_rates,
    kappa_rp,
    kappa_th,
    sweep,
)
from phototherm.params import dataset_params
from phototherm.validate import oracle_comparison

from conftest import TWO_PI

P1 = dataset_params(1)
KC = P1.cavity.kappa_c
NO_IN = P1.replace(exciton={"omega_in_mode": "zero"})

detuning = st.floats(-5, 5).map(lambda x: x * KC)
scale = st.floats(1e-3, 1e3)


def test_zero_coupling_gives_zero():
    p = P1.replace(phototherm={"eta_th_over_gamma": 0.0})
    for d in np.linspace(-3, 3, 13) * KC:
        assert kappa_th(p.at_detuning(d)) == 0.0


def test_no_direct_coupling_resonant_cancellation():
    assert kappa_th(NO_IN) == 0.0


@given(d=detuning, s=scale)
@settings(max_examples=100, deadline=None)
def test_linear_in_power(d, s):
    p = P1.at_detuning(d)
    q = p.replace(drive={"power_in": p.drive.power_in * s})
    assert kappa_th(q) == pytest.approx(s * kappa_th(p), rel=1e-12, abs=0)


@given(d=detuning, s=st.floats(-1e3, 1e3).filter(lambda v: abs(v) > 1e-3))
@settings(max_examples=100, deadline=None)
def test_linear_in_eta(d, s):
    p = P1.at_detuning(d)
    q = p.replace(phototherm={"eta_th_over_gamma": p.phototherm.eta_th_over_gamma * s})
    assert kappa_th(q) == pytest.approx(s * kappa_th(p), rel=1e-12, abs=0)


@given(d=detuning, s=scale)
@settings(max_examples=100, deadline=None)
def test_linear_in_coupling_strength(d, s):
    # geometry-derived Omega_in keeps Omega_in/Omega_c fixed, so only Omega_c^2/gamma changes
    p = P1.at_detuning(d)
    q = p.replace(exciton={"omega_c_coupling": p.exciton.omega_c_coupling * math.sqrt(s)})
    assert kappa_th(q) == pytest.approx(s * kappa_th(p), rel=1e-12, abs=0)


@given(d=detuning)
@settings(max_examples=100, deadline=None)
def test_sign_flip_with_eta(d):
    p = P1.at_detuning(d)
    q = p.replace(phototherm={"eta_th_over_gamma": -p.phototherm.eta_th_over_gamma})
    assert kappa_th(q) == -kappa_th(p)


@given(d=detuning)
@settings(max_examples=100, deadline=None)
def test_antisymmetric_without_direct_coupling(d):
    a, b = kappa_th(NO_IN.at_detuning(d)), kappa_th(NO_IN.at_detuning(-d))
    assert abs(a + b) <= 1e-12 * max(abs(a), abs(b), 1e-300)


def test_geometric_direct_coupling_breaks_antisymmetry():
    grid = np.linspace(0.05, 3, 60) * KC
    a = np.array([kappa_th(P1.at_detuning(d)) for d in grid])
    b = np.array([kappa_th(P1.at_detuning(-d)) for d in grid])
    assert np.max(np.abs(a + b)) > 0.3 * np.max(np.abs(a))


def test_out_of_regime():
    p = P1.replace(phototherm={"tau_th": 1.0 / P1.mech.omega_m})
    with pytest.raises(OutOfRegimeError, match="dynamics"):
        kappa_th(p)
    assert kappa_th(p, min_omega_tau=0.5) != 0


def test_radiation_pressure_limits():
    assert kappa_rp(P1.replace(mech={"g0": 0.0}).at_detuning(-KC)) == 0.0
    assert kappa_rp(P1) == 0.0
    # red detuning (drive below the cavity) damps
    assert kappa_rp(P1.at_detuning(-KC)) > 0
    assert kappa_rp(P1.at_detuning(KC)) < 0


def test_dataset1_red_detuned_regression():
    p = P1.at_detuning(-KC)
    r = cooling_rates(p)
    assert r.kappa_th == pytest.approx(-14.233512556321838, rel=1e-9)
    assert r.kappa_rp / r.kappa_th == pytest.approx(-2.1518e-7, rel=1e-3)
    assert abs(r.kappa_rp) < 1e-5 * abs(r.kappa_th)
    assert r.kappa_eff == pytest.approx(P1.mech.kappa_m + r.kappa_th + r.kappa_rp, rel=1e-15)


def test_dataset1_red_detuned_against_oracle():
    (pt,) = oracle_comparison(P1, [-KC])
    assert pt.oracle_shift == pytest.approx(pt.analytic_shift, rel=0.02)


def test_sweep_order_and_values():
    grid = np.linspace(-2, 2, 9) * KC
    serial = sweep(P1, grid, workers=1)
    parallel = sweep(P1, grid, workers=4)
    assert [d for d, _ in serial] == list(grid)
    assert serial == parallel
    for d, r in serial:
        assert r == cooling_rates(P1.at_detuning(d))


def test_sweep_single_point():
    ((d, r),) = sweep(NO_IN, [0.0])
    assert d == 0.0 and r.kappa_th == 0.0


def test_sweep_antisymmetric_grid():
    res = sweep(NO_IN, [-0.7 * KC, 0.7 * KC])
    a, b = res[0][1].kappa_th, res[1][1].kappa_th
    assert abs(a + b) <= 1e-12 * abs(a)


def test_sweep_error_carries_index():
    p = P1.replace(cavity={"kappa_c": 1.0}, exciton={"gamma": 16.0})
    p = p.replace(exciton={"omega_c_coupling": 0.0, "omega_in_mode": "explicit", "omega_in_coupling": 4j})
    with pytest.raises(SweepError) as err:
        sweep(p, [-1.0, 0.0, 1.0])
    assert err.value.index == 1
    assert err.value.delta_c == 0.0


def test_sweep_rejects_empty_and_nonfinite():
    with pytest.raises(ValueError):
        sweep(P1, [])
    with pytest.raises(ValueError, match="index 2"):
        sweep(P1, [0.0, 1.0, math.nan])


def test_dataset1_dense_sweep_extrema():
    grid = np.linspace(-5, 5, 401) * KC
    th = np.array([r.kappa_th for _, r in sweep(P1, grid)])
    eff = np.array([r.kappa_eff for _, r in sweep(P1, grid)])
    assert int(np.argmax(th)) == 238 and int(np.argmin(th)) == 188
    assert th[238] == pytest.approx(14.274274173780658, rel=1e-9)
    assert th[188] == pytest.approx(-29.86713186316002, rel=1e-9)
    assert grid[238] / KC == pytest.approx(0.95)
    assert grid[188] / KC == pytest.approx(-0.30)
    assert int(np.argmax(eff)) == 238 and int(np.argmin(eff)) == 188
    # the dispersive structure decays away from resonance
    assert abs(th[0]) < 0.05 * abs(th[188]) and abs(th[-1]) < 0.05 * abs(th[188])
