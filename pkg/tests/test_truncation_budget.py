import math
import warnings

import numpy as np
import pytest

from sfwiener import basis
from sfwiener.basis import BasisConfig
from sfwiener.precondition import ScalingFunction, transform
from sfwiener.spectral_model import Asymptotics, make_scale_free_example
from sfwiener.toeplitz import ToeplitzSystem, solve
from sfwiener.truncation_budget import (
    BandWarning,
    band_limited_toeplitz_coeffs,
    choose_scale,
    compute_budget,
    delta_s_bound,
    delta_t_bound,
    delta_t_bound_optimal,
    fit_envelopes,
    n_max,
    relative_filter_errors,
    u_cutoffs,
)

SCALE_FREE_BAND = (2 * math.pi / 1600, 512 * math.pi)


def test_choose_scale():
    assert choose_scale(1, 100) == pytest.approx(10)
    assert choose_scale(*SCALE_FREE_BAND) == pytest.approx(2.51, abs=0.005)
    for bad in ((5, 5), (0, 1), (3, 2)):
        with pytest.raises(ValueError):
            choose_scale(*bad)


def test_delta_t_bound_worked_value():
    wm, wM = 1.0, 1e4
    w0 = choose_scale(wm, wM)
    assert delta_t_bound_optimal(math.pi, wm, wM) == pytest.approx(0.04, rel=1e-12)
    assert delta_t_bound(math.pi, wm, wM, w0) == pytest.approx(0.04, rel=0.01)


def test_general_and_optimal_forms_agree_for_wide_bands():
    for ratio in (1e-4, 1e-6, 1e-8):
        wM = 1 / math.sqrt(ratio)
        wm = math.sqrt(ratio)
        assert delta_t_bound(2.0, wm, wM, 1.0) == pytest.approx(delta_t_bound_optimal(2.0, wm, wM), rel=0.01)


def test_delta_t_bound_vanishes_for_infinite_band():
    vals = [delta_t_bound(1.0, 10.0**-k, 10.0**k, 1.0) for k in (2, 4, 8, 12)]
    assert np.all(np.diff(vals) < 0) and vals[-1] < 1e-11


def test_delta_t_bound_warns_near_band_edge():
    with pytest.warns(BandWarning):
        delta_t_bound(1.0, 1.0, 100.0, 2.0)


def test_n_max():
    assert n_max(1, 1, 1e6) == 1000
    assert n_max(10, 1, 1e4) == 10
    assert n_max(1e9, 1, 10) == 1
    with pytest.raises(ValueError):
        n_max(0.5, 1, 10)


def test_delta_s_bound_cases():
    asym = Asymptotics(2, 0, 0, 1.8, 0.01, 5, A_x_bar=0.0, B_x_bar=0.0)
    assert delta_s_bound(asym, 0.1, 3.0) == 0.0
    asym = Asymptotics(2, 0, 0, 1.8, 0.01, 5, A_x_bar=1.0, B_x_bar=1.0)
    vals = [delta_s_bound(asym, *u_cutoffs(10.0**-k, 10.0**k, 1.0)) for k in (1, 3, 6, 9)]
    assert np.all(np.diff(vals) < 0) and vals[-1] < 1e-8
    with pytest.raises(ValueError):
        delta_s_bound(Asymptotics(2, 0, 1.0, 0.0, 1, 1, A_x_bar=1.0, B_x_bar=1.0), 0.1, 3.0)


def test_delta_s_bound_grows_as_band_shrinks(scale_free):
    _, _, S_yy, S_xy = scale_free
    tp = transform(S_xy, S_yy, ScalingFunction(0.0, 0.9, 5.0))
    asym = Asymptotics.from_pair(S_xy, S_yy)
    wm, wM = SCALE_FREE_BAND
    prev = 0.0
    for k in range(6):
        lo = wm * 2**k
        A, B = fit_envelopes(tp.S_xy_prime, asym, lo, wM)
        env = Asymptotics(asym.alpha_x, asym.alpha_y, asym.beta_x, asym.beta_y, asym.A_y, asym.B_y, A, B)
        val = delta_s_bound(env, *u_cutoffs(lo, wM, 5.0))
        assert math.isfinite(val) and val > prev
        prev = val


def test_relative_errors_saturate_at_n_max():
    wm, wM, kappa = 1.0, 1e6, 2.5
    n = n_max(kappa, wm, wM)
    _, _, via_kappa = relative_filter_errors(n, 1.0, 0.0, 1.0, kappa, 1.0, wm, wM)
    assert via_kappa == pytest.approx(4 / math.pi, rel=0.01)
    rel_y, rel_x, _ = relative_filter_errors(n, 0.0, 0.0, 1.0, kappa, 1.0, wm, wM)
    assert rel_y == 0 and rel_x == 0
    with pytest.raises(ValueError):
        relative_filter_errors(n, 1.0, 1.0, 1.0, kappa, 0.0, wm, wM)


def test_x_error_vanishes_faster_for_strengthened_exponents():
    # 2 beta_x - beta_y < 0 and 2 alpha_x - alpha_y > 2
    asym = Asymptotics(2, 0, 0, 1.8, 0.01, 5, A_x_bar=1.0, B_x_bar=1.0)
    ratios = []
    for k in (2, 3, 4, 5):
        wm, wM = 10.0**-k, 10.0**k
        dt = delta_t_bound(1.0, wm, wM, 1.0)
        ds = delta_s_bound(asym, *u_cutoffs(wm, wM, 1.0))
        ry, rx, _ = relative_filter_errors(10, dt, ds, 0.5, 2.0, 1.0, wm, wM)
        ratios.append(rx / ry)
    assert np.all(np.diff(ratios) < 0)
    assert ratios[-1] < 0.1 * ratios[0]


def test_band_limited_generator_error_scales_with_root_band_ratio():
    _, _, S_yy, S_xy = make_scale_free_example(support=(1e-12, 1e12))
    tp = transform(S_xy, S_yy, ScalingFunction(0.0, 0.9, 5.0))
    scaled = []
    for R in (1e2, 1e3, 1e4, 1e5):
        band = (5 / math.sqrt(R), 5 * math.sqrt(R))
        wide = (band[0] / 100, band[1] * 100)
        d = np.max(np.abs(band_limited_toeplitz_coeffs(tp.S_yy_prime, 5.0, band, 64)
                          - band_limited_toeplitz_coeffs(tp.S_yy_prime, 5.0, wide, 64)))
        scaled.append(d * math.sqrt(R))
    assert max(scaled) / min(scaled) < 2


def test_budget_for_scale_free_example(scale_free):
    _, _, S_yy, S_xy = scale_free
    tp = transform(S_xy, S_yy, ScalingFunction(0.0, 0.9, 5.0))
    cs = basis.compute_coefficients(tp.S_yy_prime, tp.S_xy_prime, BasisConfig(5.0, 100, 1 << 16))
    b = compute_budget(Asymptotics.from_pair(S_xy, S_yy), tp.S_xy_prime, tp.bounds, cs.s, 100, SCALE_FREE_BAND, 5.0)
    assert b.delta_t_bound >= 0 and b.n_max >= 1
    assert b.dominant in ("y", "x")
    assert set(b.to_dict()) >= {"omega_m", "omega_M", "omega_0", "delta_t_bound", "delta_s_bound", "rel_err_y", "rel_err_x", "n_max"}


def test_budget_bound_is_conservative(scale_free):
    """Measured change from shrinking the data band sits below the bound."""
    _, _, S_yy, S_xy = scale_free
    tp = transform(S_xy, S_yy, ScalingFunction(0.0, 0.9, 5.0))
    n = 8
    cs = basis.compute_coefficients(tp.S_yy_prime, tp.S_xy_prime, BasisConfig(5.0, n, 1 << 16))
    h_wide = solve(ToeplitzSystem(cs.t, cs.s))
    t_band = band_limited_toeplitz_coeffs(tp.S_yy_prime, 5.0, SCALE_FREE_BAND, n)
    h_band = solve(ToeplitzSystem(t_band, cs.s))
    measured = np.linalg.norm(h_band - h_wide) / np.linalg.norm(h_wide)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        b = compute_budget(Asymptotics.from_pair(S_xy, S_yy), tp.S_xy_prime, tp.bounds, cs.s, n, SCALE_FREE_BAND, 5.0)
    assert measured <= b.rel_err_y
