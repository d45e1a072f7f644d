import numpy as np
import pytest

from trifringe import (
    DegenerateScan,
    EmptySeries,
    FringeSeries,
    analyze_fringe,
    estimate_r,
    fidelity_from_lambda,
    fit_cosine,
    fit_fringe,
    fringe_curve,
    net_series,
    v_star,
    visibility,
)
from trifringe.estimation import (
    CENTRAL_PARAMS,
    central_jacobian,
    central_model,
    cosine_model,
)

RNG = np.random.default_rng(2718)


def synthetic_central(lam, ratio, phase_offset=0.0, amplitude=1000.0, background=0.0,
                      start=0.0, periods=3, points_per_period=50, noise_rng=None):
    grid = np.linspace(start, start + periods * 2 * np.pi, periods * points_per_period)
    vals = central_model(grid, lam, ratio, phase_offset, amplitude, background)
    if noise_rng is not None:
        vals = noise_rng.poisson(np.maximum(vals, 0.0)).astype(float)
    return FringeSeries(grid, vals, channel=(0, 0, 0), metadata={"lam": lam, "ratio": ratio})


def synthetic_lateral(lam, omega, phase=0.0, amplitude=1000.0, start=0.0,
                      periods=3, points_per_period=50, noise_rng=None):
    grid = np.linspace(start, start + periods * 2 * np.pi, periods * points_per_period)
    vals = amplitude * (1.0 + lam * np.cos(omega * grid + phase))
    if noise_rng is not None:
        vals = noise_rng.poisson(np.maximum(vals, 0.0)).astype(float)
    peak = 1 if omega > 1.0 else -1
    return FringeSeries(grid, vals, channel=(0, 0, peak), metadata={"lam": lam})


# ---------------------------------------------------------------------------
# exact recovery


def test_exact_recovery_noiseless():
    series = synthetic_central(0.9, 1.0, phase_offset=0.0)
    fit = fit_fringe(series)
    assert fit.converged
    assert fit.lambda_hat == pytest.approx(0.9, abs=1e-8)
    assert fit.r_hat == pytest.approx(1.0, abs=1e-8)
    assert fit.amplitude_scale == pytest.approx(1000.0, rel=1e-8)
    assert abs(fit.background) < 1e-4


def test_exact_recovery_with_offset():
    series = synthetic_central(0.75, 1.05, phase_offset=1.3, amplitude=400.0)
    fit = fit_fringe(series)
    assert fit.converged
    assert fit.lambda_hat == pytest.approx(0.75, abs=1e-7)
    assert fit.r_hat == pytest.approx(1.05, abs=1e-7)
    model = fit.model_values(series.phases)
    assert np.abs(model - series.values).max() < 1e-6


def test_background_degeneracy_documented():
    # floating the background makes the mixing weight unidentifiable: the
    # model depends only on A+B and A*lam, so the fit still reproduces the
    # data exactly while lambda wanders along the flat direction
    series = synthetic_central(0.75, 1.05, amplitude=400.0, background=55.0)
    loose = fit_fringe(series, fit_background=True)
    assert np.abs(loose.model_values(series.phases) - series.values).max() < 1e-5
    # the identifiable route: subtract the floor, freeze the background
    fixed = fit_fringe(net_series(series, 55.0))
    assert fixed.lambda_hat == pytest.approx(0.75, abs=1e-6)


def test_flat_series_flags_unidentifiable_ratio():
    series = synthetic_central(0.0, 1.0, amplitude=500.0)
    fit = fit_fringe(series)
    assert abs(fit.lambda_hat) < 1e-6
    assert not np.isfinite(fit.uncertainties["ratio"]) or fit.uncertainties["ratio"] > 1.0


def test_jacobian_matches_finite_differences():
    s = np.linspace(0, 6 * np.pi, 40)
    for _ in range(100):
        p = np.array([
            RNG.uniform(0.05, 1.0),
            RNG.uniform(0.5, 1.5),
            RNG.uniform(0, 2 * np.pi),
            RNG.uniform(10, 1000),
            RNG.uniform(0, 100),
        ])
        jac = central_jacobian(s, *p)
        for col in range(5):
            h = 1e-6 * max(1.0, abs(p[col]))
            up, down = p.copy(), p.copy()
            up[col] += h
            down[col] -= h
            fd = (central_model(s, *up) - central_model(s, *down)) / (2 * h)
            denom = np.maximum(np.abs(jac[:, col]), 1.0)
            assert np.abs(jac[:, col] - fd).max() / denom.max() < 1e-5


# ---------------------------------------------------------------------------
# visibility and identities


def test_visibility_perfect_fringe():
    series = synthetic_central(1.0, 1.0, amplitude=100.0)
    assert visibility(series) == pytest.approx(1.0, abs=1e-6)


def test_visibility_from_fit_matches_v_star():
    series = synthetic_central(0.9, 1.0, amplitude=1000.0)
    fit = fit_fringe(series)
    assert visibility(series, "from_fit", fit) == pytest.approx(v_star(0.9), abs=1e-6)


def test_visibility_methods_agree_on_noisy_data():
    rng = np.random.default_rng(5)
    series = synthetic_central(0.9, 1.0, amplitude=2000.0, noise_rng=rng)
    fit = fit_fringe(series)
    emp = visibility(series, "empirical")
    mod = visibility(series, "from_fit", fit)
    # counting noise inflates the empirical extremes slightly
    assert abs(emp - mod) < 3 * np.sqrt(2.0 / 2000.0)


def test_visibility_bounds():
    for lam in (0.0, 0.4, 1.0):
        series = synthetic_central(lam, 1.0, amplitude=500.0)
        v = visibility(series)
        assert 0.0 <= v <= 1.0


def test_fidelity_and_vstar_identities():
    assert fidelity_from_lambda(1.0) == pytest.approx(1.0)
    assert fidelity_from_lambda(0.0) == pytest.approx(1.0 / 9.0)
    assert fidelity_from_lambda(0.982) == pytest.approx(0.984, abs=5e-4)
    assert v_star(0.982) == pytest.approx(0.988, abs=5e-4)
    assert v_star(1.0) == pytest.approx(1.0)
    # the ceiling visibility differs from the mixing weight itself
    assert abs(v_star(0.982) - 0.982) > 5e-3


def test_monotonicity():
    grid = np.linspace(0, 1, 101)
    fids = [fidelity_from_lambda(x) for x in grid]
    vs = [v_star(x) for x in grid]
    assert np.all(np.diff(fids) > 0)
    assert np.all(np.diff(vs) > 0)


def test_scale_invariance():
    rng = np.random.default_rng(11)
    series = synthetic_central(0.85, 1.02, amplitude=800.0, background=40.0, noise_rng=rng)
    fit1 = fit_fringe(series)
    scaled = series.with_values(series.values * 7.5)
    fit2 = fit_fringe(scaled)
    assert fit2.lambda_hat == pytest.approx(fit1.lambda_hat, abs=1e-6)
    assert fit2.r_hat == pytest.approx(fit1.r_hat, abs=1e-6)
    assert fit2.amplitude_scale == pytest.approx(7.5 * fit1.amplitude_scale, rel=1e-6)
    assert visibility(scaled) == pytest.approx(visibility(series), abs=1e-12)


def test_net_beats_raw_visibility():
    series = synthetic_central(0.9, 1.0, amplitude=300.0, background=60.0)
    netted = net_series(series, 60.0)
    assert visibility(netted) > visibility(series)
    ident = net_series(series, 0.0)
    assert np.abs(ident.values - series.values).max() == 0.0


def test_net_series_floor():
    series = FringeSeries(np.linspace(0, 7, 10), np.full(10, 3.0))
    netted = net_series(series, 5.0)
    assert np.all(netted.values == 0.0)
    assert netted.metadata["net"] is True


# ---------------------------------------------------------------------------
# lateral fits and the scan ratio


def test_cosine_fit_exact():
    series = synthetic_lateral(0.9, 1.027, phase=0.4, amplitude=500.0)
    fit = fit_cosine(series)
    assert fit.converged
    assert fit.omega == pytest.approx(1.027, abs=1e-8)
    assert fit.offset == pytest.approx(500.0, rel=1e-8)
    assert fit.amplitude == pytest.approx(450.0, rel=1e-6)


def test_estimate_r_identical_frequencies():
    left = synthetic_lateral(0.9, 1.0)
    right = synthetic_lateral(0.9, 1.0, phase=1.0)
    est = estimate_r(left, right)
    assert est.r_hat == pytest.approx(1.0, abs=1e-9)


def test_estimate_r_noisy_recovery():
    hits = 0
    for rep in range(20):
        rng = np.random.default_rng(1000 + rep)
        left = synthetic_lateral(0.982, 1.0, noise_rng=rng)
        right = synthetic_lateral(0.982, 1.027, phase=0.7, noise_rng=rng)
        est = estimate_r(left, right)
        if abs(est.r_hat - 1.027) < 2 * est.sigma:
            hits += 1
    assert hits >= 17


def test_fit_errors():
    with pytest.raises(EmptySeries):
        fit_fringe(FringeSeries(np.array([]), np.array([])))
    short = FringeSeries(np.linspace(0, 6, 5), np.ones(5))
    with pytest.raises(DegenerateScan):
        fit_fringe(short)
    narrow = FringeSeries(np.linspace(0, 3.0, 30), np.ones(30))
    with pytest.raises(DegenerateScan):
        fit_fringe(narrow)
    with pytest.raises(EmptySeries):
        visibility(FringeSeries(np.array([]), np.array([])))


def test_fit_background_frozen_absorbs_floor():
    # with the background frozen at zero a flat floor must fold into a
    # smaller fitted mixing weight: lam_raw = lam / (1 + floor/amplitude)
    amp, floor = 900.0, 175.0
    series = synthetic_central(0.982, 1.0, amplitude=amp, background=floor)
    fit = fit_fringe(series, fit_background=False)
    assert fit.converged
    assert fit.lambda_hat == pytest.approx(0.982 / (1 + floor / amp), abs=1e-6)
    assert fit.amplitude_scale == pytest.approx(amp + floor, rel=1e-6)


def test_analyze_fringe_pipeline():
    rng = np.random.default_rng(31)
    floor = 120.0
    raw = synthetic_central(0.95, 1.01, amplitude=1200.0, background=floor, noise_rng=rng)
    left = synthetic_lateral(0.95, 1.0, noise_rng=rng)
    right = synthetic_lateral(0.95, 1.01, phase=0.3, noise_rng=rng)
    result = analyze_fringe(raw, left, right, accidental=floor)
    assert result.fit_net.converged and result.fit_raw.converged
    assert result.lambda_net == pytest.approx(0.95, abs=0.01)
    assert result.f_net == pytest.approx(fidelity_from_lambda(result.lambda_net))
    assert result.v_star == pytest.approx(v_star(result.lambda_net))
    assert result.r_hat == pytest.approx(1.01, abs=0.01)
    assert result.v_net > result.v_raw
    assert result.f_net > result.f_raw


def test_fringe_curve_consumable_by_fit():
    curve = fringe_curve(np.linspace(0, 6 * np.pi, 150), 1.027, 0.982)
    scaled = curve.with_values(curve.values * 350.0)
    fit = fit_fringe(scaled)
    assert fit.lambda_hat == pytest.approx(0.982, abs=1e-6)
    assert fit.r_hat == pytest.approx(1.027, abs=1e-6)
