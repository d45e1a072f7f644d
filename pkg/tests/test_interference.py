import numpy as np
import pytest

from trifringe import (
    IDEAL,
    PEAKS,
    TRITTER_PHASE,
    FringeSeries,
    InterferometerGeometry,
    PhaseSettings,
    RegimeViolation,
    build_tritter,
    central_state,
    coincidence_rate,
    conditioned_central_state,
    eq_rate,
    fringe_curve,
    imbalance_fractions,
    lateral_rate,
    oracle_joint_distribution,
    phase_pair,
    scan_settings,
    validate_regime,
)
from trifringe.states import lateral_phase

T = TRITTER_PHASE
RNG = np.random.default_rng(42)
GEOM = InterferometerGeometry()
IDEAL_T = build_tritter(IDEAL)


def random_phases(rng=RNG):
    return PhaseSettings(
        alpha=tuple(rng.uniform(0, 2 * np.pi, 3)), beta=tuple(rng.uniform(0, 2 * np.pi, 3))
    )


# ---------------------------------------------------------------------------
# closed-form rates


def test_rate_maximum():
    assert eq_rate(0.0, 0.0, 1.0) == pytest.approx(3.0)


def test_rate_minimum_location():
    # brute grid search: the cosine triple bottoms out at -3/2 at (+-2t, +-2t)
    grid = np.linspace(0, 2 * np.pi, 721)
    a, b = np.meshgrid(grid, grid)
    vals = np.cos(a) + np.cos(b) + np.cos(a + b)
    idx = np.unravel_index(np.argmin(vals), vals.shape)
    assert vals[idx] == pytest.approx(-1.5, abs=1e-4)
    spots = np.argwhere(vals < vals[idx] + 1e-4)
    locations = {(round(grid[i] / T, 1), round(grid[j] / T, 1)) for i, j in spots}
    assert locations <= {(1.0, 1.0), (2.0, 2.0)}
    assert eq_rate(2 * np.pi / 3, 2 * np.pi / 3, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_rate_flat_at_zero_mixing():
    for _ in range(10):
        assert coincidence_rate(random_phases(), 0.0, (1, 2)) == pytest.approx(1.0)


def test_rate_bounds_and_normalization():
    for _ in range(300):
        phases = random_phases()
        lam = RNG.uniform(0, 1)
        rates = [coincidence_rate(phases, lam, (j, k)) for j in range(3) for k in range(3)]
        assert min(rates) >= 1 - lam - 1e-10
        assert max(rates) <= 1 + 2 * lam + 1e-10
        assert sum(rates) == pytest.approx(9.0, abs=1e-10)


def test_lateral_rate_endpoints():
    # theta = 0 and pi at lambda = 1 give 2 and 0
    phases = PhaseSettings(alpha=(0.0, T, 0.0))  # right theta = t - t = 0
    assert lateral_rate(phases, 1.0, (0, 0), "right") == pytest.approx(2.0)
    phases_pi = PhaseSettings(alpha=(0.0, T + np.pi, 0.0))
    assert lateral_rate(phases_pi, 1.0, (0, 0), "right") == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# path-amplitude oracle


def test_oracle_matches_closed_form_central():
    for _ in range(250):
        phases = random_phases()
        lam = float(RNG.choice([0.0, 0.3, 0.7, 1.0]))
        dist = oracle_joint_distribution(GEOM, phases, IDEAL_T, IDEAL_T, lam)
        cond = dist.detector_table(0)
        for j in range(3):
            for k in range(3):
                assert cond[j, k] == pytest.approx(
                    coincidence_rate(phases, lam, (j, k)) / 9.0, abs=1e-12
                )


def test_oracle_matches_closed_form_lateral():
    for _ in range(250):
        phases = random_phases()
        lam = float(RNG.uniform(0, 1))
        dist = oracle_joint_distribution(GEOM, phases, IDEAL_T, IDEAL_T, lam)
        for side, peak in (("right", 1), ("left", -1)):
            cond = dist.detector_table(peak)
            for j in range(3):
                for k in range(3):
                    assert cond[j, k] == pytest.approx(
                        lateral_rate(phases, lam, (j, k), side) / 9.0, abs=1e-12
                    )


def test_oracle_peak_marginals_exact():
    for _ in range(20):
        phases = random_phases()
        lam = float(RNG.uniform(0, 1))
        dist = oracle_joint_distribution(GEOM, phases, IDEAL_T, IDEAL_T, lam)
        assert np.abs(dist.peak_marginals() - np.array([1, 2, 3, 2, 1]) / 9.0).max() < 1e-12


def test_outer_peaks_phase_independent():
    ref = oracle_joint_distribution(GEOM, PhaseSettings(), IDEAL_T, IDEAL_T, 1.0)
    outer_ref = ref.table[:, :, [0, 4]]
    for _ in range(50):
        dist = oracle_joint_distribution(GEOM, random_phases(), IDEAL_T, IDEAL_T, 1.0)
        assert np.abs(dist.table[:, :, [0, 4]] - outer_ref).max() < 1e-12


def test_oracle_table_sums_to_one_with_imbalance():
    trit = build_tritter(imbalance_fractions(0.10))
    for _ in range(10):
        dist = oracle_joint_distribution(GEOM, random_phases(), trit, trit, 0.7)
        assert dist.table.sum() == pytest.approx(1.0, abs=1e-12)
        assert dist.table.min() >= 0


def test_oracle_conditioned_state_matches_central_state():
    # at lambda = 1 the central-peak detected state factors into the nine
    # per-channel states; check channel (0,0) against the state algebra
    for _ in range(10):
        phases = random_phases()
        psi = conditioned_central_state(phases, IDEAL_T, IDEAL_T)
        dist = oracle_joint_distribution(GEOM, phases, IDEAL_T, IDEAL_T, 1.0)
        cond = dist.detector_table(0)
        # detected-state probabilities reproduce the conditional table
        assert np.abs((np.abs(psi) ** 2).reshape(3, 3) - cond).max() < 1e-12


def test_conditioned_state_imbalance_fidelity():
    # coupler imbalance barely degrades the post-selected entangled state
    for dev, ceiling in ((0.05, 0.005), (0.10, 0.01)):
        trit = build_tritter(imbalance_fractions(dev))
        worst = 1.0
        for _ in range(20):
            phases = random_phases()
            ideal = conditioned_central_state(phases, IDEAL_T, IDEAL_T)
            imb = conditioned_central_state(phases, trit, trit)
            worst = min(worst, abs(np.vdot(ideal, imb)) ** 2)
        assert 1.0 - worst < ceiling


def test_regime_violation_raises():
    bad = InterferometerGeometry(photon_coherence_length=0.24)
    with pytest.raises(RegimeViolation):
        oracle_joint_distribution(bad, PhaseSettings(), IDEAL_T, IDEAL_T, 1.0)
    dist = oracle_joint_distribution(
        bad, PhaseSettings(), IDEAL_T, IDEAL_T, 1.0, allow_regime_violation=True
    )
    assert dist.table.sum() == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# scan helper and fringe curves


def test_scan_settings_drive_phase_pair():
    for s in (0.0, 1.3, 9.7):
        for ratio in (1.0, 1.027):
            settings = scan_settings(s, ratio)
            pp = phase_pair(settings, (0, 0))
            assert (pp.phi_r - ratio * s) % (2 * np.pi) == pytest.approx(0.0, abs=1e-9) or (
                pp.phi_r - ratio * s
            ) % (2 * np.pi) == pytest.approx(2 * np.pi, abs=1e-9)
            assert np.cos(pp.phi_l) == pytest.approx(np.cos(s), abs=1e-12)
            assert np.sin(pp.phi_l) == pytest.approx(np.sin(s), abs=1e-12)


def test_fringe_curve_matches_rates_via_scan():
    grid = np.linspace(0, 4 * np.pi, 60)
    for channel in [(0, 0, 0), (1, 2, 0)]:
        curve = fringe_curve(grid, 1.027, 0.9, channel=channel)
        j, k, _ = channel
        direct = [
            coincidence_rate(scan_settings(float(s), 1.027), 0.9, (j, k)) for s in grid
        ]
        assert np.abs(curve.values - np.array(direct)).max() < 1e-10


def test_lateral_fringe_curve_matches_rates():
    grid = np.linspace(0, 4 * np.pi, 60)
    for peak, side in ((1, "right"), (-1, "left")):
        curve = fringe_curve(grid, 1.027, 0.9, channel=(0, 0, peak))
        direct = [
            lateral_rate(scan_settings(float(s), 1.027), 0.9, (0, 0), side) for s in grid
        ]
        assert np.abs(curve.values - np.array(direct)).max() < 1e-10


def test_fringe_visibility_identity_r1():
    grid = np.linspace(0, 2 * np.pi, 2001)
    curve = fringe_curve(grid, 1.0, 0.9)
    v = (curve.values.max() - curve.values.min()) / (curve.values.max() + curve.values.min())
    assert v == pytest.approx(3 * 0.9 / 2.9, abs=1e-4)
    assert curve.values.max() == pytest.approx(1 + 2 * 0.9, abs=1e-6)
    assert curve.values.min() == pytest.approx(1 - 0.9, abs=1e-6)


def test_offset_window_visibility_gap():
    # on a scan window far from phase zero the ratio mismatch keeps the
    # fringe away from its true extrema: observed V sits well below V*
    lam, ratio = 0.982, 1.027
    grid = np.linspace(172.15, 172.15 + 6 * np.pi, 4000)
    curve = fringe_curve(grid, ratio, lam)
    v = (curve.values.max() - curve.values.min()) / (curve.values.max() + curve.values.min())
    v_ceiling = 3 * lam / (2 + lam)
    assert v == pytest.approx(0.92, abs=0.015)
    assert v < v_ceiling - 0.05


def test_three_fold_symmetry_translation():
    # channels (0,0), (0,1), (0,2) are cyclic translations by 2*pi/3 at r = 1
    n_per = 700
    grid = np.linspace(0, 6 * np.pi, 3 * n_per, endpoint=False)
    curves = [fringe_curve(grid, 1.0, 0.982, channel=(0, k, 0)).values for k in range(3)]
    step = grid[1] - grid[0]
    for k in (1, 2):
        corr = np.fft.ifft(np.fft.fft(curves[k]) * np.conj(np.fft.fft(curves[0]))).real
        lag = int(np.argmax(corr)) * step
        lag = min(lag % (2 * np.pi), 2 * np.pi - lag % (2 * np.pi))
        assert lag == pytest.approx(2 * np.pi / 3, abs=0.02)


def test_fringe_curve_validation():
    with pytest.raises(ValueError):
        fringe_curve(np.array([]), 1.0, 0.9)
    with pytest.raises(ValueError):
        fringe_curve(np.linspace(0, 1, 5), np.inf, 0.9)
    with pytest.raises(ValueError):
        fringe_curve(np.linspace(0, 1, 5), 1.0, 0.9, channel=(0, 0, 2))


def test_fringe_series_validation():
    with pytest.raises(ValueError):
        FringeSeries(phases=np.array([0.0, 0.0]), values=np.array([1.0, 2.0]))


# ---------------------------------------------------------------------------
# regime checks


def test_regime_margins_reference_values():
    report = validate_regime(GEOM)
    assert report.ok
    assert report.margins["photon"] == pytest.approx(0.24 / 45e-6, rel=1e-6)
    assert report.margins["pump"] == pytest.approx(100.0 / 0.24, rel=1e-6)


def test_regime_photon_coherence_too_long():
    geom = InterferometerGeometry(photon_coherence_length=0.24)
    report = validate_regime(geom)
    assert not report.single_photon_interference_suppressed
    assert not report.ok


def test_regime_pump_coherence_too_short():
    geom = InterferometerGeometry(pump_coherence_length=1.0)
    report = validate_regime(geom)
    # margin 1.0 / 0.24 is about 4.2, below the factor-10 bar
    assert not report.pump_coherent_over_paths
    assert report.margins["pump"] == pytest.approx(4.17, abs=0.01)


def test_geometry_mismatch_rejected():
    with pytest.raises(ValueError):
        InterferometerGeometry(arms_alice=(1.0, 1.24, 1.50))


def test_lateral_phase_channel_structure():
    # lateral fringise phases shift by t per detector class like the central ones
    phases = random_phases()
    base = lateral_phase(phases, (0, 0), "right")
    for j, k in [(1, 0), (2, 0)]:
        shifted = lateral_phase(phases, (j, k), "right")
        delta = (shifted - base - T * (j - k)) % (2 * np.pi)
        assert min(delta, 2 * np.pi - delta) < 1e-12
