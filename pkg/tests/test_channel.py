import numpy as np
import pytest
from numpy.testing import assert_allclose

from satshare.channel import (FadingModel, FlatPattern,
                              ParabolicEnvelopePattern, antenna_gain,
                              build_planner_csi, expected_rate, laa_gain_rows,
                              path_loss, rayleigh_rate_closed_form,
                              sample_fading, tbs_gain_table)
from satshare.geometry import slant_range

# hand-worked link-budget anchors at 2 GHz
FSPL_1M_2GHZ_DB = 38.468383135162995
DISH_PEAK_DBI = 18.535716961752684   # D = 0.5 m, eta = 0.65

# e^(1/g) E1(1/g) / ln 2 with E1 from the A&S 5.1 tables
RAYLEIGH_RATE = {0.0: 0.8603473807197931,
                 10.0: 2.9065148077461185,
                 20.0: 5.884048232899336}


def test_path_loss_free_space_anchor():
    assert_allclose(path_loss(1.0, 2e9), FSPL_1M_2GHZ_DB, rtol=1e-12)
    # +20 dB per decade at exponent 2
    assert_allclose(path_loss(10.0, 2e9) - path_loss(1.0, 2e9), 20.0)
    assert_allclose(path_loss(100.0, 2e9, exponent=3.5)
                    - path_loss(1.0, 2e9, exponent=3.5), 70.0)


def test_path_loss_near_field_clamp():
    assert path_loss(0.25, 2e9) == path_loss(1.0, 2e9)
    with pytest.raises(ValueError):
        path_loss(0.0, 2e9)
    with pytest.raises(ValueError):
        path_loss(1.0, -2e9)


def test_dish_peak_gain_value():
    dish = ParabolicEnvelopePattern(0.5, 2e9, 0.65)
    assert_allclose(dish.peak_gain_dbi, DISH_PEAK_DBI, rtol=1e-12)


def test_parabolic_envelope_regions():
    dish = ParabolicEnvelopePattern(0.5, 2e9, 0.65)
    # D/lambda ~ 3.34, so the main-lobe edge is 100/3.34 ~ 30 degrees
    theta_min = dish.min_angle_deg
    assert_allclose(theta_min, 100.0 * dish.wavelength_m / 0.5)
    assert antenna_gain(dish, 0.0) == dish.peak_gain_dbi
    assert antenna_gain(dish, 0.5 * theta_min) == dish.peak_gain_dbi
    mid = 0.5 * (theta_min + 48.0)
    assert_allclose(antenna_gain(dish, mid), 32.0 - 25.0 * np.log10(mid))
    assert antenna_gain(dish, 48.0) == -10.0
    assert antenna_gain(dish, 180.0) == -10.0


def test_envelope_monotone_nonincreasing():
    dish = ParabolicEnvelopePattern(0.5, 2e9, 0.65)
    theta = np.linspace(0.0, 180.0, 721)
    g = antenna_gain(dish, theta)
    assert np.all(np.diff(g) <= 1e-12)


def test_flat_pattern_broadcast():
    g = antenna_gain(FlatPattern(25.0), np.array([0.0, 10.0, 90.0]))
    assert_allclose(g, 25.0)


def test_antenna_gain_rejects_bad_angles():
    with pytest.raises(ValueError):
        antenna_gain(FlatPattern(0.0), -1.0)
    with pytest.raises(ValueError):
        antenna_gain(FlatPattern(0.0), np.nan)


def test_fading_unit_mean():
    draws = {
        "rayleigh": sample_fading(FadingModel("rayleigh"), 200_000, 1),
        "rician": sample_fading(FadingModel("rician", 10.0), 200_000, 2),
        "shadowed": sample_fading(FadingModel("rician", 10.0, 6.0), 400_000, 3),
    }
    for name, h in draws.items():
        assert np.all(h >= 0.0), name
        assert_allclose(np.mean(h), 1.0, rtol=2e-2), name


def test_rician_huge_k_is_deterministic():
    h = sample_fading(FadingModel("rician", 200.0), 1000, 4)
    assert_allclose(h, 1.0, rtol=1e-9)


def test_rician_variance_shrinks_with_k():
    v10 = np.var(sample_fading(FadingModel("rician", 10.0), 100_000, 5))
    v20 = np.var(sample_fading(FadingModel("rician", 20.0), 100_000, 5))
    vray = np.var(sample_fading(FadingModel("rayleigh"), 100_000, 5))
    assert v20 < v10 < vray


def test_fading_reproducible_and_stream_continuation():
    model = FadingModel("rayleigh")
    assert_allclose(sample_fading(model, 64, 7), sample_fading(model, 64, 7))
    rng = np.random.default_rng(0)
    a = sample_fading(model, 64, rng)
    b = sample_fading(model, 64, rng)
    assert not np.array_equal(a, b)  # generator advances


def test_unknown_fading_kind():
    with pytest.raises(ValueError):
        sample_fading(FadingModel("nakagami"), 8, 0)


def test_closed_form_anchor_values():
    # anchors carry the A&S tables' 9-digit truncation, hence the rtol
    for snr_db, want in RAYLEIGH_RATE.items():
        assert_allclose(rayleigh_rate_closed_form(snr_db), want, rtol=1e-7)


def test_expected_rate_matches_rayleigh_closed_form():
    """Monte Carlo against e^(1/g)E1(1/g)/ln2 at 0/10/20 dB mean SNR."""
    for snr_db, want in RAYLEIGH_RATE.items():
        got = expected_rate(signal_gain_db=snr_db, tx_power_dbm=0.0,
                            interferers=(), signal_fading=FadingModel("rayleigh"),
                            noise_dbm=0.0, n_samples=100_000, seed=11)
        assert abs(got - want) / want < 1e-2


def test_expected_rate_interference_hurts():
    clean = expected_rate(10.0, 0.0, (), FadingModel("rayleigh"), -30.0,
                          20_000, 13)
    noisy = expected_rate(10.0, 0.0, ((5.0, 0.0, FadingModel("rayleigh")),),
                          FadingModel("rayleigh"), -30.0, 20_000, 13)
    assert noisy < clean


def test_deterministic_high_k_sinr_oracle():
    """With near-deterministic fading the MC mean collapses to log2(1+SINR)."""
    det = FadingModel("rician", 200.0)
    got = expected_rate(7.0, 3.0, ((0.0, 0.0, det),), det, 0.0, 100, 17)
    sinr = 10.0 ** (1.0) / (1.0 + 1.0)  # 10 dB signal over noise + equal interferer
    assert_allclose(got, np.log2(1.0 + sinr), rtol=1e-6)


def test_planner_csi_shapes_and_serving_diagonal(small_topology, small_config,
                                                 small_csi):
    n = small_config.n_links
    u = small_config.n_laa
    m = small_config.n_tbs
    assert small_csi.g_sat_db.shape == (u,)
    assert small_csi.g_int_db.shape == (u, n)
    assert small_csi.g_cross_db.shape == (m, n)
    assert small_csi.g_ter_db.shape == (n,)
    serving = small_topology.serving_tbs()
    assert_allclose(small_csi.g_cross_db[serving, np.arange(n)],
                    small_csi.g_ter_db)


def test_cross_gain_link_budget_hand_check(small_topology, small_config,
                                           small_csi):
    d = slant_range(small_topology.tbs[2], small_topology.tu_flat[5])
    want = (small_config.tbs_tx_gain_dbi + small_config.tu_rx_gain_dbi
            - path_loss(d, 2e9, small_config.terrestrial_pathloss_exp, 1.0))
    assert_allclose(small_csi.g_cross_db[2, 5], want, rtol=1e-12)


def test_laa_gain_rows_match_full_table(small_topology, small_config,
                                        small_csi):
    g_sat, g_int = laa_gain_rows(small_topology.laa[3], small_topology,
                                 small_config)
    assert g_sat == small_csi.g_sat_db[3]
    assert np.array_equal(g_int, small_csi.g_int_db[3])


def test_tbs_gain_table_consistency(small_topology, small_config, small_csi):
    g_cross, g_ter = tbs_gain_table(small_topology, small_config)
    assert np.array_equal(g_cross, small_csi.g_cross_db)
    assert np.array_equal(g_ter, small_csi.g_ter_db)


def test_satellite_gain_budget_hand_check(small_topology, small_config):
    """g_sat = dish peak + satellite gain - path loss at the slant range."""
    u = 2
    d = slant_range(small_topology.laa[u], small_topology.satellite)
    want = (DISH_PEAK_DBI + small_config.sat_rx_gain_dbi
            - path_loss(d, 2e9, 2.0, 1.0))
    g_sat, _ = laa_gain_rows(small_topology.laa[u], small_topology,
                             small_config)
    assert_allclose(g_sat, want, rtol=1e-12)
