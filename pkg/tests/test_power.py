"""Power control: aircraft caps, flags, station sweep/refinement."""

from types import SimpleNamespace

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from satshare.config import ScenarioConfig
from satshare.power import (
    PowerAllocation,
    candidate_co_channel_tus,
    control_all_laa_powers,
    laa_power_control,
    set_tbs_powers,
    tbs_power_objective,
    validate_powers,
    verify_interference,
)
from satshare.scheduling import CarrierAssignment, tu_carrier_quotas

BOUNDS = (-3.0, 2.0)
GAMMA = -126.2


def _csi(g_int_rows):
    return SimpleNamespace(g_int_db=np.asarray(g_int_rows, dtype=float))


# ---------------------------------------------------------------------------
# per-aircraft caps


def test_cap_interior_of_window():
    # gamma - g_int = -126.2 + 156.2 = 30 dBm -> 0 dBW, no flags
    p, flags = laa_power_control(0, [0], _csi([[-156.2]]), BOUNDS, GAMMA)
    assert_allclose(p, 0.0, atol=1e-12)
    assert flags == ()


def test_cap_clips_at_max_power():
    p, flags = laa_power_control(0, [0], _csi([[-170.0]]), BOUNDS, GAMMA)
    assert p == 2.0  # cap 43.8 dBm is far above the 32 dBm ceiling
    assert flags == ()


def test_cap_exactly_at_max_power():
    p, flags = laa_power_control(0, [0], _csi([[-158.2]]), BOUNDS, GAMMA)
    assert_allclose(p, 2.0, atol=1e-12)
    assert flags == ()


def test_cap_below_minimum_flags_violation():
    # cap 6.2 dBm < 27 dBm floor; excess at the floor is 33.2 dB
    p, flags = laa_power_control(3, [[0]], _csi(np.full((4, 1), -120.0)),
                                 BOUNDS, GAMMA)
    assert p == -3.0
    assert flags == ((3, 0),)


def test_cap_binds_on_worst_user_and_flags_selectively():
    # caps 30 / 23.8 dBm: the second user drives p to the floor but only
    # it is violated there (excess -3 dB vs +3.2 dB)
    p, flags = laa_power_control(0, [0, 1], _csi([[-156.2, -150.0]]),
                                 BOUNDS, GAMMA)
    assert p == -3.0
    assert flags == ((0, 1),)


def test_no_co_channel_users_means_full_power():
    p, flags = laa_power_control(0, [], _csi([[-120.0]]), BOUNDS, GAMMA)
    assert p == 2.0
    assert flags == ()


def test_inverted_bounds_raise():
    with pytest.raises(ValueError):
        laa_power_control(0, [0], _csi([[-150.0]]), (2.0, -3.0), GAMMA)


def test_power_monotone_in_user_set():
    rng = np.random.default_rng(8)
    g = rng.uniform(-165.0, -140.0, size=(1, 6))
    csi = _csi(g)
    p_small, f_small = laa_power_control(0, [0, 1], csi, BOUNDS, GAMMA)
    p_big, f_big = laa_power_control(0, [0, 1, 2, 3, 4, 5], csi, BOUNDS,
                                     GAMMA)
    assert p_big <= p_small
    assert set(f_small) <= set(f_big)


# ---------------------------------------------------------------------------
# candidate user sets


def test_candidate_sets_hand_case():
    config = ScenarioConfig(n_tbs=1, tus_per_tbs=4, n_laa=2, n_carriers=2)
    topo = SimpleNamespace(n_tbs=1, reuse_colors=np.zeros(1, dtype=np.int64))
    csi = _csi([[-150.0, -160.0, -140.0, -155.0],
                [-151.0, -141.0, -161.0, -131.0]])
    carriers = CarrierAssignment(
        carrier_of_cluster=np.arange(2), cluster_of_carrier=np.arange(2),
        carrier_of_laa=np.array([0, 1]))
    buckets = candidate_co_channel_tus(topo, csi, carriers, config)
    # carrier 0's aircraft sees users [1, 3] least; carrier 1 then takes
    # the leftovers in its own exposure order
    assert_array_equal(buckets[0], [1, 3])
    assert_array_equal(buckets[1], [0, 2])


def test_candidate_sets_partition_with_quota_sizes(small_topology, small_csi,
                                                   small_config):
    carriers = CarrierAssignment(
        carrier_of_cluster=np.arange(4), cluster_of_carrier=np.arange(4),
        carrier_of_laa=np.array([0, 0, 1, 1, 2, 2, 3, 3]))
    buckets = candidate_co_channel_tus(small_topology, small_csi, carriers,
                                       small_config)
    quotas = tu_carrier_quotas(small_config.tus_per_tbs, 4)
    m = small_topology.n_tbs
    assert [len(b) for b in buckets] == [int(q) * m for q in quotas]
    allmem = np.sort(np.concatenate(buckets))
    assert_array_equal(allmem, np.arange(small_config.tus_per_tbs * m))
    # ...and per station each carrier holds exactly its quota, so the
    # candidate sets embed one feasible quota-respecting assignment
    v = small_config.tus_per_tbs
    for b in range(m):
        for c, bucket in enumerate(buckets):
            n_here = np.sum((bucket >= b * v) & (bucket < (b + 1) * v))
            assert n_here == quotas[c]


def test_control_all_matches_per_aircraft_calls():
    config = ScenarioConfig(n_tbs=1, tus_per_tbs=4, n_laa=2, n_carriers=2)
    csi = _csi([[-150.0, -160.0, -140.0, -155.0],
                [-120.0, -141.0, -161.0, -131.0]])
    carriers = CarrierAssignment(
        carrier_of_cluster=np.arange(2), cluster_of_carrier=np.arange(2),
        carrier_of_laa=np.array([0, 1]))
    candidates = [np.array([1, 3]), np.array([0, 2])]
    p, flags = control_all_laa_powers(csi, carriers, candidates, config)
    exp0, f0 = laa_power_control(0, [1, 3], csi, BOUNDS, GAMMA)
    exp1, f1 = laa_power_control(1, [0, 2], csi, BOUNDS, GAMMA)
    assert_allclose(p, [exp0, exp1])
    assert flags == tuple(sorted(f0 + f1))
    assert flags == ((1, 0),)  # aircraft 1 is 33.2 dB over at user 0


# ---------------------------------------------------------------------------
# station powers


def test_uniform_station_powers(small_csi, small_config):
    p = set_tbs_powers(small_config, csi=small_csi)
    assert p.shape == (small_csi.g_ter_db.shape[0],)
    assert np.all(p == small_config.tbs_power_dbm)
    p2 = set_tbs_powers(small_config, n_links=7)
    assert p2.shape == (7,)


def test_refinement_drives_every_link_to_max(small_csi, small_draws,
                                             small_config):
    # interference-free planner rates are separable and strictly
    # increasing in own power, so coordinate ascent must end at the top
    # of the {0, 2, ..., 10} dBm grid for every link
    cfg = small_config.replace(tbs_power_dbm=4.0, tbs_power_refinement=True)
    p = set_tbs_powers(cfg, csi=small_csi, draws=small_draws)
    assert np.all(p == cfg.tbs_power_max_dbm)


def test_refinement_never_hurts_objective(small_csi, small_draws,
                                          small_config):
    cfg = small_config.replace(tbs_power_dbm=6.0, tbs_power_refinement=True)
    uniform = np.full(small_csi.g_ter_db.shape[0], 6.0)
    refined = set_tbs_powers(cfg, csi=small_csi, draws=small_draws)
    assert (tbs_power_objective(refined, small_csi, small_draws, cfg)
            >= tbs_power_objective(uniform, small_csi, small_draws, cfg))


def test_refinement_requires_planner_inputs(small_config):
    cfg = small_config.replace(tbs_power_refinement=True)
    with pytest.raises(ValueError):
        set_tbs_powers(cfg, n_links=4)


def test_objective_monotone_in_uniform_power(small_csi, small_draws,
                                             small_config):
    vals = [tbs_power_objective(np.full(24, v), small_csi, small_draws,
                                small_config) for v in (0.0, 5.0, 10.0)]
    assert vals[0] < vals[1] < vals[2]


# ---------------------------------------------------------------------------
# plan-level verification and the allocation container


def test_verify_interference_hand_case():
    plan = SimpleNamespace(n_carriers=2,
                           carrier_of_laa=np.array([0, 1]),
                           carrier_of_tu=np.array([0, 1]))
    csi = _csi([[-150.0, -160.0],
                [-170.0, -170.0]])
    powers = PowerAllocation(p_laa_dbw=np.array([-3.0, -3.0]),
                             p_tbs_dbm=np.zeros(2))
    flags = verify_interference(plan, powers, csi, GAMMA)
    # only the co-channel pair (0, 0) is 3.2 dB over; aircraft 0 vs user
    # 1 would be fine anyway but is on another carrier entirely
    assert flags == ((0, 0),)


def test_verify_interference_idle_satellite():
    plan = SimpleNamespace(n_carriers=2, carrier_of_laa=None,
                           carrier_of_tu=np.array([0, 1]))
    powers = PowerAllocation(p_laa_dbw=np.empty(0), p_tbs_dbm=np.zeros(2))
    assert verify_interference(plan, powers, _csi(np.empty((0, 2))),
                               GAMMA) == ()


def test_validate_powers(small_config):
    good = PowerAllocation(p_laa_dbw=np.array([-3.0, 2.0]),
                           p_tbs_dbm=np.array([0.0, 10.0]),
                           violation_flags=((0, 1), (1, 0)))
    validate_powers(good, small_config)
    with pytest.raises(ValueError):
        validate_powers(PowerAllocation(np.array([2.1]), np.array([5.0])),
                        small_config)
    with pytest.raises(ValueError):
        validate_powers(PowerAllocation(np.array([0.0]), np.array([-0.5])),
                        small_config)
    with pytest.raises(ValueError):
        validate_powers(PowerAllocation(np.array([0.0]), np.array([5.0]),
                                        ((1, 0), (0, 1))), small_config)
