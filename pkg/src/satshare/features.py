"""Interference-impact feature vectors for aircraft-satellite links.

The planner summarizes each aircraft u by the expected rates of all N
ground links under u's interference at its maximum and minimum allowable
transmit power: a vector of 2N entries (even index = max power, odd =
min power).  Aircraft with similar footprints end up close in L1
distance, which is what the balanced clustering consumes.

Monte Carlo design: fading draws are keyed per ground link (and per
interfering transmitter), not per aircraft, and are shared across
aircraft and power levels (common random numbers).  Two aircraft at the
same position therefore get *identical* vectors, entry differences
reflect interference rather than sampling noise, and more interference
can never raise an entry.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import PlannerCsi
from .config import ScenarioConfig
from .geometry import Topology
from .seeding import derive_rng

__all__ = [
    "PlannerDraws",
    "planner_draws",
    "link_rate_matrix",
    "interference_free_rates",
    "degraded_rate",
    "build_feature_vector",
    "build_feature_matrix",
    "feature_distance",
]

_LN2 = np.log(2.0)


@dataclass
class PlannerDraws:
    """Cached unit-mean fading draws for planner-side Monte Carlo.

    ``cross_unit[n, s]`` is the co-channel downlink interference gain sum
    (linear, unit transmit power) already folded over interfering TBSs,
    so scaling by the uniform TBS power reproduces the full term.
    """

    n_samples: int
    sig: np.ndarray         # (N, S) serving-link |h|^2, Rayleigh
    laa: np.ndarray         # (N, S) aircraft-interference |h|^2, Rayleigh
    cross_unit: np.ndarray  # (N, S) sum_m g_cross_lin * |h|^2, or zeros


def planner_draws(csi: PlannerCsi, topology: Topology, config: ScenarioConfig,
                  scenario_seed: int, n_samples=None) -> PlannerDraws:
    """Draw all planner-side fading, keyed by (scenario seed, link)."""
    s = int(n_samples if n_samples is not None else config.planner_samples)
    n = csi.g_ter_db.shape[0]
    sig = np.empty((n, s))
    laa = np.empty((n, s))
    for link in range(n):
        sig[link] = derive_rng(scenario_seed, "planner-sig", link).exponential(1.0, s)
        laa[link] = derive_rng(scenario_seed, "planner-laa", link).exponential(1.0, s)
    cross = np.zeros((n, s))
    if config.include_cross_tbs:
        serving = topology.serving_tbs()
        colors = topology.reuse_colors
        g_cross_lin = 10.0 ** (csi.g_cross_db / 10.0)
        for link in range(n):
            b = serving[link]
            for m in range(topology.n_tbs):
                if m == b or colors[m] != colors[b]:
                    continue
                draw = derive_rng(scenario_seed, "planner-cross", link, m).exponential(1.0, s)
                cross[link] += g_cross_lin[m, link] * draw
    return PlannerDraws(n_samples=s, sig=sig, laa=laa, cross_unit=cross)


def _rate_rows(sig, laa, cross_unit, g_ter_lin, g_int_lin, p_tbs_lin, p_laa_lin,
               noise_mw) -> np.ndarray:
    """Mean log2(1 + SINR) over trailing sample axis; shared by the
    batch and the single-pair paths so both agree bit for bit.

    ``p_tbs_lin`` may be per-link; the cross-station term then uses the
    mean power, since the aggregate draw is folded at unit power and
    per-interferer resolution is gone by design.
    """
    p_tbs = np.asarray(p_tbs_lin, dtype=float)
    p_cross = float(np.mean(p_tbs)) if p_tbs.ndim else float(p_tbs)
    signal = (p_tbs * g_ter_lin)[..., None] * sig
    interference = (p_laa_lin * g_int_lin)[..., None] * laa + p_cross * cross_unit
    return np.mean(np.log1p(signal / (noise_mw + interference)), axis=-1) / _LN2


def link_rate_matrix(draws: PlannerDraws, csi: PlannerCsi, config: ScenarioConfig,
                     laa_power_dbw, tbs_power_dbm=None) -> np.ndarray:
    """Expected rate of every ground link under each aircraft's
    interference at the given power(s): shape ``(U, N)``, b/s/Hz.

    ``laa_power_dbw`` may be a scalar or one value per aircraft;
    ``tbs_power_dbm`` a scalar or one value per link.
    """
    p_tbs = config.tbs_power_dbm if tbs_power_dbm is None else tbs_power_dbm
    p_tbs_lin = 10.0 ** (p_tbs / 10.0)
    p_laa_lin = np.atleast_1d(10.0 ** ((np.asarray(laa_power_dbw, dtype=float) + 30.0) / 10.0))
    n_laa = csi.g_int_db.shape[0]
    if p_laa_lin.shape[0] == 1:
        p_laa_lin = np.repeat(p_laa_lin, n_laa)
    g_ter_lin = 10.0 ** (csi.g_ter_db / 10.0)
    g_int_lin = 10.0 ** (csi.g_int_db / 10.0)
    noise = config.noise_power_mw
    rates = np.empty((n_laa, csi.g_ter_db.shape[0]))
    for u in range(n_laa):
        rates[u] = _rate_rows(draws.sig, draws.laa, draws.cross_unit,
                              g_ter_lin, g_int_lin[u], p_tbs_lin, p_laa_lin[u], noise)
    return rates


def interference_free_rates(draws: PlannerDraws, csi: PlannerCsi,
                            config: ScenarioConfig, tbs_power_dbm=None) -> np.ndarray:
    """Expected link rates with the satellite side silent, shape (N,)."""
    p_tbs = config.tbs_power_dbm if tbs_power_dbm is None else tbs_power_dbm
    p_tbs_lin = 10.0 ** (p_tbs / 10.0)
    g_ter_lin = 10.0 ** (csi.g_ter_db / 10.0)
    return _rate_rows(draws.sig, np.zeros_like(draws.laa), draws.cross_unit,
                      g_ter_lin, np.zeros(csi.g_ter_db.shape[0]), p_tbs_lin, 0.0,
                      config.noise_power_mw)


def degraded_rate(link: int, aircraft: int, laa_power_dbw: float, csi: PlannerCsi,
                  topology: Topology, config: ScenarioConfig, scenario_seed: int,
                  draws: PlannerDraws = None) -> float:
    """Expected rate of one ground link under one aircraft's interference.

    Deterministic in ``(link, aircraft, scenario_seed)``; see the module
    docstring for the common-random-number seeding layout.
    """
    n = csi.g_ter_db.shape[0]
    if not 0 <= link < n:
        raise IndexError(f"link index {link} out of range")
    if not 0 <= aircraft < csi.g_int_db.shape[0]:
        raise IndexError(f"aircraft index {aircraft} out of range")
    if draws is None:
        s = config.planner_samples
        sig = derive_rng(scenario_seed, "planner-sig", link).exponential(1.0, s)
        laa = derive_rng(scenario_seed, "planner-laa", link).exponential(1.0, s)
        cross = np.zeros(s)
        if config.include_cross_tbs:
            serving = topology.serving_tbs()
            colors = topology.reuse_colors
            b = serving[link]
            g_cross_lin = 10.0 ** (csi.g_cross_db[:, link] / 10.0)
            for m in range(topology.n_tbs):
                if m == b or colors[m] != colors[b]:
                    continue
                cross += g_cross_lin[m] * derive_rng(
                    scenario_seed, "planner-cross", link, m).exponential(1.0, s)
    else:
        sig, laa, cross = draws.sig[link], draws.laa[link], draws.cross_unit[link]
    p_tbs_lin = 10.0 ** (config.tbs_power_dbm / 10.0)
    p_laa_lin = 10.0 ** ((laa_power_dbw + 30.0) / 10.0)
    g_ter_lin = 10.0 ** (csi.g_ter_db[link] / 10.0)
    g_int_lin = 10.0 ** (csi.g_int_db[aircraft, link] / 10.0)
    return float(_rate_rows(sig, laa, cross, g_ter_lin, g_int_lin,
                            p_tbs_lin, p_laa_lin, config.noise_power_mw))


def _qos_mask(csi: PlannerCsi, config: ScenarioConfig, laa_power_dbw: float) -> np.ndarray:
    """True where planner-CSI interference would break the QoS threshold."""
    return (laa_power_dbw + 30.0) + csi.g_int_db > config.qos_threshold_dbm


def build_feature_vector(aircraft: int, csi: PlannerCsi, topology: Topology,
                         config: ScenarioConfig, scenario_seed: int,
                         draws: PlannerDraws = None) -> np.ndarray:
    """Length-2N footprint of one aircraft: even entries at max power,
    odd at min power.  With the QoS penalty enabled, entries whose
    planner-CSI interference exceeds the threshold are clamped to zero
    (the link would be vetoed, so its usable rate is none)."""
    matrix = build_feature_matrix(csi, topology, config, scenario_seed,
                                  aircraft_subset=[aircraft], draws=draws)
    return matrix[0]


def build_feature_matrix(csi: PlannerCsi, topology: Topology, config: ScenarioConfig,
                         scenario_seed: int, aircraft_subset=None,
                         draws: PlannerDraws = None) -> np.ndarray:
    """Feature vectors for all (or selected) aircraft, shape (U, 2N)."""
    if draws is None:
        draws = planner_draws(csi, topology, config, scenario_seed)
    subset = (np.arange(csi.g_int_db.shape[0]) if aircraft_subset is None
              else np.asarray(aircraft_subset, dtype=int))
    sub_csi = PlannerCsi(g_sat_db=csi.g_sat_db[subset], g_ter_db=csi.g_ter_db,
                         g_int_db=csi.g_int_db[subset], g_cross_db=csi.g_cross_db)
    p_max, p_min = config.laa_power_max_dbw, config.laa_power_min_dbw
    hi = link_rate_matrix(draws, sub_csi, config, p_max)
    lo = link_rate_matrix(draws, sub_csi, config, p_min)
    if config.feature_qos_penalty:
        hi = np.where(_qos_mask(sub_csi, config, p_max), 0.0, hi)
        lo = np.where(_qos_mask(sub_csi, config, p_min), 0.0, lo)
    features = np.empty((subset.shape[0], 2 * csi.g_ter_db.shape[0]))
    features[:, 0::2] = hi
    features[:, 1::2] = lo
    return features


def feature_distance(a, b) -> float:
    """L1 distance between two feature vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"feature shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sum(np.abs(a - b)))
