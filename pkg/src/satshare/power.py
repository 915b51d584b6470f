"""Transmit power control under the interference QoS threshold.

Aircraft maximize their satellite-uplink power subject to keeping the
interference they inject into every co-channel downlink user below the
threshold at planner CSI; base-station powers are a swept scenario
parameter, with an optional coordinate-ascent refinement.  Both are
greedy-per-entity by design: uplink rate is monotone in own power and
aircraft do not interfere with each other's satellite links here, so
per-aircraft maximization is optimal given the schedule.

The threshold is enforced per interferer: under TDMA only one aircraft
transmits per carrier at any instant, so per-pair and aggregate
constraints coincide within any instant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import interference_free_rates
from .scheduling import (FEASIBILITY_GUARD_DB, allowed_carriers,
                         tu_carrier_quotas)

__all__ = [
    "PowerAllocation",
    "laa_power_control",
    "candidate_co_channel_tus",
    "control_all_laa_powers",
    "set_tbs_powers",
    "tbs_power_objective",
    "verify_interference",
    "validate_powers",
]

# Refinement sweeps links over this dBm step until a full pass changes
# nothing; the cap only guards against float-tie pathologies.
REFINEMENT_STEP_DBM = 2.0
MAX_REFINEMENT_SWEEPS = 50


@dataclass(frozen=True)
class PowerAllocation:
    """Controlled transmit powers plus the violations they could not fix.

    ``violation_flags`` is a sorted tuple of (aircraft, link) pairs whose
    planner-CSI interference exceeds the threshold even at the chosen
    powers; for every co-channel pair *not* flagged the threshold holds.
    """

    p_laa_dbw: np.ndarray   # (U,)
    p_tbs_dbm: np.ndarray   # (N,)
    violation_flags: tuple = ()


def validate_powers(powers: PowerAllocation, config) -> None:
    p_laa = np.asarray(powers.p_laa_dbw, dtype=float)
    p_tbs = np.asarray(powers.p_tbs_dbm, dtype=float)
    tol = 1e-12
    if p_laa.size and (p_laa.min() < config.laa_power_min_dbw - tol or
                       p_laa.max() > config.laa_power_max_dbw + tol):
        raise ValueError("aircraft power outside configured bounds")
    if p_tbs.size and (p_tbs.min() < config.tbs_power_min_dbm - tol or
                       p_tbs.max() > config.tbs_power_max_dbm + tol):
        raise ValueError("station power outside configured bounds")
    if tuple(sorted(powers.violation_flags)) != tuple(powers.violation_flags):
        raise ValueError("violation flags must be sorted")


def laa_power_control(aircraft: int, co_channel_tus, csi, bounds,
                      gamma_th_dbm: float):
    """Largest in-bounds power keeping every co-channel user below the
    interference threshold at planner CSI.

    ``bounds`` is (min, max) in dBW.  Returns ``(power_dbw, flags)``:
    when even the minimum power violates some user, the minimum is
    returned and each violated (aircraft, link) pair is flagged.
    """
    lo, hi = float(bounds[0]), float(bounds[1])
    if lo > hi:
        raise ValueError(f"empty power range [{lo}, {hi}]")
    tus = np.asarray(co_channel_tus, dtype=np.int64).reshape(-1)
    if tus.size == 0:
        return hi, ()
    caps_dbm = gamma_th_dbm - csi.g_int_db[aircraft, tus]
    p_dbm = min(hi + 30.0, float(caps_dbm.min()))
    if p_dbm >= lo + 30.0:
        return p_dbm - 30.0, ()
    excess = (lo + 30.0) + csi.g_int_db[aircraft, tus] - gamma_th_dbm
    flags = tuple((int(aircraft), int(n))
                  for n, e in zip(tus, excess) if e > FEASIBILITY_GUARD_DB)
    return lo, flags


def candidate_co_channel_tus(topology, csi, carriers, config) -> list:
    """Likely co-channel users per carrier, for power pre-control.

    Powers must be set before the downlink assignment exists, so each
    aircraft is capped against the users most likely to share its
    carrier: per station and allowed carrier (ascending), the quota-many
    still-unclaimed users with the smallest worst-case exposure to that
    carrier's aircraft (ties to the lowest user id).  Because the sets
    contain exactly one quota-respecting assignment per station, the
    caps keep at least one fully feasible schedule in existence.
    """
    k = config.n_carriers
    v = config.tus_per_tbs
    allowed = allowed_carriers(topology.reuse_colors, k, config.reuse_factor)
    quotas = tu_carrier_quotas(v, allowed.shape[1])
    buckets = [[] for _ in range(k)]
    for b in range(topology.n_tbs):
        ids = b * v + np.arange(v, dtype=np.int64)
        used = np.zeros(v, dtype=bool)
        for idx, carrier in enumerate(allowed[b]):
            members = carriers.laas_on_carrier(int(carrier))
            if members.size:
                exposure = csi.g_int_db[np.ix_(members, ids)].max(axis=0)
            else:
                exposure = np.zeros(v)
            order = np.argsort(exposure, kind="stable")
            take = [int(i) for i in order if not used[i]][:int(quotas[idx])]
            used[take] = True
            buckets[int(carrier)].extend(int(ids[i]) for i in take)
    return [np.array(sorted(bucket), dtype=np.int64) for bucket in buckets]


def control_all_laa_powers(csi, carriers, candidate_tus, config):
    """Per-aircraft power control against its carrier's candidate users.

    Returns ``(p_laa_dbw (U,), flags)`` with flags sorted; flags here are
    provisional (relative to the candidate sets) — the plan-level report
    comes from :func:`verify_interference` after assignment.
    """
    n_laa = carriers.carrier_of_laa.shape[0]
    bounds = (config.laa_power_min_dbw, config.laa_power_max_dbw)
    gamma = config.qos_threshold_dbm
    p = np.empty(n_laa)
    flags = []
    for u in range(n_laa):
        tus = candidate_tus[int(carriers.carrier_of_laa[u])]
        p[u], fl = laa_power_control(u, tus, csi, bounds, gamma)
        flags.extend(fl)
    return p, tuple(sorted(flags))


def tbs_power_objective(p_tbs_dbm, csi, draws, config) -> float:
    """Planner-CSI sum of expected downlink rates, satellite side silent."""
    rates = interference_free_rates(draws, csi, config,
                                    tbs_power_dbm=np.asarray(p_tbs_dbm,
                                                             dtype=float))
    return float(rates.sum())


def set_tbs_powers(config, *, csi=None, draws=None, n_links=None) -> np.ndarray:
    """Per-user station powers in dBm.

    Default: uniform at the configured sweep value.  With
    ``tbs_power_refinement`` on, each user's power is coordinate-ascended
    over the {min, min+2, ..., max} dBm grid against the planner-CSI sum
    rate until a full sweep changes nothing (ties keep the lowest power).
    Refinement is off by default so the sweep axis keeps its meaning of
    a uniform power setting.
    """
    value = float(config.tbs_power_dbm)
    if not (config.tbs_power_min_dbm - 1e-12 <= value
            <= config.tbs_power_max_dbm + 1e-12):
        raise ValueError(
            f"station power {value} dBm outside "
            f"[{config.tbs_power_min_dbm}, {config.tbs_power_max_dbm}] dBm")
    if n_links is None:
        n_links = csi.g_ter_db.shape[0] if csi is not None else config.n_links
    p = np.full(int(n_links), value)
    if not config.tbs_power_refinement:
        return p
    if csi is None or draws is None:
        raise ValueError("power refinement needs planner CSI and fading draws")

    grid = np.arange(config.tbs_power_min_dbm,
                     config.tbs_power_max_dbm + 1e-9, REFINEMENT_STEP_DBM)
    best = tbs_power_objective(p, csi, draws, config)
    for _sweep in range(MAX_REFINEMENT_SWEEPS):
        changed = False
        for link in range(p.shape[0]):
            keep = p[link]
            for candidate in grid:
                if candidate == keep:
                    continue
                p[link] = candidate
                objective = tbs_power_objective(p, csi, draws, config)
                if objective > best + 1e-15:
                    best = objective
                    keep = candidate
                    changed = True
            p[link] = keep
        if not changed:
            break
    return p


def verify_interference(plan, powers: PowerAllocation, csi,
                        gamma_th_dbm: float) -> tuple:
    """Every co-channel (aircraft, link) pair above the threshold at
    planner CSI, sorted.  An idle satellite side reports nothing."""
    if plan.carrier_of_laa is None:
        return ()
    p_dbm = np.asarray(powers.p_laa_dbw, dtype=float) + 30.0
    pairs = []
    for carrier in range(plan.n_carriers):
        aircraft = np.nonzero(plan.carrier_of_laa == carrier)[0]
        links = np.nonzero(plan.carrier_of_tu == carrier)[0]
        if aircraft.size == 0 or links.size == 0:
            continue
        excess = (p_dbm[aircraft, None]
                  + csi.g_int_db[np.ix_(aircraft, links)] - gamma_th_dbm)
        uu, nn = np.nonzero(excess > FEASIBILITY_GUARD_DB)
        pairs.extend((int(aircraft[i]), int(links[j])) for i, j in zip(uu, nn))
    return tuple(sorted(pairs))
