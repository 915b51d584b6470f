"""Coarse-synchronized TDMA scheduling.

Satellite uplinks and terrestrial downlinks sharing a carrier agree only
on the interval boundaries 0 and T.  Inside the interval each side packs
its own back-to-back serving slices, so a single satellite slice can
straddle several downlink slots and vice versa; every rate computation
therefore goes through an explicit slice-overlap matrix instead of
assuming aligned slots.

The assignment machinery is deliberately exact: cluster-to-carrier
mapping is a fixed deterministic rule, and the per-base-station user
scheduling is a quota-constrained linear assignment solved by a
hand-rolled Hungarian routine (first-minimum tie-breaking, so reruns are
bit-identical).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import interference_free_rates, link_rate_matrix, planner_draws

__all__ = [
    "TimeSliceLayout",
    "build_time_slices",
    "overlap_matrix",
    "CarrierAssignment",
    "assign_satellite_clusters",
    "allowed_carriers",
    "tu_carrier_quotas",
    "hungarian",
    "SchedulePlan",
    "build_schedule_plan",
    "validate_plan",
    "plan_digest",
    "tu_slot_utilities",
    "assign_tbs_tu_links",
    "pair_satellite_windows",
]

# Interference caps are computed in dB and compared in dB; a pair sitting
# exactly on the threshold may land a hair above it after the round trip
# through the power cap, so "violated" means exceeding by more than this.
FEASIBILITY_GUARD_DB = 1e-9

# Additive big-M cost per threshold-violating placement.  Utilities are
# spectral efficiencies (tens at most) and excesses are dB (hundreds at
# most), so the penalty ladder below keeps the assignment lexicographic:
# first minimize the number of violating placements, then their total dB
# excess, then maximize utility.
VIOLATION_PENALTY = 1.0e9
EXCESS_WEIGHT = 1.0e3

SATELLITE = "satellite"
TERRESTRIAL = "terrestrial"


# ---------------------------------------------------------------------------
# time-slice layouts


@dataclass(frozen=True)
class TimeSliceLayout:
    """Back-to-back serving slices of one side of one carrier.

    ``link_ids[i]`` transmits during ``[starts[i], starts[i] +
    durations[i])``; slices tile ``[0, span_s)`` exactly.  An empty
    layout is a valid idle carrier.
    """

    carrier: int
    side: str
    link_ids: np.ndarray   # (S,) int64, in transmission order
    starts: np.ndarray     # (S,) seconds
    durations: np.ndarray  # (S,) seconds
    span_s: float

    @property
    def n_slices(self) -> int:
        return self.link_ids.shape[0]

    @property
    def ends(self) -> np.ndarray:
        return self.starts + self.durations


def _layout_from_sequence(ordered_ids, span_s: float, weights=None, *,
                          carrier: int = 0, side: str = TERRESTRIAL) -> TimeSliceLayout:
    """Slice [0, span) for links in the *given* order (no sorting)."""
    if side not in (SATELLITE, TERRESTRIAL):
        raise ValueError(f"unknown layout side: {side!r}")
    span = float(span_s)
    if not np.isfinite(span) or span <= 0.0:
        raise ValueError(f"interval length must be positive, got {span_s!r}")
    ids = np.asarray(ordered_ids, dtype=np.int64).reshape(-1)
    if np.unique(ids).shape[0] != ids.shape[0]:
        raise ValueError("duplicate link ids in one layout")
    if ids.shape[0] == 0:
        empty = np.empty(0)
        return TimeSliceLayout(int(carrier), side, ids, empty, empty.copy(), span)
    if weights is None:
        w = np.ones(ids.shape[0])
    else:
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.shape[0] != ids.shape[0]:
            raise ValueError("one weight per link id required")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise ValueError("slice weights must be positive and finite")
    cum = np.concatenate(([0.0], np.cumsum(w)))
    bounds = span * (cum / cum[-1])  # bounds[0] = 0 and bounds[-1] = span exactly
    return TimeSliceLayout(int(carrier), side, ids,
                           bounds[:-1], np.diff(bounds), span)


def build_time_slices(link_ids, span_s: float, weights=None, *,
                      carrier: int = 0, side: str = TERRESTRIAL) -> TimeSliceLayout:
    """TDMA layout over [0, span): ascending link id, durations
    proportional to ``weights`` (equal when omitted).

    The ascending-id order is the round-robin convention used
    everywhere a transmission order is not explicitly optimized.
    """
    ids = np.asarray(link_ids, dtype=np.int64).reshape(-1)
    order = np.argsort(ids, kind="stable")
    w = None
    if weights is not None:
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.shape[0] != ids.shape[0]:
            raise ValueError("one weight per link id required")
        w = w[order]
    return _layout_from_sequence(ids[order], span_s, w, carrier=carrier, side=side)


def overlap_matrix(sat: TimeSliceLayout, ter: TimeSliceLayout) -> np.ndarray:
    """Pairwise overlap durations, shape (sat slices, ter slices).

    Row sums reproduce satellite slice durations and column sums the
    terrestrial ones whenever both sides tile the interval, so the total
    is the interval length — the conservation property the realized-rate
    accounting relies on.
    """
    if abs(sat.span_s - ter.span_s) > 1e-9 * max(1.0, sat.span_s):
        raise ValueError(
            f"layouts cover different intervals: {sat.span_s} vs {ter.span_s}")
    lo = np.maximum(sat.starts[:, None], ter.starts[None, :])
    hi = np.minimum(sat.ends[:, None], ter.ends[None, :])
    return np.clip(hi - lo, 0.0, None)


# ---------------------------------------------------------------------------
# cluster -> carrier mapping


@dataclass(frozen=True)
class CarrierAssignment:
    """Satellite-side carrier bookkeeping.

    ``carrier_of_cluster[c]`` is the carrier serving cluster ``c``;
    ``cluster_of_carrier`` is its inverse; ``carrier_of_laa[u]`` the
    carrier aircraft ``u`` transmits on.
    """

    carrier_of_cluster: np.ndarray
    cluster_of_carrier: np.ndarray
    carrier_of_laa: np.ndarray

    def laas_on_carrier(self, carrier: int) -> np.ndarray:
        """Aircraft ids on a carrier, ascending."""
        return np.nonzero(self.carrier_of_laa == carrier)[0]


def assign_satellite_clusters(cluster_set, n_carriers: int,
                              reuse_factor: int = 1) -> CarrierAssignment:
    """Map balanced clusters onto carriers, one cluster per carrier.

    Full reuse: cluster id = carrier id.  Partial reuse with factor F:
    carriers split into F contiguous blocks of K/F; the fine clusters of
    coarse group f occupy block f, lowest cluster id to lowest carrier.
    """
    k = int(n_carriers)
    clusters = cluster_set.clusters
    if len(clusters) != k:
        raise ValueError(f"need one cluster per carrier: {len(clusters)} != {k}")
    f = int(reuse_factor)
    if f <= 1:
        carrier_of_cluster = np.arange(k, dtype=np.int64)
    else:
        if k % f != 0:
            raise ValueError(f"carrier count {k} not divisible by reuse factor {f}")
        coarse = cluster_set.coarse_labels
        if coarse is None:
            raise ValueError("partial reuse requires hierarchical clusters")
        coarse = np.asarray(coarse, dtype=np.int64)
        if coarse.shape[0] != k:
            raise ValueError("one coarse label per cluster required")
        counts = np.bincount(coarse, minlength=f)
        if coarse.min() < 0 or coarse.max() >= f or np.any(counts != k // f):
            raise ValueError(
                f"coarse labels must tile {f} groups of {k // f} clusters, "
                f"got counts {counts.tolist()}")
        block = k // f
        carrier_of_cluster = np.empty(k, dtype=np.int64)
        offset = np.zeros(f, dtype=np.int64)
        for c in range(k):  # ascending cluster id -> ascending carrier in block
            g = coarse[c]
            carrier_of_cluster[c] = g * block + offset[g]
            offset[g] += 1

    members = [np.asarray(m, dtype=np.int64) for m in clusters]
    n_laa = int(sum(m.shape[0] for m in members))
    flat = np.sort(np.concatenate([m for m in members if m.size] or
                                  [np.empty(0, dtype=np.int64)]))
    if not np.array_equal(flat, np.arange(n_laa)):
        raise ValueError("clusters must partition the aircraft indices")
    carrier_of_laa = np.empty(n_laa, dtype=np.int64)
    for c, m in enumerate(members):
        carrier_of_laa[m] = carrier_of_cluster[c]

    cluster_of_carrier = np.empty(k, dtype=np.int64)
    cluster_of_carrier[carrier_of_cluster] = np.arange(k, dtype=np.int64)
    return CarrierAssignment(carrier_of_cluster=carrier_of_cluster,
                             cluster_of_carrier=cluster_of_carrier,
                             carrier_of_laa=carrier_of_laa)


def allowed_carriers(reuse_colors, n_carriers: int, reuse_factor: int = 1) -> np.ndarray:
    """Carriers each base station may schedule on, shape (M, K/F).

    Under partial reuse a station of color c is confined to the c-th
    contiguous block of K/F carriers; full reuse allows all carriers.
    """
    colors = np.asarray(reuse_colors, dtype=np.int64)
    k = int(n_carriers)
    f = max(1, int(reuse_factor))
    if k % f != 0:
        raise ValueError(f"carrier count {k} not divisible by reuse factor {f}")
    if f == 1:
        return np.tile(np.arange(k, dtype=np.int64), (colors.shape[0], 1))
    if colors.min() < 0 or colors.max() >= f:
        raise ValueError("reuse color outside [0, F)")
    block = k // f
    return colors[:, None] * block + np.arange(block, dtype=np.int64)[None, :]


def tu_carrier_quotas(n_tus: int, n_allowed: int) -> np.ndarray:
    """Per-carrier user quotas: V/|allowed| each, earlier carriers get
    the remainder (documented rounding)."""
    if n_allowed <= 0:
        raise ValueError("need at least one allowed carrier")
    base, extra = divmod(int(n_tus), int(n_allowed))
    q = np.full(n_allowed, base, dtype=np.int64)
    q[:extra] += 1
    return q


# ---------------------------------------------------------------------------
# linear assignment


def hungarian(cost, maximize: bool = False) -> np.ndarray:
    """Exact linear assignment via shortest augmenting paths.

    ``cost[i, j]`` is the price of giving row i column j; requires
    rows <= columns (pad the matrix if you have more rows) and finite
    entries.  Returns the assigned column per row.  Ties are broken by
    the first minimum, so the result is deterministic.
    """
    c = np.array(cost, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError("cost must be a 2-D matrix")
    n, m = c.shape
    if n == 0:
        return np.empty(0, dtype=np.int64)
    if n > m:
        raise ValueError(f"more rows than columns ({n} > {m}); pad the matrix")
    if not np.all(np.isfinite(c)):
        raise ValueError("assignment costs must be finite")
    if maximize:
        c = -c

    u = np.zeros(n)                       # row potentials
    v = np.zeros(m + 1)                   # column potentials (last = virtual)
    matched = np.full(m + 1, -1, dtype=np.int64)  # column -> row

    for i in range(n):
        matched[m] = i
        j_cur = m
        min_slack = np.full(m, np.inf)
        path_from = np.full(m, m, dtype=np.int64)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j_cur] = True
            row = matched[j_cur]
            slack = c[row] - u[row] - v[:m]
            better = ~used[:m] & (slack < min_slack)
            min_slack[better] = slack[better]
            path_from[better] = j_cur
            free = np.nonzero(~used[:m])[0]
            j_next = free[np.argmin(min_slack[free])]
            delta = min_slack[j_next]
            u[matched[used]] += delta
            v[used] -= delta
            min_slack[~used[:m]] -= delta
            j_cur = j_next
            if matched[j_cur] == -1:
                break
        while j_cur != m:  # flip the alternating path
            j_prev = path_from[j_cur]
            matched[j_cur] = matched[j_prev]
            j_cur = j_prev

    col_of_row = np.empty(n, dtype=np.int64)
    cols = np.nonzero(matched[:m] >= 0)[0]
    col_of_row[matched[cols]] = cols
    return col_of_row


# ---------------------------------------------------------------------------
# schedule plans


@dataclass(frozen=True)
class SchedulePlan:
    """One interval's complete sharing schedule.

    ``cluster_of_carrier`` is None for schemes that never cluster, and
    ``carrier_of_laa`` is None when the satellite side is idle (the
    no-sharing baseline).  ``ter_layouts[b]`` holds one layout per
    allowed carrier of station b (ascending carrier), and
    ``overlaps[b]`` the matching satellite-vs-downlink overlap matrices.
    """

    n_carriers: int
    carrier_of_laa: np.ndarray       # (U,) or None
    carrier_of_tu: np.ndarray        # (N,)
    cluster_of_carrier: np.ndarray   # (K,) or None
    sat_layouts: tuple               # K TimeSliceLayout
    ter_layouts: tuple               # M tuples of TimeSliceLayout
    overlaps: tuple                  # M tuples of (S_sat, S_ter) arrays

    @property
    def n_tbs(self) -> int:
        return len(self.ter_layouts)

    @property
    def span_s(self) -> float:
        return self.sat_layouts[0].span_s


def build_schedule_plan(topology, config, carrier_of_laa, carrier_of_tu, *,
                        cluster_of_carrier=None, sat_sequences=None) -> SchedulePlan:
    """Assemble layouts and overlap matrices from carrier assignments.

    ``sat_sequences``, when given, fixes the satellite transmission
    order per carrier (FineSync's re-paired windows); the default is
    ascending aircraft id.  Downlink order is always ascending user id.
    """
    span = config.sync_interval_s
    k = config.n_carriers
    tu_carrier = np.asarray(carrier_of_tu, dtype=np.int64)

    sat_layouts = []
    for carrier in range(k):
        if sat_sequences is not None:
            ids = np.asarray(sat_sequences[carrier], dtype=np.int64)
            sat_layouts.append(_layout_from_sequence(
                ids, span, carrier=carrier, side=SATELLITE))
        elif carrier_of_laa is None:
            sat_layouts.append(build_time_slices(
                [], span, carrier=carrier, side=SATELLITE))
        else:
            members = np.nonzero(np.asarray(carrier_of_laa) == carrier)[0]
            sat_layouts.append(build_time_slices(
                members, span, carrier=carrier, side=SATELLITE))

    allowed = allowed_carriers(topology.reuse_colors, k, config.reuse_factor)
    v = config.tus_per_tbs
    ter_layouts = []
    overlaps = []
    for b in range(topology.n_tbs):
        ids_b = b * v + np.arange(v, dtype=np.int64)
        row_layouts = []
        row_overlaps = []
        for carrier in allowed[b]:
            subset = ids_b[tu_carrier[ids_b] == carrier]
            layout = build_time_slices(subset, span, carrier=int(carrier),
                                       side=TERRESTRIAL)
            row_layouts.append(layout)
            row_overlaps.append(overlap_matrix(sat_layouts[carrier], layout))
        ter_layouts.append(tuple(row_layouts))
        overlaps.append(tuple(row_overlaps))

    laa_arr = None if carrier_of_laa is None else np.asarray(carrier_of_laa,
                                                             dtype=np.int64)
    cluster_arr = None if cluster_of_carrier is None else np.asarray(
        cluster_of_carrier, dtype=np.int64)
    return SchedulePlan(n_carriers=k, carrier_of_laa=laa_arr,
                        carrier_of_tu=tu_carrier,
                        cluster_of_carrier=cluster_arr,
                        sat_layouts=tuple(sat_layouts),
                        ter_layouts=tuple(ter_layouts),
                        overlaps=tuple(overlaps))


def _check_tiling(layout: TimeSliceLayout, span: float) -> None:
    if abs(layout.span_s - span) > 1e-9 * max(1.0, span):
        raise ValueError(f"layout span {layout.span_s} != interval {span}")
    if layout.n_slices == 0:
        return
    if layout.starts[0] != 0.0 or layout.ends[-1] != layout.span_s:
        raise ValueError("slices do not span the interval")
    if np.any(layout.durations <= 0.0):
        raise ValueError("non-positive slice duration")
    if not np.array_equal(layout.starts[1:], layout.ends[:-1]):
        raise ValueError("slices leave gaps or overlap")


def validate_plan(plan: SchedulePlan, topology, config) -> None:
    """Raise if any structural schedule invariant is broken."""
    span = config.sync_interval_s
    k = config.n_carriers
    v = config.tus_per_tbs
    n = topology.n_tbs * v

    tu_carrier = plan.carrier_of_tu
    if tu_carrier.shape != (n,):
        raise ValueError(f"carrier_of_tu shape {tu_carrier.shape} != ({n},)")
    allowed = allowed_carriers(topology.reuse_colors, k, config.reuse_factor)
    for b in range(topology.n_tbs):
        own = tu_carrier[b * v:(b + 1) * v]
        if not np.all(np.isin(own, allowed[b])):
            raise ValueError(f"station {b} schedules users off its reuse color")
        quotas = tu_carrier_quotas(v, allowed.shape[1])
        counts = np.array([(own == c).sum() for c in allowed[b]])
        if not np.array_equal(counts, quotas):
            raise ValueError(
                f"station {b} carrier quotas {counts.tolist()} != "
                f"{quotas.tolist()}")
        for layout, carrier in zip(plan.ter_layouts[b], allowed[b]):
            _check_tiling(layout, span)
            expect = b * v + np.nonzero(own == carrier)[0]
            if not np.array_equal(np.sort(layout.link_ids), expect):
                raise ValueError(f"station {b} layout links mismatch")

    if plan.carrier_of_laa is None or plan.carrier_of_laa.shape[0] == 0:
        for layout in plan.sat_layouts:
            if layout.n_slices != 0:
                raise ValueError("idle satellite side has non-empty slices")
        return
    u = plan.carrier_of_laa.shape[0]
    if plan.carrier_of_laa.min() < 0 or plan.carrier_of_laa.max() >= k:
        raise ValueError("aircraft carrier index out of range")
    seen = np.zeros(u, dtype=np.int64)
    for carrier, layout in enumerate(plan.sat_layouts):
        _check_tiling(layout, span)
        members = np.nonzero(plan.carrier_of_laa == carrier)[0]
        if not np.array_equal(np.sort(layout.link_ids), members):
            raise ValueError(f"carrier {carrier} satellite slices mismatch")
        seen[layout.link_ids] += 1
    if not np.all(seen == 1):
        raise ValueError("each aircraft must appear on exactly one carrier")


def plan_digest(plan: SchedulePlan) -> str:
    """sha256 over the plan's canonical bytes, for bit-identity checks."""
    import hashlib

    h = hashlib.sha256()
    h.update(np.int64(plan.n_carriers).tobytes())
    for arr in (plan.carrier_of_laa, plan.carrier_of_tu, plan.cluster_of_carrier):
        if arr is None:
            h.update(b"none")
        else:
            h.update(np.ascontiguousarray(arr, dtype=np.int64).tobytes())
    for layout in plan.sat_layouts + tuple(l for row in plan.ter_layouts
                                           for l in row):
        h.update(layout.side.encode())
        h.update(np.int64(layout.carrier).tobytes())
        h.update(np.float64(layout.span_s).tobytes())
        h.update(np.ascontiguousarray(layout.link_ids, dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(layout.starts).tobytes())
        h.update(np.ascontiguousarray(layout.durations).tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# TBS-TU assignment


def tu_slot_utilities(tu_ids, allowed, quotas, sat_layouts, rates,
                      free_rates, span_s: float):
    """Utility of each user of one station in each prospective carrier
    slot.

    A carrier with quota q is split into q equal prospective windows;
    the utility of a user in window s is the planner's estimate of its
    interval-averaged throughput there: sum over satellite slices of
    (overlap / T) x expected rate under that slice's aircraft, plus any
    satellite-idle remainder at the interference-free rate.

    Returns ``(util, columns)`` where ``util[i, c]`` scores user
    ``tu_ids[i]`` in column c and ``columns`` lists (carrier, window).
    """
    tu_ids = np.asarray(tu_ids, dtype=np.int64)
    span = float(span_s)
    blocks = []
    columns = []
    for a_idx, carrier in enumerate(np.asarray(allowed, dtype=np.int64)):
        q = int(quotas[a_idx])
        if q == 0:
            continue
        dur = span / q
        win_start = np.arange(q) * dur
        win_end = win_start + dur
        sat = sat_layouts[carrier]
        if sat.n_slices:
            lo = np.maximum(win_start[:, None], sat.starts[None, :])
            hi = np.minimum(win_end[:, None], sat.ends[None, :])
            over = np.clip(hi - lo, 0.0, None)               # (q, S)
            mix = (over / span) @ rates[np.ix_(sat.link_ids, tu_ids)]
            idle = np.clip(dur - over.sum(axis=1), 0.0, None) / span
        else:
            mix = np.zeros((q, tu_ids.shape[0]))
            idle = np.full(q, dur / span)
        blocks.append(mix + idle[:, None] * free_rates[tu_ids][None, :])
        columns.extend((int(carrier), s) for s in range(q))
    util = np.concatenate(blocks, axis=0).T if blocks else np.zeros(
        (tu_ids.shape[0], 0))
    return util, columns


def assign_tbs_tu_links(topology, csi, carriers: CarrierAssignment, powers,
                        config, *, rates=None, free_rates=None,
                        draws=None) -> np.ndarray:
    """Assign every downlink user to a carrier, one station at a time.

    Each station solves its own quota-constrained assignment (carrier
    columns duplicated per quota) maximizing the time-weighted expected
    user rates against the already-fixed satellite side.  Carriers whose
    aircraft would push interference at a user above the QoS threshold
    at their controlled powers are penalized so hard that they are only
    used when quotas leave no feasible alternative — in that case the
    least-violating carrier wins and the violation stays visible in the
    final plan.  Returns the carrier per user, shape (N,).
    """
    if rates is None or free_rates is None:
        if draws is None:
            draws = planner_draws(csi, topology, config, topology.seed)
        if rates is None:
            rates = link_rate_matrix(draws, csi, config, powers.p_laa_dbw,
                                     tbs_power_dbm=powers.p_tbs_dbm)
        if free_rates is None:
            free_rates = interference_free_rates(draws, csi, config,
                                                 tbs_power_dbm=powers.p_tbs_dbm)

    k = config.n_carriers
    v = config.tus_per_tbs
    span = config.sync_interval_s
    n = csi.g_ter_db.shape[0]
    gamma_th = config.qos_threshold_dbm

    sat_layouts = [build_time_slices(carriers.laas_on_carrier(c), span,
                                     carrier=c, side=SATELLITE)
                   for c in range(k)]

    # Worst co-channel interference margin per (carrier, user), dB over
    # the threshold; -inf on carriers with no aircraft.
    p_laa_dbm = np.asarray(powers.p_laa_dbw, dtype=float) + 30.0
    excess_all = p_laa_dbm[:, None] + csi.g_int_db - gamma_th
    excess_carrier = np.full((k, n), -np.inf)
    for c in range(k):
        members = carriers.laas_on_carrier(c)
        if members.size:
            excess_carrier[c] = excess_all[members].max(axis=0)

    allowed = allowed_carriers(topology.reuse_colors, k, config.reuse_factor)
    carrier_of_tu = np.empty(n, dtype=np.int64)
    for b in range(topology.n_tbs):
        tu_ids = b * v + np.arange(v, dtype=np.int64)
        quotas = tu_carrier_quotas(v, allowed.shape[1])
        util, columns = tu_slot_utilities(tu_ids, allowed[b], quotas,
                                          sat_layouts, rates, free_rates, span)
        cost = -util
        for col, (carrier, _slot) in enumerate(columns):
            exc = excess_carrier[carrier, tu_ids]
            bad = exc > FEASIBILITY_GUARD_DB
            cost[bad, col] += VIOLATION_PENALTY + EXCESS_WEIGHT * exc[bad]
        chosen = hungarian(cost)
        carrier_of_tu[tu_ids] = [columns[c][0] for c in chosen]
    return carrier_of_tu


# ---------------------------------------------------------------------------
# fine-synchronized window re-pairing (idealized benchmark)


def pair_satellite_windows(sat_layout: TimeSliceLayout, ter_layouts, rates,
                           *, maximize_rates=None) -> TimeSliceLayout:
    """Re-order equal satellite windows to best face the downlink slots.

    With slot-level synchronization the satellite side is free to choose
    which aircraft transmits opposite which downlink slots; for equal
    windows this is a pure assignment over window positions, solved
    exactly.  ``rates[u, n]`` are planner expected rates; ``ter_layouts``
    are the co-channel downlink layouts.  Utilities and rates use the
    same overlap accounting as the realized evaluation.
    """
    del maximize_rates  # reserved; single objective supported
    q = sat_layout.n_slices
    if q <= 1:
        return sat_layout
    if np.ptp(sat_layout.durations) > 1e-9 * sat_layout.span_s:
        raise ValueError("window re-pairing requires equal satellite windows")
    span = sat_layout.span_s
    util = np.zeros((q, q))
    for ter in ter_layouts:
        if ter.n_slices == 0:
            continue
        over = overlap_matrix(sat_layout, ter) / span       # (q, S)
        sel = rates[np.ix_(sat_layout.link_ids, ter.link_ids)]  # (q, S)
        util += sel @ over.T        # util[i, w]: aircraft i in window w
    window_of_slice = hungarian(util, maximize=True)
    order = np.argsort(window_of_slice, kind="stable")
    return _layout_from_sequence(sat_layout.link_ids[order], span,
                                 carrier=sat_layout.carrier, side=SATELLITE)
