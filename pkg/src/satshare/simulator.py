"""End-to-end scenario runs: the proposed pipeline and its benchmarks.

Pipeline per interval: topology -> planner CSI -> station powers ->
feature vectors -> balanced (hierarchical) clustering -> cluster-to-
carrier mapping -> aircraft power control -> per-station user assignment
-> slice layouts -> realized Monte Carlo rates.

Benchmarks: FineSync re-pairs the satellite windows per carrier on a
common fine grid (idealized slot-level synchronization); RandScheme
randomizes the satellite side with no power control; the no-sharing
baseline leaves the satellite side idle.  Evaluation fading is drawn
from seeds keyed only by (evaluation seed, entity ids), so scheme
comparisons on one topology are paired and results are independent of
execution order and parallelism.

Satellite links use Rician fading (optionally shadowed); ground links
are Rayleigh both here and on the planner side.
"""

from __future__ import annotations

import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import FadingModel, build_planner_csi, sample_fading
from .clustering import hierarchical_cluster
from .config import ScenarioConfig, config_digest
from .features import (build_feature_matrix, interference_free_rates,
                       link_rate_matrix, planner_draws)
from .geometry import elevation_angle, generate_topology, topology_digest
from .power import (PowerAllocation, candidate_co_channel_tus,
                    control_all_laa_powers, set_tbs_powers,
                    verify_interference)
from .radiomap import RadioMapError, csi_from_radiomap, snap_topology
from .scheduling import (SchedulePlan, assign_satellite_clusters,
                         assign_tbs_tu_links, allowed_carriers,
                         build_schedule_plan, pair_satellite_windows,
                         plan_digest, validate_plan)
from .seeding import derive_rng, derive_seed

__all__ = [
    "ScenarioConfig",
    "SchedulePlan",
    "SchemeResult",
    "TopologyResult",
    "SimulationReport",
    "SweepResult",
    "SCHEMES",
    "realized_sum_rate",
    "run_proposed",
    "run_finesync",
    "run_randscheme",
    "run_nosharing",
    "replicate",
    "sweep",
    "report_json",
]

_LN2 = np.log(2.0)

SCHEMES = ("proposed", "finesync", "randscheme", "nosharing")


@dataclass(frozen=True)
class SchemeResult:
    """One scheme on one topology: plan, powers, and realized rates."""

    scheme: str
    topology_seed: int
    topology_digest: str
    plan: SchedulePlan
    powers: PowerAllocation
    sat_rate_bps: float
    ter_rate_bps: float
    total_rate_bps: float
    n_violations: int
    min_laa_elevation_deg: float


@dataclass(frozen=True)
class TopologyResult:
    index: int
    topology_seed: int
    topology_digest: str
    results: dict            # scheme -> SchemeResult
    failures: tuple          # (scheme, message)


# ---------------------------------------------------------------------------
# realized rates


def realized_sum_rate(topology, plan: SchedulePlan, powers: PowerAllocation,
                      config: ScenarioConfig, seed, *, csi=None) -> tuple:
    """Monte Carlo realized throughputs for one interval, bit/s.

    Terrestrial: each user's slice is cut along its overlaps with the
    satellite slices on its carrier; every segment contributes
    (overlap / T) x expected rate under that segment's aircraft at its
    controlled power (cross-station terms included when enabled), and
    satellite-idle remainders contribute at the interference-free rate.
    Satellite: each aircraft contributes (slice / T) x its expected
    uplink rate, interference-free.  All fading is drawn fresh from
    seeds keyed by (seed, stream, entity ids) only.
    """
    if csi is None:
        csi = build_planner_csi(topology, config)
    n_samples = config.eval_samples
    span = config.sync_interval_s
    bw = config.bandwidth_hz
    noise_mw = config.noise_power_mw
    p_tbs_lin = 10.0 ** (np.asarray(powers.p_tbs_dbm, dtype=float) / 10.0)
    p_cross = float(np.mean(p_tbs_lin)) if p_tbs_lin.size else 0.0
    p_laa_lin = 10.0 ** ((np.asarray(powers.p_laa_dbw, dtype=float) + 30.0) / 10.0)
    g_ter_lin = 10.0 ** (csi.g_ter_db / 10.0)
    g_int_lin = 10.0 ** (csi.g_int_db / 10.0)
    g_cross_lin = 10.0 ** (csi.g_cross_db / 10.0)
    colors = np.asarray(topology.reuse_colors)
    n_tbs = topology.n_tbs

    ter_total = 0.0
    for b in range(n_tbs):
        if config.include_cross_tbs:
            others = np.nonzero((colors == colors[b])
                                & (np.arange(n_tbs) != b))[0]
        else:
            others = np.empty(0, dtype=np.int64)
        for layout, over in zip(plan.ter_layouts[b], plan.overlaps[b]):
            sat = plan.sat_layouts[layout.carrier]
            for j in range(layout.n_slices):
                nid = int(layout.link_ids[j])
                sig = derive_rng(seed, "eval-sig", nid).exponential(1.0, n_samples)
                denom_free = np.full(n_samples, noise_mw)
                for m in others:
                    draw = derive_rng(seed, "eval-cross", nid,
                                      int(m)).exponential(1.0, n_samples)
                    denom_free += p_cross * g_cross_lin[m, nid] * draw
                signal = p_tbs_lin[nid] * g_ter_lin[nid] * sig
                duration = layout.durations[j]
                covered = 0.0
                acc = 0.0
                for i in range(sat.n_slices):
                    o = over[i, j]
                    if o <= 0.0:
                        continue
                    covered += o
                    u = int(sat.link_ids[i])
                    h = derive_rng(seed, "eval-laa", nid,
                                   u).exponential(1.0, n_samples)
                    sinr = signal / (denom_free
                                     + p_laa_lin[u] * g_int_lin[u, nid] * h)
                    acc += (o / span) * float(np.mean(np.log1p(sinr)) / _LN2)
                gap = duration - covered
                if gap > 1e-12 * span:
                    acc += (gap / span) * float(
                        np.mean(np.log1p(signal / denom_free)) / _LN2)
                ter_total += bw * acc

    sat_total = 0.0
    model = FadingModel("rician", config.sat_rician_k_db,
                        config.shadowing_sigma_db)
    for layout in plan.sat_layouts:
        for i in range(layout.n_slices):
            u = int(layout.link_ids[i])
            snr_db = (float(powers.p_laa_dbw[u]) + 30.0 + csi.g_sat_db[u]
                      - config.noise_power_dbm)
            h = sample_fading(model, n_samples, derive_rng(seed, "eval-sat", u))
            rate = float(np.mean(np.log1p(10.0 ** (snr_db / 10.0) * h)) / _LN2)
            sat_total += bw * (layout.durations[i] / span) * rate
    return sat_total, ter_total


# ---------------------------------------------------------------------------
# schemes


class _Pipeline:
    """Shared state of the proposed pipeline up to the finished plan."""

    def __init__(self, topology, csi, draws, rates, free_rates, carriers,
                 powers, carrier_of_tu):
        self.topology = topology
        self.csi = csi
        self.draws = draws
        self.rates = rates
        self.free_rates = free_rates
        self.carriers = carriers
        self.powers = powers
        self.carrier_of_tu = carrier_of_tu


def _resolve_csi(topology, config, radiomap, radiomap_lookup):
    if radiomap is None:
        return topology, build_planner_csi(topology, config)
    if radiomap.topology_digest != topology_digest(topology):
        raise RadioMapError(
            "radio map was built for a different topology; rebuild it for "
            "this config/seed (user gains in the map are layout-specific)")
    topology = snap_topology(topology, radiomap)
    if radiomap_lookup:
        return topology, csi_from_radiomap(radiomap, topology, config)
    return topology, build_planner_csi(topology, config)


def _proposed_core(config, topology_seed, radiomap, radiomap_lookup) -> _Pipeline:
    topology = generate_topology(config, topology_seed)
    topology, csi = _resolve_csi(topology, config, radiomap, radiomap_lookup)
    draws = planner_draws(csi, topology, config, topology_seed)
    p_tbs = set_tbs_powers(config, csi=csi, draws=draws)
    features = build_feature_matrix(csi, topology, config, topology_seed,
                                    draws=draws)
    clusters = hierarchical_cluster(features, config.reuse_factor,
                                    config.carrier_quotas(),
                                    derive_seed(topology_seed, "cluster"))
    carriers = assign_satellite_clusters(clusters, config.n_carriers,
                                         config.reuse_factor)
    candidates = candidate_co_channel_tus(topology, csi, carriers, config)
    p_laa, _provisional = control_all_laa_powers(csi, carriers, candidates,
                                                 config)
    powers = PowerAllocation(p_laa_dbw=p_laa, p_tbs_dbm=p_tbs)
    rates = link_rate_matrix(draws, csi, config, p_laa, tbs_power_dbm=p_tbs)
    free_rates = interference_free_rates(draws, csi, config,
                                         tbs_power_dbm=p_tbs)
    carrier_of_tu = assign_tbs_tu_links(topology, csi, carriers, powers,
                                        config, rates=rates,
                                        free_rates=free_rates)
    return _Pipeline(topology, csi, draws, rates, free_rates, carriers,
                     powers, carrier_of_tu)


def _finish(scheme, config, topology_seed, topology, csi, plan, powers):
    validate_plan(plan, topology, config)
    flags = verify_interference(plan, powers, csi, config.qos_threshold_dbm)
    powers = dataclasses.replace(powers, violation_flags=flags)
    eval_seed = derive_seed(topology_seed, "eval")
    sat_bps, ter_bps = realized_sum_rate(topology, plan, powers, config,
                                         eval_seed, csi=csi)
    if topology.laa.shape[0]:
        min_elev = float(np.min(elevation_angle(topology.laa,
                                                topology.satellite)))
    else:
        min_elev = float("nan")
    return SchemeResult(scheme=scheme, topology_seed=int(topology_seed),
                        topology_digest=topology_digest(topology),
                        plan=plan, powers=powers,
                        sat_rate_bps=float(sat_bps), ter_rate_bps=float(ter_bps),
                        total_rate_bps=float(sat_bps + ter_bps),
                        n_violations=len(flags),
                        min_laa_elevation_deg=min_elev)


def run_proposed(config: ScenarioConfig, topology_seed: int, *,
                 radiomap=None, radiomap_lookup: bool = True) -> SchemeResult:
    """Feature-aided clustering pipeline under coarse synchronization."""
    state = _proposed_core(config, topology_seed, radiomap, radiomap_lookup)
    plan = build_schedule_plan(
        state.topology, config, state.carriers.carrier_of_laa,
        state.carrier_of_tu,
        cluster_of_carrier=state.carriers.cluster_of_carrier)
    return _finish("proposed", config, topology_seed, state.topology,
                   state.csi, plan, state.powers)


def run_finesync(config: ScenarioConfig, topology_seed: int, *,
                 radiomap=None, radiomap_lookup: bool = True) -> SchemeResult:
    """Idealized slot-synchronized benchmark.

    Identical carriers, powers, and user assignment as the proposed
    scheme, but each carrier's equal satellite windows are re-paired
    against the downlink slots by an exact assignment on the planner
    rates — scheduling freedom the coarse-sync setting does not have.
    """
    state = _proposed_core(config, topology_seed, radiomap, radiomap_lookup)
    base = build_schedule_plan(
        state.topology, config, state.carriers.carrier_of_laa,
        state.carrier_of_tu,
        cluster_of_carrier=state.carriers.cluster_of_carrier)
    sequences = []
    for carrier in range(config.n_carriers):
        co_channel = [layout for row in base.ter_layouts for layout in row
                      if layout.carrier == carrier and layout.n_slices]
        paired = pair_satellite_windows(base.sat_layouts[carrier], co_channel,
                                        state.rates)
        sequences.append(paired.link_ids)
    plan = build_schedule_plan(
        state.topology, config, state.carriers.carrier_of_laa,
        state.carrier_of_tu,
        cluster_of_carrier=state.carriers.cluster_of_carrier,
        sat_sequences=sequences)
    return _finish("finesync", config, topology_seed, state.topology,
                   state.csi, plan, state.powers)


def _round_robin_tus(topology, config) -> np.ndarray:
    """Users cycled over their station's allowed carriers by index."""
    allowed = allowed_carriers(topology.reuse_colors, config.n_carriers,
                               config.reuse_factor)
    v = config.tus_per_tbs
    carrier_of_tu = np.empty(topology.n_tbs * v, dtype=np.int64)
    for b in range(topology.n_tbs):
        for j in range(v):
            carrier_of_tu[b * v + j] = allowed[b][j % allowed.shape[1]]
    return carrier_of_tu


def run_randscheme(config: ScenarioConfig, topology_seed: int, *,
                   radiomap=None, radiomap_lookup: bool = True) -> SchemeResult:
    """Independent random satellite scheduling, no power control.

    Aircraft take carriers uniformly at random (quota-respecting) at the
    minimum power; users are round-robin.  Violations are reported, not
    prevented.
    """
    topology = generate_topology(config, topology_seed)
    topology, csi = _resolve_csi(topology, config, radiomap, radiomap_lookup)
    n_laa = topology.laa.shape[0]
    rng = derive_rng(topology_seed, "rand-scheme")
    slots = np.repeat(np.arange(config.n_carriers, dtype=np.int64),
                      config.carrier_quotas())
    carrier_of_laa = np.empty(n_laa, dtype=np.int64)
    carrier_of_laa[rng.permutation(n_laa)] = slots
    carrier_of_tu = _round_robin_tus(topology, config)
    powers = PowerAllocation(
        p_laa_dbw=np.full(n_laa, float(config.laa_power_min_dbw)),
        p_tbs_dbm=set_tbs_powers(config.replace(tbs_power_refinement=False),
                                 n_links=topology.n_tbs * config.tus_per_tbs))
    plan = build_schedule_plan(topology, config, carrier_of_laa, carrier_of_tu)
    return _finish("randscheme", config, topology_seed, topology, csi, plan,
                   powers)


def run_nosharing(config: ScenarioConfig, topology_seed: int, *,
                  radiomap=None, radiomap_lookup: bool = True) -> SchemeResult:
    """Baseline without spectrum sharing: satellite side idle."""
    topology = generate_topology(config, topology_seed)
    topology, csi = _resolve_csi(topology, config, radiomap, radiomap_lookup)
    carrier_of_tu = _round_robin_tus(topology, config)
    powers = PowerAllocation(
        p_laa_dbw=np.full(topology.laa.shape[0],
                          float(config.laa_power_min_dbw)),
        p_tbs_dbm=set_tbs_powers(config.replace(tbs_power_refinement=False),
                                 n_links=topology.n_tbs * config.tus_per_tbs))
    plan = build_schedule_plan(topology, config, None, carrier_of_tu)
    return _finish("nosharing", config, topology_seed, topology, csi, plan,
                   powers)


_RUNNERS = {
    "proposed": run_proposed,
    "finesync": run_finesync,
    "randscheme": run_randscheme,
    "nosharing": run_nosharing,
}


# ---------------------------------------------------------------------------
# replication and aggregation


def _run_topology_job(payload) -> TopologyResult:
    config, schemes, master_seed, index, radiomap, lookup = payload
    topology_seed = derive_seed(master_seed, "topology", index)
    results = {}
    failures = []
    for scheme in schemes:
        try:
            results[scheme] = _RUNNERS[scheme](
                config, topology_seed, radiomap=radiomap,
                radiomap_lookup=lookup)
        except Exception as exc:  # recorded, not fatal to other topologies
            failures.append((scheme, f"{type(exc).__name__}: {exc}"))
    digest = next(iter(results.values())).topology_digest if results else ""
    return TopologyResult(index=index, topology_seed=int(topology_seed),
                          topology_digest=digest, results=results,
                          failures=tuple(failures))


def _improvement_pct(result: SchemeResult, baseline: SchemeResult) -> float:
    if result.scheme == "nosharing":
        return 0.0
    if baseline.total_rate_bps <= 0.0:
        return float("nan")
    return 100.0 * (result.total_rate_bps - baseline.total_rate_bps) \
        / baseline.total_rate_bps


@dataclass(frozen=True)
class SimulationReport:
    """Replication results plus deterministic provenance.

    ``elapsed_s`` is wall-clock and deliberately excluded from
    :meth:`to_payload`, which must be byte-stable across reruns and
    parallelism degrees.
    """

    config: ScenarioConfig
    config_digest: str
    master_seed: int
    n_topologies: int
    schemes: tuple
    topologies: tuple        # TopologyResult, ascending index
    elapsed_s: float = 0.0

    def improvement(self, scheme: str, topo: TopologyResult) -> float:
        return _improvement_pct(topo.results[scheme],
                                topo.results["nosharing"])

    def aggregates(self) -> dict:
        agg = {}
        for scheme in self.schemes:
            improvements = []
            totals = []
            sats = []
            ters = []
            violations = []
            for topo in self.topologies:
                if scheme not in topo.results or "nosharing" not in topo.results:
                    continue
                improvements.append(self.improvement(scheme, topo))
                res = topo.results[scheme]
                totals.append(res.total_rate_bps)
                sats.append(res.sat_rate_bps)
                ters.append(res.ter_rate_bps)
                violations.append(res.n_violations)
            if improvements:
                agg[scheme] = {
                    "n_success": len(improvements),
                    "mean_improvement_pct": float(np.mean(improvements)),
                    "std_improvement_pct": float(np.std(improvements)),
                    "mean_total_bps": float(np.mean(totals)),
                    "std_total_bps": float(np.std(totals)),
                    "mean_sat_bps": float(np.mean(sats)),
                    "mean_ter_bps": float(np.mean(ters)),
                    "mean_violations": float(np.mean(violations)),
                }
            else:
                agg[scheme] = {"n_success": 0}
        return agg

    def to_payload(self) -> dict:
        topologies = []
        for topo in self.topologies:
            row = {
                "index": topo.index,
                "topology_seed": topo.topology_seed,
                "topology_digest": topo.topology_digest,
                "failures": [list(f) for f in topo.failures],
                "results": {},
            }
            for scheme in self.schemes:
                if scheme not in topo.results:
                    continue
                res = topo.results[scheme]
                baseline = topo.results.get("nosharing")
                row["results"][scheme] = {
                    "sat_rate_bps": res.sat_rate_bps,
                    "ter_rate_bps": res.ter_rate_bps,
                    "total_rate_bps": res.total_rate_bps,
                    "improvement_pct": (_improvement_pct(res, baseline)
                                        if baseline is not None else None),
                    "n_violations": res.n_violations,
                    "min_laa_elevation_deg": res.min_laa_elevation_deg,
                    "plan_digest": plan_digest(res.plan),
                }
            topologies.append(row)
        return {
            "kind": "satshare-report",
            "version": 1,
            "config_digest": self.config_digest,
            "config": self.config.to_mapping(),
            "master_seed": self.master_seed,
            "n_topologies": self.n_topologies,
            "schemes": list(self.schemes),
            "topologies": topologies,
            "aggregates": self.aggregates(),
        }

    def long_rows(self) -> list:
        """One dict per (topology, scheme), for flat CSV emission."""
        rows = []
        for topo in self.topologies:
            for scheme in self.schemes:
                if scheme not in topo.results:
                    continue
                res = topo.results[scheme]
                baseline = topo.results.get("nosharing")
                rows.append({
                    "topology_index": topo.index,
                    "topology_seed": topo.topology_seed,
                    "scheme": scheme,
                    "sat_rate_bps": res.sat_rate_bps,
                    "ter_rate_bps": res.ter_rate_bps,
                    "total_rate_bps": res.total_rate_bps,
                    "improvement_pct": (_improvement_pct(res, baseline)
                                        if baseline is not None else ""),
                    "n_violations": res.n_violations,
                    "min_laa_elevation_deg": res.min_laa_elevation_deg,
                })
        return rows


def replicate(config: ScenarioConfig, schemes=None, n_topologies=None,
              master_seed=None, *, parallelism: int = 1, radiomap=None,
              radiomap_lookup: bool = True) -> SimulationReport:
    """Run the scheme set over seeded random topologies and aggregate.

    The no-sharing baseline is always executed (improvements need it)
    but reported only when requested.  With ``parallelism > 1``
    topologies run in worker processes; results are gathered by index,
    so the report is bit-identical at any parallelism degree.
    """
    config.validate()
    schemes = tuple(schemes) if schemes is not None else SCHEMES
    for scheme in schemes:
        if scheme not in _RUNNERS:
            raise ValueError(f"unknown scheme {scheme!r}; "
                             f"choose from {sorted(_RUNNERS)}")
    n_topologies = int(n_topologies if n_topologies is not None
                       else config.n_topologies)
    if n_topologies < 1:
        raise ValueError("need at least one topology")
    master_seed = int(master_seed if master_seed is not None
                      else config.master_seed)

    executed = schemes if "nosharing" in schemes else schemes + ("nosharing",)
    payloads = [(config, executed, master_seed, t, radiomap, radiomap_lookup)
                for t in range(n_topologies)]
    start = time.perf_counter()
    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=int(parallelism)) as pool:
            gathered = list(pool.map(_run_topology_job, payloads))
    else:
        gathered = [_run_topology_job(p) for p in payloads]
    gathered.sort(key=lambda r: r.index)
    elapsed = time.perf_counter() - start
    return SimulationReport(config=config, config_digest=config_digest(config),
                            master_seed=master_seed, n_topologies=n_topologies,
                            schemes=schemes, topologies=tuple(gathered),
                            elapsed_s=elapsed)


def report_json(report: SimulationReport) -> str:
    """Canonical JSON for a report payload (sorted keys, full precision)."""
    return json.dumps(report.to_payload(), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# parameter sweeps


@dataclass(frozen=True)
class SweepResult:
    parameter: str
    values: tuple
    reports: tuple

    def long_rows(self) -> list:
        rows = []
        for value, report in zip(self.values, self.reports):
            for row in report.long_rows():
                rows.append({"parameter": self.parameter, "value": value,
                             **row})
        return rows


def _config_for(config: ScenarioConfig, parameter: str, value) -> ScenarioConfig:
    if parameter == "tbs_power":
        v = float(value)
        if not (config.tbs_power_min_dbm <= v <= config.tbs_power_max_dbm):
            raise ValueError(
                f"tbs_power {v} dBm outside [{config.tbs_power_min_dbm}, "
                f"{config.tbs_power_max_dbm}] dBm")
        return config.replace(tbs_power_dbm=v)
    if parameter == "T":
        v = float(value)
        if not np.isfinite(v) or v <= 0.0:
            raise ValueError(f"interval length must be positive, got {value!r}")
        return config.replace(sync_interval_s=v)
    if parameter == "F":
        v = int(value)
        if v < 1:
            raise ValueError(f"reuse factor must be >= 1, got {value!r}")
        if v == 1:
            return config.replace(reuse="full")
        return config.replace(reuse="partial", partial_reuse_factor=v)
    raise ValueError(f"unknown sweep parameter {parameter!r}; "
                     f"choose from ['F', 'T', 'tbs_power']")


def sweep(config: ScenarioConfig, parameter: str, values, *, schemes=None,
          n_topologies=None, master_seed=None, parallelism: int = 1,
          radiomap=None, radiomap_lookup: bool = True) -> SweepResult:
    """One replication per value with shared topology seeds.

    All values are validated (and their derived configs re-validated)
    before anything runs; paired seeding is asserted afterwards via the
    per-topology digests.
    """
    values = list(values)
    configs = []
    for value in values:
        derived = _config_for(config, parameter, value)
        derived.validate()
        configs.append(derived)

    reports = [replicate(c, schemes, n_topologies, master_seed,
                         parallelism=parallelism, radiomap=radiomap,
                         radiomap_lookup=radiomap_lookup) for c in configs]
    for report in reports[1:]:
        for a, b in zip(reports[0].topologies, report.topologies):
            if a.topology_digest and b.topology_digest \
                    and a.topology_digest != b.topology_digest:
                raise RuntimeError(
                    "paired sweep produced diverging topologies; "
                    "seeding is broken")
    return SweepResult(parameter=parameter, values=tuple(values),
                       reports=tuple(reports))
