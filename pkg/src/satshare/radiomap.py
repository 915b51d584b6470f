"""Precomputed planner-gain grids ("radio maps") for the aircraft layer.

A map stores, for every node of a horizontal grid at the aircraft
altitude, the satellite-link gain and the gain toward every user, all in
dB.  Entries are produced by the same code path as direct CSI
construction, so lookups are bit-identical to recomputation at the node
coordinates.

File format (little-endian), version 1:

    magic  b"SSRM" | u32 version | u32 n_lat | u32 n_lon | u32 n_cols
    f64 lat_min, lat_max, lon_min, lon_max, altitude_m, grid_step_m, freq_hz
    64s topology digest hex | 64s channel-config digest hex | f64 built_at
    n_lat*n_lon*n_cols f64 entries, node-row-major (lat index slow)
    32-byte SHA-256 over everything above with built_at zeroed

The build timestamp is carried but excluded from the digest, so
identical inputs give identical digests.
"""
from __future__ import annotations

import hashlib
import struct
import time
from dataclasses import dataclass, replace

import numpy as np

from .channel import PlannerCsi, laa_gain_rows, tbs_gain_table
from .config import ScenarioConfig, channel_digest
from .geometry import EARTH_RADIUS_M, Topology, region_bounds, topology_digest

__all__ = [
    "RadioMap",
    "RadioMapError",
    "RadioMapFormatError",
    "RadioMapVersionError",
    "RadioMapIntegrityError",
    "RegionError",
    "AltitudeError",
    "NodeBudgetError",
    "build_radio_map",
    "query",
    "nearest_node",
    "node_position",
    "save_radio_map",
    "load_radio_map",
    "verify_radio_map",
    "snap_topology",
    "csi_from_radiomap",
]

_MAGIC = b"SSRM"
_VERSION = 1
_HEADER = struct.Struct("<4sIIII7d64s64sd")
_DEG = np.pi / 180.0


class RadioMapError(ValueError):
    """Base class for radio-map failures."""


class RadioMapFormatError(RadioMapError):
    """Not a radio-map file at all."""


class RadioMapVersionError(RadioMapError):
    """Unsupported format version."""


class RadioMapIntegrityError(RadioMapError):
    """Truncated or corrupted payload (digest mismatch)."""


class RegionError(RadioMapError):
    """Query position outside the mapped region."""


class AltitudeError(RadioMapError):
    """Query altitude differs from the mapped aircraft layer."""


class NodeBudgetError(RadioMapError):
    """Requested grid exceeds the configured node budget."""


@dataclass(frozen=True)
class RadioMap:
    """Gain grid plus the metadata needed to trust and query it."""

    region: tuple            # (lat_min, lat_max, lon_min, lon_max) degrees
    altitude_m: float
    grid_step_m: float
    n_lat: int
    n_lon: int
    freq_hz: float
    topology_digest: str
    config_digest: str
    built_at: float
    entries: np.ndarray      # (n_lat * n_lon, 1 + N) float64, dB

    @property
    def n_nodes(self) -> int:
        return self.n_lat * self.n_lon

    def digest(self) -> str:
        return hashlib.sha256(_core_bytes(self)).hexdigest()


def _frame(region):
    """Meters-per-degree factors at the region's central latitude."""
    lat_min, lat_max, lon_min, lon_max = region
    m_per_lat = EARTH_RADIUS_M * _DEG
    m_per_lon = EARTH_RADIUS_M * np.cos(0.5 * (lat_min + lat_max) * _DEG) * _DEG
    return m_per_lat, m_per_lon


def node_position(radio_map: RadioMap, i_lat: int, i_lon: int) -> np.ndarray:
    """Geodetic ``[lat, lon, alt]`` of grid node ``(i_lat, i_lon)``.

    Nodes sit at cell centers ``(i + 0.5) * step`` from the region's
    south-west corner, so halving the step quadruples the node count on
    step-divisible regions.
    """
    if not (0 <= i_lat < radio_map.n_lat and 0 <= i_lon < radio_map.n_lon):
        raise IndexError("node index outside grid")
    lat_min, _, lon_min, _ = radio_map.region
    m_per_lat, m_per_lon = _frame(radio_map.region)
    lat = lat_min + (i_lat + 0.5) * radio_map.grid_step_m / m_per_lat
    lon = lon_min + (i_lon + 0.5) * radio_map.grid_step_m / m_per_lon
    return np.array([lat, lon, radio_map.altitude_m])


def _axis_index(offset_m: float, step: float, count: int) -> int:
    # nearest cell center; exact boundary ties resolve to the lower index
    raw = offset_m / step
    idx = int(np.floor(raw))
    if raw == idx and idx > 0:
        idx -= 1
    return min(max(idx, 0), count - 1)


def nearest_node(radio_map: RadioMap, position) -> tuple:
    """Grid indices ``(i_lat, i_lon, flat_index)`` of the nearest node.

    The query must lie inside the mapped region at the mapped altitude;
    the nearest node is then within ``grid_step * sqrt(2) / 2``.
    """
    lat, lon, alt = (float(x) for x in np.asarray(position, dtype=float))
    lat_min, lat_max, lon_min, lon_max = radio_map.region
    if alt != radio_map.altitude_m:
        raise AltitudeError(
            f"query altitude {alt} m differs from mapped layer {radio_map.altitude_m} m")
    if not (lat_min <= lat <= lat_max and lon_min <= lon <= lon_max):
        raise RegionError(f"position ({lat}, {lon}) outside mapped region {radio_map.region}")
    m_per_lat, m_per_lon = _frame(radio_map.region)
    i_lat = _axis_index((lat - lat_min) * m_per_lat, radio_map.grid_step_m, radio_map.n_lat)
    i_lon = _axis_index((lon - lon_min) * m_per_lon, radio_map.grid_step_m, radio_map.n_lon)
    return i_lat, i_lon, i_lat * radio_map.n_lon + i_lon


def query(radio_map: RadioMap, position) -> tuple:
    """Planner gains at the nearest grid node: ``(g_sat_db, g_int_db (N,))``."""
    _, _, flat = nearest_node(radio_map, position)
    row = radio_map.entries[flat]
    return float(row[0]), row[1:].copy()


def build_radio_map(topology: Topology, config: ScenarioConfig, region=None,
                    grid_step_m=None, batch: int = 1024) -> RadioMap:
    """Tabulate aircraft-layer gains on a horizontal grid.

    ``region`` defaults to the cell grid padded by the cell radius plus
    the configured margin.  Raises :class:`NodeBudgetError` when the grid
    would exceed ``config.radiomap_node_budget`` nodes.
    """
    step = float(grid_step_m if grid_step_m is not None else config.radiomap_grid_step_m)
    if step <= 0:
        raise RadioMapError("grid step must be positive")
    if region is None:
        region = region_bounds(topology, config.cell_radius_m + config.radiomap_margin_m)
    lat_min, lat_max, lon_min, lon_max = (float(x) for x in region)
    if not (lat_max > lat_min and lon_max > lon_min):
        raise RadioMapError(f"empty region: {region}")
    m_per_lat, m_per_lon = _frame(region)
    n_lat = max(1, int(np.ceil((lat_max - lat_min) * m_per_lat / step)))
    n_lon = max(1, int(np.ceil((lon_max - lon_min) * m_per_lon / step)))
    n_nodes = n_lat * n_lon
    if n_nodes > config.radiomap_node_budget:
        raise NodeBudgetError(
            f"grid needs {n_nodes} nodes (budget {config.radiomap_node_budget}); "
            "raise radiomap.node_budget or coarsen the step")

    radio_map = RadioMap(
        region=(lat_min, lat_max, lon_min, lon_max), altitude_m=config.laa_altitude_m,
        grid_step_m=step, n_lat=n_lat, n_lon=n_lon, freq_hz=config.carrier_freq_hz,
        topology_digest=topology_digest(topology),
        config_digest=channel_digest(config),
        built_at=time.time(), entries=np.empty((0, 0)))

    nodes = np.array([node_position(radio_map, i, j)
                      for i in range(n_lat) for j in range(n_lon)])
    entries = np.empty((n_nodes, 1 + topology.tu_flat.shape[0]))
    for lo in range(0, n_nodes, batch):
        hi = min(lo + batch, n_nodes)
        g_sat, g_int = laa_gain_rows(nodes[lo:hi], topology, config)
        entries[lo:hi, 0] = g_sat
        entries[lo:hi, 1:] = g_int
    return replace(radio_map, entries=entries)


def _core_bytes(radio_map: RadioMap) -> bytes:
    """Serialized form with the timestamp zeroed (digest input)."""
    header = _HEADER.pack(
        _MAGIC, _VERSION, radio_map.n_lat, radio_map.n_lon,
        radio_map.entries.shape[1] if radio_map.entries.size else radio_map.entries.shape[-1],
        *radio_map.region, radio_map.altitude_m, radio_map.grid_step_m, radio_map.freq_hz,
        radio_map.topology_digest.encode("ascii"), radio_map.config_digest.encode("ascii"),
        0.0)
    return header + np.ascontiguousarray(radio_map.entries, dtype="<f8").tobytes()


def save_radio_map(radio_map: RadioMap, path) -> None:
    """Write the binary format; round trips are bit-identical."""
    core = _core_bytes(radio_map)
    digest = hashlib.sha256(core).digest()
    header = _HEADER.pack(
        _MAGIC, _VERSION, radio_map.n_lat, radio_map.n_lon,
        radio_map.entries.shape[1] if radio_map.entries.size else radio_map.entries.shape[-1],
        *radio_map.region, radio_map.altitude_m, radio_map.grid_step_m, radio_map.freq_hz,
        radio_map.topology_digest.encode("ascii"), radio_map.config_digest.encode("ascii"),
        radio_map.built_at)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(core[_HEADER.size:])
        fh.write(digest)


def load_radio_map(path) -> RadioMap:
    """Read and verify a saved map.

    Raises :class:`RadioMapFormatError` on bad magic,
    :class:`RadioMapVersionError` on unknown versions, and
    :class:`RadioMapIntegrityError` on truncation or digest mismatch.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size + 32:
        raise RadioMapIntegrityError("file too short to be a radio map")
    head = _HEADER.unpack(blob[:_HEADER.size])
    (magic, version, n_lat, n_lon, n_cols, lat_min, lat_max, lon_min, lon_max,
     altitude, step, freq, topo_hex, cfg_hex, built_at) = head
    if magic != _MAGIC:
        raise RadioMapFormatError(f"bad magic {magic!r}; not a radio map file")
    if version != _VERSION:
        raise RadioMapVersionError(f"unsupported radio map version {version}")
    n_nodes = n_lat * n_lon
    expected = _HEADER.size + n_nodes * n_cols * 8 + 32
    if len(blob) != expected:
        raise RadioMapIntegrityError(
            f"size mismatch: {len(blob)} bytes, header implies {expected}")
    entries = np.frombuffer(
        blob[_HEADER.size:-32], dtype="<f8").reshape(n_nodes, n_cols).copy()
    radio_map = RadioMap(
        region=(lat_min, lat_max, lon_min, lon_max), altitude_m=altitude,
        grid_step_m=step, n_lat=n_lat, n_lon=n_lon, freq_hz=freq,
        topology_digest=topo_hex.decode("ascii"), config_digest=cfg_hex.decode("ascii"),
        built_at=built_at, entries=entries)
    stored = blob[-32:]
    if hashlib.sha256(_core_bytes(radio_map)).digest() != stored:
        raise RadioMapIntegrityError("content digest mismatch; file corrupted")
    return radio_map


def verify_radio_map(radio_map: RadioMap, topology: Topology, config: ScenarioConfig,
                     n_check: int = 100, seed: int = 0) -> int:
    """Recompute ``n_check`` randomly sampled nodes and compare bitwise.

    Returns the number of nodes checked; raises :class:`RadioMapError`
    on any discrepancy (including topology/config digest mismatch).
    """
    if radio_map.topology_digest != topology_digest(topology):
        raise RadioMapError("map was built for a different topology")
    if radio_map.config_digest != channel_digest(config):
        raise RadioMapError("map was built under a different config")
    from .seeding import derive_rng

    rng = derive_rng(seed, "radiomap-verify")
    count = min(n_check, radio_map.n_nodes)
    picks = rng.choice(radio_map.n_nodes, size=count, replace=False)
    for flat in picks:
        i_lat, i_lon = divmod(int(flat), radio_map.n_lon)
        pos = node_position(radio_map, i_lat, i_lon)
        g_sat, g_int = laa_gain_rows(pos, topology, config)
        row = radio_map.entries[flat]
        if not (row[0] == g_sat and np.array_equal(row[1:], g_int)):
            raise RadioMapError(f"node {flat} disagrees with direct recomputation")
    return count


def snap_topology(topology: Topology, radio_map: RadioMap) -> Topology:
    """Topology with every aircraft moved to its nearest map node.

    Lookup mode quantizes aircraft positions to the grid; snapping the
    topology first keeps the planner's world model and the map in exact
    agreement, which is what makes lookup plans bit-identical to direct
    ones.
    """
    if topology.laa.shape[0] == 0:
        return topology
    snapped = np.empty_like(topology.laa)
    for i, pos in enumerate(topology.laa):
        i_lat, i_lon, _ = nearest_node(radio_map, pos)
        snapped[i] = node_position(radio_map, i_lat, i_lon)
    return replace(topology, laa=snapped)


def csi_from_radiomap(radio_map: RadioMap, topology: Topology,
                      config: ScenarioConfig) -> PlannerCsi:
    """Planner CSI with the aircraft rows served by table lookup.

    Aircraft should sit on map nodes (see :func:`snap_topology`); the
    ground-side downlink gains do not depend on aircraft positions and
    are computed directly.  Refuses maps built under a different config,
    since the stored gains would encode different physics.
    """
    if radio_map.config_digest != channel_digest(config):
        raise RadioMapError("map was built under a different config")
    n = config.n_links
    if radio_map.entries.shape[1] != 1 + n:
        raise RadioMapError(
            f"map stores {radio_map.entries.shape[1] - 1} user columns, "
            f"scenario has {n}")
    n_laa = topology.laa.shape[0]
    g_sat = np.empty(n_laa)
    g_int = np.empty((n_laa, n))
    for u, pos in enumerate(topology.laa):
        g_sat[u], g_int[u] = query(radio_map, pos)
    g_cross, g_ter = tbs_gain_table(topology, config)
    return PlannerCsi(g_sat_db=g_sat, g_ter_db=g_ter, g_int_db=g_int,
                      g_cross_db=g_cross)
