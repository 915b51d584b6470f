"""Spherical-Earth geometry and random topology generation.

Positions are geodetic rows ``[lat_deg, lon_deg, alt_m]`` on a sphere of
radius 6371 km.  Distances are straight-line (chord) ranges between the
Cartesian points, which is what a radio wave sees; propagation delay is
range over c.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig
from .seeding import derive_rng

__all__ = [
    "EARTH_RADIUS_M",
    "SPEED_OF_LIGHT",
    "Topology",
    "geodetic_to_cartesian",
    "slant_range",
    "elevation_angle",
    "propagation_delay",
    "off_axis_angle",
    "generate_topology",
    "topology_digest",
    "region_bounds",
]

EARTH_RADIUS_M = 6_371_000.0
SPEED_OF_LIGHT = 299_792_458.0  # m/s

_DEG = np.pi / 180.0


def geodetic_to_cartesian(geo) -> np.ndarray:
    """Convert geodetic rows ``[lat_deg, lon_deg, alt_m]`` to ECEF meters.

    Accepts a single position (shape ``(3,)``) or an array of them
    (shape ``(..., 3)``); the output has the same leading shape.
    """
    geo = np.asarray(geo, dtype=float)
    if geo.shape[-1] != 3:
        raise ValueError(f"expected [lat, lon, alt] rows, got shape {geo.shape}")
    lat = geo[..., 0]
    lon = geo[..., 1]
    if np.any(np.abs(lat) > 90.0) or np.any(np.abs(lon) > 180.0):
        raise ValueError("latitude/longitude out of range")
    r = EARTH_RADIUS_M + geo[..., 2]
    if np.any(r <= 0):
        raise ValueError("altitude places point below Earth's center")
    clat = np.cos(lat * _DEG)
    return np.stack(
        [r * clat * np.cos(lon * _DEG), r * clat * np.sin(lon * _DEG), r * np.sin(lat * _DEG)],
        axis=-1,
    )


def slant_range(a, b) -> np.ndarray:
    """Chord distance in meters between two geodetic positions (broadcasts)."""
    xa = geodetic_to_cartesian(a)
    xb = geodetic_to_cartesian(b)
    return np.linalg.norm(xa - xb, axis=-1)


def elevation_angle(ground, target) -> np.ndarray:
    """Elevation of ``target`` above the local horizon of ``ground``, degrees.

    Negative below the horizon; the caller decides whether that is
    acceptable.  Coincident positions have no line of sight and raise.
    """
    xg = geodetic_to_cartesian(ground)
    xt = geodetic_to_cartesian(target)
    los = xt - xg
    norm = np.linalg.norm(los, axis=-1)
    if np.any(norm == 0.0):
        raise ValueError("target coincides with ground point; elevation undefined")
    up = xg / np.linalg.norm(xg, axis=-1, keepdims=True)
    sin_elev = np.sum(los * up, axis=-1) / norm
    return np.degrees(np.arcsin(np.clip(sin_elev, -1.0, 1.0)))


def propagation_delay(a, b) -> np.ndarray:
    """One-way free-space propagation delay in seconds."""
    return slant_range(a, b) / SPEED_OF_LIGHT


def off_axis_angle(position, boresight_target, target) -> np.ndarray:
    """Angle in degrees at ``position`` between its boresight and ``target``.

    The boresight points from ``position`` to ``boresight_target`` (for an
    aircraft dish, the satellite).  Zero-length legs raise.
    """
    xp = geodetic_to_cartesian(position)
    vb = geodetic_to_cartesian(boresight_target) - xp
    vt = geodetic_to_cartesian(target) - xp
    nb = np.linalg.norm(vb, axis=-1)
    nt = np.linalg.norm(vt, axis=-1)
    if np.any(nb == 0.0):
        raise ValueError("boresight target coincides with antenna position")
    if np.any(nt == 0.0):
        raise ValueError("target coincides with antenna position")
    cos_angle = np.sum(vb * vt, axis=-1) / (nb * nt)
    return np.degrees(np.arccos(np.clip(cos_angle, -1.0, 1.0)))


@dataclass(frozen=True)
class Topology:
    """One realization of satellite, cells, users, and aircraft.

    ``tu`` is grouped by serving TBS with shape ``(M, V, 3)``; the flat
    link index is ``n = b * V + j``.  ``reuse_colors`` partitions cells
    into F groups (all zero under full reuse).
    """

    seed: int
    satellite: np.ndarray  # (3,)
    tbs: np.ndarray        # (M, 3)
    tu: np.ndarray         # (M, V, 3)
    laa: np.ndarray        # (U, 3)
    reuse_colors: np.ndarray  # (M,) int

    @property
    def n_tbs(self) -> int:
        return self.tbs.shape[0]

    @property
    def tus_per_tbs(self) -> int:
        return self.tu.shape[1]

    @property
    def n_laa(self) -> int:
        return self.laa.shape[0]

    @property
    def tu_flat(self) -> np.ndarray:
        """TU positions as ``(N, 3)`` in link-index order."""
        return self.tu.reshape(-1, 3)

    def serving_tbs(self) -> np.ndarray:
        """Serving TBS index for each flat link index."""
        return np.repeat(np.arange(self.n_tbs), self.tus_per_tbs)


def _hex_spiral(count: int):
    """First ``count`` axial hex coordinates in deterministic ring order.

    Ring r starts at (r, 0) and walks counter-clockwise; a partial last
    ring simply truncates (ring packing for non-hexagonal counts).
    """
    cells = [(0, 0)]
    ring = 1
    steps = [(-1, 1), (-1, 0), (0, -1), (1, -1), (1, 0), (0, 1)]
    while len(cells) < count:
        q, r = ring, 0
        for dq, dr in steps:
            for _ in range(ring):
                cells.append((q, r))
                q, r = q + dq, r + dr
        ring += 1
    return cells[:count]


def _reuse_colors(axial, factor: int) -> np.ndarray:
    """Lattice coloring with F colors; neighbors differ for F in {3, 4, 7}."""
    if factor == 1:
        return np.zeros(len(axial), dtype=int)
    colors = np.empty(len(axial), dtype=int)
    for i, (q, r) in enumerate(axial):
        if factor == 3:
            colors[i] = (q - r) % 3
        elif factor == 4:
            colors[i] = 2 * (q % 2) + (r % 2)
        elif factor == 7:
            colors[i] = (q + 3 * r) % 7
        else:
            colors[i] = i % factor  # documented fallback: spiral order
    return colors


def _offsets_to_geodetic(center_lat, center_lon, east_m, north_m, alt_m):
    """Map local tangent-plane offsets (meters) to geodetic rows."""
    lat = center_lat + north_m / EARTH_RADIUS_M / _DEG
    lon = center_lon + east_m / (EARTH_RADIUS_M * np.cos(center_lat * _DEG)) / _DEG
    return np.stack([lat, lon, np.broadcast_to(alt_m, np.shape(lat))], axis=-1)


def _horizontal_chord(geo_a, geo_b) -> np.ndarray:
    """Chord distance with altitudes zeroed: the canonical ground metric."""
    a = np.array(np.broadcast_to(geo_a, np.shape(geo_b)), dtype=float, copy=True)
    b = np.array(geo_b, dtype=float, copy=True)
    a[..., 2] = 0.0
    b[..., 2] = 0.0
    return slant_range(a, b)


def generate_topology(config: ScenarioConfig, seed: int) -> Topology:
    """Draw one random topology, deterministic in ``(config, seed)``.

    TBS sites sit on a hexagonal grid (center spacing sqrt(3) * cell
    radius) around the region center.  Users are uniform in each 1 km
    cell disk; aircraft are uniform over the union of the cell disks at
    the configured altitude (rejection sampling from the bounding box).
    """
    config.validate()
    m, v, u = config.n_tbs, config.tus_per_tbs, config.n_laa
    radius = config.cell_radius_m
    lat0, lon0 = config.region_center_lat_deg, config.region_center_lon_deg

    axial = _hex_spiral(m)
    spacing = np.sqrt(3.0) * radius
    qs = np.array([c[0] for c in axial], dtype=float)
    rs = np.array([c[1] for c in axial], dtype=float)
    tbs_e = spacing * (qs + 0.5 * rs)
    tbs_n = spacing * (np.sqrt(3.0) / 2.0) * rs
    tbs = _offsets_to_geodetic(lat0, lon0, tbs_e, tbs_n, 0.0)
    colors = _reuse_colors(axial, config.reuse_factor)

    tu = np.empty((m, v, 3))
    for b in range(m):
        rng = derive_rng(seed, "tu", b)
        r = radius * np.sqrt(rng.uniform(size=v))
        theta = rng.uniform(0.0, 2.0 * np.pi, size=v)
        # offsets relative to the serving TBS, in its own tangent frame
        tu[b] = _offsets_to_geodetic(
            tbs[b, 0], tbs[b, 1], r * np.cos(theta), r * np.sin(theta), 0.0)

    # aircraft: uniform over the union of cell disks (ground chord metric)
    lo_e, hi_e = tbs_e.min() - radius, tbs_e.max() + radius
    lo_n, hi_n = tbs_n.min() - radius, tbs_n.max() + radius
    rng = derive_rng(seed, "laa")
    accepted = []
    while len(accepted) < u:
        e = rng.uniform(lo_e, hi_e)
        n = rng.uniform(lo_n, hi_n)
        cand = _offsets_to_geodetic(lat0, lon0, e, n, config.laa_altitude_m)
        if np.min(_horizontal_chord(cand, tbs)) <= radius:
            accepted.append(cand)
    laa = np.array(accepted)

    satellite = np.array([
        config.subsatellite_lat_deg, config.subsatellite_lon_deg, config.sat_altitude_m])

    return Topology(seed=int(seed), satellite=satellite, tbs=tbs, tu=tu,
                    laa=laa, reuse_colors=colors)


def topology_digest(topology: Topology) -> str:
    """SHA-256 over all node coordinates (colors excluded, so sweeps over
    the reuse factor keep identical digests for identical placements)."""
    h = hashlib.sha256()
    for arr in (topology.satellite, topology.tbs, topology.tu, topology.laa):
        h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    return h.hexdigest()


def region_bounds(topology: Topology, margin_m: float = 0.0) -> tuple:
    """Lat/lon bounding box of the TBS sites plus ``margin_m`` meters.

    Returns ``(lat_min, lat_max, lon_min, lon_max)``; callers covering
    the whole airspace should include the cell radius in the margin.
    """
    lat = topology.tbs[:, 0]
    lon = topology.tbs[:, 1]
    pad = margin_m
    dlat = pad / EARTH_RADIUS_M / _DEG
    mid_lat = 0.5 * (lat.min() + lat.max())
    dlon = pad / (EARTH_RADIUS_M * np.cos(mid_lat * _DEG)) / _DEG
    return (lat.min() - dlat, lat.max() + dlat, lon.min() - dlon, lon.max() + dlon)
