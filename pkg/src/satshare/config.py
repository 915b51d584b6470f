"""Scenario configuration: defaults, TOML loading, validation, digests.

The shipped defaults reproduce the reference case study: a 500 km
satellite with sub-satellite point (100E, 40N), 28 terrestrial base
stations with 1 km cells around (116E, 40N), 24 users per cell, 96
low-altitude aircraft at 200 m sharing 12 x 1 MHz carriers at 2 GHz
over a 10 s coarse synchronization interval.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

__all__ = [
    "ScenarioConfig",
    "ConfigError",
    "Diagnostic",
    "load_config",
    "validate_mapping",
    "config_digest",
    "channel_digest",
    "default_config_path",
]


class ConfigError(ValueError):
    """Raised for malformed or inconsistent scenario configuration."""


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding. ``severity`` is ``"error"`` or ``"note"``."""

    severity: str
    key: str
    message: str

    def format(self, path: str = "<config>") -> str:
        return f"{path}:{self.key}: {self.severity}: {self.message}"


# TOML schema: section -> key -> (attribute, type).  Booleans must be
# real TOML booleans; ints are accepted where floats are expected.
_SCHEMA = {
    "scenario": {
        "n_tbs": ("n_tbs", int),
        "tus_per_tbs": ("tus_per_tbs", int),
        "n_laa": ("n_laa", int),
        "n_carriers": ("n_carriers", int),
        "cell_radius_m": ("cell_radius_m", float),
        "laa_altitude_m": ("laa_altitude_m", float),
        "sat_altitude_m": ("sat_altitude_m", float),
        "region_center_lat_deg": ("region_center_lat_deg", float),
        "region_center_lon_deg": ("region_center_lon_deg", float),
        "subsatellite_lat_deg": ("subsatellite_lat_deg", float),
        "subsatellite_lon_deg": ("subsatellite_lon_deg", float),
    },
    "radio": {
        "carrier_freq_hz": ("carrier_freq_hz", float),
        "bandwidth_hz": ("bandwidth_hz", float),
        "noise_power_dbm": ("noise_power_dbm", float),
        "sat_rx_gain_dbi": ("sat_rx_gain_dbi", float),
        "tbs_tx_gain_dbi": ("tbs_tx_gain_dbi", float),
        "tu_rx_gain_dbi": ("tu_rx_gain_dbi", float),
        "laa_dish_diameter_m": ("laa_dish_diameter_m", float),
        "laa_dish_efficiency": ("laa_dish_efficiency", float),
        "terrestrial_pathloss_exp": ("terrestrial_pathloss_exp", float),
        "satellite_pathloss_exp": ("satellite_pathloss_exp", float),
        "reference_distance_m": ("reference_distance_m", float),
        "include_cross_tbs": ("include_cross_tbs", bool),
    },
    "fading": {
        "sat_rician_k_db": ("sat_rician_k_db", float),
        "shadowing_sigma_db": ("shadowing_sigma_db", float),
    },
    "power": {
        "laa_power_min_dbw": ("laa_power_min_dbw", float),
        "laa_power_max_dbw": ("laa_power_max_dbw", float),
        "tbs_power_dbm": ("tbs_power_dbm", float),
        "tbs_power_min_dbm": ("tbs_power_min_dbm", float),
        "tbs_power_max_dbm": ("tbs_power_max_dbm", float),
        "qos_margin_db": ("qos_margin_db", float),
        "tbs_power_refinement": ("tbs_power_refinement", bool),
    },
    "sharing": {
        "sync_interval_s": ("sync_interval_s", float),
        "reuse": ("reuse", str),
        "partial_reuse_factor": ("partial_reuse_factor", int),
        "feature_qos_penalty": ("feature_qos_penalty", bool),
    },
    "montecarlo": {
        "planner_samples": ("planner_samples", int),
        "eval_samples": ("eval_samples", int),
    },
    "run": {
        "n_topologies": ("n_topologies", int),
        "master_seed": ("master_seed", int),
    },
    "radiomap": {
        "grid_step_m": ("radiomap_grid_step_m", float),
        "margin_m": ("radiomap_margin_m", float),
        "node_budget": ("radiomap_node_budget", int),
    },
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Full scenario description with case-study defaults."""

    # scenario scale
    n_tbs: int = 28
    tus_per_tbs: int = 24
    n_laa: int = 96
    n_carriers: int = 12
    cell_radius_m: float = 1000.0
    laa_altitude_m: float = 200.0
    sat_altitude_m: float = 500_000.0
    region_center_lat_deg: float = 40.0
    region_center_lon_deg: float = 116.0
    subsatellite_lat_deg: float = 40.0
    subsatellite_lon_deg: float = 100.0

    # radio front end and propagation
    carrier_freq_hz: float = 2.0e9
    bandwidth_hz: float = 1.0e6
    noise_power_dbm: float = -114.0
    sat_rx_gain_dbi: float = 25.0
    tbs_tx_gain_dbi: float = 15.0
    tu_rx_gain_dbi: float = 0.0
    laa_dish_diameter_m: float = 0.5
    laa_dish_efficiency: float = 0.65
    terrestrial_pathloss_exp: float = 3.5
    satellite_pathloss_exp: float = 2.0
    reference_distance_m: float = 1.0
    include_cross_tbs: bool = True

    # fading (all models are unit mean power)
    sat_rician_k_db: float = 10.0
    shadowing_sigma_db: float = 0.0

    # power control
    laa_power_min_dbw: float = -3.0
    laa_power_max_dbw: float = 2.0
    tbs_power_dbm: float = 10.0
    tbs_power_min_dbm: float = 0.0
    tbs_power_max_dbm: float = 10.0
    qos_margin_db: float = 12.2
    tbs_power_refinement: bool = False

    # sharing layout
    sync_interval_s: float = 10.0
    reuse: str = "full"  # "full" or "partial"
    partial_reuse_factor: int = 4
    feature_qos_penalty: bool = True

    # Monte Carlo sample counts (planner = feature/utility fidelity,
    # eval = realized-rate fidelity)
    planner_samples: int = 200
    eval_samples: int = 1000

    # experiment control
    n_topologies: int = 10
    master_seed: int = 1

    # radio map building
    radiomap_grid_step_m: float = 50.0
    radiomap_margin_m: float = 1000.0
    radiomap_node_budget: int = 250_000

    # --- derived quantities -------------------------------------------------

    @property
    def n_links(self) -> int:
        """Number of TBS-TU links N = M * V."""
        return self.n_tbs * self.tus_per_tbs

    @property
    def qos_threshold_dbm(self) -> float:
        """Max tolerable aircraft interference at a TU (noise - margin)."""
        return self.noise_power_dbm - self.qos_margin_db

    @property
    def noise_power_mw(self) -> float:
        return 10.0 ** (self.noise_power_dbm / 10.0)

    @property
    def reuse_factor(self) -> int:
        """Effective number of cell colors (1 under full reuse)."""
        return 1 if self.reuse == "full" else self.partial_reuse_factor

    @property
    def laa_power_min_dbm(self) -> float:
        return self.laa_power_min_dbw + 30.0

    @property
    def laa_power_max_dbm(self) -> float:
        return self.laa_power_max_dbw + 30.0

    def carrier_quotas(self) -> tuple:
        """Aircraft quota per carrier (equal split of U over K)."""
        base, rem = divmod(self.n_laa, self.n_carriers)
        return tuple(base + (1 if k < rem else 0) for k in range(self.n_carriers))

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    # --- validation ---------------------------------------------------------

    def validate(self) -> None:
        """Raise :class:`ConfigError` on the first hard inconsistency."""
        problems = [d for d in self.diagnostics() if d.severity == "error"]
        if problems:
            raise ConfigError(problems[0].message)

    def diagnostics(self) -> list:
        """Range and consistency checks; returns errors and notes."""
        out = []
        err = lambda key, msg: out.append(Diagnostic("error", key, msg))

        positive = [
            ("scenario.n_tbs", self.n_tbs), ("scenario.tus_per_tbs", self.tus_per_tbs),
            ("scenario.n_laa", self.n_laa), ("scenario.n_carriers", self.n_carriers),
            ("scenario.cell_radius_m", self.cell_radius_m),
            ("scenario.sat_altitude_m", self.sat_altitude_m),
            ("radio.carrier_freq_hz", self.carrier_freq_hz),
            ("radio.bandwidth_hz", self.bandwidth_hz),
            ("radio.reference_distance_m", self.reference_distance_m),
            ("sharing.sync_interval_s", self.sync_interval_s),
            ("montecarlo.planner_samples", self.planner_samples),
            ("montecarlo.eval_samples", self.eval_samples),
            ("run.n_topologies", self.n_topologies),
            ("radiomap.grid_step_m", self.radiomap_grid_step_m),
            ("radiomap.node_budget", self.radiomap_node_budget),
        ]
        for key, value in positive:
            if value <= 0:
                err(key, f"{key.split('.')[1]} must be positive, got {value}")
        if self.laa_altitude_m < 0:
            err("scenario.laa_altitude_m", "aircraft altitude must be non-negative")
        if self.radiomap_margin_m < 0:
            err("radiomap.margin_m", "radio map margin must be non-negative")
        if self.master_seed < 0:
            err("run.master_seed", "master seed must be non-negative")
        for key, lat in (("scenario.region_center_lat_deg", self.region_center_lat_deg),
                         ("scenario.subsatellite_lat_deg", self.subsatellite_lat_deg)):
            if not -90.0 <= lat <= 90.0:
                err(key, f"latitude out of range [-90, 90]: {lat}")
        for key, lon in (("scenario.region_center_lon_deg", self.region_center_lon_deg),
                         ("scenario.subsatellite_lon_deg", self.subsatellite_lon_deg)):
            if not -180.0 <= lon <= 180.0:
                err(key, f"longitude out of range [-180, 180]: {lon}")
        if self.sat_altitude_m <= self.laa_altitude_m:
            err("scenario.sat_altitude_m", "satellite must sit above the aircraft layer")
        if not 0.0 < self.laa_dish_efficiency <= 1.0:
            err("radio.laa_dish_efficiency", "aperture efficiency must lie in (0, 1]")
        if self.laa_dish_diameter_m <= 0:
            err("radio.laa_dish_diameter_m", "dish diameter must be positive")
        if self.terrestrial_pathloss_exp < 2.0:
            err("radio.terrestrial_pathloss_exp", "terrestrial exponent below free space")
        if self.laa_power_min_dbw > self.laa_power_max_dbw:
            err("power.laa_power_min_dbw", "aircraft power bounds are inverted")
        if self.tbs_power_min_dbm > self.tbs_power_max_dbm:
            err("power.tbs_power_min_dbm", "TBS power bounds are inverted")
        if not self.tbs_power_min_dbm <= self.tbs_power_dbm <= self.tbs_power_max_dbm:
            err("power.tbs_power_dbm",
                f"tbs_power_dbm {self.tbs_power_dbm} outside "
                f"[{self.tbs_power_min_dbm}, {self.tbs_power_max_dbm}]")
        if self.qos_margin_db < 0:
            err("power.qos_margin_db", "QoS margin must be non-negative")
        if self.reuse not in ("full", "partial"):
            err("sharing.reuse", f"reuse must be 'full' or 'partial', got {self.reuse!r}")
        if self.partial_reuse_factor < 1:
            err("sharing.partial_reuse_factor", "reuse factor must be >= 1")
        factor = self.reuse_factor
        if self.n_carriers % max(factor, 1) != 0:
            err("sharing.partial_reuse_factor",
                f"carriers K={self.n_carriers} not divisible by reuse factor F={factor}")
        if self.n_laa % self.n_carriers != 0:
            err("scenario.n_laa",
                f"aircraft count U={self.n_laa} not divisible by carriers K={self.n_carriers}; "
                "equal per-carrier quotas are required")
        if factor > 1 and self.n_laa % factor != 0:
            err("scenario.n_laa",
                f"aircraft count U={self.n_laa} not divisible by reuse factor F={factor}")
        if factor > self.n_tbs:
            err("sharing.partial_reuse_factor", "more cell colors than cells")
        allowed = self.n_carriers // max(factor, 1)
        if self.tus_per_tbs % allowed != 0:
            out.append(Diagnostic(
                "note", "scenario.tus_per_tbs",
                f"V={self.tus_per_tbs} not divisible by {allowed} usable carriers; "
                "earlier carriers receive one extra user"))
        return out

    def self_test(self) -> dict:
        """Verify the shipped constants of the reference case study.

        Returns the checked name -> value mapping; raises
        :class:`ConfigError` on any mismatch so a drifted default is
        impossible to miss.
        """
        expected = {
            "n_tbs": 28,
            "tus_per_tbs": 24,
            "n_laa": 96,
            "n_carriers": 12,
            "n_links": 672,
            "carrier_freq_hz": 2.0e9,
            "bandwidth_hz": 1.0e6,
            "laa_altitude_m": 200.0,
            "sat_altitude_m": 500_000.0,
            "cell_radius_m": 1000.0,
            "sync_interval_s": 10.0,
            "noise_power_dbm": -114.0,
            "laa_power_min_dbw": -3.0,
            "laa_power_max_dbw": 2.0,
            "tbs_power_min_dbm": 0.0,
            "tbs_power_max_dbm": 10.0,
            "sat_rx_gain_dbi": 25.0,
            "tu_rx_gain_dbi": 0.0,
            "tbs_tx_gain_dbi": 15.0,
            "laa_dish_diameter_m": 0.5,
            "partial_reuse_factor": 4,
            "region_center_lat_deg": 40.0,
            "region_center_lon_deg": 116.0,
            "subsatellite_lat_deg": 40.0,
            "subsatellite_lon_deg": 100.0,
            "qos_threshold_dbm": -126.2,
        }
        checked = {}
        for name, want in expected.items():
            have = getattr(self, name)
            if isinstance(want, float):
                ok = abs(have - want) < 1e-9
            else:
                ok = have == want
            if not ok:
                raise ConfigError(f"case-study constant drifted: {name}={have!r}, expected {want!r}")
            checked[name] = have
        self.validate()
        return checked

    def to_mapping(self) -> dict:
        """Nested section/key mapping mirroring the TOML schema."""
        flat = dataclasses.asdict(self)
        doc = {}
        for section, keys in _SCHEMA.items():
            doc[section] = {key: flat[attr] for key, (attr, _) in keys.items()}
        return doc


def validate_mapping(doc: dict) -> tuple:
    """Check a parsed TOML document against the schema.

    Returns ``(config_or_None, diagnostics)``.  Unknown sections and keys
    are errors; missing keys fall back to defaults with a note.
    """
    diags = []
    values = {}
    if not isinstance(doc, dict):
        return None, [Diagnostic("error", "<root>", "top level must be a table")]
    for section in doc:
        if section not in _SCHEMA:
            diags.append(Diagnostic("error", section, f"unknown section [{section}]"))
    for section, keys in _SCHEMA.items():
        body = doc.get(section, {})
        if not isinstance(body, dict):
            diags.append(Diagnostic("error", section, f"[{section}] must be a table"))
            continue
        for key in body:
            if key not in keys:
                diags.append(Diagnostic("error", f"{section}.{key}", f"unknown key {key!r}"))
        for key, (attr, typ) in keys.items():
            if key not in body:
                default = getattr(ScenarioConfig, attr, None)
                diags.append(Diagnostic(
                    "note", f"{section}.{key}", f"missing, defaulted to {default!r}"))
                continue
            raw = body[key]
            if typ is float and isinstance(raw, int) and not isinstance(raw, bool):
                raw = float(raw)
            if typ is bool and not isinstance(raw, bool):
                diags.append(Diagnostic("error", f"{section}.{key}",
                                        f"expected boolean, got {raw!r}"))
                continue
            if typ is int and (isinstance(raw, bool) or not isinstance(raw, int)):
                diags.append(Diagnostic("error", f"{section}.{key}",
                                        f"expected integer, got {raw!r}"))
                continue
            if not isinstance(raw, typ):
                diags.append(Diagnostic("error", f"{section}.{key}",
                                        f"expected {typ.__name__}, got {raw!r}"))
                continue
            values[attr] = raw
    if any(d.severity == "error" for d in diags):
        return None, diags
    cfg = ScenarioConfig(**values)
    diags.extend(cfg.diagnostics())
    if any(d.severity == "error" for d in diags):
        return None, diags
    return cfg, diags


def load_config(path) -> tuple:
    """Parse and validate a TOML config file.

    Returns ``(config_or_None, diagnostics)``; parse failures are
    reported as a single error diagnostic with the parser message.
    """
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        return None, [Diagnostic("error", "<file>", f"config file not found: {path}")]
    except tomllib.TOMLDecodeError as exc:
        return None, [Diagnostic("error", "<syntax>", f"TOML parse error: {exc}")]
    return validate_mapping(doc)


def config_digest(config: ScenarioConfig) -> str:
    """SHA-256 over the canonical JSON form of the resolved config."""
    payload = json.dumps(dataclasses.asdict(config), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# Fields that, together with the topology, fully determine planner
# gains.  Run-control knobs (sample counts, seeds, schedules, powers)
# are deliberately absent: a gain table stays valid across them.
_CHANNEL_FIELDS = (
    "n_tbs", "tus_per_tbs", "laa_altitude_m",
    "carrier_freq_hz", "sat_rx_gain_dbi", "tbs_tx_gain_dbi",
    "tu_rx_gain_dbi", "laa_dish_diameter_m", "laa_dish_efficiency",
    "terrestrial_pathloss_exp", "satellite_pathloss_exp",
    "reference_distance_m",
)


def channel_digest(config: ScenarioConfig) -> str:
    """SHA-256 over only the gain-determining config fields."""
    subset = {name: getattr(config, name) for name in _CHANNEL_FIELDS}
    payload = json.dumps(subset, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def default_config_path() -> str:
    """Path of the shipped default TOML config."""
    from importlib.resources import files

    return str(files("satshare").joinpath("data/default.toml"))
