"""Link budgets, fading, and Monte Carlo ergodic rates.

Gains and losses are handled in dB at the API boundary and converted to
linear power ratios exactly once inside the rate estimators.  All fading
models have unit mean power so large-scale budgets stay calibrated.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import exp1

from .config import ScenarioConfig
from .geometry import SPEED_OF_LIGHT, Topology, off_axis_angle, slant_range
from .seeding import derive_rng

__all__ = [
    "FlatPattern",
    "ParabolicEnvelopePattern",
    "FadingModel",
    "PlannerCsi",
    "antenna_gain",
    "path_loss",
    "build_planner_csi",
    "tbs_gain_table",
    "laa_gain_rows",
    "sample_fading",
    "expected_rate",
    "rayleigh_rate_closed_form",
]

log = logging.getLogger(__name__)

_LN2 = np.log(2.0)


@dataclass(frozen=True)
class FlatPattern:
    """Angle-independent gain (satellite, TBS sector average, user)."""

    gain_dbi: float


@dataclass(frozen=True)
class ParabolicEnvelopePattern:
    """Reference radiation envelope of a small parabolic reflector.

    Peak gain 10*log10(eta * (pi*D/lambda)^2) inside the main lobe;
    32 - 25*log10(theta) dBi out to 48 degrees and -10 dBi beyond.  The
    main-lobe edge is max(1 deg, 100*lambda/D) as the envelope is only
    defined for D/lambda below 100.
    """

    diameter_m: float
    freq_hz: float
    efficiency: float = 0.65

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.freq_hz

    @property
    def peak_gain_dbi(self) -> float:
        return 10.0 * np.log10(
            self.efficiency * (np.pi * self.diameter_m / self.wavelength_m) ** 2)

    @property
    def min_angle_deg(self) -> float:
        return max(1.0, 100.0 * self.wavelength_m / self.diameter_m)


def antenna_gain(pattern, off_axis_deg) -> np.ndarray:
    """Gain in dBi at the given off-axis angles (degrees, in [0, 180])."""
    theta = np.asarray(off_axis_deg, dtype=float)
    if np.any(~np.isfinite(theta)) or np.any(theta < 0.0) or np.any(theta > 180.0):
        raise ValueError("off-axis angle must be finite and within [0, 180] degrees")
    if isinstance(pattern, FlatPattern):
        return np.broadcast_to(np.float64(pattern.gain_dbi), theta.shape).copy()[()]
    if isinstance(pattern, ParabolicEnvelopePattern):
        theta_min = pattern.min_angle_deg
        with np.errstate(divide="ignore", invalid="ignore"):
            side = 32.0 - 25.0 * np.log10(np.where(theta > 0, theta, 1.0))
        gain = np.where(theta < theta_min, pattern.peak_gain_dbi,
                        np.where(theta < 48.0, side, -10.0))
        return gain[()]
    raise TypeError(f"unknown antenna pattern: {pattern!r}")


def path_loss(distance_m, freq_hz: float, exponent: float = 2.0,
              ref_distance_m: float = 1.0) -> np.ndarray:
    """Log-distance path loss in dB with free-space intercept.

    PL(d) = 20*log10(4*pi*d0*f/c) + 10*n*log10(d/d0).  Distances below
    d0 are clamped to d0 (near-field guard).
    """
    d = np.asarray(distance_m, dtype=float)
    if freq_hz <= 0:
        raise ValueError("frequency must be positive")
    if ref_distance_m <= 0:
        raise ValueError("reference distance must be positive")
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    if np.any(d < ref_distance_m):
        log.debug("clamping %d sub-reference distances to %.3g m",
                  int(np.sum(d < ref_distance_m)), ref_distance_m)
        d = np.maximum(d, ref_distance_m)
    intercept = 20.0 * np.log10(4.0 * np.pi * ref_distance_m * freq_hz / SPEED_OF_LIGHT)
    return (intercept + 10.0 * exponent * np.log10(d / ref_distance_m))[()]


@dataclass(frozen=True)
class PlannerCsi:
    """Large-scale (path loss + antenna) gains known to the planner, dB.

    ``g_sat[u]``: aircraft u to satellite (dish peak + satellite gain).
    ``g_ter[n]``: serving TBS to user of link n.
    ``g_int[u, n]``: aircraft u toward user n through the dish envelope
    at the true off-axis angle.
    ``g_cross[m, n]``: TBS m toward user n (co-channel downlink
    interference); ``g_cross[serving(n), n] == g_ter[n]``.
    """

    g_sat_db: np.ndarray
    g_ter_db: np.ndarray
    g_int_db: np.ndarray
    g_cross_db: np.ndarray


def laa_gain_rows(laa_positions, topology: Topology, config: ScenarioConfig) -> tuple:
    """Satellite-link and per-user gains for aircraft at given positions.

    Returns ``(g_sat_db (A,), g_int_db (A, N))`` for ``(A, 3)`` geodetic
    rows.  This single code path serves both direct CSI construction and
    radio-map table building, so the two agree bit for bit.
    """
    pos = np.asarray(laa_positions, dtype=float)
    squeeze = pos.ndim == 1
    pos = np.atleast_2d(pos)
    dish = ParabolicEnvelopePattern(
        config.laa_dish_diameter_m, config.carrier_freq_hz, config.laa_dish_efficiency)

    d_sat = slant_range(pos, topology.satellite)
    pl_sat = path_loss(d_sat, config.carrier_freq_hz, config.satellite_pathloss_exp,
                       config.reference_distance_m)
    g_sat = dish.peak_gain_dbi + config.sat_rx_gain_dbi - pl_sat

    tu = topology.tu_flat
    d_tu = slant_range(pos[:, None, :], tu[None, :, :])
    theta = off_axis_angle(pos[:, None, :], topology.satellite, tu[None, :, :])
    pl_tu = path_loss(d_tu, config.carrier_freq_hz, config.terrestrial_pathloss_exp,
                      config.reference_distance_m)
    g_int = antenna_gain(dish, theta) + config.tu_rx_gain_dbi - pl_tu

    if squeeze:
        return g_sat[0], g_int[0]
    return g_sat, g_int


def tbs_gain_table(topology: Topology, config: ScenarioConfig) -> tuple:
    """Downlink gains ``(g_cross_db (M, N), g_ter_db (N,))``.

    ``g_cross[m, n]`` is station m toward the user of link n; the
    serving diagonal is the wanted-signal gain.
    """
    tu = topology.tu_flat
    d_cross = slant_range(topology.tbs[:, None, :], tu[None, :, :])
    pl_cross = path_loss(d_cross, config.carrier_freq_hz,
                         config.terrestrial_pathloss_exp, config.reference_distance_m)
    g_cross = config.tbs_tx_gain_dbi + config.tu_rx_gain_dbi - pl_cross

    serving = topology.serving_tbs()
    g_ter = g_cross[serving, np.arange(tu.shape[0])]
    return g_cross, g_ter


def build_planner_csi(topology: Topology, config: ScenarioConfig) -> PlannerCsi:
    """Assemble all large-scale gains the planner works from."""
    g_sat, g_int = laa_gain_rows(topology.laa, topology, config)
    g_cross, g_ter = tbs_gain_table(topology, config)
    return PlannerCsi(g_sat_db=g_sat, g_ter_db=g_ter, g_int_db=g_int, g_cross_db=g_cross)


@dataclass(frozen=True)
class FadingModel:
    """Unit-mean-power small-scale fading, optionally shadowed.

    ``kind`` is ``"rician"`` (line-of-sight factor K in dB) or
    ``"rayleigh"``.  ``shadowing_sigma_db > 0`` multiplies a unit-mean
    log-normal term.
    """

    kind: str = "rayleigh"
    rician_k_db: float = 10.0
    shadowing_sigma_db: float = 0.0


def sample_fading(model: FadingModel, n_samples: int, seed) -> np.ndarray:
    """Draw ``n_samples`` power gains |h|^2 with E[|h|^2] = 1.

    ``seed`` may be seed-key material (int) or a ``numpy`` Generator to
    continue an existing stream.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    rng = seed if isinstance(seed, np.random.Generator) else derive_rng(seed, "fading")
    if model.kind == "rician":
        k = 10.0 ** (model.rician_k_db / 10.0)
        los = np.sqrt(k / (k + 1.0))
        sigma = np.sqrt(1.0 / (2.0 * (k + 1.0)))
        re = los + sigma * rng.standard_normal(n_samples)
        im = sigma * rng.standard_normal(n_samples)
        power = re * re + im * im
    elif model.kind == "rayleigh":
        power = rng.exponential(1.0, size=n_samples)
    else:
        raise ValueError(f"unknown fading kind: {model.kind!r}")
    if model.shadowing_sigma_db > 0.0:
        s = model.shadowing_sigma_db * np.log(10.0) / 10.0
        power = power * np.exp(rng.normal(-0.5 * s * s, s, size=n_samples))
    return power


def expected_rate(signal_gain_db: float, tx_power_dbm: float, interferers,
                  signal_fading: FadingModel, noise_dbm: float,
                  n_samples: int, seed) -> float:
    """Monte Carlo ergodic spectral efficiency E[log2(1 + SINR)], b/s/Hz.

    ``interferers`` is a sequence of ``(gain_db, power_dbm, FadingModel)``
    tuples.  All draws come from one stream seeded by ``seed``: signal
    first, then interferers in listed order, so results are reproducible
    and order-sensitive by contract.
    """
    rng = derive_rng(seed, "rate") if not isinstance(seed, np.random.Generator) else seed
    s_lin = 10.0 ** ((tx_power_dbm + signal_gain_db) / 10.0)
    noise = 10.0 ** (noise_dbm / 10.0)
    signal = s_lin * sample_fading(signal_fading, n_samples, rng)
    denom = np.full(n_samples, noise)
    for gain_db, power_dbm, model in interferers:
        i_lin = 10.0 ** ((power_dbm + gain_db) / 10.0)
        denom = denom + i_lin * sample_fading(model, n_samples, rng)
    return float(np.mean(np.log1p(signal / denom)) / _LN2)


def rayleigh_rate_closed_form(mean_snr_db: float) -> float:
    """Exact Rayleigh ergodic rate exp(1/g) * E1(1/g) / ln 2, b/s/Hz.

    For very low SNR (1/g > 700) the direct form overflows, so the
    asymptotic series exp(x)E1(x) ~ (1 - 1/x + 2/x^2 - 6/x^3)/x is used;
    its truncation error there is below 1e-10.
    """
    gbar = 10.0 ** (mean_snr_db / 10.0)
    x = 1.0 / gbar
    if x <= 700.0:
        value = np.exp(x) * exp1(x)
    else:
        value = (1.0 - 1.0 / x + 2.0 / x**2 - 6.0 / x**3) / x
    return float(value / _LN2)
