"""Scene geometry walk-through: cells, aircraft airspace, and the two
time scales of the link (microseconds down, milliseconds up).

Run:  python3 demos/01_geometry_and_delays.py
Writes demos/out/topology.png
"""

import numpy as np

from satshare import (ScenarioConfig, elevation_angle, generate_topology,
                      propagation_delay, slant_range)

SEED = 2024
OUT = "demos/out/topology.png"


def main():
    cfg = ScenarioConfig()
    topo = generate_topology(cfg, SEED)

    print(f"{cfg.n_tbs} cells x {cfg.tus_per_tbs} users, "
          f"{cfg.n_laa} aircraft at {cfg.laa_altitude_m:.0f} m, "
          f"satellite at {topo.satellite[2] / 1e3:.0f} km")

    # terrestrial side: delay across one cell is a few microseconds,
    # so coarse 10 s intervals dwarf any timing misalignment
    d = slant_range(topo.tbs[0], topo.tu_flat[:cfg.tus_per_tbs])
    delays_us = 1e6 * d / 299_792_458.0
    print(f"\ncell 0 downlink delays: {delays_us.min():.2f} .. "
          f"{delays_us.max():.2f} us (radius {cfg.cell_radius_m:.0f} m)")

    # satellite side: ~1.7 ms and growing as the aircraft slides away
    # from the sub-satellite point
    print("\naircraft -> satellite")
    print("  lon offset   elevation   slant      delay")
    for dlon in (0.0, 2.0, 4.0, 8.0, 16.0):
        pos = np.array([topo.satellite[0], topo.satellite[1] + dlon,
                        cfg.laa_altitude_m])
        elev = float(elevation_angle(pos, topo.satellite))
        rng_m = float(slant_range(pos, topo.satellite))
        delay = propagation_delay(pos, topo.satellite)
        print(f"  {dlon:7.1f} deg {elev:8.1f} deg {rng_m / 1e3:7.0f} km "
              f"{delay * 1e3:7.3f} ms")

    uplink = np.array([propagation_delay(p, topo.satellite)
                       for p in topo.laa])
    print(f"\nscene aircraft delays: {uplink.min() * 1e3:.3f} .. "
          f"{uplink.max() * 1e3:.3f} ms "
          f"(min elevation {np.min(elevation_angle(topo.laa, topo.satellite)):.1f} deg)")

    _plot(cfg, topo)


def _plot(cfg, topo):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 6))
    ax.scatter(topo.tu_flat[:, 1], topo.tu_flat[:, 0], s=4, c="tab:gray",
               label="downlink users")
    ax.scatter(topo.tbs[:, 1], topo.tbs[:, 0], s=40, marker="^",
               c="tab:blue", label="base stations")
    ax.scatter(topo.laa[:, 1], topo.laa[:, 0], s=24, marker="x",
               c="tab:red", label=f"aircraft ({cfg.laa_altitude_m:.0f} m)")
    colors = topo.reuse_colors
    for b, (lat, lon, _alt) in enumerate(topo.tbs):
        ax.annotate(str(colors[b]), (lon, lat), fontsize=7,
                    xytext=(2, 2), textcoords="offset points")
    ax.set_xlabel("longitude [deg]")
    ax.set_ylabel("latitude [deg]")
    ax.set_title("hex cell grid with aircraft overlay (labels = reuse colors)")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(OUT, dpi=130)
    print(f"\nwrote {OUT}")


if __name__ == "__main__":
    main()
