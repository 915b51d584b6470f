"""Link budgets and the precomputed gain grid.

Shows the three gain families (downlink, cross-cell, aircraft-to-user
interference plus aircraft-to-satellite) and then freezes the aircraft
layer into a radio map, demonstrating that lookups reproduce direct
computation exactly.

Run:  python3 demos/02_link_budgets_and_radio_map.py
Writes demos/out/gain_map.png
"""

import numpy as np

from satshare import (ScenarioConfig, antenna_gain, build_planner_csi,
                      build_radio_map, generate_topology, path_loss, query,
                      snap_topology, verify_radio_map)
from satshare.channel import ParabolicEnvelopePattern
from satshare.radiomap import node_position

SEED = 77
GRID_STEP_M = 200.0
OUT = "demos/out/gain_map.png"


def main():
    cfg = ScenarioConfig().replace(n_tbs=4, tus_per_tbs=6, n_laa=8,
                                   n_carriers=4)
    topo = generate_topology(cfg, SEED)
    csi = build_planner_csi(topo, cfg)

    print("path loss at 2 GHz (terrestrial exponent "
          f"{cfg.terrestrial_pathloss_exp}):")
    for d in (100.0, 500.0, 1000.0, 3000.0):
        pl = path_loss(d, cfg.carrier_freq_hz, cfg.terrestrial_pathloss_exp,
                       cfg.reference_distance_m)
        print(f"  {d:6.0f} m  {pl:7.2f} dB")

    dish = ParabolicEnvelopePattern(cfg.laa_dish_diameter_m,
                                    cfg.carrier_freq_hz,
                                    cfg.laa_dish_efficiency)
    print("\naircraft dish envelope (boresight at the satellite):")
    for theta in (0.0, 5.0, 20.0, 48.0, 90.0):
        print(f"  {theta:5.1f} deg off-axis  "
              f"{antenna_gain(dish, theta):7.2f} dBi")

    print("\nplanner CSI summary (dB):")
    print(f"  serving   {csi.g_ter_db.min():7.1f} .. {csi.g_ter_db.max():7.1f}")
    print(f"  cross-TBS {csi.g_cross_db.min():7.1f} .. {csi.g_cross_db.max():7.1f}")
    print(f"  LAA->user {csi.g_int_db.min():7.1f} .. {csi.g_int_db.max():7.1f}")
    print(f"  LAA->sat  {csi.g_sat_db.min():7.1f} .. {csi.g_sat_db.max():7.1f}")

    # freeze the aircraft layer into a grid and sanity-check a lookup
    rmap = build_radio_map(topo, cfg, grid_step_m=GRID_STEP_M)
    checked = verify_radio_map(rmap, topo, cfg, n_check=50)
    print(f"\nradio map: {rmap.n_lat} x {rmap.n_lon} nodes at "
          f"{rmap.grid_step_m:.0f} m; {checked} nodes verified bitwise")

    snapped = snap_topology(topo, rmap)
    g_sat, g_int = query(rmap, snapped.laa[0])
    print(f"aircraft 0 lookup: g_sat {g_sat:.2f} dB, "
          f"strongest user exposure {g_int.max():.2f} dB")

    _plot(rmap)


def _plot(rmap):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    grid = rmap.entries[:, 0].reshape(rmap.n_lat, rmap.n_lon)
    corner_sw = node_position(rmap, 0, 0)
    corner_ne = node_position(rmap, rmap.n_lat - 1, rmap.n_lon - 1)
    fig, ax = plt.subplots(figsize=(7, 5))
    im = ax.imshow(grid, origin="lower", aspect="auto",
                   extent=(corner_sw[1], corner_ne[1],
                           corner_sw[0], corner_ne[0]))
    fig.colorbar(im, ax=ax, label="aircraft-to-satellite gain [dB]")
    ax.set_xlabel("longitude [deg]")
    ax.set_ylabel("latitude [deg]")
    ax.set_title(f"satellite-link gain layer at {rmap.altitude_m:.0f} m")
    fig.tight_layout()
    fig.savefig(OUT, dpi=130)
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
