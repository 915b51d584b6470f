"""Scheme comparison across terrestrial transmit power.

Sweeps the base-station power on a reduced scenario and tabulates the
mean sum-rate gain over the no-sharing baseline for each scheduling
scheme, then renders the comparison chart.

Run:  python3 demos/04_scheme_comparison.py      (about a minute)
Writes demos/out/scheme_comparison.png
"""

import numpy as np

from satshare import ScenarioConfig, sweep

POWER_GRID_DBM = [0.0, 5.0, 10.0]
OUT = "demos/out/scheme_comparison.png"


def main():
    cfg = ScenarioConfig().replace(n_tbs=4, tus_per_tbs=6, n_laa=12,
                                   n_carriers=4, planner_samples=60,
                                   eval_samples=200, n_topologies=4,
                                   master_seed=42)
    result = sweep(cfg, "tbs_power", POWER_GRID_DBM)

    schemes = result.reports[0].schemes
    print(f"{cfg.n_topologies} topologies per point, schemes: "
          f"{', '.join(schemes)}")
    print(f"\n{'P_tbs [dBm]':>12} | " +
          " | ".join(f"{s:>10}" for s in schemes))
    print("-" * (15 + 13 * len(schemes)))
    table = {}
    for value, rep in zip(result.values, result.reports):
        agg = rep.aggregates()
        row = [agg[s]["mean_improvement_pct"] for s in schemes]
        table[value] = dict(zip(schemes, row))
        print(f"{value:>12.1f} | " +
              " | ".join(f"{v:>9.1f}%" for v in row))

    print("\nmean total rate at the highest power point [Mbit/s]:")
    agg = result.reports[-1].aggregates()
    for s in schemes:
        print(f"  {s:<10} {agg[s]['mean_total_bps'] / 1e6:8.2f}"
              f"   ({agg[s]['mean_sat_bps'] / 1e6:6.2f} satellite"
              f" + {agg[s]['mean_ter_bps'] / 1e6:6.2f} terrestrial)")

    _plot(result, schemes)


def _plot(result, schemes):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    markers = {"proposed": "o", "finesync": "s", "randscheme": "^",
               "nosharing": "x"}
    for s in schemes:
        gains = [rep.aggregates()[s]["mean_improvement_pct"]
                 for rep in result.reports]
        totals = [rep.aggregates()[s]["mean_total_bps"] / 1e6
                  for rep in result.reports]
        ax1.plot(result.values, gains, marker=markers.get(s, "d"), label=s)
        ax2.plot(result.values, totals, marker=markers.get(s, "d"), label=s)
    ax1.set_xlabel("base-station power [dBm]")
    ax1.set_ylabel("gain over no sharing [%]")
    ax1.grid(alpha=0.3)
    ax1.legend()
    ax2.set_xlabel("base-station power [dBm]")
    ax2.set_ylabel("mean sum rate [Mbit/s]")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(OUT, dpi=130)
    print(f"\nwrote {OUT}")


if __name__ == "__main__":
    np.set_printoptions(precision=3)
    main()
