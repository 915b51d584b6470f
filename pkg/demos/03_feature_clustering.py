"""Rate-impact features and balanced aircraft clustering.

Builds the per-aircraft feature matrix (concatenated rate degradation
it would inflict on every terrestrial link, with and without power
control headroom), groups the fleet into carrier-sized clusters, and
contrasts flat clustering with the two-stage variant used under
partial frequency reuse.

Run:  python3 demos/03_feature_clustering.py
"""

import numpy as np

from satshare import (ScenarioConfig, balanced_kmeans, build_feature_matrix,
                      build_planner_csi, cluster_dispersion,
                      generate_topology, hierarchical_cluster, planner_draws)
from satshare.seeding import derive_seed

SEED = 31337


def main():
    cfg = ScenarioConfig().replace(n_tbs=4, tus_per_tbs=6, n_laa=12,
                                   n_carriers=4, planner_samples=60)
    topo = generate_topology(cfg, SEED)
    csi = build_planner_csi(topo, cfg)
    draws = planner_draws(csi, topo, cfg, SEED)

    feats = build_feature_matrix(csi, topo, cfg, SEED, draws=draws)
    n_links = cfg.n_tbs * cfg.tus_per_tbs
    print(f"feature matrix: {feats.shape[0]} aircraft x "
          f"{feats.shape[1]} entries (2 x {n_links} links)")
    print(f"  value range  {feats.min():.4f} .. {feats.max():.4f} bit/s/Hz lost")
    # columns 0..n_links-1 are at full aircraft power, the rest at minimum
    full, floor = feats[:, :n_links], feats[:, n_links:]
    print(f"  mean impact  full power {full.mean():.4f}, "
          f"power floor {floor.mean():.4f}")

    quotas = cfg.carrier_quotas()
    flat = balanced_kmeans(feats, quotas, derive_seed(SEED, "cluster"))
    print(f"\nflat clustering into {len(quotas)} carriers "
          f"(quotas {tuple(quotas)}):")
    for k, members in enumerate(flat.clusters):
        print(f"  carrier {k}: aircraft {sorted(members)}")
    print(f"  objective {flat.objective:.4f} after {flat.n_iterations} sweeps")
    hist = ", ".join(f"{v:.4f}" for v in flat.objective_history)
    print(f"  history   [{hist}]")

    rand_obj = _random_baseline(feats, quotas)
    print(f"  random quota-respecting partitions average {rand_obj:.4f}")

    # partial reuse: coarse groups first, then per-group refinement
    cfg2 = cfg.replace(reuse="partial", partial_reuse_factor=2)
    two = hierarchical_cluster(feats, cfg2.reuse_factor, quotas,
                               derive_seed(SEED, "cluster"))
    print(f"\ntwo-stage (reuse factor {cfg2.reuse_factor}):")
    print(f"  carriers per coarse group "
          f"{np.bincount(two.coarse_labels, minlength=2)}, "
          f"objective {two.objective:.4f}")
    one = hierarchical_cluster(feats, 1, quotas, derive_seed(SEED, "cluster"))
    same = all(np.array_equal(a, b)
               for a, b in zip(one.clusters, flat.clusters))
    print(f"  reuse factor 1 collapses onto flat clustering: {same}")
    print(f"  dispersion flat {cluster_dispersion(flat, feats):.4f}, "
          f"two-stage {cluster_dispersion(two, feats):.4f}")


def _random_baseline(feats, quotas, n_draws: int = 200):
    """Mean L1 dispersion over random quota-respecting partitions."""
    rng = np.random.default_rng(9)
    n = feats.shape[0]
    totals = []
    for _ in range(n_draws):
        perm = rng.permutation(n)
        total, lo = 0.0, 0
        for q in quotas:
            members = perm[lo:lo + q]
            lo += q
            centroid = np.median(feats[members], axis=0)
            total += np.abs(feats[members] - centroid).sum()
        totals.append(total)
    return float(np.mean(totals))


if __name__ == "__main__":
    main()
