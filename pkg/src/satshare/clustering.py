"""Quota-constrained clustering of aircraft by interference footprint.

``balanced_kmeans`` is Lloyd iteration adapted to the L1 geometry of the
feature space: centroids are per-coordinate medians and the assignment
step solves a transportation problem exactly by expanding each cluster
into quota-many centroid copies and running the Hungarian method.  The
per-carrier quotas (one aircraft slot per TDMA share) are therefore
respected at every iteration, and the within-cluster L1 dispersion never
increases.

Tie-breaking contract: among equal-cost assignments, lower aircraft
indices take lower cluster indices, and aircraft with byte-identical
feature vectors are consolidated into one cluster whenever a zero-cost
exchange allows it.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .scheduling import hungarian
from .seeding import derive_rng, derive_seed

__all__ = [
    "LinkClusterSet",
    "balanced_kmeans",
    "hierarchical_cluster",
    "cluster_dispersion",
]


@dataclass(frozen=True)
class LinkClusterSet:
    """Result of a balanced clustering run.

    ``clusters[k]`` lists member aircraft ascending; ``coarse_labels``
    maps each fine cluster to its coarse group under hierarchical
    clustering (``None`` for flat runs).
    """

    clusters: tuple
    quotas: tuple
    objective: float
    n_iterations: int
    objective_history: tuple
    coarse_labels: tuple = None


def _l1_cost(points, centroids) -> np.ndarray:
    return np.abs(points[:, None, :] - centroids[None, :, :]).sum(axis=2)


def _farthest_point_init(points, n_clusters, rng) -> np.ndarray:
    """Greedy max-min L1 seeding from a random start point."""
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    best = np.abs(points - points[chosen[0]]).sum(axis=1)
    while len(chosen) < n_clusters:
        nxt = int(np.argmax(best))  # first max wins: deterministic
        chosen.append(nxt)
        best = np.minimum(best, np.abs(points - points[nxt]).sum(axis=1))
    return points[chosen].copy()


def _order_ties(cost, labels) -> None:
    """Swap equal-cost pairs so lower point index gets lower cluster.

    Exact ties are rare (identical or symmetric points), so candidates
    are located with one vectorized scan per pass.
    """
    n = labels.shape[0]
    for _ in range(4 * n):
        own = cost[np.arange(n), labels]
        cross = cost[:, labels]  # cross[i, j]: cost of point i in j's cluster
        delta = cross + cross.T - own[:, None] - own[None, :]
        ii, jj = np.nonzero((delta == 0.0) & (labels[:, None] > labels[None, :]))
        keep = ii < jj
        if not np.any(keep):
            return
        used = np.zeros(n, dtype=bool)
        for i, j in zip(ii[keep], jj[keep]):  # maximal set of disjoint swaps
            if used[i] or used[j]:
                continue
            labels[i], labels[j] = labels[j], labels[i]
            used[i] = used[j] = True


def _consolidate_duplicates(cost, labels, points) -> None:
    """Gather byte-identical points into one cluster via zero-cost swaps.

    Only cost-neutral exchanges are applied, so the assignment stays
    optimal; a group larger than any remaining room simply stops early.
    """
    seen = {}
    for i, row in enumerate(points):
        seen.setdefault(row.tobytes(), []).append(i)
    for group in seen.values():
        if len(group) < 2:
            continue
        group_set = set(group)
        for _ in range(len(group)):
            counts = {}
            for i in group:
                counts[labels[i]] = counts.get(labels[i], 0) + 1
            if len(counts) == 1:
                break
            target = max(counts, key=lambda k: (counts[k], -k))
            moved = False
            for i in group:
                k_from = labels[i]
                if k_from == target:
                    continue
                for j in range(labels.shape[0]):
                    if labels[j] != target or j in group_set:
                        continue
                    if cost[i, target] + cost[j, k_from] == cost[i, k_from] + cost[j, target]:
                        labels[i], labels[j] = target, k_from
                        moved = True
                        break
                if moved:
                    break
            if not moved:
                break


def balanced_kmeans(features, quotas, seed: int, max_iters: int = 100) -> LinkClusterSet:
    """Cluster ``features`` (U, D) into ``len(quotas)`` groups of exactly
    the given sizes, minimizing total L1 distance to the group medians.

    Deterministic in ``(features, quotas, seed)``.
    """
    points = np.asarray(features, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError(f"features must be a non-empty (U, D) array, got {points.shape}")
    quotas = tuple(int(q) for q in quotas)
    if any(q < 1 for q in quotas):
        raise ValueError("every quota must be at least 1")
    n, _ = points.shape
    if sum(quotas) != n:
        raise ValueError(f"quotas sum to {sum(quotas)}, need {n}")
    k = len(quotas)
    slot_cluster = np.repeat(np.arange(k), quotas)

    centroids = _farthest_point_init(points, k, derive_rng(seed, "init"))
    labels = None
    history = []
    for iteration in range(1, max_iters + 1):
        cost = _l1_cost(points, centroids)
        rows = hungarian(cost[:, slot_cluster])
        new_labels = slot_cluster[rows]
        _order_ties(cost, new_labels)
        _consolidate_duplicates(cost, new_labels, points)
        assigned = float(cost[np.arange(n), new_labels].sum())
        if history and assigned > history[-1] + 1e-9 * max(1.0, abs(history[-1])):
            raise RuntimeError("balanced k-means objective increased; assignment broken")
        if labels is not None and np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
        for kk in range(k):
            centroids[kk] = np.median(points[labels == kk], axis=0)
        history.append(float(_l1_cost(points, centroids)[np.arange(n), labels].sum()))
    objective = history[-1] if history else assigned
    clusters = tuple(tuple(int(i) for i in np.flatnonzero(labels == kk)) for kk in range(k))
    return LinkClusterSet(clusters=clusters, quotas=quotas, objective=float(objective),
                          n_iterations=iteration, objective_history=tuple(history))


def hierarchical_cluster(features, n_coarse: int, quotas, seed: int,
                         max_iters: int = 100) -> LinkClusterSet:
    """Two-stage clustering for partial frequency reuse.

    Stage one forms ``n_coarse`` groups sized by the per-block quota sums
    (blocks are contiguous runs of ``K / n_coarse`` fine clusters); stage
    two splits each coarse group into its block's fine clusters.  With
    ``n_coarse == 1`` this is exactly the flat problem and delegates to
    :func:`balanced_kmeans` with the same seed (bit-identical result).
    """
    points = np.asarray(features, dtype=float)
    quotas = tuple(int(q) for q in quotas)
    k = len(quotas)
    if n_coarse < 1:
        raise ValueError("need at least one coarse group")
    if k % n_coarse != 0:
        raise ValueError(f"{k} fine clusters not divisible into {n_coarse} groups")
    if n_coarse == 1:
        flat = balanced_kmeans(points, quotas, seed, max_iters)
        return replace(flat, coarse_labels=(0,) * k)

    block = k // n_coarse
    coarse_quotas = tuple(sum(quotas[f * block:(f + 1) * block]) for f in range(n_coarse))
    coarse = balanced_kmeans(points, coarse_quotas, derive_seed(seed, "coarse"), max_iters)

    clusters = []
    labels = []
    objective = 0.0
    iterations = coarse.n_iterations
    for f in range(n_coarse):
        members = np.asarray(coarse.clusters[f], dtype=int)
        fine = balanced_kmeans(points[members], quotas[f * block:(f + 1) * block],
                               derive_seed(seed, "fine", f), max_iters)
        for local in fine.clusters:
            clusters.append(tuple(int(members[i]) for i in local))
            labels.append(f)
        objective += fine.objective
        iterations = max(iterations, fine.n_iterations)
    return LinkClusterSet(clusters=tuple(clusters), quotas=quotas,
                          objective=float(objective), n_iterations=iterations,
                          objective_history=(float(objective),),
                          coarse_labels=tuple(labels))


def cluster_dispersion(cluster_set: LinkClusterSet, features) -> float:
    """Total within-cluster L1 distance to the member medians."""
    points = np.asarray(features, dtype=float)
    total = 0.0
    for members in cluster_set.clusters:
        if not members:
            continue
        sub = points[list(members)]
        total += float(np.abs(sub - np.median(sub, axis=0)).sum())
    return total
