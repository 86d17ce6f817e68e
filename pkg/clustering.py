"""
k-means clustering of a population in decision space, and the winner-cluster
rules that pick the base vector for clustering-based mutation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from core import ConfigurationError, Individual, Population, RngStream, StateError

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERS = 100


@dataclass(frozen=True, eq=False)
class Clustering:
    """Result of a k-means run.

    ``seed_indices`` are the points that served as initial centers; in Clu-DE
    this draw is also the "selection" step of the population update.
    ``sse_history`` holds the within-cluster sum of squares after each center
    update.
    """

    assignments: np.ndarray
    centers: np.ndarray
    k: int
    seed_indices: np.ndarray
    iterations: int = 0
    converged: bool = False
    sse_history: list = field(default_factory=list)

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == cluster)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)


def pick_k(n_p: int, rng: RngStream) -> int:
    """Uniform cluster count in ``[2, floor(sqrt(n_p))]``."""
    if n_p < 4:
        raise ConfigurationError(
            f"choosing k needs a population of at least 4, got {n_p}"
        )
    return rng.integer(2, math.isqrt(n_p))


def _squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _sse(points: np.ndarray, centers: np.ndarray, assignments: np.ndarray) -> float:
    residual = points - centers[assignments]
    return float(np.einsum("ij,ij->", residual, residual))


def _assign(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Nearest-center assignment; empty clusters steal the farthest point.

    A reseeded cluster gets the point farthest from its current center, taken
    only from clusters that keep at least one member. The reseeded center is
    moved onto that point.
    """
    k = centers.shape[0]
    distances = _squared_distances(points, centers)
    assignments = np.argmin(distances, axis=1)
    for cluster in range(k):
        if np.any(assignments == cluster):
            continue
        sizes = np.bincount(assignments, minlength=k)
        own = distances[np.arange(points.shape[0]), assignments]
        donors = np.flatnonzero(sizes[assignments] > 1)
        chosen = int(donors[np.argmax(own[donors])])
        logger.debug("reseeding empty cluster %d with point %d", cluster, chosen)
        assignments[chosen] = cluster
        centers[cluster] = points[chosen]
        distances[:, cluster] = np.sum((points - points[chosen]) ** 2, axis=1)
    return assignments


def _means(points: np.ndarray, assignments: np.ndarray, k: int) -> np.ndarray:
    centers = np.zeros((k, points.shape[1]))
    np.add.at(centers, assignments, points)
    return centers / np.bincount(assignments, minlength=k)[:, None]


def kmeans(
    points,
    k: int,
    rng: RngStream,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> Clustering:
    """Lloyd's algorithm seeded with ``k`` distinct input points.

    Iterates assign / recompute-means until the assignment stops changing, a
    step fails to lower the SSE, or ``max_iters`` assignment steps have run.
    A step that does not lower the SSE is discarded, so ``sse_history`` is
    strictly decreasing; this happens when a collapsed population leaves only
    roundoff-level distances. Distances are squared Euclidean.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    if n == 0:
        raise ConfigurationError("kmeans needs at least one point")
    if not 1 <= k <= n:
        raise ConfigurationError(f"k must lie in [1, {n}], got {k}")
    if max_iters < 1:
        raise ConfigurationError(f"max_iters must be positive, got {max_iters}")

    seed_indices = rng.distinct(n, k)
    centers = points[seed_indices].copy()
    assignments = _assign(points, centers)
    centers = _means(points, assignments, k)
    history = [_sse(points, centers, assignments)]
    iterations = 1
    converged = False

    while iterations < max_iters:
        updated = _assign(points, centers.copy())
        iterations += 1
        if np.array_equal(updated, assignments):
            converged = True
            break
        candidate = _means(points, updated, k)
        sse = _sse(points, candidate, updated)
        if not sse < history[-1]:
            logger.debug(
                "kmeans stalled at SSE %.3e after %d steps", history[-1], iterations
            )
            converged = True
            break
        assignments, centers = updated, candidate
        history.append(sse)

    if not converged:
        logger.warning(
            "kmeans stopped at the iteration cap (%d) before converging", max_iters
        )
    return Clustering(
        assignments=assignments,
        centers=centers,
        k=k,
        seed_indices=seed_indices,
        iterations=iterations,
        converged=converged,
        sse_history=history,
    )


def winner_cluster(clu: Clustering, values) -> int:
    """Cluster with the lowest mean objective value; ties go to the lower index."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] != clu.assignments.shape[0]:
        raise ConfigurationError(
            f"{values.shape[0]} values for {clu.assignments.shape[0]} assigned points"
        )
    sizes = clu.sizes()
    if np.any(sizes == 0):
        raise StateError(
            f"cluster {int(np.flatnonzero(sizes == 0)[0])} is empty; "
            "winner selection needs every cluster populated"
        )
    means = np.bincount(clu.assignments, weights=values, minlength=clu.k) / sizes
    return int(np.argmin(means))


def cluster_best_index(clu: Clustering, values, winner: int) -> int:
    """Population index of the best member of ``winner`` (lowest index on ties)."""
    members = clu.members(winner)
    if members.size == 0:
        raise StateError(f"cluster {winner} has no members")
    values = np.asarray(values, dtype=float)
    return int(members[np.argmin(values[members])])


def cluster_best(clu: Clustering, pop: Population, winner: int) -> Individual:
    """Best individual inside the winner cluster, not necessarily the global best."""
    return pop[cluster_best_index(clu, pop.values(), winner)]
