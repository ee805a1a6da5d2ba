"""Random network layouts and K-means CoMP clustering."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class TopologyError(ValueError):
    pass


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class SimRegion:
    """Square deployment region with its lower-left corner at the origin (km)."""

    side_length: float = 1.0

    def __post_init__(self):
        if not self.side_length > 0:
            raise ParameterError(f"side_length must be positive, got {self.side_length}")

    @property
    def area(self) -> float:
        return self.side_length**2

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        return np.all((points >= 0.0) & (points <= self.side_length), axis=1)


@dataclass(frozen=True, eq=False)
class Topology:
    bs_positions: np.ndarray
    user_positions: np.ndarray
    rng_seed: int | None = None

    @property
    def num_bs(self) -> int:
        return len(self.bs_positions)

    @property
    def num_users(self) -> int:
        return len(self.user_positions)

    def distances(self) -> np.ndarray:
        """User x BS matrix of Euclidean distances in km."""
        diff = self.user_positions[:, None, :] - self.bs_positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])


@dataclass(frozen=True, eq=False)
class ClusterPlan:
    cluster_of_bs: np.ndarray
    centroids: np.ndarray
    members: list[np.ndarray] = field(repr=False)

    @property
    def num_clusters(self) -> int:
        return len(self.members)

    @classmethod
    def from_labels(cls, labels, centroids) -> ClusterPlan:
        labels = np.asarray(labels, dtype=int)
        centroids = np.asarray(centroids, dtype=float).reshape(-1, 2)
        members = [np.flatnonzero(labels == c) for c in range(len(centroids))]
        return cls(cluster_of_bs=labels, centroids=centroids, members=members)


def sample_ppp(density: float, region: SimRegion, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous Poisson point process on ``region``; returns an (n, 2) array."""
    if density < 0:
        raise ParameterError(f"density must be non-negative, got {density}")
    n = rng.poisson(density * region.area)
    return rng.uniform(0.0, region.side_length, size=(n, 2))


def sample_topology(
    lambda_b: float, lambda_u: float, region: SimRegion, rng: np.random.Generator, seed=None
) -> Topology:
    bs = sample_ppp(lambda_b, region, rng)
    users = sample_ppp(lambda_u, region, rng)
    return Topology(bs_positions=bs, user_positions=users, rng_seed=seed)


def num_clusters_for(num_bs: int, avg_cluster_size: float) -> int:
    return max(1, int(round(num_bs / avg_cluster_size)))


def kmeans_objective(points: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> float:
    """Within-cluster sum of squared distances."""
    return float(np.sum((points - centroids[labels]) ** 2))


def _farthest_point_seeds(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    chosen = [int(rng.integers(len(points)))]
    d2 = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(d2))
        chosen.append(nxt)
        d2 = np.minimum(d2, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[chosen].copy()


def _assign(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d2 = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    return np.argmin(d2, axis=1)


def _repair_empty(points, labels, centroids, k):
    # steal the point farthest from its centroid in the currently largest cluster
    for c in range(k):
        if np.any(labels == c):
            continue
        sizes = np.bincount(labels, minlength=k)
        big = int(np.argmax(sizes))
        idx = np.flatnonzero(labels == big)
        far = idx[np.argmax(np.sum((points[idx] - centroids[big]) ** 2, axis=1))]
        labels[far] = c
        centroids[c] = points[far]
    return labels


def kmeans_cluster(
    bs_positions,
    avg_cluster_size: float,
    rng: np.random.Generator,
    tol: float = 1e-6,
    max_iter: int = 100,
    history: list | None = None,
) -> ClusterPlan:
    """Partition BSs into ``round(B / avg_cluster_size)`` CoMP clusters with Lloyd's algorithm.

    Seeds are chosen by greedy farthest-point traversal starting from a random
    BS. Iteration stops once no centroid moves by more than ``tol`` km. When
    ``history`` is a list, the objective after every assignment step is appended
    to it.
    """
    points = np.asarray(bs_positions, dtype=float).reshape(-1, 2)
    if len(points) == 0:
        raise TopologyError("cannot cluster an empty set of base stations")
    if avg_cluster_size < 1:
        raise ParameterError(f"avg_cluster_size must be >= 1, got {avg_cluster_size}")
    k = min(num_clusters_for(len(points), avg_cluster_size), len(points))

    centroids = _farthest_point_seeds(points, k, rng)
    labels = _assign(points, centroids)
    labels = _repair_empty(points, labels, centroids, k)
    for _ in range(max_iter):
        if history is not None:
            history.append(kmeans_objective(points, labels, centroids))
        sums = np.zeros((k, 2))
        np.add.at(sums, labels, points)
        counts = np.bincount(labels, minlength=k)
        new_centroids = sums / counts[:, None]
        shift = np.max(np.hypot(*(new_centroids - centroids).T))
        centroids = new_centroids
        labels = _repair_empty(points, _assign(points, centroids), centroids, k)
        if shift < tol:
            break
    if history is not None:
        history.append(kmeans_objective(points, labels, centroids))
    return ClusterPlan.from_labels(labels, centroids)
