"""k-means clustering of stabilizing gain triples.

The centroid of the stabilizing cluster is taken as the robust stable PID
gain set.  Clustering runs on raw (unscaled) gains: reported gain magnitudes
differ per axis by design, and rescaling would move the centroid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .explorer import NoStableRegionError, RegionDataset, best_expression
from .placement import KpSource, PidGains, closedloop_poles, is_stable
from .plant import substream


class NonConvexRegionError(RuntimeError):
    """The cluster centroid fell outside the stable region.

    The mean of a non-convex point set need not belong to the set, so the
    centroid of a non-convex stability region can be unstable.
    """


@dataclass(frozen=True)
class ClusterResult:
    """Outcome of the best k-means restart."""

    centroids: np.ndarray  # (k, dim)
    assignments: np.ndarray  # (n,) index into centroids
    within_ss: float
    median_distances: np.ndarray  # (k,) median point-to-centroid distance

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def median_distance(points, centroid) -> float:
    """Median Euclidean distance from the points to the centroid.

    For an even count this is the mean of the two middle distances.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("points must be nonempty")
    d = np.linalg.norm(pts - np.asarray(centroid, dtype=float), axis=1)
    return float(np.median(d))


def _lloyd(points: np.ndarray, centroids: np.ndarray, tol: float, max_iter: int):
    """One Lloyd run from the given initial centroids."""
    k = centroids.shape[0]
    centroids = centroids.copy()
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        new = centroids.copy()
        for j in range(k):
            members = points[assign == j]
            if members.shape[0]:
                new[j] = members.mean(axis=0)
            else:
                # Re-seed an empty cluster at the point farthest from its
                # current centroid, the standard Lloyd repair.
                worst = d2[np.arange(points.shape[0]), assign].argmax()
                new[j] = points[worst]
        shift = np.linalg.norm(new - centroids, axis=1).max()
        centroids = new
        if shift < tol:
            break
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    assign = d2.argmin(axis=1)
    within = float(d2[np.arange(points.shape[0]), assign].sum())
    return centroids, assign, within


def kmeans(points, k: int, restarts: int = 10, tol: float = 1e-10,
           max_iter: int = 300, seed: int = 0) -> ClusterResult:
    """Best-of-`restarts` Lloyd k-means on squared Euclidean distance.

    Initial centroids for each restart are k distinct points drawn from the
    data via a counter-based substream, so results are order-independent and
    reproducible.  With k=1 every restart converges to the mean in one step,
    making the restarts a deliberate no-op.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[0]
    if n == 0:
        raise ValueError("points must be nonempty")
    if not 1 <= k <= n:
        raise ValueError(f"require 1 <= k <= {n} points, got k={k}")
    best = None
    for r in range(max(restarts, 1)):
        idx = substream(seed, r).choice(n, size=k, replace=False)
        centroids, assign, within = _lloyd(pts, pts[idx], tol, max_iter)
        if best is None or within < best[2]:
            best = (centroids, assign, within)
    centroids, assign, within = best
    med = np.array([
        median_distance(pts[assign == j], centroids[j]) if (assign == j).any() else np.nan
        for j in range(k)
    ])
    return ClusterResult(centroids=centroids, assignments=assign,
                         within_ss=within, median_distances=med)


def robust_gains(dataset: RegionDataset, which: KpSource | None = None,
                 restarts: int = 10, seed: int = 0) -> PidGains:
    """Centroid of the stabilizing gains for the largest stability region.

    Clusters with k=1 the stable gain triples of the expression with the
    highest stable count (or of `which` when given), then re-verifies that
    the centroid actually stabilizes the nominal plant: the centroid of a
    non-convex region can fall outside it, and an unstable "robust"
    controller must never be returned silently.
    """
    if which is None:
        which = best_expression(dataset)
    pts = dataset.stable_gains(which)
    if pts.shape[0] == 0:
        raise NoStableRegionError(
            f"no stable samples for {dataset.plant_id} / {dataset.ptype.value} / {which.name}"
        )
    result = kmeans(pts, k=1, restarts=restarts, seed=seed)
    gains = PidGains(*result.centroids[0])
    if not is_stable(closedloop_poles(dataset.model, gains)):
        raise NonConvexRegionError(
            f"centroid {gains} of {dataset.plant_id} / {dataset.ptype.value} "
            "does not stabilize the nominal plant; the stable region is non-convex"
        )
    return gains
