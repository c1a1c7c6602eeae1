"""Nearest-neighbor search and the survey k-NN regression estimators.

Three estimators share the same closed-ball geometry:

* ``estimate_population``: unweighted mean of y over the population units
  within the k-th population-neighbor radius of x.
* ``estimate_sample_ht``: inverse-inclusion-weighted (Hajek-style ratio)
  mean of y over the sample units within the k-th sample-neighbor radius.
* ``estimate_hypothetical``: unweighted mean of y over ALL population
  units within the k-th sample-neighbor radius.  Not computable from
  sample data alone; used by the simulation harness.

Ties at equal distance are broken by ascending unit id, so results are
reproducible and partition signatures are well defined.  Ball membership
is closed (distance <= radius), so at tie boundaries an estimator may
average more than k units.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .errors import SurveyKnnError

# Brute force below this many reference points, kd-tree above.
TREE_THRESHOLD = 1000
# Relative slack when turning tree candidates into exact candidate sets;
# covers the ulp-level disagreement between tree and vectorized distances.
_TREE_MARGIN = 1e-9

PartitionSignature = tuple[tuple[int, ...], ...]


def as_points(points) -> np.ndarray:
    """Coerce to an (m, d) float array; 1-D input becomes a single column."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError("points must be a nonempty vector or (m, d) matrix")
    return pts


def _distances(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    # Single authoritative metric: both backends decide radii and membership
    # with this, so they are behavior-identical.
    return np.sqrt(((points - x[None, :]) ** 2).sum(axis=1))


def _as_query(x, dim: int) -> np.ndarray:
    q = np.atleast_1d(np.asarray(x, dtype=float))
    if q.shape != (dim,):
        raise ValueError(f"query point must have dimension {dim}, got shape {q.shape}")
    return q


class NeighborIndex:
    """Neighbor search over a fixed set of reference points.

    Parameters
    ----------
    points : array of shape (m, d) or (m,)
        Reference coordinates.
    ids : array of shape (m,), optional
        Unit ids used for tie-breaking and reported memberships;
        defaults to 0..m-1.
    backend : {"auto", "brute", "tree"}
        "auto" uses a kd-tree above TREE_THRESHOLD points.  The two
        backends return identical radii and id sets.
    """

    def __init__(self, points, ids=None, backend: str = "auto"):
        self.points = as_points(points)
        m = self.points.shape[0]
        self.ids = np.arange(m) if ids is None else np.asarray(ids, dtype=int)
        if self.ids.shape != (m,):
            raise ValueError("ids must have one entry per reference point")
        if backend == "auto":
            backend = "tree" if m > TREE_THRESHOLD else "brute"
        if backend not in ("brute", "tree"):
            raise ValueError(f"unknown backend {backend!r}")
        self.backend = backend
        self._tree = cKDTree(self.points) if backend == "tree" else None

    def __len__(self) -> int:
        return self.points.shape[0]

    def _order(self, dists: np.ndarray, ids: np.ndarray) -> np.ndarray:
        # (distance, unit id) ascending.
        return np.lexsort((ids, dists))

    def query(self, x, k: int) -> tuple[float, np.ndarray]:
        """Radius of the k-th nearest reference point and the first k ids."""
        x = _as_query(x, self.points.shape[1])
        if not 1 <= k <= len(self):
            raise ValueError(f"k must be in [1, {len(self)}], got {k}")
        if self._tree is None:
            dists, ids = _distances(self.points, x), self.ids
        else:
            kth = self._tree.query(x, k=k)[0]
            kth = float(np.atleast_1d(kth)[-1])
            cand = self._tree.query_ball_point(x, kth * (1.0 + _TREE_MARGIN))
            cand = np.asarray(sorted(cand), dtype=int)
            dists, ids = _distances(self.points[cand], x), self.ids[cand]
        order = self._order(dists, ids)
        return float(dists[order[k - 1]]), ids[order[:k]]

    def ball(self, x, radius: float) -> np.ndarray:
        """Sorted ids of all reference points with distance <= radius."""
        x = _as_query(x, self.points.shape[1])
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        if self._tree is None:
            mask = _distances(self.points, x) <= radius
            return np.sort(self.ids[mask])
        cand = self._tree.query_ball_point(x, radius * (1.0 + _TREE_MARGIN))
        cand = np.asarray(sorted(cand), dtype=int)
        mask = _distances(self.points[cand], x) <= radius
        return np.sort(self.ids[cand[mask]])


def knn_radius(index: NeighborIndex, x, k: int) -> tuple[float, np.ndarray]:
    """Distance to the k-th nearest reference point, plus the k ordered ids."""
    return index.query(x, k)


def ball_members(points, x, radius: float) -> np.ndarray:
    """Indices of all points within the closed ball of given radius around x."""
    return NeighborIndex(points, backend="brute").ball(x, radius)


def _weighted_mean(values: np.ndarray, weights: np.ndarray) -> float:
    den = float(np.sum(weights))
    if den <= 0:
        raise SurveyKnnError("empty or zero-weight neighborhood")
    return float(np.sum(weights * values) / den)


def estimate_population(pop, x, k: int) -> float:
    """k-NN regression estimate from full population data.

    Mean response over the population units within the k-th
    population-neighbor radius of x (all of them, on ties).
    """
    index = NeighborIndex(pop.x)
    radius, _ = index.query(x, k)
    members = index.ball(x, radius)
    return _weighted_mean(pop.y[members], np.ones(len(members)))


def _sample_radius(pop, sample, x, k: int) -> float:
    if not 1 <= k <= len(sample.members):
        raise ValueError(f"k must be in [1, {len(sample.members)}], got {k}")
    index = NeighborIndex(pop.x[sample.members], ids=sample.members)
    radius, _ = index.query(x, k)
    return radius


def estimate_sample_ht(pop, sample, probs, x, k: int) -> float:
    """Design-weighted k-NN regression estimate from sample data.

    Sampled units within the k-th sample-neighbor radius of x are averaged
    with weights 1/pi_i (a ratio of inverse-inclusion-weighted sums).
    """
    radius = _sample_radius(pop, sample, x, k)
    index = NeighborIndex(pop.x[sample.members], ids=sample.members)
    members = index.ball(x, radius)
    pi = probs.pi[members]
    if not (pi > 0).all():
        raise ValueError("all sampled units need strictly positive inclusion probability")
    return _weighted_mean(pop.y[members], 1.0 / pi)


def estimate_hypothetical(pop, sample, x, k: int) -> float:
    """Unweighted mean of y over all population units within the sample radius.

    Requires full population responses, so it is a harness-only estimator.
    """
    radius = _sample_radius(pop, sample, x, k)
    members = NeighborIndex(pop.x).ball(x, radius)
    return _weighted_mean(pop.y[members], np.ones(len(members)))


def hypothetical_weights(pop, sample, x, k: int) -> np.ndarray:
    """Probability weight vector over population units behind the hypothetical estimate.

    Constant 1/|B| on the units inside the sample-radius ball, 0 elsewhere;
    nonnegative and summing to 1.
    """
    radius = _sample_radius(pop, sample, x, k)
    members = NeighborIndex(pop.x).ball(x, radius)
    w = np.zeros(pop.size)
    w[members] = 1.0 / len(members)
    return w


def partition_signature(sample_points, k: int, grid, ids=None) -> PartitionSignature:
    """Per grid point, the sorted id set of the k nearest sample units.

    Two samples are neighborhood-equivalent over a grid exactly when their
    signatures agree.  Ties are broken by ascending unit id.
    """
    pts = as_points(sample_points)
    if not 1 <= k <= pts.shape[0]:
        raise ValueError(f"k must be in [1, {pts.shape[0]}], got {k}")
    grid_pts = as_points(grid)
    if grid_pts.shape[1] != pts.shape[1]:
        raise ValueError("grid and sample points must share a dimension")
    index = NeighborIndex(pts, ids=ids, backend="brute")
    out = []
    for g in grid_pts:
        _, nearest = index.query(g, k)
        out.append(tuple(sorted(int(i) for i in nearest)))
    return tuple(out)
