"""Classical k-medoids (PAM: greedy BUILD plus best-improvement SWAP).

Operates on an arbitrary DistanceKind through the counted distance kernels.
The full pairwise matrix of the group is evaluated once (g*(g-1)/2 counted
evaluations); BUILD and SWAP then run on that matrix without further
evaluations, so a group's clustering cost is exactly its pairwise cost.

Determinism: all ties break on the lowest candidate index, then the lowest
medoid position. That rule is total, so the seed argument never influences
the result; it is accepted for interface stability.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distances import DistanceCounter, DistanceKind, evaluate_batch, pairwise_matrix
from .errors import ParameterError

DEFAULT_MAX_SWAPS = 100


@dataclass
class ClusteringResult:
    """Medoids and assignment for one group.

    ``medoids`` holds local row indices into the clustered group, in
    selection order. ``assignment[i]`` is the position (0..k-1) of point
    i's medoid. ``deviation_history`` records total deviation after BUILD
    and after each accepted swap; it is strictly decreasing.
    """

    medoids: np.ndarray
    assignment: np.ndarray
    total_deviation: float
    deviation_history: list = field(default_factory=list)

    @property
    def n_swaps(self) -> int:
        return len(self.deviation_history) - 1


def assign(points, medoid_vectors, kind: DistanceKind, counter: DistanceCounter) -> np.ndarray:
    """Map each point to its nearest medoid position (ties: lowest position).

    Counts |points| * |medoids| evaluations.
    """
    medoid_vectors = np.asarray(medoid_vectors)
    if medoid_vectors.ndim == 1:
        medoid_vectors = medoid_vectors[None, :]
    if medoid_vectors.shape[0] == 0:
        raise ParameterError("assign requires at least one medoid")
    points = np.asarray(points)
    if points.ndim == 1:
        points = points[None, :]
    dists = np.empty((points.shape[0], medoid_vectors.shape[0]), dtype=np.float64)
    for j in range(medoid_vectors.shape[0]):
        dists[:, j] = evaluate_batch(kind, medoid_vectors[j], points, counter)
    return np.argmin(dists, axis=1)


def _nearest_two(d_to_medoids: np.ndarray):
    """Per point: distance and position of nearest medoid, and the
    second-nearest distance (inf when only one medoid exists)."""
    nearest_pos = np.argmin(d_to_medoids, axis=1)
    rows = np.arange(d_to_medoids.shape[0])
    d1 = d_to_medoids[rows, nearest_pos]
    if d_to_medoids.shape[1] == 1:
        d2 = np.full(d_to_medoids.shape[0], np.inf)
    else:
        part = np.partition(d_to_medoids, 1, axis=1)
        d2 = part[:, 1]
    return d1, nearest_pos, d2


def _build(dist: np.ndarray, k: int) -> list:
    """Greedy BUILD: first medoid minimizes total deviation, each next one
    maximizes the deviation decrease. Ties take the lowest index."""
    medoids = [int(np.argmin(dist.sum(axis=0)))]
    nearest = dist[:, medoids[0]].copy()
    for _ in range(1, k):
        newtd = np.minimum(nearest[:, None], dist).sum(axis=0)
        newtd[medoids] = np.inf
        c = int(np.argmin(newtd))
        medoids.append(c)
        nearest = np.minimum(nearest, dist[:, c])
    return medoids


def kmedoids_on_matrix(dist: np.ndarray, k: int, max_swaps: int = DEFAULT_MAX_SWAPS) -> ClusteringResult:
    """PAM over a precomputed symmetric distance matrix."""
    g = dist.shape[0]
    if k < 1:
        raise ParameterError("k must be at least 1")
    if k > g:
        raise ParameterError(f"k={k} exceeds group size {g}")
    if max_swaps < 1:
        raise ParameterError("max_swaps must be at least 1")

    if k == g:
        medoids = np.arange(g)
        return ClusteringResult(medoids, np.arange(g), 0.0, [0.0])

    medoids = np.array(_build(dist, k), dtype=np.intp)
    d_to_m = dist[:, medoids]
    d1, nearest_pos, d2 = _nearest_two(d_to_m)
    td = float(d1.sum())
    history = [td]

    for _ in range(max_swaps):
        # cap[m, i]: point i's deviation if medoid at position m is removed
        cap = np.where(nearest_pos[None, :] == np.arange(k)[:, None], d2[None, :], d1[None, :])
        newtd = np.empty((k, g), dtype=np.float64)
        for m in range(k):
            newtd[m] = np.minimum(dist, cap[m][:, None]).sum(axis=0)
        newtd[:, medoids] = np.inf
        flat = np.argmin(newtd.T.ravel())  # (candidate, medoid-position) order
        c, m = divmod(int(flat), k)
        if newtd[m, c] >= td:
            break
        old = medoids[m]
        medoids[m] = c
        d_to_m = dist[:, medoids]
        d1, nearest_pos, d2 = _nearest_two(d_to_m)
        new_total = float(d1.sum())
        if new_total >= td:  # predicted gain lost to rounding: revert
            medoids[m] = old
            d_to_m = dist[:, medoids]
            d1, nearest_pos, d2 = _nearest_two(d_to_m)
            break
        td = new_total
        history.append(td)

    assignment = np.argmin(d_to_m, axis=1)
    assignment[medoids] = np.arange(k)  # a medoid always owns itself
    return ClusteringResult(medoids, assignment, td, history)


def kmedoids(
    group,
    k: int,
    kind: DistanceKind,
    seed: int = 0,
    max_swaps: int = DEFAULT_MAX_SWAPS,
    counter: DistanceCounter | None = None,
) -> ClusteringResult:
    """Cluster one group of vectors into k medoids under the given kind."""
    del seed  # tie rules are total; kept for interface stability
    group = np.asarray(group)
    if group.ndim == 1:
        group = group[None, :]
    if counter is None:
        counter = DistanceCounter()
    if k < 1 or k > group.shape[0]:
        raise ParameterError(f"k={k} out of range for group of {group.shape[0]}")
    dist = pairwise_matrix(kind, group, counter)
    return kmedoids_on_matrix(dist, k, max_swaps)
