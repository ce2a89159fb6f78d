"""Dissimilarity functions with exact evaluation counting.

Four families are supported: Euclidean and cosine over dense real vectors,
Jaccard over packed bitsets, and Haversine over (lat, lon) degree pairs.
Every pairwise evaluation increments a caller-owned counter by exactly one,
which is what all search-cost metrics in this package are derived from.

All floating arithmetic is done in 64-bit regardless of the storage dtype,
and the kernels avoid BLAS so that a distance value depends only on the two
operands, never on the shape or layout of the batch it was computed in.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import DimensionError, DomainError

EARTH_RADIUS_KM = 6371.0

# popcount of every byte value, for Jaccard over packed bitsets
_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


class DistanceKind(str, Enum):
    EUCLIDEAN = "euclidean"
    COSINE = "cosine"
    JACCARD = "jaccard"
    HAVERSINE = "haversine"


class DistanceCounter:
    """Mutable tally of pairwise distance evaluations (NDC).

    Each concurrent task owns its own counter; totals are summed at join
    points rather than shared.
    """

    __slots__ = ("evaluations",)

    def __init__(self, evaluations: int = 0):
        self.evaluations = int(evaluations)

    def add(self, n: int) -> None:
        self.evaluations += int(n)

    def __repr__(self) -> str:
        return f"DistanceCounter({self.evaluations})"


def _as_matrix(x, dtype=None) -> np.ndarray:
    a = np.asarray(x, dtype=dtype)
    if a.ndim == 1:
        a = a[None, :]
    return a


def euclidean_batch(q, points) -> np.ndarray:
    """Euclidean distance from ``q`` to every row of ``points``."""
    q = np.asarray(q, dtype=np.float64)
    x = _as_matrix(points, dtype=np.float64)
    if x.shape[0] == 0:
        return np.empty(0, dtype=np.float64)
    if x.shape[1] != q.shape[0]:
        raise DimensionError(f"arity mismatch: query has {q.shape[0]} dims, points have {x.shape[1]}")
    diff = x - q
    return np.sqrt((diff * diff).sum(axis=1))


def cosine_batch(q, points) -> np.ndarray:
    """Cosine distance 1 - cos(q, row) for every row of ``points``."""
    q = np.asarray(q, dtype=np.float64)
    x = _as_matrix(points, dtype=np.float64)
    if x.shape[0] == 0:
        return np.empty(0, dtype=np.float64)
    if x.shape[1] != q.shape[0]:
        raise DimensionError(f"arity mismatch: query has {q.shape[0]} dims, points have {x.shape[1]}")
    qn = np.sqrt((q * q).sum())
    if qn == 0.0:
        raise DomainError("cosine distance is undefined for a zero-norm vector")
    xn = np.sqrt((x * x).sum(axis=1))
    if np.any(xn == 0.0):
        row = int(np.flatnonzero(xn == 0.0)[0])
        raise DomainError(f"cosine distance is undefined for zero-norm vector at row {row}")
    dots = (x * q).sum(axis=1)
    return 1.0 - dots / (xn * qn)


def jaccard_batch(q, points) -> np.ndarray:
    """Jaccard distance between packed-bitset ``q`` and each packed row."""
    q = np.asarray(q, dtype=np.uint8)
    x = _as_matrix(points, dtype=np.uint8)
    if x.shape[0] == 0:
        return np.empty(0, dtype=np.float64)
    if x.shape[1] != q.shape[0]:
        raise DimensionError(f"arity mismatch: query has {q.shape[0]} bytes, points have {x.shape[1]}")
    inter = _POPCOUNT[x & q].sum(axis=1)
    union = _POPCOUNT[x | q].sum(axis=1)
    out = np.zeros(x.shape[0], dtype=np.float64)
    nz = union > 0
    out[nz] = 1.0 - inter[nz] / union[nz]
    return out  # empty vs empty stays 0: identical objects


def _check_geo(a: np.ndarray, what: str) -> None:
    lat, lon = a[..., 0], a[..., 1]
    if np.any((lat < -90.0) | (lat > 90.0)) or np.any((lon < -180.0) | (lon > 180.0)):
        raise DomainError(f"{what} has coordinates outside lat [-90, 90] / lon [-180, 180]")


def haversine_batch(q, points) -> np.ndarray:
    """Great-circle distance in km from ``q`` to every (lat, lon) row."""
    q = np.asarray(q, dtype=np.float64)
    x = _as_matrix(points, dtype=np.float64)
    if x.shape[0] == 0:
        return np.empty(0, dtype=np.float64)
    if q.shape[0] != 2 or x.shape[1] != 2:
        raise DimensionError("haversine expects (lat, lon) pairs")
    _check_geo(q, "query")
    _check_geo(x, "point set")
    lat1 = np.radians(q[0])
    lon1 = np.radians(q[1])
    lat2 = np.radians(x[:, 0])
    lon2 = np.radians(x[:, 1])
    sdlat = np.sin((lat2 - lat1) * 0.5)
    sdlon = np.sin((lon2 - lon1) * 0.5)
    h = sdlat * sdlat + np.cos(lat1) * np.cos(lat2) * sdlon * sdlon
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.minimum(h, 1.0)))


_BATCH = {
    DistanceKind.EUCLIDEAN: euclidean_batch,
    DistanceKind.COSINE: cosine_batch,
    DistanceKind.JACCARD: jaccard_batch,
    DistanceKind.HAVERSINE: haversine_batch,
}


def euclidean(a, b) -> float:
    return float(euclidean_batch(a, b)[0])


def cosine_distance(a, b) -> float:
    return float(cosine_batch(a, b)[0])


def jaccard_distance(a, b) -> float:
    return float(jaccard_batch(a, b)[0])


def haversine(a, b) -> float:
    return float(haversine_batch(a, b)[0])


def evaluate(kind: DistanceKind, a, b, counter: DistanceCounter) -> float:
    """Evaluate one pairwise distance of the given kind, counting it."""
    d = float(_BATCH[DistanceKind(kind)](a, b)[0])
    counter.add(1)
    return d


def evaluate_batch(kind: DistanceKind, q, points, counter: DistanceCounter) -> np.ndarray:
    """Distances from ``q`` to each row of ``points``; counts one per row."""
    d = _BATCH[DistanceKind(kind)](q, points)
    counter.add(d.shape[0])
    return d


def pairwise_matrix(kind: DistanceKind, points, counter: DistanceCounter) -> np.ndarray:
    """Full symmetric distance matrix with a zero diagonal.

    Evaluates each unordered pair exactly once, so the counter advances by
    g*(g-1)/2 for g rows.
    """
    x = _as_matrix(points)
    g = x.shape[0]
    out = np.zeros((g, g), dtype=np.float64)
    for i in range(g - 1):
        row = evaluate_batch(kind, x[i], x[i + 1:], counter)
        out[i, i + 1:] = row
        out[i + 1:, i] = row
    return out
