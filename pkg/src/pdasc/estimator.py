"""Scikit-learn style front end.

PDASC follows the NearestNeighbors idiom (fit, then kneighbors); KMedoids
follows the clusterer idiom (fit, labels_, predict). Constructor arguments
are stored verbatim; everything learned carries a trailing underscore.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .build import BuildParams, build_index
from .data import Dataset, pack_bits
from .distances import DistanceCounter, DistanceKind
from .errors import ParameterError
from .kmedoids import DEFAULT_MAX_SWAPS, assign, kmedoids
from .search import SearchParams, batch_search


def _to_dataset(x, kind: DistanceKind) -> Dataset:
    if kind in (DistanceKind.EUCLIDEAN, DistanceKind.COSINE):
        ds = Dataset.dense(check_array(x, dtype=np.float64))
    elif kind is DistanceKind.JACCARD:
        ds = Dataset.bitset(np.asarray(x))
    else:
        ds = Dataset.geo(np.asarray(x, dtype=np.float64))
    ds.validate_for(kind)
    return ds


def _to_query_matrix(x, kind: DistanceKind, d: int) -> np.ndarray:
    """Coerce query rows to the storage layout the kernels expect."""
    if kind is DistanceKind.JACCARD:
        a = np.asarray(x)
        if a.ndim == 1:
            a = a[None, :]
        if a.shape[1] != d:
            raise ParameterError(f"queries have {a.shape[1]} bits, index has {d}")
        return pack_bits(a)
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if a.shape[1] != d:
        raise ParameterError(f"queries have {a.shape[1]} features, index has {d}")
    return a


class PDASC(BaseEstimator):
    """Sharded hierarchical approximate nearest-neighbour index.

    Parameters mirror the build knobs: n_nodes shards, groups of gl
    points, n_protos prototypes promoted per group. ``distance`` is one
    of euclidean, cosine, jaccard (0/1 feature matrices), or haversine
    ((lat, lon) degree pairs). ``radius`` is the default pruning radius
    used by kneighbors; numpy.inf disables pruning and yields exact
    results at brute-force cost.
    """

    def __init__(
        self,
        n_nodes: int = 1,
        gl: int = 10,
        n_protos: int = 3,
        distance: str = "euclidean",
        radius: float = np.inf,
        seed: int = 42,
        max_swaps: int = DEFAULT_MAX_SWAPS,
        n_threads: int = 1,
    ):
        self.n_nodes = n_nodes
        self.gl = gl
        self.n_protos = n_protos
        self.distance = distance
        self.radius = radius
        self.seed = seed
        self.max_swaps = max_swaps
        self.n_threads = n_threads

    def fit(self, X, y=None):
        kind = DistanceKind(self.distance)
        dataset = _to_dataset(X, kind)
        params = BuildParams(
            n_nodes=self.n_nodes, gl=self.gl, n_protos=self.n_protos,
            kind=kind, seed=self.seed, max_swaps=self.max_swaps,
        )
        self.index_ = build_index(dataset, params, n_threads=self.n_threads)
        self.dataset_ = dataset
        self.n_features_in_ = dataset.d
        self.build_ndc_ = self.index_.build_ndc
        return self

    def kneighbors(self, X, n_neighbors: int = 10, radius: float | None = None,
                   return_distance: bool = True):
        """Approximate neighbours of each query row.

        Returns (distances, ids) shaped (nq, n_neighbors); when pruning
        leaves fewer than n_neighbors candidates, the tail is padded with
        inf distances and id -1.
        """
        check_is_fitted(self, "index_")
        kind = DistanceKind(self.distance)
        queries = _to_query_matrix(X, kind, self.n_features_in_)
        r = self.radius if radius is None else radius
        params = SearchParams(k=n_neighbors, r=r, kind=kind)
        outcomes = batch_search(self.index_, queries, params, n_threads=self.n_threads)
        nq = queries.shape[0]
        dists = np.full((nq, n_neighbors), np.inf, dtype=np.float64)
        ids = np.full((nq, n_neighbors), -1, dtype=np.int64)
        for qi, out in enumerate(outcomes):
            m = out.neighbour_ids.shape[0]
            dists[qi, :m] = out.neighbour_dists
            ids[qi, :m] = out.neighbour_ids
        self.last_outcomes_ = outcomes
        if return_distance:
            return dists, ids
        return ids


class KMedoids(BaseEstimator, ClusterMixin):
    """PAM clustering around real data points, under any supported distance."""

    def __init__(self, n_clusters: int = 3, distance: str = "euclidean",
                 seed: int = 0, max_swaps: int = DEFAULT_MAX_SWAPS):
        self.n_clusters = n_clusters
        self.distance = distance
        self.seed = seed
        self.max_swaps = max_swaps

    def fit(self, X, y=None):
        kind = DistanceKind(self.distance)
        dataset = _to_dataset(X, kind)
        counter = DistanceCounter()
        res = kmedoids(dataset.vectors, self.n_clusters, kind,
                       seed=self.seed, max_swaps=self.max_swaps, counter=counter)
        self.medoid_indices_ = res.medoids
        self.labels_ = res.assignment
        self.inertia_ = res.total_deviation
        self.n_features_in_ = dataset.d
        self.ndc_ = counter.evaluations
        self._medoid_vectors = dataset.rows(res.medoids)
        return self

    def predict(self, X):
        check_is_fitted(self, "medoid_indices_")
        kind = DistanceKind(self.distance)
        queries = _to_query_matrix(X, kind, self.n_features_in_)
        return assign(queries, self._medoid_vectors, kind, DistanceCounter())
