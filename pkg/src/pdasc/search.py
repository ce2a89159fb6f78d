"""Radius-pruned top-down search over every shard's hierarchy.

Each shard is explored independently: all top-level prototypes are
evaluated against the query, survivors (distance <= r, inclusive) have
their children evaluated one level down, and so on; entries surviving at
level 0 become candidates carrying the distance computed during descent.
There is no memoization: a point reached at several levels is evaluated
and counted each time. Shard pools are concatenated, sorted by
(distance, global id), and the first k become the answer; when pruning
leaves fewer than k candidates, fewer are returned.

No step assumes the triangle inequality, so any distance kind works.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .build import PdascIndex, ShardIndex
from .data import Dataset
from .distances import DistanceCounter, DistanceKind, evaluate_batch
from .errors import ParameterError


@dataclass(frozen=True)
class SearchParams:
    k: int = 10
    r: float = np.inf
    kind: DistanceKind = DistanceKind.EUCLIDEAN

    def validate(self) -> None:
        if self.k < 1:
            raise ParameterError("k must be at least 1")
        if not self.r >= 0:
            raise ParameterError("radius must be non-negative")


@dataclass
class QueryOutcome:
    """Ranked neighbours plus the per-shard evaluation counts."""

    neighbour_ids: np.ndarray
    neighbour_dists: np.ndarray
    per_shard_ndc: list
    candidates_examined: int

    @property
    def ndc(self) -> int:
        return sum(self.per_shard_ndc)


def search_shard(
    shard: ShardIndex,
    dataset: Dataset,
    q,
    r: float,
    kind: DistanceKind,
    counter: DistanceCounter,
):
    """Level-0 candidates of one shard: (global ids, descent distances)."""
    level = len(shard.levels) - 1
    top = shard.levels[level]
    dists = evaluate_batch(kind, q, dataset.rows(top.global_ids), counter)
    keep = dists <= r
    positions = np.flatnonzero(keep)
    dists = dists[keep]
    while level > 0 and positions.size > 0:
        here = shard.levels[level]
        spans = [
            np.arange(here.child_start[p], here.child_start[p] + here.child_len[p], dtype=np.intp)
            for p in positions
        ]
        positions = np.concatenate(spans)
        level -= 1
        below = shard.levels[level]
        dists = evaluate_batch(kind, q, dataset.rows(below.global_ids[positions]), counter)
        keep = dists <= r
        positions = positions[keep]
        dists = dists[keep]
    if level > 0:  # every branch pruned before reaching the points
        return np.empty(0, dtype=np.uint32), np.empty(0, dtype=np.float64)
    return shard.levels[0].global_ids[positions], dists


def collect_candidates(index: PdascIndex, dataset: Dataset, q, r: float, kind: DistanceKind):
    """Pooled level-0 candidates across shards.

    Returns (ids, dists, per_shard_ndc); ids are unique because shards
    partition the dataset.
    """
    all_ids, all_dists, per_shard = [], [], []
    for shard in index.shards:
        counter = DistanceCounter()
        ids, dists = search_shard(shard, dataset, q, r, kind, counter)
        all_ids.append(ids)
        all_dists.append(dists)
        per_shard.append(counter.evaluations)
    ids = np.concatenate(all_ids) if all_ids else np.empty(0, np.uint32)
    dists = np.concatenate(all_dists) if all_dists else np.empty(0, np.float64)
    return ids, dists, per_shard


def search(index: PdascIndex, q, params: SearchParams, dataset: Dataset | None = None) -> QueryOutcome:
    """Answer one query: descend every shard, merge, rank, take top k."""
    params.validate()
    ds = dataset if dataset is not None else index.dataset
    if ds is None:
        raise ParameterError("search needs the dataset the index was built from")
    ids, dists, per_shard = collect_candidates(index, ds, q, params.r, params.kind)
    assert np.unique(ids).size == ids.size, "shard candidate pools overlap"
    order = np.lexsort((ids, dists))[:params.k]
    return QueryOutcome(
        neighbour_ids=ids[order].astype(np.int64),
        neighbour_dists=dists[order],
        per_shard_ndc=per_shard,
        candidates_examined=int(ids.size),
    )


def batch_search(
    index: PdascIndex,
    queries,
    params: SearchParams,
    dataset: Dataset | None = None,
    n_threads: int = 1,
) -> list:
    """Run search over many queries; outcomes keep query order and are
    identical for any thread count (each query owns its counters)."""
    queries = np.asarray(queries)
    if queries.ndim == 1:
        queries = queries[None, :]
    if queries.shape[0] == 0:
        return []
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            return list(pool.map(lambda qi: search(index, qi, params, dataset), queries))
    return [search(index, qi, params, dataset) for qi in queries]
