"""Exact-search oracle, quality metrics, radius selection, and the
parameter-sweep driver producing recall / NDC / index-size trade-off rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .build import BuildParams, build_index
from .data import Dataset
from .distances import DistanceCounter, DistanceKind, evaluate, evaluate_batch
from .errors import ParameterError
from .kmedoids import DEFAULT_MAX_SWAPS
from .search import SearchParams, batch_search
from .storage import index_shard_bytes

DEFAULT_K = 10
DEFAULT_SAMPLE_PAIRS = 10_000


def brute_force_knn(dataset: Dataset, queries, k: int, kind: DistanceKind):
    """Exact k-NN per query under the (distance, id) tie order.

    Returns (ids, dists) of shape (nq, k). Costs exactly n evaluations
    per query.
    """
    if k < 1:
        raise ParameterError("k must be at least 1")
    if k > dataset.n:
        raise ParameterError(f"k={k} exceeds dataset size {dataset.n}")
    queries = np.asarray(queries)
    if queries.ndim == 1:
        queries = queries[None, :]
    nq = queries.shape[0]
    ids = np.empty((nq, k), dtype=np.int64)
    dists = np.empty((nq, k), dtype=np.float64)
    counter = DistanceCounter()
    all_ids = np.arange(dataset.n)
    for qi in range(nq):
        d = evaluate_batch(kind, queries[qi], dataset.vectors, counter)
        order = np.lexsort((all_ids, d))[:k]
        ids[qi] = order
        dists[qi] = d[order]
    return ids, dists


def recall_at_k(result_ids, truth_ids, k: int) -> float:
    """Fraction of the true k nearest present in the result."""
    truth = np.asarray(truth_ids)[:k]
    res = np.asarray(result_ids)
    return np.intersect1d(res, truth).size / k


def radius_from_quantile(
    dataset: Dataset,
    kind: DistanceKind,
    q: float,
    sample_pairs: int = DEFAULT_SAMPLE_PAIRS,
    seed: int = 0,
) -> float:
    """Empirical q-quantile of pairwise distances, from an exhaustive
    enumeration when it is no larger than sample_pairs, else from a
    seeded sample of that many random unordered pairs."""
    if not 0.0 < q <= 1.0:
        raise ParameterError("quantile must lie in (0, 1]")
    if sample_pairs < 1:
        raise ParameterError("sample_pairs must be positive")
    n = dataset.n
    if n < 2:
        raise ParameterError("radius estimation needs at least 2 points")
    counter = DistanceCounter()
    total = n * (n - 1) // 2
    if total <= sample_pairs:
        parts = [evaluate_batch(kind, dataset.vectors[i], dataset.vectors[i + 1:], counter)
                 for i in range(n - 1)]
        dists = np.concatenate(parts)
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, n, size=sample_pairs)
        j = rng.integers(0, n - 1, size=sample_pairs)
        j = j + (j >= i)  # uniform over j != i
        dists = np.array([evaluate(kind, dataset.vectors[a], dataset.vectors[b], counter)
                          for a, b in zip(i, j)])
    return float(np.quantile(dists, q))


def train_test_split(n: int, n_queries: int, seed: int):
    """Seeded disjoint split of 0..n-1 into (train ids, query ids)."""
    if n_queries < 1:
        raise ParameterError("n_queries must be at least 1")
    if n_queries >= n:
        raise ParameterError(f"n_queries={n_queries} must be smaller than n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[n_queries:]), np.sort(perm[:n_queries])


def derive_n_protos(ratio: float, gl: int) -> int:
    """Prototype count for a ratio: round half up, clamped to [1, gl-1]."""
    return int(np.clip(np.floor(ratio * gl + 0.5), 1, gl - 1))


@dataclass(frozen=True)
class SweepGrid:
    """Cartesian benchmark grid; radii given absolutely or as quantiles."""

    ratios: tuple = (0.02, 0.05, 0.1, 0.2, 0.33, 0.5)
    gl_list: tuple = (10,)
    n_nodes_list: tuple = (1, 3, 5, 10)
    radii: tuple = ()
    radius_quantiles: tuple = ()
    k: int = DEFAULT_K

    def validate(self) -> None:
        if not self.ratios or any(not 0.0 < r < 1.0 for r in self.ratios):
            raise ParameterError("ratios must lie in (0, 1)")
        if not self.gl_list or any(g < 2 for g in self.gl_list):
            raise ParameterError("gl values must be at least 2")
        if not self.n_nodes_list or any(m < 1 for m in self.n_nodes_list):
            raise ParameterError("n_nodes values must be at least 1")
        if bool(self.radii) == bool(self.radius_quantiles):
            raise ParameterError("give exactly one of radii or radius_quantiles")
        if any(r < 0 for r in self.radii):
            raise ParameterError("radii must be non-negative")
        if any(not 0.0 < q <= 1.0 for q in self.radius_quantiles):
            raise ParameterError("radius quantiles must lie in (0, 1]")
        if self.k < 1:
            raise ParameterError("k must be at least 1")


@dataclass
class SweepReport:
    rows: list = field(default_factory=list)
    resolved_radii: tuple = ()


def _per_node_ndc(outcomes, n_shards: int):
    """Mean over queries of each shard's NDC; then mean/max across shards."""
    per_shard = np.array([o.per_shard_ndc for o in outcomes], dtype=np.float64)
    node_means = per_shard.mean(axis=0)
    return float(node_means.mean()), float(node_means.max())


def run_sweep(
    dataset: Dataset,
    queries,
    grid: SweepGrid,
    kind: DistanceKind,
    seed: int = 42,
    dataset_name: str = "data",
    n_threads: int = 1,
    max_swaps: int = DEFAULT_MAX_SWAPS,
) -> SweepReport:
    """Build one index per (nNodes, gl, ratio) cell and measure recall,
    per-node NDC, and per-node index bytes at every radius.

    Deterministic for fixed inputs and seed, for any thread count.
    """
    grid.validate()
    kind = DistanceKind(kind)
    queries = np.asarray(queries)
    if queries.ndim == 1:
        queries = queries[None, :]
    nq = queries.shape[0]

    if grid.radius_quantiles:
        radii = tuple(radius_from_quantile(dataset, kind, qq, seed=seed)
                      for qq in grid.radius_quantiles)
    else:
        radii = tuple(float(r) for r in grid.radii)

    truth_ids, _ = brute_force_knn(dataset, queries, grid.k, kind)

    rows = []
    for n_nodes in grid.n_nodes_list:
        for gl in grid.gl_list:
            for ratio in grid.ratios:
                n_protos = derive_n_protos(ratio, gl)
                params = BuildParams(n_nodes=n_nodes, gl=gl, n_protos=n_protos,
                                     kind=kind, seed=seed, max_swaps=max_swaps)
                index = build_index(dataset, params, n_threads=n_threads)
                shard_bytes = np.array(index_shard_bytes(index), dtype=np.int64)
                for r in radii:
                    sp = SearchParams(k=grid.k, r=r, kind=kind)
                    outcomes = batch_search(index, queries, sp, n_threads=n_threads)
                    recall = float(np.mean([
                        recall_at_k(outcomes[qi].neighbour_ids, truth_ids[qi], grid.k)
                        for qi in range(nq)
                    ]))
                    mean_ndc, max_ndc = _per_node_ndc(outcomes, n_nodes)
                    rows.append({
                        "dataset": dataset_name,
                        "distance": kind.value,
                        "nNodes": n_nodes,
                        "gl": gl,
                        "np": n_protos,
                        "ratio": n_protos / gl,
                        "r": r,
                        "k": grid.k,
                        "recall": recall,
                        "mean_ndc_per_node": mean_ndc,
                        "max_ndc_per_node": max_ndc,
                        "mean_index_bytes_per_node": float(shard_bytes.mean()),
                        "max_index_bytes_per_node": int(shard_bytes.max()),
                        "n_queries": nq,
                    })
    return SweepReport(rows=rows, resolved_radii=radii)
