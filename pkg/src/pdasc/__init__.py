"""PDASC: parametrizable distributed approximate similarity search.

A sharded, hierarchical, clustering-based index for approximate
nearest-neighbour search under arbitrary dissimilarity functions
(Euclidean, cosine, Jaccard, Haversine), instrumented to count every
distance evaluation.
"""

from .bench import (
    SweepGrid,
    SweepReport,
    brute_force_knn,
    derive_n_protos,
    radius_from_quantile,
    recall_at_k,
    run_sweep,
    train_test_split,
)
from .build import (
    BuildParams,
    Level,
    PdascIndex,
    ShardIndex,
    build_index,
    build_shard_index,
    split_shards,
)
from .data import (
    Dataset,
    make_bitsets,
    make_clustered,
    make_dataset,
    make_dense,
    make_geo,
    make_hub_clusters,
    pack_bits,
    unpack_bits,
)
from .distances import (
    EARTH_RADIUS_KM,
    DistanceCounter,
    DistanceKind,
    cosine_distance,
    euclidean,
    evaluate,
    evaluate_batch,
    haversine,
    jaccard_distance,
    pairwise_matrix,
)
from .errors import DimensionError, DomainError, LoadError, ParameterError, PdascError
from .estimator import KMedoids, PDASC
from .kmedoids import ClusteringResult, assign, kmedoids
from .search import QueryOutcome, SearchParams, batch_search, collect_candidates, search, search_shard
from .storage import (
    index_shard_bytes,
    load_dataset,
    load_ground_truth,
    load_index,
    save_dataset,
    save_ground_truth,
    save_index,
    write_results_csv,
)

__version__ = "0.1.0"

__all__ = [
    "BuildParams", "ClusteringResult", "Dataset", "DimensionError",
    "DistanceCounter", "DistanceKind", "DomainError", "EARTH_RADIUS_KM",
    "KMedoids", "Level", "LoadError", "ParameterError", "PDASC",
    "PdascError", "PdascIndex", "QueryOutcome", "SearchParams",
    "ShardIndex", "SweepGrid", "SweepReport", "assign", "batch_search",
    "brute_force_knn", "build_index", "build_shard_index",
    "collect_candidates", "cosine_distance", "derive_n_protos", "euclidean",
    "evaluate", "evaluate_batch", "haversine", "index_shard_bytes",
    "jaccard_distance", "kmedoids", "load_dataset", "load_ground_truth",
    "load_index", "make_bitsets", "make_clustered", "make_dataset", "make_dense",
    "make_geo", "make_hub_clusters",
    "pack_bits", "pairwise_matrix", "radius_from_quantile", "recall_at_k",
    "run_sweep", "save_dataset", "save_ground_truth", "save_index", "search",
    "search_shard", "split_shards", "train_test_split", "unpack_bits",
    "write_results_csv",
]
