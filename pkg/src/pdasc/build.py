"""Sharded multilevel index construction.

The dataset is split into size-balanced random shards. Each shard gets an
independent bottom-up hierarchy: points are grouped, every group of more
than n_protos entries is clustered by k-medoids and its medoids promoted
one level up (smaller groups are promoted verbatim), and promoted
prototype lists are greedily reassembled into groups of at most gl for
the next round. Construction stops once a level holds at most n_protos
entries.

Prototypes are real dataset elements; upper levels store only global ids
plus a contiguous child span into the level below. Vectors are always
fetched from the dataset.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .distances import DistanceCounter, DistanceKind
from .errors import ParameterError
from .kmedoids import DEFAULT_MAX_SWAPS, kmedoids

INDEX_FORMAT_VERSION = 1


@dataclass(frozen=True)
class BuildParams:
    """Index construction knobs.

    gl is the group length (points clustered per batch); n_protos is the
    number of prototypes each clustered group promotes; n_protos / gl is
    the topology ratio.
    """

    n_nodes: int = 1
    gl: int = 10
    n_protos: int = 3
    kind: DistanceKind = DistanceKind.EUCLIDEAN
    seed: int = 42
    max_swaps: int = DEFAULT_MAX_SWAPS

    def validate(self, n: int | None = None) -> None:
        if self.n_nodes < 1:
            raise ParameterError("n_nodes must be at least 1")
        if self.gl < 2:
            raise ParameterError("gl must be at least 2")
        if not 0 < self.n_protos < self.gl:
            raise ParameterError("n_protos must satisfy 0 < n_protos < gl")
        if self.max_swaps < 1:
            raise ParameterError("max_swaps must be at least 1")
        if self.seed < 0 or self.seed > 0xFFFFFFFFFFFFFFFF:
            raise ParameterError("seed must fit an unsigned 64-bit integer")
        if n is not None and self.n_nodes > n:
            raise ParameterError(f"n_nodes={self.n_nodes} exceeds dataset size {n}")

    @property
    def ratio(self) -> float:
        return self.n_protos / self.gl


class Level:
    """One index level: global ids plus child spans into the level below.

    Spans are contiguous, disjoint, and ordered; level 0 spans are empty.
    """

    __slots__ = ("global_ids", "child_start", "child_len")

    def __init__(self, global_ids, child_start, child_len):
        self.global_ids = np.asarray(global_ids, dtype=np.uint32)
        self.child_start = np.asarray(child_start, dtype=np.uint32)
        self.child_len = np.asarray(child_len, dtype=np.uint32)

    def __len__(self) -> int:
        return self.global_ids.shape[0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Level)
            and np.array_equal(self.global_ids, other.global_ids)
            and np.array_equal(self.child_start, other.child_start)
            and np.array_equal(self.child_len, other.child_len)
        )

    def __repr__(self) -> str:
        return f"Level(n={len(self)})"


class ShardIndex:
    """One shard's hierarchy; levels[0] holds the shard's points."""

    __slots__ = ("levels", "shard_global_ids")

    def __init__(self, levels, shard_global_ids):
        self.levels = list(levels)
        self.shard_global_ids = np.asarray(shard_global_ids, dtype=np.uint32)

    @property
    def n_levels(self) -> int:
        """Number of levels above level 0 (the top level's index)."""
        return len(self.levels) - 1

    @property
    def level_sizes(self) -> list:
        return [len(lv) for lv in self.levels]

    @property
    def top(self) -> Level:
        return self.levels[-1]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ShardIndex)
            and np.array_equal(self.shard_global_ids, other.shard_global_ids)
            and self.levels == other.levels
        )

    def __repr__(self) -> str:
        return f"ShardIndex(levels={self.level_sizes})"


@dataclass
class PdascIndex:
    """Build parameters plus per-shard hierarchies.

    ``dataset`` is a runtime convenience for vector lookup; it is not part
    of structural identity and never serialized with the index.
    """

    params: BuildParams
    shards: list
    dataset: Dataset | None = field(default=None, compare=False)
    build_ndc_per_shard: list | None = field(default=None, compare=False)

    @property
    def n_shards(self) -> int:
        return len(self.shards)

    @property
    def build_ndc(self) -> int:
        return sum(self.build_ndc_per_shard) if self.build_ndc_per_shard else 0


def split_shards(n: int, n_nodes: int, seed: int) -> list:
    """Seeded permutation of 0..n-1 cut into n_nodes contiguous chunks
    whose sizes differ by at most one."""
    if n_nodes < 1:
        raise ParameterError("n_nodes must be at least 1")
    if n_nodes > n:
        raise ParameterError(f"n_nodes={n_nodes} exceeds dataset size {n}")
    perm = np.random.default_rng(seed).permutation(n).astype(np.uint32)
    base, rem = divmod(n, n_nodes)
    sizes = [base + 1 if i < rem else base for i in range(n_nodes)]
    out, at = [], 0
    for s in sizes:
        out.append(perm[at:at + s])
        at += s
    return out


def group_points(entries, gl: int) -> list:
    """Consecutive slices of gl entries; the final slice holds the rest."""
    if gl < 2:
        raise ParameterError("gl must be at least 2")
    entries = list(entries)
    return [entries[i:i + gl] for i in range(0, len(entries), gl)]


def assemble_upper_groups(proto_lists, gl: int) -> list:
    """Greedy left-to-right packing of whole prototype lists, each output
    group as close to gl as possible without exceeding it."""
    groups, cur = [], []
    for lst in proto_lists:
        assert 0 < len(lst) <= gl, "prototype list exceeds group length"
        if cur and len(cur) + len(lst) > gl:
            groups.append(cur)
            cur = []
        cur = cur + list(lst)
    if cur:
        groups.append(cur)
    return groups


def cluster_group(
    positions,
    level_ids: np.ndarray,
    dataset: Dataset,
    n_protos: int,
    kind: DistanceKind,
    seed: int,
    max_swaps: int,
    counter: DistanceCounter,
):
    """Promote one group: all entries verbatim when the group is small
    enough, otherwise the k-medoids of the group.

    Returns (prototype global ids, children position lists), children in
    medoid-selection order, each child list in ascending position order.
    """
    positions = np.asarray(positions, dtype=np.intp)
    g = positions.shape[0]
    if g <= n_protos:
        return level_ids[positions], [positions[i:i + 1] for i in range(g)]
    vectors = dataset.rows(level_ids[positions])
    res = kmedoids(vectors, n_protos, kind, seed=seed, max_swaps=max_swaps, counter=counter)
    proto_ids = level_ids[positions[res.medoids]]
    children = [positions[res.assignment == m] for m in range(n_protos)]
    return proto_ids, children


def _relayout(level_ids: list, children: list) -> list:
    """Reorder every level below the top so each entry's children occupy a
    contiguous ascending span (depth-first layout); returns final Levels."""
    top = len(level_ids) - 1
    final = [None] * (top + 1)
    order = np.arange(len(level_ids[top]), dtype=np.intp)
    for lv in range(top, 0, -1):
        ids = level_ids[lv][order]
        starts = np.empty(order.shape[0], dtype=np.uint32)
        lens = np.empty(order.shape[0], dtype=np.uint32)
        below = []
        for i, pos in enumerate(order):
            ch = children[lv][pos]
            starts[i] = len(below)
            lens[i] = len(ch)
            below.extend(ch)
        final[lv] = Level(ids, starts, lens)
        order = np.asarray(below, dtype=np.intp)
    n0 = order.shape[0]
    final[0] = Level(level_ids[0][order], np.zeros(n0, np.uint32), np.zeros(n0, np.uint32))
    return final


def build_shard_index(
    shard_ids,
    dataset: Dataset,
    params: BuildParams,
    counter: DistanceCounter | None = None,
) -> ShardIndex:
    """Bottom-up hierarchy over one shard, stopping at <= n_protos entries."""
    if counter is None:
        counter = DistanceCounter()
    shard_ids = np.asarray(shard_ids, dtype=np.uint32)
    if shard_ids.shape[0] == 0:
        raise ParameterError("shard must hold at least one point")

    level_ids = [shard_ids.copy()]
    children = [None]
    proto_list_sizes = None  # sizes of the lists promoted by the last round
    while level_ids[-1].shape[0] > params.n_protos:
        size = level_ids[-1].shape[0]
        positions = np.arange(size, dtype=np.intp)
        if proto_list_sizes is None:
            groups = group_points(positions, params.gl)
        else:
            bounds = np.cumsum([0] + proto_list_sizes)
            lists = [positions[bounds[i]:bounds[i + 1]] for i in range(len(proto_list_sizes))]
            groups = assemble_upper_groups(lists, params.gl)
            if all(len(g) <= params.n_protos for g in groups):
                # every group would be promoted verbatim and the level would
                # never shrink; repack under a relaxed bound that guarantees
                # at least one group large enough to cluster
                groups = assemble_upper_groups(lists, 2 * params.n_protos)

        next_ids, next_children, next_list_sizes = [], [], []
        for grp in groups:
            proto_ids, proto_children = cluster_group(
                grp, level_ids[-1], dataset, params.n_protos,
                params.kind, params.seed, params.max_swaps, counter,
            )
            next_ids.append(proto_ids)
            next_children.extend(proto_children)
            next_list_sizes.append(len(proto_children))
        level_ids.append(np.concatenate(next_ids).astype(np.uint32))
        children.append(next_children)
        proto_list_sizes = next_list_sizes

    return ShardIndex(_relayout(level_ids, children), shard_ids)


def build_index(dataset: Dataset, params: BuildParams, n_threads: int = 1) -> PdascIndex:
    """Split into shards and build every shard's hierarchy.

    Shard builds are independent; with n_threads > 1 they run concurrently,
    each with a private evaluation counter. The result is identical for
    any thread count.
    """
    params.validate(dataset.n)
    dataset.validate_for(params.kind)
    shard_id_lists = split_shards(dataset.n, params.n_nodes, params.seed)
    counters = [DistanceCounter() for _ in shard_id_lists]

    def one(i: int) -> ShardIndex:
        return build_shard_index(shard_id_lists[i], dataset, params, counters[i])

    if n_threads > 1 and len(shard_id_lists) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            shards = list(pool.map(one, range(len(shard_id_lists))))
    else:
        shards = [one(i) for i in range(len(shard_id_lists))]

    return PdascIndex(
        params=params,
        shards=shards,
        dataset=dataset,
        build_ndc_per_shard=[c.evaluations for c in counters],
    )
