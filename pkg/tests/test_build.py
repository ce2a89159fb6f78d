"""Index construction: sharding, grouping, hierarchy shape, and NDC accounting."""

import numpy as np
import pytest

from pdasc import (
    BuildParams,
    Dataset,
    DistanceKind,
    ParameterError,
    build_index,
    build_shard_index,
    split_shards,
)
from pdasc.build import assemble_upper_groups, group_points
from pdasc.data import make_clustered, make_dataset, make_dense

E = DistanceKind.EUCLIDEAN


def check_shard(shard, shard_ids):
    """Structural invariants every built shard must satisfy."""
    levels = shard.levels
    # level 0 holds every shard member exactly once
    assert sorted(levels[0].global_ids.tolist()) == sorted(np.asarray(shard_ids).tolist())
    assert np.all(levels[0].child_len == 0)
    for li in range(1, len(levels)):
        lower, upper = levels[li - 1], levels[li]
        # child spans tile the lower level completely and in order
        spans = []
        for start, ln in zip(upper.child_start, upper.child_len):
            assert ln >= 1
            spans.append(np.arange(start, start + ln))
        covered = np.concatenate(spans)
        assert np.array_equal(covered, np.arange(len(lower)))
        # every prototype names a point of its own span
        for gi, start, ln in zip(upper.global_ids, upper.child_start, upper.child_len):
            assert gi in lower.global_ids[start:start + ln]


def test_split_shards_partition_and_balance():
    for n, m in [(10, 1), (10, 3), (7, 7), (23, 4)]:
        shards = split_shards(n, m, seed=5)
        assert len(shards) == m
        sizes = [len(s) for s in shards]
        # first n % m shards absorb the remainder
        base = n // m
        assert sizes == [base + 1] * (n % m) + [base] * (m - n % m)
        assert sorted(np.concatenate(shards).tolist()) == list(range(n))
    assert np.array_equal(split_shards(12, 3, seed=1)[0], split_shards(12, 3, seed=1)[0])
    a = np.concatenate(split_shards(100, 4, seed=1))
    b = np.concatenate(split_shards(100, 4, seed=2))
    assert not np.array_equal(a, b)


def test_group_points_consecutive():
    groups = group_points(list(range(10)), 4)
    assert [list(g) for g in groups] == [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9]]


def test_assemble_upper_groups_never_splits():
    lists = [[0, 1, 2], [3, 4], [5], [6, 7, 8, 9]]
    groups = assemble_upper_groups(lists, 5)
    # greedy over consecutive lists: 3+2 fills one group, 1+4 the next
    assert [list(g) for g in groups] == [[0, 1, 2, 3, 4], [5, 6, 7, 8, 9]]
    lists = [[0, 1, 2], [3, 4, 5], [6, 7]]
    groups = assemble_upper_groups(lists, 4)
    # a list that would overflow starts its own group; lists never split
    assert [list(g) for g in groups] == [[0, 1, 2], [3, 4, 5], [6, 7]]
    for g in groups:
        assert len(g) <= 4


def test_reference_topology_32_points():
    ds = Dataset.dense(make_dense(32, 4, seed=0))
    shard = build_shard_index(np.arange(32), ds, BuildParams(gl=10, n_protos=3, kind=E))
    assert shard.level_sizes == [32, 11, 5, 3]
    assert shard.n_levels == 3
    assert len(shard.top) == 3


def test_build_ndc_pairwise_cost():
    # 32 points, gl=10, np=3: groups 10/10/10/2; the 2-point tail is promoted
    # without clustering, so level 0 costs 3*C(10,2); level 1 regroups 3+3+3+2
    # into one clustered 9 (C(9,2)) plus a promoted 2; level 2 is one 5 (C(5,2))
    ds = Dataset.dense(make_dense(32, 4, seed=0))
    idx = build_index(ds, BuildParams(n_nodes=1, gl=10, n_protos=3, kind=E, seed=42))
    assert idx.build_ndc == 3 * 45 + 36 + 10 == 181


def test_shard_structure_random_configs():
    rng = np.random.default_rng(2)
    for _ in range(25):
        n = int(rng.integers(2, 90))
        gl = int(rng.integers(2, 13))
        npr = int(rng.integers(1, gl))
        ds = Dataset.dense(rng.normal(size=(n, 3)))
        params = BuildParams(n_nodes=1, gl=gl, n_protos=npr, kind=E, seed=7)
        shard = build_shard_index(np.arange(n), ds, params)
        check_shard(shard, np.arange(n))
        assert len(shard.top) <= max(npr, 1)
        if n <= npr:
            assert shard.n_levels == 0


def test_stall_configs_terminate():
    # high n_protos/gl ratios once looped forever without the re-grouping bound
    ds = Dataset.dense(make_dense(64, 3, seed=3))
    for gl, npr in [(5, 3), (4, 3), (6, 5), (2, 1)]:
        shard = build_shard_index(np.arange(64), ds, BuildParams(gl=gl, n_protos=npr, kind=E))
        sizes = shard.level_sizes
        assert sizes[-1] <= npr
        assert all(b < a for a, b in zip(sizes, sizes[1:]))  # strictly shrinking upward
        check_shard(shard, np.arange(64))


def test_promoted_small_group_is_verbatim():
    # a group no larger than n_protos skips clustering: every member becomes
    # a prototype over a singleton span holding itself
    ds = Dataset.dense(make_dense(23, 3, seed=4))
    shard = build_shard_index(np.arange(23), ds, BuildParams(gl=10, n_protos=3, kind=E))
    # grouping is 10/10/3: ids 20..22 form the promoted tail group
    lvl0, lvl1 = shard.levels[0], shard.levels[1]
    for gid in (20, 21, 22):
        pos = int(np.flatnonzero(lvl1.global_ids == gid)[0])
        start, ln = int(lvl1.child_start[pos]), int(lvl1.child_len[pos])
        assert ln == 1
        assert lvl0.global_ids[start] == gid


def test_multi_shard_leaf_coverage():
    ds = Dataset.dense(make_clustered(120, 6, 5, seed=8))
    idx = build_index(ds, BuildParams(n_nodes=4, gl=8, n_protos=2, kind=E, seed=9))
    assert idx.n_shards == 4
    seen = np.concatenate([s.levels[0].global_ids for s in idx.shards])
    assert sorted(seen.tolist()) == list(range(120))
    for shard in idx.shards:
        check_shard(shard, shard.shard_global_ids)


def test_build_threads_deterministic():
    ds = Dataset.dense(make_clustered(200, 5, 4, seed=1))
    params = BuildParams(n_nodes=5, gl=9, n_protos=3, kind=E, seed=3)
    a = build_index(ds, params, n_threads=1)
    b = build_index(ds, params, n_threads=4)
    assert a == b
    assert a.build_ndc_per_shard == b.build_ndc_per_shard


@pytest.mark.parametrize("kind", list(DistanceKind))
def test_build_all_kinds(kind):
    d = 2 if kind is DistanceKind.HAVERSINE else 24
    ds = make_dataset(kind, 70, d, seed=6)
    idx = build_index(ds, BuildParams(n_nodes=2, gl=7, n_protos=2, kind=kind, seed=1))
    for shard in idx.shards:
        check_shard(shard, shard.shard_global_ids)


def test_param_validation():
    ds = Dataset.dense(make_dense(10, 2, seed=0))
    with pytest.raises(ParameterError):
        build_index(ds, BuildParams(n_nodes=0, gl=5, n_protos=2, kind=E))
    with pytest.raises(ParameterError):
        build_index(ds, BuildParams(n_nodes=1, gl=1, n_protos=1, kind=E))
    with pytest.raises(ParameterError):
        build_index(ds, BuildParams(n_nodes=1, gl=5, n_protos=5, kind=E))
    with pytest.raises(ParameterError):
        build_index(ds, BuildParams(n_nodes=1, gl=5, n_protos=0, kind=E))
    with pytest.raises(ParameterError):
        build_index(ds, BuildParams(n_nodes=11, gl=5, n_protos=2, kind=E))  # more shards than points
