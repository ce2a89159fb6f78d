"""Binary file formats: round trips, corruption detection, CSV rendering."""

import struct

import numpy as np
import pytest

from pdasc import (
    BuildParams,
    Dataset,
    DistanceKind,
    LoadError,
    build_index,
    index_shard_bytes,
    load_dataset,
    load_ground_truth,
    load_index,
    save_dataset,
    save_ground_truth,
    save_index,
    write_results_csv,
)
from pdasc.data import make_bitsets, make_clustered, make_dataset, make_geo
from pdasc.storage import RESULTS_HEADER, format_result_row, import_csv, shard_byte_size

E = DistanceKind.EUCLIDEAN


@pytest.mark.parametrize("kind,code", [
    (DistanceKind.EUCLIDEAN, 0),
    (DistanceKind.JACCARD, 1),
    (DistanceKind.HAVERSINE, 2),
])
def test_dataset_roundtrip_and_dtype_byte(tmp_path, kind, code):
    ds = make_dataset(kind, 40, 2 if kind is DistanceKind.HAVERSINE else 19, seed=1)
    p = tmp_path / "data.pdv"
    save_dataset(ds, p)
    raw = p.read_bytes()
    assert raw[:4] == b"PDV1"
    assert raw[4] == code  # layout tag: 0 dense, 1 bitset, 2 geo
    n, d = struct.unpack_from("<II", raw, 5)
    assert (n, d) == (ds.n, ds.d)
    back = load_dataset(p, kind=kind)
    assert back.dtype_code == ds.dtype_code and back.d == ds.d
    assert np.array_equal(back.vectors, ds.vectors)


def test_dataset_kind_mismatch_rejected(tmp_path):
    ds = make_dataset(E, 10, 4, seed=0)
    p = tmp_path / "d.pdv"
    save_dataset(ds, p)
    with pytest.raises(LoadError):
        load_dataset(p, kind=DistanceKind.JACCARD)
    with pytest.raises(LoadError):
        load_dataset(p, kind=DistanceKind.HAVERSINE)
    load_dataset(p, kind=DistanceKind.EUCLIDEAN)
    load_dataset(p)  # layout-only load needs no kind


def test_dataset_corruption_detected(tmp_path):
    ds = make_dataset(E, 10, 4, seed=0)
    p = tmp_path / "d.pdv"
    save_dataset(ds, p)
    raw = p.read_bytes()
    (tmp_path / "bad_magic.pdv").write_bytes(b"XXXX" + raw[4:])
    (tmp_path / "trunc.pdv").write_bytes(raw[:-3])
    (tmp_path / "trail.pdv").write_bytes(raw + b"\x00")
    for name in ("bad_magic.pdv", "trunc.pdv", "trail.pdv"):
        with pytest.raises(LoadError):
            load_dataset(tmp_path / name)


def test_geo_file_validates_ranges(tmp_path):
    ds = Dataset.geo(make_geo(6, seed=2))
    p = tmp_path / "g.pdv"
    save_dataset(ds, p)
    raw = bytearray(p.read_bytes())
    # poison one latitude beyond 90 degrees
    struct.pack_into("<d", raw, 13, 123.0)
    (tmp_path / "bad.pdv").write_bytes(bytes(raw))
    with pytest.raises(LoadError):
        load_dataset(tmp_path / "bad.pdv")


def test_bitset_file_validates_padding(tmp_path):
    ds = Dataset.bitset_packed(make_bitsets(5, 5, seed=3), 5)
    p = tmp_path / "b.pdv"
    save_dataset(ds, p)
    raw = bytearray(p.read_bytes())
    raw[13] |= 0b1000_0000  # set a padding bit in row 0
    (tmp_path / "bad.pdv").write_bytes(bytes(raw))
    with pytest.raises(LoadError):
        load_dataset(tmp_path / "bad.pdv")


def test_ground_truth_roundtrip(tmp_path):
    ids = np.array([[3, 1, 4], [1, 5, 9]], dtype=np.int64)
    dists = np.array([[0.0, 0.5, 0.5], [0.1, 0.2, 0.3]])
    p = tmp_path / "gt.pdg"
    save_ground_truth(ids, dists, p)
    assert p.read_bytes()[:4] == b"PDG1"
    back_ids, back_d = load_ground_truth(p)
    assert np.array_equal(back_ids, ids)
    assert np.array_equal(back_d, dists)


def test_ground_truth_load_requires_sorted_rows(tmp_path):
    p = tmp_path / "gt.pdg"
    save_ground_truth(np.array([[1, 2]]), np.array([[0.9, 0.1]]), p)  # not ascending
    with pytest.raises(LoadError, match="sorted"):
        load_ground_truth(p)
    # equal distances must also come in id order
    save_ground_truth(np.array([[2, 1]]), np.array([[0.5, 0.5]]), p)
    with pytest.raises(LoadError, match="sorted"):
        load_ground_truth(p)


def test_index_roundtrip_identity(tmp_path):
    ds = Dataset.dense(make_clustered(90, 5, 3, seed=4))
    idx = build_index(ds, BuildParams(n_nodes=3, gl=7, n_protos=2, kind=E, seed=6))
    p = tmp_path / "i.pdx"
    sizes = save_index(idx, p)
    assert p.read_bytes()[:4] == b"PDX1"
    # header is 29 bytes; the payload is exactly the per-shard sizes
    assert p.stat().st_size == 29 + sum(sizes)
    assert sizes == [shard_byte_size(s) for s in idx.shards]
    assert sizes == index_shard_bytes(idx)
    back = load_index(p, dataset=ds)
    assert back == idx  # params and full topology compare equal
    assert back.dataset is ds
    # reload without the dataset still yields a searchable topology
    bare = load_index(p)
    assert bare.params == idx.params
    assert bare.dataset is None


def test_index_corruption_detected(tmp_path):
    ds = Dataset.dense(make_clustered(50, 4, 2, seed=1))
    idx = build_index(ds, BuildParams(n_nodes=2, gl=6, n_protos=2, kind=E, seed=2))
    p = tmp_path / "i.pdx"
    save_index(idx, p)
    raw = p.read_bytes()
    (tmp_path / "magic.pdx").write_bytes(b"ZZZZ" + raw[4:])
    (tmp_path / "trunc.pdx").write_bytes(raw[:40])
    (tmp_path / "trail.pdx").write_bytes(raw + b"\x01")
    bad_version = bytearray(raw)
    struct.pack_into("<I", bad_version, 4, 999)
    (tmp_path / "ver.pdx").write_bytes(bytes(bad_version))
    bad_tag = bytearray(raw)
    bad_tag[8] = 77
    (tmp_path / "tag.pdx").write_bytes(bytes(bad_tag))
    for name in ("magic.pdx", "trunc.pdx", "trail.pdx", "ver.pdx", "tag.pdx"):
        with pytest.raises(LoadError):
            load_index(tmp_path / name)


def test_index_dataset_crosscheck(tmp_path):
    ds = Dataset.dense(make_clustered(50, 4, 2, seed=1))
    idx = build_index(ds, BuildParams(n_nodes=2, gl=6, n_protos=2, kind=E, seed=2))
    p = tmp_path / "i.pdx"
    save_index(idx, p)
    smaller = ds.subset(list(range(40)))
    with pytest.raises(LoadError):
        load_index(p, dataset=smaller)


def test_results_csv_exact_bytes(tmp_path):
    row = {
        "dataset": "demo", "distance": "euclidean", "nNodes": 3, "gl": 10,
        "np": 3, "ratio": 0.3, "r": float("inf"), "k": 10, "recall": 1.0,
        "mean_ndc_per_node": 123.456789, "max_ndc_per_node": 200.0,
        "mean_index_bytes_per_node": 1000.5, "max_index_bytes_per_node": 1100,
        "n_queries": 50,
    }
    assert format_result_row(row) == [
        "demo", "euclidean", "3", "10", "3", "0.300000", "inf", "10",
        "1.000000", "123.456789", "200.000000", "1000.500000", "1100", "50",
    ]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_results_csv([row], p1)
    write_results_csv([row], p2)
    assert p1.read_bytes() == p2.read_bytes()
    lines = p1.read_text().split("\n")
    assert lines[0] == ",".join(RESULTS_HEADER)
    assert lines[0] == ("dataset,distance,nNodes,gl,np,ratio,r,k,recall,"
                        "mean_ndc_per_node,max_ndc_per_node,"
                        "mean_index_bytes_per_node,max_index_bytes_per_node,n_queries")
    assert lines[1].startswith("demo,euclidean,3,10,3,0.300000,inf,10,1.000000")
    assert p1.read_text().endswith("\n")
    assert "\r" not in p1.read_text()


def test_results_csv_finite_radius_repr(tmp_path):
    row = {
        "dataset": "x", "distance": "cosine", "nNodes": 1, "gl": 5, "np": 2,
        "ratio": 0.4, "r": 0.25, "k": 5, "recall": 0.5,
        "mean_ndc_per_node": 10.0, "max_ndc_per_node": 10.0,
        "mean_index_bytes_per_node": 64.0, "max_index_bytes_per_node": 64,
        "n_queries": 5,
    }
    assert format_result_row(row)[6] == "0.25"  # shortest faithful float form


def test_import_csv_f32(tmp_path):
    p = tmp_path / "v.csv"
    p.write_text("1.0,2.0\n3.5,-4.5\n")
    ds = import_csv(p, "f32")
    assert ds.n == 2 and ds.d == 2
    assert np.array_equal(ds.vectors, np.array([[1.0, 2.0], [3.5, -4.5]], dtype=np.float32))


def test_import_csv_bitset(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text("1,0,1\n0,1,1\n")
    ds = import_csv(p, "bitset")
    assert ds.d == 3 and ds.n == 2


def test_import_csv_geo(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("40.4168,-3.7038\n41.3874,2.1686\n")
    ds = import_csv(p, "geo")
    assert ds.n == 2
    with pytest.raises(LoadError):
        import_csv(p, "f64")


def test_import_csv_errors_name_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,0\n1,2\n")
    with pytest.raises(LoadError, match="line 2"):
        import_csv(p, "bitset")
    p.write_text("1.0,2.0\n3.0,oops\n")
    with pytest.raises(LoadError, match="line 2"):
        import_csv(p, "f32")
    p.write_text("1.0,2.0\n3.0\n")
    with pytest.raises(LoadError, match="line 2"):
        import_csv(p, "f32")
    p.write_text("")
    with pytest.raises(LoadError):
        import_csv(p, "f32")
    p.write_text("200.0,0.0\n")
    with pytest.raises(LoadError):
        import_csv(p, "geo")
