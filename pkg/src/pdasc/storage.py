"""Bit-exact file formats: datasets, ground truth, indices, result CSVs.

All multi-byte integers are little-endian. The index file stores topology
only (global ids and child spans); vectors always live in the dataset
file, so per-shard serialized size reflects index structure.
"""

from __future__ import annotations

import csv
import struct

import numpy as np

from .build import INDEX_FORMAT_VERSION, BuildParams, Level, PdascIndex, ShardIndex
from .data import DTYPE_BITSET, DTYPE_DENSE, DTYPE_GEO, Dataset
from .distances import DistanceKind
from .errors import LoadError

DATASET_MAGIC = b"PDV1"
GROUND_TRUTH_MAGIC = b"PDG1"
INDEX_MAGIC = b"PDX1"

KIND_TAGS = {
    DistanceKind.EUCLIDEAN: 0,
    DistanceKind.COSINE: 1,
    DistanceKind.JACCARD: 2,
    DistanceKind.HAVERSINE: 3,
}
TAG_KINDS = {v: k for k, v in KIND_TAGS.items()}

RESULTS_HEADER = [
    "dataset", "distance", "nNodes", "gl", "np", "ratio", "r", "k",
    "recall", "mean_ndc_per_node", "max_ndc_per_node",
    "mean_index_bytes_per_node", "max_index_bytes_per_node", "n_queries",
]

_GT_ENTRY = np.dtype([("id", "<u4"), ("dist", "<f8")])


class _Reader:
    """Cursor over a byte buffer that fails loudly on truncation."""

    def __init__(self, buf: bytes, path: str):
        self.buf = buf
        self.at = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.at + n > len(self.buf):
            raise LoadError(f"{self.path}: truncated (needed {n} bytes at offset {self.at})")
        out = self.buf[self.at:self.at + n]
        self.at += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, dtype, count: int) -> np.ndarray:
        dt = np.dtype(dtype)
        return np.frombuffer(self.take(dt.itemsize * count), dtype=dt).copy()

    def done(self) -> None:
        if self.at != len(self.buf):
            raise LoadError(f"{self.path}: {len(self.buf) - self.at} trailing bytes")


def _payload_dtype(code: int) -> np.dtype:
    return {DTYPE_DENSE: np.dtype("<f4"), DTYPE_BITSET: np.dtype("<u1"),
            DTYPE_GEO: np.dtype("<f8")}[code]


def _row_width(code: int, d: int) -> int:
    if code == DTYPE_BITSET:
        return (d + 7) // 8
    return 2 if code == DTYPE_GEO else d


def save_dataset(dataset: Dataset, path) -> None:
    with open(path, "wb") as f:
        f.write(DATASET_MAGIC)
        f.write(struct.pack("<BII", dataset.dtype_code, dataset.n, dataset.d))
        f.write(np.ascontiguousarray(dataset.vectors, dtype=_payload_dtype(dataset.dtype_code)).tobytes())


def load_dataset(path, kind: DistanceKind | None = None) -> Dataset:
    """Read a dataset file; with ``kind`` given, also enforce that the
    payload is usable under that distance."""
    with open(path, "rb") as f:
        r = _Reader(f.read(), str(path))
    if r.take(4) != DATASET_MAGIC:
        raise LoadError(f"{path}: not a dataset file (bad magic)")
    code, n, d = r.unpack("<BII")
    if code not in (DTYPE_DENSE, DTYPE_BITSET, DTYPE_GEO):
        raise LoadError(f"{path}: unknown payload dtype {code}")
    if d == 0:
        raise LoadError(f"{path}: zero arity")
    w = _row_width(code, d)
    raw = r.array(_payload_dtype(code), n * w).reshape(n, w)
    r.done()
    try:
        if code == DTYPE_DENSE:
            ds = Dataset.dense(raw)
        elif code == DTYPE_BITSET:
            ds = Dataset.bitset_packed(raw, d)
        else:
            ds = Dataset.geo(raw)
        if kind is not None:
            ds.validate_for(kind)
    except (ValueError, KeyError) as e:
        raise LoadError(f"{path}: {e}") from e
    return ds


def save_ground_truth(ids: np.ndarray, dists: np.ndarray, path) -> None:
    """Write per-query neighbour lists, each sorted by (distance, id)."""
    ids = np.asarray(ids)
    dists = np.asarray(dists)
    nq, k = ids.shape
    body = np.empty((nq, k), dtype=_GT_ENTRY)
    body["id"] = ids
    body["dist"] = dists
    with open(path, "wb") as f:
        f.write(GROUND_TRUTH_MAGIC)
        f.write(struct.pack("<II", nq, k))
        f.write(body.tobytes())


def load_ground_truth(path):
    with open(path, "rb") as f:
        r = _Reader(f.read(), str(path))
    if r.take(4) != GROUND_TRUTH_MAGIC:
        raise LoadError(f"{path}: not a ground-truth file (bad magic)")
    nq, k = r.unpack("<II")
    body = r.array(_GT_ENTRY, nq * k).reshape(nq, k)
    r.done()
    dists = body["dist"].astype(np.float64)
    ids = body["id"].astype(np.int64)
    for qi in range(nq):
        d, i = dists[qi], ids[qi]
        if np.any(d[1:] < d[:-1]) or np.any((d[1:] == d[:-1]) & (i[1:] <= i[:-1])):
            raise LoadError(f"{path}: query {qi} entries not sorted by (distance, id)")
    return ids, dists


def shard_byte_size(shard: ShardIndex) -> int:
    """Exact bytes this shard occupies in an index file."""
    total = 4 + 4 * shard.shard_global_ids.shape[0]  # id count + ids
    total += 4  # level count
    for lv in shard.levels:
        total += 4 + 12 * len(lv)
    return total


def index_shard_bytes(index: PdascIndex) -> list:
    return [shard_byte_size(s) for s in index.shards]


def _pack_shard(shard: ShardIndex) -> bytes:
    parts = [struct.pack("<I", shard.shard_global_ids.shape[0]),
             shard.shard_global_ids.astype("<u4").tobytes(),
             struct.pack("<I", len(shard.levels))]
    for lv in shard.levels:
        rec = np.empty((len(lv), 3), dtype="<u4")
        rec[:, 0] = lv.global_ids
        rec[:, 1] = lv.child_start
        rec[:, 2] = lv.child_len
        parts.append(struct.pack("<I", len(lv)))
        parts.append(rec.tobytes())
    return b"".join(parts)


def save_index(index: PdascIndex, path) -> list:
    """Write the index topology; returns per-shard byte sizes."""
    p = index.params
    with open(path, "wb") as f:
        f.write(INDEX_MAGIC)
        f.write(struct.pack("<IB", INDEX_FORMAT_VERSION, KIND_TAGS[p.kind]))
        f.write(struct.pack("<IIIQ", p.n_nodes, p.gl, p.n_protos, p.seed))
        sizes = []
        for shard in index.shards:
            blob = _pack_shard(shard)
            sizes.append(len(blob))
            f.write(blob)
    return sizes


def load_index(path, dataset: Dataset | None = None) -> PdascIndex:
    """Read an index file; the dataset (if given) is attached for search
    and its id space checked against the shards."""
    with open(path, "rb") as f:
        r = _Reader(f.read(), str(path))
    if r.take(4) != INDEX_MAGIC:
        raise LoadError(f"{path}: not an index file (bad magic)")
    version, tag = r.unpack("<IB")
    if version != INDEX_FORMAT_VERSION:
        raise LoadError(f"{path}: index version {version}, expected {INDEX_FORMAT_VERSION}")
    if tag not in TAG_KINDS:
        raise LoadError(f"{path}: unknown distance tag {tag}")
    n_nodes, gl, n_protos, seed = r.unpack("<IIIQ")
    try:
        params = BuildParams(n_nodes=n_nodes, gl=gl, n_protos=n_protos,
                             kind=TAG_KINDS[tag], seed=seed)
        params.validate()
    except ValueError as e:
        raise LoadError(f"{path}: {e}") from e

    shards = []
    for si in range(n_nodes):
        (n_ids,) = r.unpack("<I")
        ids = r.array("<u4", n_ids)
        (n_levels,) = r.unpack("<I")
        if n_levels < 1:
            raise LoadError(f"{path}: shard {si} has no levels")
        levels = []
        for li in range(n_levels):
            (count,) = r.unpack("<I")
            rec = r.array("<u4", count * 3).reshape(count, 3)
            levels.append(Level(rec[:, 0], rec[:, 1], rec[:, 2]))
        for li in range(1, n_levels):
            below = len(levels[li - 1])
            ends = levels[li].child_start.astype(np.int64) + levels[li].child_len
            if np.any(ends > below):
                raise LoadError(f"{path}: shard {si} level {li} span out of bounds")
        shards.append(ShardIndex(levels, ids))
    r.done()

    if dataset is not None:
        all_ids = np.concatenate([s.shard_global_ids for s in shards])
        if np.unique(all_ids).size != all_ids.size:
            raise LoadError(f"{path}: shards share global ids")
        if all_ids.size != dataset.n or (all_ids.size and int(all_ids.max()) >= dataset.n):
            raise LoadError(
                f"{path}: index covers {all_ids.size} ids, dataset has {dataset.n} points"
            )
    return PdascIndex(params=params, shards=shards, dataset=dataset)


def format_result_row(row: dict) -> list:
    """Fixed textual rendering so identical results are identical bytes."""
    return [
        str(row["dataset"]),
        str(row["distance"]),
        str(int(row["nNodes"])),
        str(int(row["gl"])),
        str(int(row["np"])),
        f"{row['ratio']:.6f}",
        repr(float(row["r"])),
        str(int(row["k"])),
        f"{row['recall']:.6f}",
        f"{row['mean_ndc_per_node']:.6f}",
        f"{row['max_ndc_per_node']:.6f}",
        f"{row['mean_index_bytes_per_node']:.6f}",
        str(int(row["max_index_bytes_per_node"])),
        str(int(row["n_queries"])),
    ]


def write_results_csv(rows, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for row in rows:
            w.writerow(format_result_row(row))


def import_csv(path, dtype_name: str) -> Dataset:
    """Build a dataset from comma-separated text: one vector per line;
    floats for f32/geo, characters 0/1 for bitset."""
    if dtype_name not in ("f32", "bitset", "geo"):
        raise LoadError(f"unknown dtype {dtype_name!r} (expected f32, bitset, or geo)")
    rows = []
    width = None
    with open(path, newline="") as f:
        for lineno, rec in enumerate(csv.reader(f), start=1):
            if not rec or (len(rec) == 1 and rec[0].strip() == ""):
                continue
            if width is None:
                width = len(rec)
            elif len(rec) != width:
                raise LoadError(f"{path}: line {lineno}: expected {width} columns, got {len(rec)}")
            vals = []
            for tok in rec:
                tok = tok.strip()
                if dtype_name == "bitset":
                    if tok not in ("0", "1"):
                        raise LoadError(f"{path}: line {lineno}: bad token {tok!r} (want 0 or 1)")
                    vals.append(int(tok))
                else:
                    try:
                        vals.append(float(tok))
                    except ValueError:
                        raise LoadError(f"{path}: line {lineno}: bad token {tok!r}") from None
            rows.append(vals)
    if not rows:
        raise LoadError(f"{path}: no vectors found")
    try:
        if dtype_name == "f32":
            return Dataset.dense(np.asarray(rows, dtype=np.float64))
        if dtype_name == "bitset":
            return Dataset.bitset(np.asarray(rows, dtype=np.uint8))
        return Dataset.geo(np.asarray(rows, dtype=np.float64))
    except ValueError as e:
        raise LoadError(f"{path}: {e}") from e
