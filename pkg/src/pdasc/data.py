"""In-memory dataset container, bitset packing, and synthetic generators.

A dataset is an immutable matrix of n fixed-arity vectors addressed by
global id (the row number). Three payload layouts exist:

* dense:  float32 rows, computed on in float64 (Euclidean, cosine)
* bitset: packed uint8 rows, bit j of a row lives at byte j // 8,
  bit j % 8, least significant bit first (Jaccard)
* geo:    float64 (latitude, longitude) rows in degrees (Haversine)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distances import DistanceKind
from .errors import DomainError, ParameterError

DTYPE_DENSE = 0
DTYPE_BITSET = 1
DTYPE_GEO = 2

DTYPE_NAMES = {DTYPE_DENSE: "f32", DTYPE_BITSET: "bitset", DTYPE_GEO: "geo"}

# payload layouts a distance kind accepts
KIND_TO_DTYPE = {
    DistanceKind.EUCLIDEAN: DTYPE_DENSE,
    DistanceKind.COSINE: DTYPE_DENSE,
    DistanceKind.JACCARD: DTYPE_BITSET,
    DistanceKind.HAVERSINE: DTYPE_GEO,
}


def pack_bits(bits) -> np.ndarray:
    """Pack a (n, d) 0/1 array into (n, ceil(d/8)) uint8 rows, LSB first."""
    a = np.asarray(bits)
    if a.ndim == 1:
        a = a[None, :]
    if not np.isin(a, (0, 1)).all():
        raise DomainError("bitset input must contain only 0 and 1")
    return np.packbits(a.astype(np.uint8), axis=1, bitorder="little")


def unpack_bits(packed, d: int) -> np.ndarray:
    """Inverse of pack_bits for a known bit arity d."""
    a = np.asarray(packed, dtype=np.uint8)
    if a.ndim == 1:
        a = a[None, :]
    return np.unpackbits(a, axis=1, count=d, bitorder="little")


@dataclass(frozen=True)
class Dataset:
    """n vectors in one of the three payload layouts.

    ``d`` is the logical arity: dimensions for dense, bits for bitset,
    always 2 for geo. ``vectors`` is the storage matrix; bitset rows are
    packed, so their byte width is ceil(d / 8).
    """

    vectors: np.ndarray
    dtype_code: int
    d: int

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @classmethod
    def dense(cls, x) -> "Dataset":
        a = np.ascontiguousarray(np.asarray(x, dtype=np.float32))
        if a.ndim != 2:
            raise ParameterError("dense dataset must be a 2-d array")
        if not np.isfinite(a).all():
            raise DomainError("dense dataset must be finite")
        return cls(a, DTYPE_DENSE, a.shape[1])

    @classmethod
    def bitset(cls, bits) -> "Dataset":
        b = np.asarray(bits)
        if b.ndim != 2:
            raise ParameterError("bitset dataset must be a 2-d 0/1 array")
        return cls(pack_bits(b), DTYPE_BITSET, b.shape[1])

    @classmethod
    def bitset_packed(cls, packed, d: int) -> "Dataset":
        a = np.ascontiguousarray(np.asarray(packed, dtype=np.uint8))
        if a.ndim != 2 or a.shape[1] != (d + 7) // 8:
            raise ParameterError("packed bitset rows must hold ceil(d/8) bytes")
        if d % 8:  # padding bits beyond d must be clear or they would count
            pad_mask = 0xFF & ~((1 << (d % 8)) - 1)
            if a.shape[0] and np.any(a[:, -1] & pad_mask):
                raise DomainError(f"padding bits beyond bit {d} must be zero")
        return cls(a, DTYPE_BITSET, d)

    @classmethod
    def geo(cls, x) -> "Dataset":
        a = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
        if a.ndim != 2 or a.shape[1] != 2:
            raise ParameterError("geo dataset must be an (n, 2) lat/lon array")
        lat, lon = a[:, 0], a[:, 1]
        if np.any((lat < -90.0) | (lat > 90.0)) or np.any((lon < -180.0) | (lon > 180.0)):
            bad = int(np.flatnonzero((np.abs(lat) > 90.0) | (np.abs(lon) > 180.0))[0])
            raise DomainError(f"geo row {bad} outside lat [-90, 90] / lon [-180, 180]")
        return cls(a, DTYPE_GEO, 2)

    def validate_for(self, kind: DistanceKind) -> None:
        """Reject kind/layout mismatches and content a kind cannot accept."""
        kind = DistanceKind(kind)
        want = KIND_TO_DTYPE[kind]
        if self.dtype_code != want:
            raise DomainError(
                f"{kind.value} distance needs a {DTYPE_NAMES[want]} dataset, "
                f"got {DTYPE_NAMES[self.dtype_code]}"
            )
        if kind is DistanceKind.COSINE:
            x = self.vectors.astype(np.float64)
            norms = np.sqrt((x * x).sum(axis=1))
            if np.any(norms == 0.0):
                row = int(np.flatnonzero(norms == 0.0)[0])
                raise DomainError(f"zero-norm vector at row {row} is invalid under cosine")

    def rows(self, ids) -> np.ndarray:
        return self.vectors[np.asarray(ids, dtype=np.intp)]

    def subset(self, ids) -> "Dataset":
        """New dataset holding the given rows, re-addressed from 0."""
        return Dataset(self.rows(ids).copy(), self.dtype_code, self.d)


def make_dense(n: int, d: int, seed: int, scale: float = 1.0) -> np.ndarray:
    """Uniform random dense vectors in [0, scale), float32."""
    rng = np.random.default_rng(seed)
    return (rng.random((n, d)) * scale).astype(np.float32)


def make_clustered(
    n: int,
    d: int,
    n_clusters: int,
    seed: int,
    latent_dim: int = 3,
    center_scale: float = 10.0,
    noise: float = 1.0,
) -> np.ndarray:
    """Gaussian clusters whose centers live on a low-dimensional subspace.

    Real embedding collections have low intrinsic dimensionality; drawing
    centers from a latent subspace keeps hierarchical pruning meaningful
    at moderate ambient d, unlike full-rank isotropic centers.
    """
    if latent_dim > d:
        raise ParameterError(f"latent_dim={latent_dim} exceeds ambient d={d}")
    rng = np.random.default_rng(seed)
    latent = rng.normal(size=(n_clusters, latent_dim)) * center_scale
    basis, _ = np.linalg.qr(rng.normal(size=(d, latent_dim)))
    centers = latent @ basis.T
    labels = rng.integers(0, n_clusters, size=n)
    x = centers[labels] + rng.normal(size=(n, d)) * noise
    return x.astype(np.float32)


def make_hub_clusters(
    n: int,
    d: int,
    n_clusters: int,
    seed: int,
    latent_dim: int = 16,
    radius: float = 35.0,
    core_frac: float = 0.12,
    core_scale: float = 0.15,
    rim_jitter: float = 0.05,
    noise: float = 1.0,
) -> np.ndarray:
    """Gaussian clusters with a small central core and a spherical rim.

    A fraction core_frac of the cluster centers sit in a tight ball near
    the origin; the rest sit near a latent sphere of the given radius.
    Central points dominate sum-of-distance medoid selection, so coarse
    indexes built over this layout keep their prototypes representative
    while rim-to-rim distances stay large enough for radius pruning to
    bite. Plain isotropic mixtures lack that separation of scales.
    """
    if latent_dim > d:
        raise ParameterError(f"latent_dim={latent_dim} exceeds ambient d={d}")
    rng = np.random.default_rng(seed)
    n_core = max(1, int(round(core_frac * n_clusters)))
    dirs = rng.normal(size=(n_clusters, latent_dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = radius * (1.0 + rim_jitter * rng.normal(size=n_clusters))
    centers = dirs * radii[:, None]
    core_sigma = core_scale * radius / np.sqrt(latent_dim)
    centers[:n_core] = rng.normal(size=(n_core, latent_dim)) * core_sigma
    basis, _ = np.linalg.qr(rng.normal(size=(d, latent_dim)))
    labels = rng.integers(0, n_clusters, size=n)
    x = centers[labels] @ basis.T + rng.normal(size=(n, d)) * noise
    return x.astype(np.float32)


def make_bitsets(n: int, d_bits: int, seed: int, density: float = 0.3) -> np.ndarray:
    """Random packed bitsets; every row has at least one set bit."""
    rng = np.random.default_rng(seed)
    bits = (rng.random((n, d_bits)) < density).astype(np.uint8)
    empty = np.flatnonzero(bits.sum(axis=1) == 0)
    bits[empty, rng.integers(0, d_bits, size=empty.size)] = 1
    return pack_bits(bits)


def make_geo(n: int, seed: int) -> np.ndarray:
    """Random (lat, lon) degree pairs over the full coordinate ranges."""
    rng = np.random.default_rng(seed)
    lat = rng.random(n) * 180.0 - 90.0
    lon = rng.random(n) * 360.0 - 180.0
    return np.stack([lat, lon], axis=1)


def make_dataset(kind: DistanceKind, n: int, d: int, seed: int) -> Dataset:
    """Random dataset of the layout the given distance kind expects."""
    kind = DistanceKind(kind)
    if kind is DistanceKind.EUCLIDEAN:
        return Dataset.dense(make_dense(n, d, seed))
    if kind is DistanceKind.COSINE:
        x = make_dense(n, d, seed) + 0.05  # keep norms clear of zero
        return Dataset.dense(x)
    if kind is DistanceKind.JACCARD:
        return Dataset.bitset_packed(make_bitsets(n, d, seed), d)
    return Dataset.geo(make_geo(n, seed))
