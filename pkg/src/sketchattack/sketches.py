"""Sketching matrices: construction, application, and linear-algebra helpers.

A sketching matrix A in R^{k x n} (k <= n) compresses vectors to k
dimensions. Three sampled families are provided, all scaled so that
||Av||_2^2 is an unbiased estimator of ||v||_2^2:

* ``jl-gaussian`` -- i.i.d. N(0, 1/k) entries,
* ``jl-sign``     -- i.i.d. +-1/sqrt(k) entries,
* ``ams``         -- +-1/sqrt(k) rows from seeded 4-wise independent
  polynomial hashing over the 61-bit Mersenne prime.

Storage is dense row-major; matrices are immutable after construction.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .streams import stream

FAMILIES = ("explicit", "jl-gaussian", "jl-sign", "ams")

_MERSENNE61 = (1 << 61) - 1
_MAGIC = b"SKMX"
_VERSION = 1
_FAMILY_CODES = {name: code for code, name in enumerate(FAMILIES)}


@dataclass
class SketchMatrix:
    """A k x n sketching matrix with provenance metadata.

    ``entries`` is a read-only float64 array; re-constructing with the
    same (family, k, n, seed) reproduces it bit for bit.
    """

    k: int
    n: int
    entries: np.ndarray
    family: str
    seed: int

    def __post_init__(self):
        self.entries = np.ascontiguousarray(self.entries, dtype=np.float64)
        if self.entries.ndim != 2 or self.entries.shape != (self.k, self.n):
            raise ValueError(
                f"entries shape {self.entries.shape} does not match (k, n)=({self.k}, {self.n})"
            )
        if self.k < 1 or self.n < 1:
            raise ValueError(f"need k >= 1 and n >= 1, got k={self.k}, n={self.n}")
        if self.k > self.n:
            raise ValueError(f"need k <= n, got k={self.k} > n={self.n}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if not np.isfinite(self.entries).all():
            raise ValueError("matrix entries must be finite")
        self.entries.setflags(write=False)

    def apply(self, v) -> np.ndarray:
        return apply(self, v)


def make_explicit(entries) -> SketchMatrix:
    """Wrap an explicit rectangular matrix (finite entries, k <= n)."""
    try:
        arr = np.array(entries, dtype=np.float64)
    except (ValueError, TypeError) as exc:
        raise ValueError(f"entries are not a rectangular numeric matrix: {exc}") from exc
    if arr.ndim != 2:
        raise ValueError(f"entries must be 2-dimensional, got ndim={arr.ndim}")
    return SketchMatrix(k=arr.shape[0], n=arr.shape[1], entries=arr, family="explicit", seed=0)


def sample_jl(k: int, n: int, variant: str, seed: int) -> SketchMatrix:
    """Sample a JL sketching matrix with i.i.d. rows.

    ``gaussian``: entries N(0, 1/k); ``sign``: entries +-1/sqrt(k).
    The 1/sqrt(k) scale is baked in, so ||Av||_2 estimates ||v||_2
    directly with no post-scaling.
    """
    _check_dims(k, n)
    if variant not in ("gaussian", "sign"):
        raise ValueError(f"variant must be 'gaussian' or 'sign', got {variant!r}")
    family = f"jl-{variant}"
    rng = stream(seed, family)
    if variant == "gaussian":
        entries = rng.standard_normal((k, n)) / math.sqrt(k)
    else:
        entries = (2.0 * rng.integers(0, 2, size=(k, n)) - 1.0) / math.sqrt(k)
    return SketchMatrix(k=k, n=n, entries=entries, family=family, seed=seed)


def sample_ams(k: int, n: int, seed: int) -> SketchMatrix:
    """Sample an AMS sketching matrix: 4-wise independent +-1/sqrt(k) rows.

    Row i draws four coefficients of a cubic polynomial over
    GF(2^61 - 1) from the (seed, "ams", i) stream; the sign of entry
    (i, j) is the parity of the polynomial evaluated at j.
    """
    _check_dims(k, n)
    entries = np.empty((k, n))
    scale = 1.0 / math.sqrt(k)
    p = _MERSENNE61
    for i in range(k):
        c3, c2, c1, c0 = (
            int(x) for x in stream(seed, "ams", i).integers(0, p, size=4, dtype=np.uint64)
        )
        row = entries[i]
        for j in range(n):
            h = ((((c3 * j + c2) % p) * j + c1) % p * j + c0) % p
            row[j] = scale if (h & 1) == 0 else -scale
    return SketchMatrix(k=k, n=n, entries=entries, family="ams", seed=seed)


def apply(A: SketchMatrix, v) -> np.ndarray:
    """Exact matrix-vector product A v."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (A.n,):
        raise ValueError(f"vector length {v.shape} does not match n={A.n}")
    if not np.isfinite(v).all():
        raise ValueError("input vector must be finite")
    return A.entries @ v


def spectral_norm(M) -> float:
    """Largest singular value of a dense matrix (relative accuracy 1e-8)."""
    M = np.asarray(M, dtype=np.float64)
    if M.size == 0:
        raise ValueError("spectral norm of an empty matrix is undefined")
    if M.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got ndim={M.ndim}")
    if not np.isfinite(M).all():
        raise ValueError("matrix entries must be finite")
    return float(np.linalg.svd(M, compute_uv=False)[0])


def save_matrix(A: SketchMatrix, path) -> None:
    """Write a matrix to the flat binary SKMX format.

    Layout: magic "SKMX", version u32, k u64, n u64, family u8, seed u64,
    then k*n little-endian f64 entries, row-major.
    """
    header = struct.pack(
        "<4sIQQBQ", _MAGIC, _VERSION, A.k, A.n, _FAMILY_CODES[A.family], A.seed & ((1 << 64) - 1)
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(A.entries, dtype="<f8").tobytes())


def load_matrix(path) -> SketchMatrix:
    """Read a matrix written by :func:`save_matrix`."""
    header_size = struct.calcsize("<4sIQQBQ")
    with open(path, "rb") as fh:
        raw = fh.read(header_size)
        if len(raw) != header_size:
            raise ValueError(f"{path}: truncated header")
        magic, version, k, n, family_code, seed = struct.unpack("<4sIQQBQ", raw)
        if magic != _MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        if family_code >= len(FAMILIES):
            raise ValueError(f"{path}: unknown family code {family_code}")
        payload = fh.read(8 * k * n)
    if len(payload) != 8 * k * n:
        raise ValueError(f"{path}: truncated entries")
    entries = np.frombuffer(payload, dtype="<f8").reshape(k, n).copy()
    return SketchMatrix(k=k, n=n, entries=entries, family=FAMILIES[family_code], seed=seed)


def _check_dims(k: int, n: int) -> None:
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    if n < k:
        raise ValueError(f"need n >= k, got n={n} < k={k}")
