"""The attack's query distribution and the gap-problem labeling.

A query is v = w * e_h + c * z: a signal of weight w at index h plus
scaled Gaussian noise z supported on an index set M (h not in M). The
noise has per-coordinate variance 1/|M| so that E||z||^2 = 1. The signal
weight w is drawn from a trapezoid density on [a, b] that is flat at
height C on the gap interval (1, 1+alpha) and ramps linearly to zero on
either side, with

    a = 1 - 10*alpha/c,   b = 1 + alpha + 10*alpha/c,   C = 2/(b - a + alpha).

For small c the left edge a can be negative; negative signal weights are
permitted.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .streams import stream

MINUS = "minus"
PLUS = "plus"
FREE = "free"

_DERIVED_TOL = 1e-12


@dataclass
class NoiseSpec:
    """Gaussian noise on support M with per-coordinate variance 1/|M|."""

    M: np.ndarray
    m: int = field(init=False)
    variance: float = field(init=False)

    def __post_init__(self):
        self.M = _normalize_support(self.M)
        self.m = int(self.M.size)
        if self.m == 0:
            raise ValueError("noise support must be nonempty")
        self.variance = 1.0 / self.m


@dataclass
class QuerySpec:
    """Parameters of the query distribution.

    ``h`` is the 0-based signal index, ``M`` the ordered noise support
    (excluding h), ``c`` the noise scale factor, ``alpha`` the gap width.
    The density parameters a, b, C are derived and recomputed on
    construction.
    """

    n: int
    h: int
    M: np.ndarray
    c: float
    alpha: float
    m: int = field(init=False)
    a: float = field(init=False)
    b: float = field(init=False)
    C: float = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need n >= 1, got {self.n}")
        if not 0 <= self.h < self.n:
            raise ValueError(f"signal index h={self.h} out of range [0, {self.n})")
        self.M = _normalize_support(self.M)
        if self.M.size == 0:
            raise ValueError("noise support must be nonempty")
        if self.M[0] < 0 or self.M[-1] >= self.n:
            raise ValueError("noise support indices out of range")
        if np.any(self.M == self.h):
            raise ValueError(f"signal index h={self.h} must not lie in the noise support")
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"need noise scale c > 0, got {self.c}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"need alpha in (0, 1), got {self.alpha}")
        self.m = int(self.M.size)
        self.a = 1.0 - 10.0 * self.alpha / self.c
        self.b = 1.0 + self.alpha + 10.0 * self.alpha / self.c
        self.C = 2.0 / (self.b - self.a + self.alpha)
        assert self.a < 1.0 < 1.0 + self.alpha < self.b

    @property
    def noise(self) -> NoiseSpec:
        return NoiseSpec(M=self.M)

    # Masses of the three density components; they sum to 1.
    @property
    def mass_left(self) -> float:
        return self.C * (1.0 - self.a) / 2.0

    @property
    def mass_plateau(self) -> float:
        return self.C * self.alpha

    @property
    def mass_right(self) -> float:
        return self.C * (self.b - 1.0 - self.alpha) / 2.0


@dataclass
class QueryVector:
    """One realized query v = w * e_h + c * z with its cached norm."""

    v: np.ndarray
    w: float
    z: np.ndarray
    true_norm: float


def sample_noise(noise: NoiseSpec, n: int, seed: int, index: int) -> np.ndarray:
    """Noise vector: N(0, 1/m) on M, zero elsewhere; deterministic per (seed, index)."""
    if noise.M[-1] >= n:
        raise ValueError("noise support exceeds dimension n")
    z = np.zeros(n)
    z[noise.M] = stream(seed, "noise", index).standard_normal(noise.m) * math.sqrt(noise.variance)
    return z


def sample_noise_coords(noise: NoiseSpec, seed: int, start: int, stop: int) -> np.ndarray:
    """Support-restricted noise for query indices [start, stop), one column each.

    Column t - start equals ``sample_noise(noise, n, seed, t)[M]``.
    """
    count = stop - start
    # Fortran order makes each column contiguous for the in-place draw.
    out = np.empty((noise.m, count), order="F")
    scale = math.sqrt(noise.variance)
    for t in range(start, stop):
        stream(seed, "noise", t).standard_normal(out=out[:, t - start])
    out *= scale
    return out


def signal_pdf(spec: QuerySpec, w):
    """Trapezoid signal density: ramps on [a,1] and [1+alpha,b], flat C between."""
    w = np.asarray(w, dtype=np.float64)
    out = np.zeros_like(w)
    left = (w >= spec.a) & (w <= 1.0)
    out[left] = spec.C * (w[left] - spec.a) / (1.0 - spec.a)
    flat = (w > 1.0) & (w < 1.0 + spec.alpha)
    out[flat] = spec.C
    right = (w >= 1.0 + spec.alpha) & (w <= spec.b)
    out[right] = spec.C * (spec.b - w[right]) / (spec.b - 1.0 - spec.alpha)
    return float(out) if out.ndim == 0 else out


def sample_signal(spec: QuerySpec, seed: int, index: int) -> float:
    """One signal weight, deterministic per (seed, index).

    Drawn as a three-component mixture (left triangle, flat plateau,
    right triangle) with each component inverted from its CDF.
    """
    u_comp, u_pos = stream(seed, "signal", index).random(2)
    return _signal_from_uniforms(spec, u_comp, u_pos)


def sample_signal_weights(spec: QuerySpec, seed: int, start: int, stop: int) -> np.ndarray:
    """Signal weights for query indices [start, stop), matching sample_signal."""
    out = np.empty(stop - start)
    for t in range(start, stop):
        u_comp, u_pos = stream(seed, "signal", t).random(2)
        out[t - start] = _signal_from_uniforms(spec, u_comp, u_pos)
    return out


def signal_sample_array(spec: QuerySpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """Vectorized draw of ``size`` signal weights from one generator.

    Same mixture construction as :func:`sample_signal`; used by the
    Monte Carlo measurement routines where per-index addressing is not
    needed.
    """
    u_comp = rng.random(size)
    u_pos = rng.random(size)
    out = np.empty(size)
    lo = u_comp < spec.mass_left
    hi = u_comp >= spec.mass_left + spec.mass_plateau
    mid = ~(lo | hi)
    out[lo] = spec.a + (1.0 - spec.a) * np.sqrt(u_pos[lo])
    out[mid] = 1.0 + spec.alpha * u_pos[mid]
    out[hi] = spec.b - (spec.b - 1.0 - spec.alpha) * np.sqrt(1.0 - u_pos[hi])
    return out


def _signal_from_uniforms(spec: QuerySpec, u_comp: float, u_pos: float) -> float:
    if u_comp < spec.mass_left:
        return spec.a + (1.0 - spec.a) * math.sqrt(u_pos)
    if u_comp < spec.mass_left + spec.mass_plateau:
        return 1.0 + spec.alpha * u_pos
    return spec.b - (spec.b - 1.0 - spec.alpha) * math.sqrt(1.0 - u_pos)


def sample_query(spec: QuerySpec, seed: int, index: int) -> QueryVector:
    """Assemble one query v = w * e_h + c * z from independent streams."""
    w = sample_signal(spec, seed, index)
    z = sample_noise(spec.noise, spec.n, seed, index)
    v = spec.c * z
    v[spec.h] += w
    return QueryVector(v=v, w=w, z=z, true_norm=float(np.linalg.norm(v)))


def gap_label(x: float, y: float, alpha: float) -> str:
    """Label for the (y, alpha)-gap problem on input x.

    ``minus`` when x <= y, ``plus`` when x >= y + alpha, ``free`` in the
    open gap, where either answer is acceptable.
    """
    if not alpha > 0:
        raise ValueError(f"need alpha > 0, got {alpha}")
    if x <= y:
        return MINUS
    if x >= y + alpha:
        return PLUS
    return FREE


def response_is_correct(x: float, y: float, alpha: float, response: int) -> bool:
    """Whether a +-1 response solves the (y, alpha)-gap problem on x."""
    if response not in (-1, 1):
        raise ValueError(f"response must be -1 or +1, got {response}")
    label = gap_label(x, y, alpha)
    if label == FREE:
        return True
    return (label == MINUS) == (response == -1)


def spec_to_json(spec: QuerySpec) -> str:
    """Serialize the core fields {n, h, M, c, alpha} as a JSON document."""
    return json.dumps(
        {"n": spec.n, "h": spec.h, "M": [int(i) for i in spec.M], "c": spec.c, "alpha": spec.alpha}
    )


def spec_from_json(doc: str) -> QuerySpec:
    """Parse a QuerySpec; derived a, b, C are recomputed and, if present
    in the document, must agree with the recomputed values."""
    data = json.loads(doc)
    try:
        spec = QuerySpec(
            n=int(data["n"]),
            h=int(data["h"]),
            M=np.asarray(data["M"], dtype=np.int64),
            c=float(data["c"]),
            alpha=float(data["alpha"]),
        )
    except KeyError as exc:
        raise ValueError(f"query spec document is missing field {exc}") from exc
    for name in ("a", "b", "C"):
        if name in data:
            expected = getattr(spec, name)
            if abs(float(data[name]) - expected) > _DERIVED_TOL * max(1.0, abs(expected)):
                raise ValueError(
                    f"inconsistent derived field {name}: document has {data[name]}, "
                    f"recomputed {expected}"
                )
    return spec


def _normalize_support(M) -> np.ndarray:
    M = np.asarray(M, dtype=np.int64)
    if M.ndim != 1:
        raise ValueError("noise support must be a 1-d index set")
    if M.size != np.unique(M).size:
        raise ValueError("noise support indices must be distinct")
    return np.sort(M)
