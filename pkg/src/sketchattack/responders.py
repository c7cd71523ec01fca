"""Query responders: the sketch-side party of the attack protocol.

A responder consumes one sketch A v per invocation and returns either a
norm estimate or a gap response in {-1, +1}. The standard and robust
estimators read nothing but the sketch; the optimal-gap responder is
deliberately distribution-aware (it owns the optimal estimator for the
query structure it is defending).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .estimator import OptimalEstimator, estimate_signal
from .queries import QuerySpec, signal_sample_array
from .sketches import SketchMatrix
from .streams import stream


def standard_estimate(sketch) -> float:
    """Euclidean norm of the sketch."""
    sketch = _check_sketch(sketch)
    return math.sqrt(float(sketch @ sketch))


def robust_estimate(sketch, sigma: float, rng: np.random.Generator) -> float:
    """sqrt of (||sketch||^2 + N(0, sigma^2)), clamped to 0 when negative.

    With sigma = 0 this equals :func:`standard_estimate` bit for bit and
    consumes nothing from the stream.
    """
    sketch = _check_sketch(sketch)
    if sigma < 0:
        raise ValueError(f"need sigma >= 0, got {sigma}")
    radicand = float(sketch @ sketch)
    if sigma > 0:
        radicand += sigma * float(rng.standard_normal())
    return math.sqrt(radicand) if radicand > 0 else 0.0


@dataclass
class GapResponse:
    s: int
    raw_estimate: Optional[float] = None

    def __post_init__(self):
        if self.s not in (-1, 1):
            raise ValueError(f"gap response must be -1 or +1, got {self.s}")


def gap_from_estimate(estimate: float, reference: float) -> GapResponse:
    """+1 when the estimate exceeds the reference, -1 otherwise (ties -> -1)."""
    if not (math.isfinite(estimate) and math.isfinite(reference)):
        raise ValueError("estimate and reference must be finite")
    return GapResponse(s=1 if estimate > reference else -1, raw_estimate=estimate)


class StandardResponder:
    """Norm estimator ||A v||_2; a pure function of the sketch."""

    sigma = 0.0
    clamp_count = 0

    def estimate(self, sketch) -> float:
        return standard_estimate(sketch)

    def estimate_batch(self, sketches: np.ndarray) -> np.ndarray:
        return np.sqrt(np.einsum("kt,kt->t", sketches, sketches))


class RobustResponder:
    """Noisy norm estimator sqrt(||A v||^2 + N(0, sigma^2)).

    One instance owns one noise stream; negative radicands are clamped to
    zero and counted in ``clamp_count``.
    """

    def __init__(self, sigma: float, rng: np.random.Generator):
        if sigma < 0:
            raise ValueError(f"need sigma >= 0, got {sigma}")
        self.sigma = sigma
        self.rng = rng
        self.clamp_count = 0

    def estimate(self, sketch) -> float:
        value = robust_estimate(sketch, self.sigma, self.rng)
        if value == 0.0:
            self.clamp_count += 1
        return value

    def estimate_batch(self, sketches: np.ndarray) -> np.ndarray:
        radicand = np.einsum("kt,kt->t", sketches, sketches)
        if self.sigma > 0:
            radicand += self.sigma * self.rng.standard_normal(radicand.shape)
        clamped = radicand <= 0
        self.clamp_count += int(np.count_nonzero(clamped))
        return np.sqrt(np.where(clamped, 0.0, radicand))


class OptimalGapResponder:
    """Gap responder built on the optimal signal estimator.

    Answers +1 iff the estimated signal reaches the threshold (default
    1 + alpha/2, the middle of the gap). This is the strongest
    distribution-aware defender the attack is measured against.
    """

    def __init__(self, est: OptimalEstimator, threshold: float):
        est._require_usable()
        self.est = est
        self.threshold = threshold

    @classmethod
    def for_spec(cls, est: OptimalEstimator, spec: QuerySpec) -> "OptimalGapResponder":
        return cls(est, threshold=1.0 + spec.alpha / 2.0)

    def respond(self, sketch) -> int:
        return 1 if estimate_signal(self.est, sketch) >= self.threshold else -1

    def respond_batch(self, sketches: np.ndarray) -> np.ndarray:
        values = self.est.g @ sketches
        return np.where(values >= self.threshold, 1, -1).astype(np.int8)


class RandomSignResponder:
    """Uniformly random +-1 responses, independent of the sketch."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def respond(self, sketch) -> int:
        return int(2 * self.rng.integers(0, 2) - 1)

    def respond_batch(self, sketches: np.ndarray) -> np.ndarray:
        return (2 * self.rng.integers(0, 2, size=sketches.shape[1]) - 1).astype(np.int8)


class ConstantResponder:
    """Always answers the same sign."""

    def __init__(self, s: int):
        if s not in (-1, 1):
            raise ValueError(f"constant response must be -1 or +1, got {s}")
        self.s = s

    def respond(self, sketch) -> int:
        return self.s

    def respond_batch(self, sketches: np.ndarray) -> np.ndarray:
        return np.full(sketches.shape[1], self.s, dtype=np.int8)


class EstimateGapResponder:
    """Gap responses from a norm estimator compared against a fixed reference."""

    def __init__(self, estimator, reference: float):
        self.estimator = estimator
        self.reference = reference

    def respond(self, sketch) -> int:
        return gap_from_estimate(self.estimator.estimate(sketch), self.reference).s

    def respond_batch(self, sketches: np.ndarray) -> np.ndarray:
        estimates = self.estimator.estimate_batch(sketches)
        return np.where(estimates > self.reference, 1, -1).astype(np.int8)


def optimal_gap_responder(est: OptimalEstimator, threshold: float) -> OptimalGapResponder:
    return OptimalGapResponder(est, threshold)


def respond_batch(responder, sketches: np.ndarray) -> np.ndarray:
    """Responses for a batch of sketches (columns), preserving order.

    Uses the responder's batch path when it has one, otherwise invokes it
    sequentially, one sketch per call.
    """
    if hasattr(responder, "respond_batch"):
        out = np.asarray(responder.respond_batch(sketches), dtype=np.int8)
        if out.shape != (sketches.shape[1],):
            raise ValueError("respond_batch returned a wrong-shaped array")
        return out
    return np.fromiter(
        (responder.respond(sketches[:, t]) for t in range(sketches.shape[1])),
        dtype=np.int8,
        count=sketches.shape[1],
    )


def measure_err(psi, A: SketchMatrix, spec: QuerySpec, trials: int, seed: int) -> float:
    """Monte Carlo error rate of a gap responder on the query distribution.

    An answer is wrong when w <= 1 was answered +1 or w >= 1 + alpha was
    answered -1; answers on the gap (1, 1 + alpha) never count as errors.
    """
    if trials < 1:
        raise ValueError(f"need trials >= 1, got {trials}")
    rng = stream(seed, "measure-err")
    errors = 0
    a = A.entries[:, spec.h]
    A_M = A.entries[:, spec.M]
    scale = spec.c / math.sqrt(spec.m)
    for lo in range(0, trials, 65536):
        count = min(65536, trials - lo)
        w = signal_sample_array(spec, rng, count)
        sketches = scale * (A_M @ rng.standard_normal((spec.m, count))) + np.outer(a, w)
        s = respond_batch(psi, sketches)
        errors += int(np.count_nonzero((w <= 1.0) & (s == 1)))
        errors += int(np.count_nonzero((w >= 1.0 + spec.alpha) & (s == -1)))
    return errors / trials


def _check_sketch(sketch) -> np.ndarray:
    sketch = np.asarray(sketch, dtype=np.float64)
    if sketch.ndim != 1:
        raise ValueError("a sketch is a 1-d vector")
    if not np.isfinite(sketch).all():
        raise ValueError("sketch must be finite")
    return sketch
