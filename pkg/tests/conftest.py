"""Shared test oracles and fixture responders.

The oracles here are independent of the implementation paths they check:
the signal CDF is integrated piecewise by hand, distribution distances
are computed from sorted samples, and the fixture responders peek at
query internals in ways production responders cannot.
"""

import math

import numpy as np

from sketchattack.queries import QuerySpec, sample_signal


def signal_cdf(spec: QuerySpec, w: float) -> float:
    """Piecewise-integrated CDF of the trapezoid signal density."""
    a, b, C, alpha = spec.a, spec.b, spec.C, spec.alpha
    if w <= a:
        return 0.0
    if w >= b:
        return 1.0
    if w <= 1.0:
        return 0.5 * C * (w - a) ** 2 / (1.0 - a)
    left = 0.5 * C * (1.0 - a)
    if w <= 1.0 + alpha:
        return left + C * (w - 1.0)
    right_width = b - 1.0 - alpha
    tail = 0.5 * C * (b - w) ** 2 / right_width
    return 1.0 - tail


def ks_distance(samples, cdf) -> float:
    """Kolmogorov-Smirnov distance between samples and an analytic CDF."""
    xs = np.sort(np.asarray(samples, dtype=np.float64))
    n = xs.size
    values = np.array([cdf(x) for x in xs])
    upper = np.max(np.arange(1, n + 1) / n - values)
    lower = np.max(values - np.arange(0, n) / n)
    return float(max(upper, lower))


def normal_cdf(x, mu=0.0, sigma=1.0):
    return 0.5 * (1.0 + math.erf((x - mu) / (sigma * math.sqrt(2.0))))


class SignalGapOracle:
    """Test-only responder that cheats by re-deriving the signal weight.

    It counts invocations and replays the query stream of (spec, seed),
    answering the gap label exactly; its error rate is zero by
    construction.
    """

    def __init__(self, spec: QuerySpec, seed: int, start_index: int = 0):
        self.spec = spec
        self.seed = seed
        self.index = start_index

    def respond(self, sketch) -> int:
        w = sample_signal(self.spec, self.seed, self.index)
        self.index += 1
        return -1 if w <= 1.0 else 1


class DeviationSignOracle:
    """Test-only responder answering the sign of the estimator deviation.

    This is the maximal-gain baseline: every response pushes the signed
    sum in the deviation direction. It cheats by replaying the noise
    stream.
    """

    def __init__(self, est, spec: QuerySpec, seed: int, start_index: int = 0):
        from sketchattack.queries import sample_noise

        self._sample_noise = sample_noise
        self.est = est
        self.spec = spec
        self.seed = seed
        self.index = start_index

    def respond(self, sketch) -> int:
        z = self._sample_noise(self.spec.noise, self.spec.n, self.seed, self.index)
        self.index += 1
        value = float(self.est.q @ z[self.est.M])
        return 1 if value >= 0 else -1


class StrategicConstantResponder:
    """Answers as if the norm were always sqrt(w_fixed^2 + 1).

    Against the fixed-weight lightweight attack this responder reveals
    nothing about the sketching matrix while staying correct with high
    probability; it exists to document that limitation.
    """

    def __init__(self, w_fixed: float):
        self.value = math.sqrt(w_fixed * w_fixed + 1.0)

    def estimate(self, sketch) -> float:
        return self.value

    def estimate_batch(self, sketches):
        return np.full(sketches.shape[1], self.value)
