import math

import numpy as np
import pytest
from scipy import integrate

from conftest import SignalGapOracle
from sketchattack.estimator import build_optimal
from sketchattack.queries import QuerySpec, signal_pdf
from sketchattack.responders import (
    ConstantResponder,
    OptimalGapResponder,
    RandomSignResponder,
    RobustResponder,
    StandardResponder,
    gap_from_estimate,
    measure_err,
    robust_estimate,
    standard_estimate,
)
from sketchattack.sketches import make_explicit, sample_jl
from sketchattack.streams import stream


def test_standard_estimate_values():
    assert standard_estimate([3.0, 4.0]) == 5.0
    assert standard_estimate([0.0, 0.0, 0.0]) == 0.0


def test_standard_estimate_jl_accuracy():
    # k = 1000: the norm estimate of a unit vector lands in 1 +- 0.1
    # essentially always over resampled matrices.
    k, n, draws = 1000, 1000, 200
    rng = stream(60, "test-std")
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    inside = 0
    for i in range(draws):
        est = standard_estimate(sample_jl(k, n, "gaussian", i).entries @ v)
        inside += abs(est - 1.0) <= 0.1
    assert inside / draws >= 0.99


def test_robust_sigma_zero_is_bitwise_standard():
    rng = stream(61, "test-rob")
    for _ in range(20):
        sketch = rng.standard_normal(8)
        assert robust_estimate(sketch, 0.0, rng) == standard_estimate(sketch)


def test_robust_clamps_about_half_on_zero_sketch():
    rng = stream(62, "test-rob")
    trials = 100_000
    zeros = np.zeros(4)
    clamped = sum(robust_estimate(zeros, 1.0, rng) == 0.0 for _ in range(trials))
    assert abs(clamped / trials - 0.5) < 0.01


def test_robust_responder_counts_clamps():
    responder = RobustResponder(1.0, stream(63, "test-rob"))
    for _ in range(1000):
        responder.estimate(np.zeros(3))
    assert abs(responder.clamp_count / 1000 - 0.5) < 0.06
    batch = RobustResponder(1.0, stream(63, "test-rob"))
    out = batch.estimate_batch(np.zeros((3, 1000)))
    assert batch.clamp_count == responder.clamp_count
    assert np.all(out >= 0.0)


def test_robust_rejects_negative_sigma():
    with pytest.raises(ValueError):
        robust_estimate([1.0], -0.1, stream(0, "x"))


def test_robust_total_error_scale():
    # k = 1000, sigma = 0.05: the squared-norm estimate has standard error
    # sqrt(2/k + sigma^2); under the half-variance accounting the total
    # scale is sigma_t = sqrt(1/k + sigma^2) ~ 0.06.
    k, sigma, draws = 1000, 0.05, 40_000
    rng = stream(64, "test-rob")
    norm2 = rng.chisquare(k, draws) / k
    noisy = norm2 + sigma * rng.standard_normal(draws)
    sigma_t = math.sqrt(float(norm2.var(ddof=1)) / 2.0 + float((noisy - norm2).var(ddof=1)))
    assert sigma_t == pytest.approx(0.06, abs=0.005)


def test_gap_from_estimate_cases():
    assert gap_from_estimate(1.2, 1.0).s == 1
    assert gap_from_estimate(0.8, 1.0).s == -1
    assert gap_from_estimate(1.0, 1.0).s == -1  # tie rule
    response = gap_from_estimate(1.2, 1.0)
    assert response.raw_estimate == 1.2
    with pytest.raises(ValueError):
        gap_from_estimate(float("nan"), 1.0)


def make_instance(seed=70, k=8, m=64, c=0.5, alpha=0.2, column_scale=1.0):
    rng = stream(seed, "test-inst")
    entries = rng.standard_normal((k, m + 1))
    entries[:, m] *= column_scale
    A = make_explicit(entries)
    spec = QuerySpec(n=m + 1, h=m, M=np.arange(m), c=c, alpha=alpha)
    est = build_optimal(A, m, np.arange(m), c=c)
    return A, spec, est


def test_optimal_gap_responder_zero_noise():
    A, spec, est = make_instance()
    responder = OptimalGapResponder(est, threshold=1.05)
    assert responder.respond(A.entries[:, spec.h] * 2.0) == 1
    assert responder.respond(A.entries[:, spec.h] * 0.5) == -1


def test_optimal_gap_rejects_zero_column():
    A = make_explicit([[0.0, 1.0], [0.0, 2.0]])
    est = build_optimal(A, 0, np.array([1]))
    with pytest.raises(ValueError):
        OptimalGapResponder(est, threshold=1.0)


def test_optimal_gap_low_error_when_sigma_small():
    # With sigma_T <= alpha / (4 sqrt(2 ln(1/delta))) the threshold
    # responder's error rate stays below delta.
    alpha = 0.2
    delta = alpha * alpha / 10.0
    bound = alpha / (4.0 * math.sqrt(2.0 * math.log(1.0 / delta)))
    A, spec, est = make_instance(seed=71, c=1.0, alpha=alpha, column_scale=24.0)
    assert est.sigma_T <= bound, "instance not in the low-noise regime"
    responder = OptimalGapResponder.for_spec(est, spec)
    err = measure_err(responder, A, spec, trials=100_000, seed=72)
    assert err <= delta


def test_measure_err_perfect_responder_is_zero():
    # A sketch row that reads the signal coordinate with no noise mass
    # makes the threshold responder exactly correct on every query.
    m = 16
    rng = stream(73, "test-perfect")
    entries = np.vstack([np.zeros(m + 1), rng.standard_normal(m + 1)])
    entries[0, m] = 1.0
    entries[1, m] = 0.0
    A = make_explicit(entries)
    spec = QuerySpec(n=m + 1, h=m, M=np.arange(m), c=0.5, alpha=0.1)
    est = build_optimal(A, m, np.arange(m), c=0.5)
    assert est.sigma_T == 0.0
    responder = OptimalGapResponder.for_spec(est, spec)
    assert measure_err(responder, A, spec, trials=20_000, seed=74) == 0.0


def test_signal_gap_oracle_replays_indexed_queries():
    from sketchattack.queries import sample_query

    A, spec, est = make_instance(seed=73)
    oracle = SignalGapOracle(spec, seed=74)
    errors = 0
    for t in range(2000):
        q = sample_query(spec, 74, t)
        s = oracle.respond(A.entries @ q.v)
        if (q.w <= 1.0 and s == 1) or (q.w >= 1.0 + spec.alpha and s == -1):
            errors += 1
    assert errors == 0


def test_measure_err_random_responder():
    # A coin-flip responder errs on half the non-gap mass:
    # 0.5 * 10/(c+10) = 0.47619 at c = 0.5.
    A, spec, est = make_instance(seed=75, c=0.5, alpha=0.1)
    responder = RandomSignResponder(stream(76, "test-coin"))
    err = measure_err(responder, A, spec, trials=100_000, seed=77)
    expected = 0.5 * 10.0 / (0.5 + 10.0)
    assert abs(err - expected) < 0.01


def test_measure_err_constant_plus():
    # Always answering +1 errs exactly on the sub-threshold mass 5/(c+10).
    A, spec, est = make_instance(seed=78, c=0.5, alpha=0.1)
    err = measure_err(ConstantResponder(1), A, spec, trials=100_000, seed=79)
    expected, _ = integrate.quad(lambda w: signal_pdf(spec, w), spec.a, 1.0)
    assert expected == pytest.approx(5.0 / 10.5, abs=1e-9)
    assert abs(err - expected) < 0.01


def test_standard_robust_read_only_the_sketch():
    # Feeding the same sketches under identical responder streams gives
    # identical responses no matter which (h, M) produced them.
    rng = stream(80, "test-blind")
    sketches = rng.standard_normal((6, 50))
    refs = np.full(50, 1.0)
    r1 = RobustResponder(0.3, stream(81, "blind"))
    r2 = RobustResponder(0.3, stream(81, "blind"))
    e1 = r1.estimate_batch(sketches)
    e2 = r2.estimate_batch(sketches)
    assert np.array_equal(e1, e2)
    s = StandardResponder()
    assert np.array_equal(s.estimate_batch(sketches), s.estimate_batch(sketches))
    assert np.array_equal(
        np.where(e1 > refs, 1, -1), np.where(e2 > refs, 1, -1)
    )


def test_err_nonincreasing_in_alpha():
    # Wider gaps only make the threshold responder's job easier.
    errs = []
    for alpha in (0.05, 0.1, 0.2):
        A, spec, est = make_instance(seed=82, c=1.0, alpha=alpha, column_scale=1.0)
        responder = OptimalGapResponder.for_spec(est, spec)
        errs.append(measure_err(responder, A, spec, trials=200_000, seed=83))
    band = 3.0 * math.sqrt(0.25 / 200_000)
    assert errs[0] + band >= errs[1] - band
    assert errs[1] + band >= errs[2] - band
