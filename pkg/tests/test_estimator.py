import math

import numpy as np
import pytest

from conftest import ks_distance, normal_cdf
from sketchattack.estimator import (
    build_optimal,
    deviation,
    estimate_signal,
    is_adversarial,
    sigma_T_via_characterization,
)
from sketchattack.sketches import make_explicit, sample_jl
from sketchattack.streams import stream


def random_instance(seed, k_range=(2, 8), m_range=(4, 40), c=0.5):
    rng = stream(seed, "test-estimator")
    k = int(rng.integers(*k_range))
    m = int(rng.integers(max(k_range[0], m_range[0]), m_range[1]))
    n = m + 1
    A = make_explicit(rng.standard_normal((k, n)))
    M = np.arange(m, dtype=np.int64)
    return A, n - 1, M, build_optimal(A, n - 1, M, c=c), rng


# ---------------------------------------------------------------------------
# Construction branches
# ---------------------------------------------------------------------------


def test_signal_orthogonal_to_noise_recovers_exactly():
    # Single row [1, 0, ..., 0], signal at 0, noise elsewhere: the row has
    # no mass on the noise columns, so estimation is exact.
    n = 6
    A = make_explicit(np.eye(1, n))
    est = build_optimal(A, 0, np.arange(1, n))
    assert est.sigma_T == 0.0
    w = 1.7
    assert estimate_signal(est, A.entries @ (w * np.eye(n)[0])) == pytest.approx(w, abs=1e-12)


def test_all_ones_row_by_hand():
    # Single all-ones row: g = (1,), sigma_T^2 = ||1_m||^2 / m = 1.
    m = 9
    A = make_explicit(np.ones((1, m + 1)))
    est = build_optimal(A, 0, np.arange(1, m + 1))
    assert est.g == pytest.approx([1.0], abs=1e-12)
    assert est.sigma_T**2 == pytest.approx(1.0, rel=1e-12)
    # Monte Carlo: variance of T - w equals c^2 sigma_T^2.
    c, trials = 0.5, 200_000
    rng = stream(40, "test-onesrow")
    noise = rng.standard_normal((m, trials)) / math.sqrt(m)
    dev = c * (A.entries[:, 1:] @ noise)[0]
    assert float(np.var(dev)) == pytest.approx((c * est.sigma_T) ** 2, rel=0.02)


def test_zero_column_flag_and_errors():
    A = make_explicit([[0.0, 1.0, 2.0], [0.0, -1.0, 0.5]])
    est = build_optimal(A, 0, np.array([1, 2]))
    assert est.column_zero
    with pytest.raises(ValueError):
        estimate_signal(est, np.zeros(2))
    with pytest.raises(ValueError):
        deviation(est, np.zeros(3))
    with pytest.raises(ValueError):
        est.sigma_T2


def test_build_validates_indices():
    A = make_explicit(np.ones((2, 4)))
    with pytest.raises(ValueError):
        build_optimal(A, 5, np.array([0]))
    with pytest.raises(ValueError):
        build_optimal(A, 1, np.array([1, 2]))
    with pytest.raises(ValueError):
        build_optimal(A, 0, np.array([2, 2]))


def test_unbiasedness_and_variance_identities():
    for seed in range(8):
        A, h, M, est, _ = random_instance(seed)
        a = A.entries[:, h]
        assert abs(float(est.g @ a) - 1.0) <= 1e-9
        explicit = float(np.sum((est.g @ A.entries[:, M]) ** 2)) / len(M)
        if est.sigma_T == 0.0:
            # Exact-recovery branch: the explicit sum only carries the
            # rounding residue of analytically-zero inner products.
            scale = float(est.g @ est.g) * float(np.mean(A.entries[:, M] ** 2)) * len(M)
            assert explicit <= 1e-20 * max(scale, 1.0)
        else:
            assert est.sigma_T**2 == pytest.approx(explicit, rel=1e-9)


# ---------------------------------------------------------------------------
# Estimation and deviation
# ---------------------------------------------------------------------------


def test_estimate_zero_noise():
    A, h, M, est, _ = random_instance(3)
    sketch = A.entries[:, h] * 2.0
    assert estimate_signal(est, sketch) == pytest.approx(2.0, abs=1e-9)


def test_estimate_monte_carlo_mean_and_variance():
    c = 0.5
    A, h, M, est, rng = random_instance(4, c=c)
    m, trials, w = len(M), 100_000, 1.3
    noise = rng.standard_normal((m, trials)) / math.sqrt(m)
    sketches = np.outer(A.entries[:, h], np.full(trials, w)) + c * (A.entries[:, M] @ noise)
    values = est.g @ sketches
    se = c * est.sigma_T / math.sqrt(trials)
    assert abs(float(values.mean()) - w) < 3 * se
    assert float(values.var(ddof=1)) == pytest.approx((c * est.sigma_T) ** 2, rel=0.05)


def test_deviation_zero_linear_and_support():
    A, h, M, est, rng = random_instance(5)
    n = A.n
    assert deviation(est, np.zeros(n)) == 0.0
    u1, u2 = np.zeros(n), np.zeros(n)
    u1[M] = rng.standard_normal(len(M))
    u2[M] = rng.standard_normal(len(M))
    lhs = deviation(est, 0.3 * u1 - 1.1 * u2)
    rhs = 0.3 * deviation(est, u1) - 1.1 * deviation(est, u2)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))
    bad = np.zeros(n)
    bad[h] = 1e-6
    with pytest.raises(ValueError):
        deviation(est, bad)


def test_deviation_distribution_is_gaussian():
    c = 0.5
    A, h, M, est, rng = random_instance(6, c=c)
    m, trials = len(M), 100_000
    coords = rng.standard_normal((m, trials)) / math.sqrt(m)
    values = c * (est.q @ coords)
    # Spot-check the vectorized path against the public operation.
    probe = np.zeros(A.n)
    probe[M] = coords[:, 0]
    assert c * deviation(est, probe) == pytest.approx(values[0], rel=1e-12)
    sigma = c * est.sigma_T
    assert ks_distance(values, lambda x: normal_cdf(x, 0.0, sigma)) < 0.01


def test_adversarial_strictness_and_maximal_direction():
    # Exactly deviation-free unit vector on a hand-built instance:
    # gamma = 0 stays False under the strict inequality.
    simple = make_explicit([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    simple_est = build_optimal(simple, 0, np.array([1, 2]))
    free = np.array([0.0, 0.0, 1.0])
    assert deviation(simple_est, free) == 0.0
    assert not is_adversarial(simple_est, free, 0.0)

    A, h, M, est, rng = random_instance(7)
    n, m = A.n, len(M)
    q = est.q
    # The maximal-deviation direction reaches sqrt(m) * sigma_T.
    u_star = np.zeros(n)
    u_star[M] = q / np.linalg.norm(q)
    peak = math.sqrt(m) * est.sigma_T
    assert abs(deviation(est, u_star)) == pytest.approx(peak, rel=1e-9)
    assert is_adversarial(est, u_star, 0.9 * peak)
    assert not is_adversarial(est, u_star, 1.1 * peak)


def test_adversarial_rare_for_random_unit_noise():
    A, h, M, est, rng = random_instance(8)
    m, trials = len(M), 10_000
    gamma = 10.0 * est.sigma_T
    coords = rng.standard_normal((m, trials))
    coords /= np.linalg.norm(coords, axis=0)
    hits = np.abs(est.q @ coords) > gamma
    assert np.mean(~hits) >= 0.999


def test_adversarial_validates_input():
    A, h, M, est, _ = random_instance(9)
    u = np.zeros(A.n)
    u[M[0]] = 2.0
    with pytest.raises(ValueError):
        is_adversarial(est, u, 1.0)  # not unit
    u[M[0]] = 1.0
    with pytest.raises(ValueError):
        is_adversarial(est, u, -0.5)  # negative gamma


# ---------------------------------------------------------------------------
# The two sigma_T constructions agree
# ---------------------------------------------------------------------------


def test_characterization_all_ones_row():
    A = make_explicit(np.ones((1, 10)))
    assert sigma_T_via_characterization(A, 0) == pytest.approx(1.0, rel=1e-12)


def test_characterization_duplicate_rows_collapse():
    rng = stream(50, "test-dup")
    row = rng.standard_normal(12)
    single = make_explicit(row[None, :])
    doubled = make_explicit(np.vstack([row, row]))
    assert sigma_T_via_characterization(doubled, 3) == pytest.approx(
        sigma_T_via_characterization(single, 3), rel=1e-9
    )


def test_characterization_matches_gls_on_random_matrices():
    for seed in range(12):
        rng = stream(seed, "test-agree")
        A = make_explicit(rng.standard_normal((4, 30)))
        h = int(rng.integers(30))
        direct = build_optimal(A, h, np.delete(np.arange(30), h)).sigma_T
        chara = sigma_T_via_characterization(A, h)
        assert chara == pytest.approx(direct, rel=1e-7)


def test_characterization_exact_recovery_case():
    A = make_explicit(np.eye(2, 8))
    assert sigma_T_via_characterization(A, 0) == 0.0
    est = build_optimal(A, 0, np.arange(1, 8))
    assert est.sigma_T == 0.0


def test_characterization_rejects_zero_column():
    A = make_explicit([[0.0, 1.0], [0.0, 2.0]])
    with pytest.raises(ValueError):
        sigma_T_via_characterization(A, 0)


def test_mixed_range_column_uses_exact_branch():
    # Noise spans only the first sketch coordinate; the signal column has
    # a component outside that span, so recovery is exact.
    A = make_explicit(np.array([[1.0, 1.0, 1.0], [1.0, 0.0, 0.0]]))
    est = build_optimal(A, 0, np.array([1, 2]))
    assert est.sigma_T == 0.0
    for w in (0.3, 2.0):
        sketch = A.entries @ np.array([w, 0.4, -0.2])
        # Deviation-free despite noise because g ignores the noisy direction.
        assert estimate_signal(est, sketch) == pytest.approx(w, abs=1e-9)


def test_jl_sigma_profile_scale():
    A = sample_jl(16, 513, "gaussian", 77)
    est = build_optimal(A, 512, np.arange(512))
    assert 0.2 / 16 < est.sigma_T**2 < 10.0 / 16
