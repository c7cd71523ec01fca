"""Acceptance suite: one test per criterion, each printing a PASS line.

The campaign shared by the growth and robustness-ordering criteria runs
once per session. Every tolerance is pinned here, not calibrated at run
time.
"""

import json
import math

import numpy as np
import pytest

from sketchattack.attack import evaluate_attack, run_attack
from sketchattack.campaign import CampaignConfig, run_campaign, tradeoff_table
from sketchattack.estimator import build_optimal, sigma_T_via_characterization
from sketchattack.queries import QuerySpec
from sketchattack.responders import (
    OptimalGapResponder,
    RandomSignResponder,
    measure_err,
)
from sketchattack.sketches import make_explicit, sample_jl
from sketchattack.streams import derive_seed, stream
from sketchattack.validate import brute_force_best_variance, run_suite

MASTER_SEED = 31337


def report(criterion: str, detail: str):
    print(f"ACCEPTANCE {criterion}: PASS ({detail})")


# ---------------------------------------------------------------------------
# Criterion 1: tradeoff numbers
# ---------------------------------------------------------------------------


def test_criterion_1_tradeoff_numbers():
    rows = tradeoff_table([1000], [0.05, 0.10], draws=20_000, seed=MASTER_SEED)
    by_sigma = {row["sigma"]: row for row in rows}
    assert by_sigma[0.05]["sigma_t"] == pytest.approx(0.060, abs=0.005)
    assert by_sigma[0.10]["sigma_t"] == pytest.approx(0.105, abs=0.005)
    for row in rows:
        assert row["draws"] >= 10_000
        assert abs(row["empirical"] - row["sigma_t"]) <= 0.10 * row["sigma_t"]
    report(
        "criterion 1 (tradeoff numbers)",
        f"sigma_t(0.05)={by_sigma[0.05]['sigma_t']:.4f}, "
        f"sigma_t(0.10)={by_sigma[0.10]['sigma_t']:.4f}, "
        f"empirical within 10%",
    )


# ---------------------------------------------------------------------------
# Criteria 2 and 3 share one campaign: lightweight attack on JL at k = 64,
# m = 4k^2, r = 2e4, 10 trials, sigma in {0, 0.05, 0.1}.
# ---------------------------------------------------------------------------


@pytest.fixture(scope="session")
def growth_campaign(tmp_path_factory):
    k = 64
    m = 4 * k * k
    config = CampaignConfig(
        k=[k],
        estimators=[
            {"type": "standard"},
            {"type": "robust", "sigma": 0.05},
            {"type": "robust", "sigma": 0.1},
        ],
        attack="lightweight",
        r=20_000,
        trials=10,
        master_seed=MASTER_SEED,
        alpha=0.1,
        m=m,
        n=m + 1,
    )
    out_dir = tmp_path_factory.mktemp("growth-campaign")
    result = run_campaign(config, out_dir=str(out_dir), threads=2)
    return config, result, out_dir


def test_criterion_2_attack_growth(growth_campaign):
    config, result, _ = growth_campaign
    summary = result.summary
    sigma_T = summary["matrices"][0]["sigma_T"]
    group = next(g for g in summary["groups"] if g["estimator"] == "standard")
    mean = np.asarray(group["mean_abs_deviation"])
    roots = np.sqrt(np.arange(1, config.r + 1))
    slope, intercept = np.polyfit(roots, mean, 1)
    prediction = slope * roots + intercept
    r2 = 1.0 - float(np.sum((mean - prediction) ** 2)) / float(
        np.sum((mean - mean.mean()) ** 2)
    )
    final = group["final_mean_deviation"]
    assert slope > 0
    assert r2 >= 0.9
    assert final > 5.0 * sigma_T
    report(
        "criterion 2 (attack growth)",
        f"slope={slope:.5f}, R^2={r2:.4f}, final={final:.2f} "
        f"= {final / sigma_T:.1f} sigma_T (needs > 5)",
    )


def test_criterion_3_robustness_ordering(growth_campaign):
    _, result, _ = growth_campaign
    finals = {
        g["estimator"]: g["final_mean_deviation"] for g in result.summary["groups"]
    }
    assert finals["standard"] > finals["robust-0.05"] > finals["robust-0.1"]
    report(
        "criterion 3 (robustness ordering)",
        f"standard={finals['standard']:.3f} > robust-0.05={finals['robust-0.05']:.3f} "
        f"> robust-0.1={finals['robust-0.1']:.3f}",
    )


# ---------------------------------------------------------------------------
# Criterion 4: estimator correctness
# ---------------------------------------------------------------------------


def test_criterion_4_estimator_correctness():
    # Monte Carlo unbiasedness and variance on 20 random instances.
    worst_bias_z = 0.0
    worst_var_rel = 0.0
    for i in range(20):
        rng = stream(derive_seed(MASTER_SEED, "crit4/mc", i), "gauss")
        k = int(rng.integers(2, 9))
        m = int(rng.integers(k + 2, 50))
        c = 0.5
        A = make_explicit(rng.standard_normal((k, m + 1)))
        M = np.arange(m, dtype=np.int64)
        est = build_optimal(A, m, M, c=c)
        assert est.sigma_T > 0
        trials = 100_000
        w = 1.0 + float(rng.random())
        noise = rng.standard_normal((m, trials)) / math.sqrt(m)
        sketches = c * (A.entries[:, M] @ noise) + np.outer(
            A.entries[:, m], np.full(trials, w)
        )
        values = est.g @ sketches
        se = float(values.std(ddof=1)) / math.sqrt(trials)
        bias_z = abs(float(values.mean()) - w) / se
        worst_bias_z = max(worst_bias_z, bias_z)
        assert bias_z < 3.0
        target = (c * est.sigma_T) ** 2
        rel = abs(float(values.var(ddof=1)) - target) / target
        worst_var_rel = max(worst_var_rel, rel)
        assert rel <= 0.05

    # The GLS construction agrees with the row-orthogonalization
    # characterization on 50 random matrices.
    worst_gap = 0.0
    for i in range(50):
        rng = stream(derive_seed(MASTER_SEED, "crit4/agree", i), "gauss")
        k = int(rng.integers(2, 7))
        n = int(rng.integers(3 * k, 44))
        A = make_explicit(rng.standard_normal((k, n)))
        h = int(rng.integers(n))
        direct = build_optimal(A, h, np.delete(np.arange(n), h)).sigma_T
        chara = sigma_T_via_characterization(A, h)
        gap = abs(direct - chara) / max(direct, 1e-12)
        worst_gap = max(worst_gap, gap)
        assert gap <= 1e-7

    # Brute-force grid search over unbiased linear estimators (k <= 3,
    # m <= 6) finds nothing below sigma_T^2 - 1e-6.
    for i, (k, m) in enumerate([(2, 4), (2, 6), (3, 5), (3, 6)]):
        rng = stream(derive_seed(MASTER_SEED, "crit4/brute", i), "gauss")
        A = make_explicit(rng.standard_normal((k, m + 1)))
        M = np.arange(m, dtype=np.int64)
        best = brute_force_best_variance(A, h=m, M=M)
        sigma2 = build_optimal(A, m, M).sigma_T ** 2
        assert best >= sigma2 - 1e-6
    report(
        "criterion 4 (estimator correctness)",
        f"worst bias z={worst_bias_z:.2f} (<3), worst variance rel err="
        f"{worst_var_rel:.4f} (<=0.05), worst construction gap={worst_gap:.2e} (<=1e-7), "
        "no unbiased linear estimator beats sigma_T^2",
    )


# ---------------------------------------------------------------------------
# Criterion 5: the dichotomy harness at k = 32
# ---------------------------------------------------------------------------


def test_criterion_5_dichotomy():
    k, m = 32, 2048
    n = m + 1
    c, alpha, gamma = 1.25, 0.5, 3.0
    delta = alpha * alpha / 10.0
    C_r = 0.35
    r = math.ceil(C_r * gamma**2 * alpha**-2 * k * k * math.log(k) ** 2)
    A = sample_jl(k, n, "gaussian", derive_seed(MASTER_SEED, "crit5/matrix"))

    def trial_structure(trial):
        rng = stream(MASTER_SEED, "crit5/support", trial)
        perm = rng.permutation(n)
        h, M = int(perm[0]), np.sort(perm[1 : m + 1]).astype(np.int64)
        spec = QuerySpec(n=n, h=h, M=M, c=c, alpha=alpha)
        return spec, build_optimal(A, h, M, c=c)

    found = 0
    for trial in range(10):
        spec, est = trial_structure(trial)
        responder = OptimalGapResponder.for_spec(est, spec)
        err = measure_err(
            responder, A, spec, trials=100_000,
            seed=derive_seed(MASTER_SEED, "crit5/err", trial),
        )
        assert err <= delta, f"trial {trial}: responder error {err} above delta={delta}"
        transcript = run_attack(
            A, spec, responder, r, derive_seed(MASTER_SEED, "crit5/attack", trial)
        )
        outcome = evaluate_attack(transcript, est, gamma, delta)
        found += outcome.kind == "adversarial-found"
    assert found >= 8

    failed = 0
    for trial in range(10):
        spec, est = trial_structure(trial)
        responder = RandomSignResponder(stream(MASTER_SEED, "crit5/coin", trial))
        transcript = run_attack(
            A, spec, responder, r, derive_seed(MASTER_SEED, "crit5/attack", trial)
        )
        outcome = evaluate_attack(transcript, est, gamma, delta)
        failed += outcome.kind == "responder-failed"
    assert failed == 10
    report(
        "criterion 5 (dichotomy harness)",
        f"r={r}, adversarial-found {found}/10 (needs >=8), "
        f"responder-failed {failed}/10 (needs 10)",
    )


# ---------------------------------------------------------------------------
# Criterion 6: the lemma suite
# ---------------------------------------------------------------------------


def test_criterion_6_lemma_suite():
    manifest = run_suite("all")
    names = [entry["check"] for entry in manifest["checks"]]
    failures = [e["check"] for e in manifest["checks"] if not e["pass"]]
    assert len(manifest["checks"]) >= 7
    assert manifest["all_pass"], f"failing checks: {failures}"
    report("criterion 6 (lemma suite)", f"{len(names)} checks pass: {', '.join(names)}")


# ---------------------------------------------------------------------------
# Criterion 7: determinism
# ---------------------------------------------------------------------------


def test_criterion_7_determinism(tmp_path):
    config_doc = dict(
        k=[8],
        estimators=[{"type": "standard"}, {"type": "robust", "sigma": 0.05}],
        attack="lightweight",
        r=300,
        trials=4,
        master_seed=MASTER_SEED,
        alpha=0.1,
        m=256,
        n=257,
    )
    runs = {}
    for name, threads in [("serial-a", 1), ("serial-b", 1), ("pool", 4)]:
        out = tmp_path / name
        run_campaign(CampaignConfig(**json.loads(json.dumps(config_doc))),
                     out_dir=str(out), threads=threads)
        runs[name] = (out / "records.csv").read_bytes()
    assert runs["serial-a"] == runs["serial-b"]
    assert runs["serial-a"] == runs["pool"]
    report(
        "criterion 7 (determinism)",
        f"{len(runs['serial-a'])} CSV bytes identical across reruns and thread counts 1 vs 4",
    )
