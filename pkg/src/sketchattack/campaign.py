"""Attack campaigns: configuration, execution, and telemetry emission.

A campaign runs the attack for each sketch size against each configured
estimator, with several independent trials, and writes

* ``records.csv`` with the frozen schema
  ``k,estimator,sigma,trial,step,deviation,err_rate,seed`` (one row per
  attack step; floats as shortest round-trip decimals),
* ``summary.json`` with per-(k, estimator) mean and std deviation curves
  recomputable from the CSV,
* one binary transcript plus JSON sidecar per (k, estimator, trial).

Everything is a deterministic function of the master seed: queries depend
only on (spec, trial seed), so every estimator in a trial faces identical
queries, and output bytes do not depend on the thread count.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .attack import (
    AttackTranscript,
    evaluate_attack,
    lightweight_spec,
    save_transcript,
    transcript_summary,
)
from .estimator import build_optimal
from .queries import QuerySpec, sample_noise_coords, sample_signal_weights
from .responders import (
    OptimalGapResponder,
    RandomSignResponder,
    RobustResponder,
    StandardResponder,
    respond_batch,
)
from .sketches import SketchMatrix, sample_ams, sample_jl
from .streams import derive_seed, stream

CSV_HEADER = "k,estimator,sigma,trial,step,deviation,err_rate,seed"

_ATTACK_KINDS = ("lightweight", "full")
_SAMPLED_FAMILIES = ("jl-gaussian", "jl-sign", "ams")


@dataclass
class EstimatorConfig:
    """One responder the campaign attacks."""

    type: str
    sigma: float = 0.0
    threshold: Optional[float] = None

    def __post_init__(self):
        if self.type not in ("standard", "robust", "optimal-gap", "random"):
            raise ValueError(f"unknown estimator type {self.type!r}")
        if self.sigma < 0:
            raise ValueError(f"estimator sigma must be >= 0, got {self.sigma}")

    @property
    def tag(self) -> str:
        if self.type == "robust":
            return f"robust-{self.sigma:g}"
        return self.type


@dataclass
class CampaignConfig:
    k: list
    estimators: list
    attack: str
    r: int
    trials: int
    master_seed: int
    alpha: float
    c: float = 0.5
    w_fixed: float = 1.0
    m: Optional[int] = None
    n: Optional[int] = None
    family: str = "jl-gaussian"
    matrix_seed: Optional[int] = None
    gamma: float = 3.0
    delta: Optional[float] = None
    out_dir: Optional[str] = None

    def __post_init__(self):
        if isinstance(self.k, int):
            self.k = [self.k]
        self.k = [int(k) for k in self.k]
        if not self.k or any(k < 1 for k in self.k):
            raise ValueError("k must be one or more positive sketch sizes")
        if self.attack not in _ATTACK_KINDS:
            raise ValueError(f"attack must be one of {_ATTACK_KINDS}, got {self.attack!r}")
        if self.r < 1:
            raise ValueError(f"need r >= 1, got {self.r}")
        if self.trials < 1:
            raise ValueError(f"need trials >= 1, got {self.trials}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"need alpha in (0, 1), got {self.alpha}")
        if self.c <= 0:
            raise ValueError(f"need c > 0, got {self.c}")
        if self.family not in _SAMPLED_FAMILIES:
            raise ValueError(f"family must be one of {_SAMPLED_FAMILIES}, got {self.family!r}")
        self.estimators = [
            e if isinstance(e, EstimatorConfig) else EstimatorConfig(**e) for e in self.estimators
        ]
        if not self.estimators:
            raise ValueError("at least one estimator is required")
        if self.delta is None:
            self.delta = self.alpha * self.alpha / 10.0
        if self.attack == "lightweight" and self.m is not None and self.n is not None:
            if self.m != self.n - 1:
                raise ValueError(
                    "the lightweight attack pins the noise support to all but the last "
                    f"coordinate, so m must equal n - 1 (got m={self.m}, n={self.n})"
                )
        for k in self.k:
            if self.dim_for(k) <= k:
                raise ValueError(f"need n > k, got n={self.dim_for(k)} for k={k}")

    def support_size(self, k: int) -> int:
        if self.m is not None:
            return self.m
        return 4 * k * k

    def dim_for(self, k: int) -> int:
        if self.n is not None:
            return self.n
        return self.support_size(k) + 1

    @classmethod
    def from_json(cls, doc: str) -> "CampaignConfig":
        data = json.loads(doc)
        if not isinstance(data, dict):
            raise ValueError("campaign config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ValueError(f"invalid campaign config: {exc}") from exc


@dataclass
class CampaignResult:
    records: list
    summary: dict
    csv_path: Optional[str] = None
    summary_path: Optional[str] = None


def run_campaign(config: CampaignConfig, out_dir: Optional[str] = None, threads: int = 1):
    """Run a campaign and write CSV, summary, and transcripts to out_dir.

    With out_dir None nothing is written and only the in-memory result is
    returned. Trials run in a worker pool; outputs are assembled in
    (k, estimator, trial, step) order so the bytes do not depend on the
    thread count.
    """
    jobs = [(k, trial) for k in config.k for trial in range(config.trials)]
    matrices = {k: _campaign_matrix(config, k) for k in config.k}
    telemetry = {}
    for k, A in matrices.items():
        if config.attack == "lightweight":
            spec = lightweight_spec(A.n, config.alpha)
            telemetry[k] = build_optimal(A, spec.h, spec.M, c=spec.c)

    def run_job(job):
        k, trial = job
        return _run_trial(config, matrices[k], telemetry.get(k), k, trial)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outputs = list(pool.map(run_job, jobs))
    else:
        outputs = [run_job(job) for job in jobs]
    by_job = dict(zip(jobs, outputs))

    records = []
    groups = []
    transcripts = []
    for k in config.k:
        for est_cfg in config.estimators:
            dev_rows = []
            err_final = []
            clamps = 0
            outcomes = []
            for trial in range(config.trials):
                data = by_job[(k, trial)][est_cfg.tag]
                dev_rows.append(data["abs_deviation"])
                err_final.append(data["err_curve"][-1])
                clamps += data["clamp_count"]
                if data["outcome"] is not None:
                    outcomes.append(data["outcome"])
                seed = data["seed"]
                err_curve = data["err_curve"]
                abs_dev = data["abs_deviation"]
                for step in range(config.r):
                    records.append(
                        (k, est_cfg.tag, est_cfg.sigma, trial, step + 1, abs_dev[step],
                         err_curve[step], seed)
                    )
                transcripts.append((k, est_cfg.tag, trial, data["transcript"], data["outcome"]))
            curve = np.vstack(dev_rows)
            group = {
                "k": k,
                "estimator": est_cfg.tag,
                "sigma": est_cfg.sigma,
                "trials": config.trials,
                "r": config.r,
                "mean_abs_deviation": curve.mean(axis=0).tolist(),
                "std_abs_deviation": curve.std(axis=0, ddof=0).tolist(),
                "final_mean_deviation": float(curve.mean(axis=0)[-1]),
                "mean_final_err_rate": float(np.mean(err_final)),
                "clamp_fraction": clamps / (config.trials * config.r),
            }
            if outcomes:
                group["outcomes"] = outcomes
            groups.append(group)

    summary = {
        "schema": "sketchattack-campaign-summary@1",
        "attack": config.attack,
        "master_seed": config.master_seed,
        "std_ddof": 0,
        "k": config.k,
        "r": config.r,
        "trials": config.trials,
        "alpha": config.alpha,
        "c": 1.0 if config.attack == "lightweight" else config.c,
        "gamma": config.gamma,
        "delta": config.delta,
        "matrices": [
            {
                "k": k,
                "n": matrices[k].n,
                "family": matrices[k].family,
                "seed": matrices[k].seed,
                **(
                    {"sigma_T": telemetry[k].sigma_T}
                    if k in telemetry and not telemetry[k].column_zero
                    else {}
                ),
            }
            for k in config.k
        ],
        "groups": groups,
    }

    result = CampaignResult(records=records, summary=summary)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        result.csv_path = os.path.join(out_dir, "records.csv")
        _write_csv(result.csv_path, records)
        result.summary_path = os.path.join(out_dir, "summary.json")
        with open(result.summary_path, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=1, sort_keys=True)
            fh.write("\n")
        tdir = os.path.join(out_dir, "transcripts")
        os.makedirs(tdir, exist_ok=True)
        for k, tag, trial, transcript, outcome in transcripts:
            base = os.path.join(tdir, f"k{k}-{tag}-trial{trial:03d}")
            save_transcript(transcript, base + ".atrx")
            sidecar = transcript_summary(transcript)
            if outcome is not None:
                sidecar["deviation_of_adv"] = outcome["deviation_of_adv"]
                sidecar["gamma_achieved"] = outcome["gamma_achieved"]
                sidecar["outcome"] = outcome["kind"]
            with open(base + ".json", "w", encoding="utf-8") as fh:
                json.dump(sidecar, fh, indent=1, sort_keys=True)
                fh.write("\n")
    return result


def _campaign_matrix(config: CampaignConfig, k: int) -> SketchMatrix:
    seed = (
        config.matrix_seed
        if config.matrix_seed is not None
        else derive_seed(config.master_seed, f"matrix/{k}")
    )
    n = config.dim_for(k)
    if config.family == "ams":
        return sample_ams(k, n, seed)
    return sample_jl(k, n, config.family.removeprefix("jl-"), seed)


def _trial_support(config: CampaignConfig, n: int, k: int, trial: int):
    """Signal index and noise support for one full-attack trial."""
    rng = stream(config.master_seed, f"support/{k}", trial)
    m = config.support_size(k)
    if m >= n:
        raise ValueError(f"support size m={m} needs n > m, got n={n}")
    perm = rng.permutation(n)
    return int(perm[0]), np.sort(perm[1 : m + 1]).astype(np.int64)


def _make_responder(config, est_cfg, est, spec, k, trial):
    if est_cfg.type == "standard":
        return StandardResponder()
    if est_cfg.type == "robust":
        return RobustResponder(
            est_cfg.sigma, stream(config.master_seed, f"responder/{k}/{est_cfg.tag}", trial)
        )
    if est_cfg.type == "random":
        return RandomSignResponder(
            stream(config.master_seed, f"responder/{k}/{est_cfg.tag}", trial)
        )
    threshold = est_cfg.threshold if est_cfg.threshold is not None else 1.0 + spec.alpha / 2.0
    return OptimalGapResponder(est, threshold)


def _run_trial(config: CampaignConfig, A: SketchMatrix, telemetry, k: int, trial: int):
    """All estimators of one (k, trial): queries are generated once and
    shared, which is exactly the nonadaptive-batch semantics (each
    estimator faces the identical query stream)."""
    seed = derive_seed(config.master_seed, f"trial/{k}", trial)
    if config.attack == "lightweight":
        spec = lightweight_spec(A.n, config.alpha)
        est = telemetry
        w_fixed = config.w_fixed
    else:
        h, M = _trial_support(config, A.n, k, trial)
        spec = QuerySpec(n=A.n, h=h, M=M, c=config.c, alpha=config.alpha)
        est = build_optimal(A, h, M, c=config.c)
        w_fixed = None

    responders = {
        cfg.tag: _make_responder(config, cfg, est, spec, k, trial) for cfg in config.estimators
    }
    states = {
        tag: {
            "S": np.zeros(spec.m),
            "snorm2": 0.0,
            "dev_cum": 0.0,
            "errs": 0,
            "responses": np.empty(config.r, dtype=np.int8),
            "abs_deviation": np.empty(config.r),
            "err_curve": np.empty(config.r),
        }
        for tag in responders
    }

    a = A.entries[:, spec.h]
    A_M = A.entries[:, spec.M]
    q = est.q if est is not None and not est.column_zero else None
    r = config.r
    block = max(1, min(2048, r))
    for t0 in range(0, r, block):
        t1 = min(t0 + block, r)
        Z = sample_noise_coords(spec.noise, seed, t0, t1)
        if w_fixed is None:
            W = sample_signal_weights(spec, seed, t0, t1)
        else:
            W = np.full(t1 - t0, float(w_fixed))
        sketches = spec.c * (A_M @ Z) + np.outer(a, W)
        znorm2 = np.einsum("mt,mt->t", Z, Z)
        qz = q @ Z if q is not None else np.zeros(t1 - t0)
        true_norms = np.sqrt(W * W + spec.c * spec.c * znorm2)

        for cfg in config.estimators:
            tag = cfg.tag
            responder = responders[tag]
            if cfg.type in ("standard", "robust"):
                estimates = responder.estimate_batch(sketches)
                signs = np.where(estimates > true_norms, 1, -1).astype(np.int8)
            else:
                signs = respond_batch(responder, sketches)
            state = states[tag]
            state["responses"][t0:t1] = signs
            wrong = ((W <= 1.0) & (signs == 1)) | ((W >= 1.0 + spec.alpha) & (signs == -1))
            S = state["S"]
            snorm2 = state["snorm2"]
            dev_cum = state["dev_cum"]
            errs = state["errs"]
            abs_dev = state["abs_deviation"]
            err_curve = state["err_curve"]
            for j in range(t1 - t0):
                t = t0 + j
                s = int(signs[j])
                zj = Z[:, j]
                snorm2 += 2.0 * s * float(S @ zj) + znorm2[j]
                if s == 1:
                    S += zj
                else:
                    S -= zj
                dev_cum += s * qz[j]
                errs += bool(wrong[j])
                abs_dev[t] = abs(dev_cum) / math.sqrt(snorm2) if snorm2 > 0 else 0.0
                err_curve[t] = errs / (t + 1)
            state["snorm2"] = float(S @ S)
            state["dev_cum"] = dev_cum
            state["errs"] = errs

    out = {}
    for cfg in config.estimators:
        tag = cfg.tag
        state = states[tag]
        S = state["S"]
        signed_sum = np.zeros(spec.n)
        signed_sum[spec.M] = S
        norm = float(np.linalg.norm(S))
        z_adv = None
        if norm > 0:
            z_adv = np.zeros(spec.n)
            z_adv[spec.M] = S / norm
        transcript = AttackTranscript(
            spec=spec,
            r=r,
            seed=seed,
            kind=config.attack,
            responses=state["responses"],
            signed_sum=signed_sum,
            z_adv=z_adv,
            err_count=state["errs"],
            w_fixed=w_fixed,
            per_step_deviation=None,
        )
        outcome = None
        if est is not None and not est.column_zero:
            verdict = evaluate_attack(transcript, est, config.gamma, config.delta)
            outcome = {
                "trial": trial,
                "kind": verdict.kind,
                "err_rate": verdict.err_rate,
                "deviation_of_adv": verdict.deviation_of_adv,
                "gamma_achieved": verdict.gamma_achieved,
                "sigma_T": est.sigma_T,
            }
        out[tag] = {
            "seed": seed,
            "abs_deviation": state["abs_deviation"],
            "err_curve": state["err_curve"],
            "clamp_count": getattr(responders[tag], "clamp_count", 0),
            "transcript": transcript,
            "outcome": outcome,
        }
    return out


def _write_csv(path: str, records) -> None:
    lines = [CSV_HEADER]
    for k, tag, sigma, trial, step, deviation, err_rate, seed in records:
        lines.append(
            f"{k},{tag},{_fmt(sigma)},{trial},{step},{_fmt(deviation)},{_fmt(err_rate)},{seed}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# Accuracy / robustness tradeoff table
# ---------------------------------------------------------------------------


def tradeoff_table(k_list, sigma_list, draws: int = 20_000, seed: int = 0) -> list:
    """Analytic and empirical error scales of the noisy norm estimator.

    Per (k, sigma): the clean-estimator scale sigma0 = 1/sqrt(k), the
    total scale sigma_t = sqrt(1/k + sigma^2), and a Monte Carlo estimate
    of sigma_t from sketches of a unit-norm input under freshly resampled
    Gaussian sketching matrices.

    The sketch of a unit vector under a row-iid Gaussian family is exactly
    N(0, I_k / k), so the draws sample that law directly. The empirical
    scale uses the convention that matches sigma0 = 1/sqrt(k): the
    chi-square part of ||Av||^2 contributes half its variance
    (Var = 2/k for k degrees of freedom, scale^2 = 1/k), while the
    injected responder noise contributes its variance in full.
    """
    rows = []
    for idx_k, k in enumerate(k_list):
        if k < 1:
            raise ValueError(f"need k >= 1, got {k}")
        rng = stream(seed, "tradeoff", idx_k)
        sketch_norm2 = rng.chisquare(k, size=draws) / k
        sketch_var = float(sketch_norm2.var(ddof=1))
        for sigma in sigma_list:
            if sigma < 0:
                raise ValueError(f"need sigma >= 0, got {sigma}")
            if sigma > 0:
                noise = sigma * rng.standard_normal(draws)
                noise_var = float(noise.var(ddof=1))
            else:
                noise_var = 0.0
            rows.append(
                {
                    "k": k,
                    "sigma": float(sigma),
                    "sigma0": 1.0 / math.sqrt(k),
                    "sigma_t": math.sqrt(1.0 / k + sigma * sigma),
                    "empirical": math.sqrt(sketch_var / 2.0 + noise_var),
                    "draws": draws,
                }
            )
    return rows


TRADEOFF_HEADER = "k,sigma,sigma0,sigma_t,empirical,draws"


def write_tradeoff_csv(rows, path) -> None:
    lines = [TRADEOFF_HEADER]
    for row in rows:
        lines.append(
            f"{row['k']},{_fmt(row['sigma'])},{_fmt(row['sigma0'])},"
            f"{_fmt(row['sigma_t'])},{_fmt(row['empirical'])},{row['draws']}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
