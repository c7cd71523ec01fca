"""The universal query attack and its lightweight variant.

The attack sends r i.i.d. queries v_t = w_t * e_h + c * z_t, obtains one
+-1 response s_t per query (the responder sees only the sketch A v_t),
and returns the normalized signed noise sum

    z_adv = sum_t s_t z_t / || sum_t s_t z_t ||.

Queries are a single nonadaptive batch: the full set {(w_t, z_t)} is a
function of (spec, seed) alone. The responder is still invoked
sequentially in query order so stateful responder policies are honored.
The lightweight variant fixes the signal weight and derives responses
from whether a norm estimate over- or under-shoots the true query norm.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .estimator import OptimalEstimator, deviation
from .queries import QuerySpec, sample_noise_coords, sample_signal_weights
from .responders import gap_from_estimate
from .sketches import SketchMatrix

KIND_RESPONDER_FAILED = "responder-failed"
KIND_ADVERSARIAL_FOUND = "adversarial-found"
KIND_INCONCLUSIVE = "inconclusive"

_MAGIC = b"ATRX"
_VERSION = 1
_HEADER = "<4sIBBQQQQdddQQ"


@dataclass
class AttackTranscript:
    """Everything the attack produced, plus evaluator-side telemetry.

    ``z_adv`` is None in the measure-zero event that the signed sum is
    exactly zero. ``per_step_deviation`` holds the optimal estimator's
    deviation on the normalized running sum after each step; it is
    computed by the evaluator and never shown to the responder.
    """

    spec: QuerySpec
    r: int
    seed: int
    kind: str
    responses: np.ndarray
    signed_sum: np.ndarray
    z_adv: Optional[np.ndarray]
    err_count: int
    w_fixed: Optional[float] = None
    per_step_deviation: Optional[np.ndarray] = None

    @property
    def err_rate(self) -> float:
        return self.err_count / self.r


@dataclass
class AttackOutcome:
    """The dichotomy verdict: either the responder erred too often or the
    signed noise sum is an adversarial direction."""

    kind: str
    err_rate: float
    deviation_of_adv: float
    gamma_achieved: float


def run_attack(
    A: SketchMatrix,
    spec: QuerySpec,
    responder,
    r: int,
    seed: int,
    telemetry_estimator: Optional[OptimalEstimator] = None,
    block: int = 2048,
) -> AttackTranscript:
    """Run the attack: sampled signal weights, gap responder on sketches."""

    def respond_one(t, sketch, w, true_norm):
        return int(responder.respond(sketch))

    return _attack_core(A, spec, r, seed, "full", None, respond_one, telemetry_estimator, block)


def run_lightweight_attack(
    A: SketchMatrix,
    w_fixed: float,
    r: int,
    responder,
    seed: int,
    alpha: float = 0.1,
    reference: str = "true-norm",
    telemetry_estimator: Optional[OptimalEstimator] = None,
    block: int = 2048,
) -> AttackTranscript:
    """Run the lightweight attack: fixed signal at the last index, noise on
    all other coordinates, unit noise scale.

    The responder is a norm estimator; each response is +1 when its
    estimate exceeds the reference. The default reference is the true
    query norm, which the attacker knows because it built the query; pass
    ``reference="expected-norm"`` to compare against the constant
    sqrt(w_fixed^2 + 1) instead.
    """
    if reference not in ("true-norm", "expected-norm"):
        raise ValueError(f"unknown reference {reference!r}")
    spec = lightweight_spec(A.n, alpha)
    expected = math.sqrt(w_fixed * w_fixed + 1.0)

    def respond_one(t, sketch, w, true_norm):
        target = true_norm if reference == "true-norm" else expected
        return gap_from_estimate(responder.estimate(sketch), target).s

    return _attack_core(
        A, spec, r, seed, "lightweight", w_fixed, respond_one, telemetry_estimator, block
    )


def lightweight_spec(n: int, alpha: float) -> QuerySpec:
    """Query structure of the lightweight attack: h = last index, noise
    everywhere else, c = 1."""
    return QuerySpec(n=n, h=n - 1, M=np.arange(n - 1, dtype=np.int64), c=1.0, alpha=alpha)


def _attack_core(A, spec, r, seed, kind, w_fixed, respond_one, telemetry_estimator, block):
    if r < 1:
        raise ValueError(f"need r >= 1, got {r}")
    if A.n != spec.n:
        raise ValueError(f"matrix dimension n={A.n} does not match query spec n={spec.n}")
    if telemetry_estimator is not None:
        _check_match(telemetry_estimator, spec)

    noise = spec.noise
    a = A.entries[:, spec.h]
    A_M = A.entries[:, spec.M]
    c = spec.c
    S_M = np.zeros(spec.m)
    responses = np.empty(r, dtype=np.int8)
    err_count = 0
    trace = np.empty(r) if telemetry_estimator is not None else None
    q = telemetry_estimator.q if telemetry_estimator is not None else None
    dev_cum = 0.0
    snorm2 = 0.0

    for t0 in range(0, r, block):
        t1 = min(t0 + block, r)
        Z = sample_noise_coords(noise, seed, t0, t1)
        if w_fixed is None:
            W = sample_signal_weights(spec, seed, t0, t1)
        else:
            W = np.full(t1 - t0, float(w_fixed))
        sketches = c * (A_M @ Z) + np.outer(a, W)
        znorm2 = np.einsum("mt,mt->t", Z, Z)
        qz = q @ Z if trace is not None else None

        for j in range(t1 - t0):
            t = t0 + j
            w = W[j]
            true_norm = math.sqrt(w * w + c * c * znorm2[j])
            s = respond_one(t, sketches[:, j], w, true_norm)
            if s not in (-1, 1):
                raise ValueError(f"responder returned {s!r}, expected -1 or +1")
            responses[t] = s
            if (w <= 1.0 and s == 1) or (w >= 1.0 + spec.alpha and s == -1):
                err_count += 1
            zj = Z[:, j]
            snorm2 += 2.0 * s * float(S_M @ zj) + znorm2[j]
            if s == 1:
                S_M += zj
            else:
                S_M -= zj
            if trace is not None:
                dev_cum += s * qz[j]
                trace[t] = dev_cum / math.sqrt(snorm2) if snorm2 > 0 else 0.0
        # Refresh the running squared norm; the incremental update drifts.
        snorm2 = float(S_M @ S_M)

    signed_sum = np.zeros(spec.n)
    signed_sum[spec.M] = S_M
    norm = math.sqrt(snorm2)
    if norm == 0.0:
        z_adv = None
    else:
        z_adv = np.zeros(spec.n)
        z_adv[spec.M] = S_M / norm
    return AttackTranscript(
        spec=spec,
        r=r,
        seed=seed,
        kind=kind,
        responses=responses,
        signed_sum=signed_sum,
        z_adv=z_adv,
        err_count=err_count,
        w_fixed=w_fixed,
        per_step_deviation=trace,
    )


def evaluate_attack(
    transcript: AttackTranscript, est: OptimalEstimator, gamma: float, delta: float
) -> AttackOutcome:
    """Apply the dichotomy to a finished transcript.

    The responder failed when its gap error rate exceeds delta; otherwise
    the run succeeded when the final direction is gamma-adversarial.
    When the error rate exceeds delta, that verdict takes precedence
    regardless of the achieved deviation.
    """
    _check_match(est, transcript.spec)
    err_rate = transcript.err_rate
    if transcript.z_adv is not None:
        dev = deviation(est, transcript.z_adv)
    else:
        dev = 0.0
    if err_rate > delta:
        kind = KIND_RESPONDER_FAILED
    elif abs(dev) > gamma:
        kind = KIND_ADVERSARIAL_FOUND
    else:
        kind = KIND_INCONCLUSIVE
    return AttackOutcome(
        kind=kind, err_rate=err_rate, deviation_of_adv=dev, gamma_achieved=abs(dev)
    )


def deviation_trace(transcript: AttackTranscript, est: OptimalEstimator, block: int = 2048):
    """Recompute the per-step deviation trace after the fact.

    Re-generates the noise vectors from the transcript's seed and replays
    the stored responses; fills and returns ``per_step_deviation``.
    """
    _check_match(est, transcript.spec)
    spec = transcript.spec
    noise = spec.noise
    q = est.q
    r = transcript.r
    trace = np.empty(r)
    S_M = np.zeros(spec.m)
    dev_cum = 0.0
    snorm2 = 0.0
    for t0 in range(0, r, block):
        t1 = min(t0 + block, r)
        Z = sample_noise_coords(noise, transcript.seed, t0, t1)
        znorm2 = np.einsum("mt,mt->t", Z, Z)
        qz = q @ Z
        for j in range(t1 - t0):
            t = t0 + j
            s = int(transcript.responses[t])
            zj = Z[:, j]
            snorm2 += 2.0 * s * float(S_M @ zj) + znorm2[j]
            if s == 1:
                S_M += zj
            else:
                S_M -= zj
            dev_cum += s * qz[j]
            trace[t] = dev_cum / math.sqrt(snorm2) if snorm2 > 0 else 0.0
        snorm2 = float(S_M @ S_M)
    transcript.per_step_deviation = trace
    return trace


def transcript_summary(transcript: AttackTranscript, outcome: Optional[AttackOutcome] = None):
    """Summary dict for the JSON sidecar of a serialized transcript."""
    summary = {
        "r": transcript.r,
        "err_rate": transcript.err_rate,
        "seed": transcript.seed,
        "kind": transcript.kind,
    }
    if outcome is not None:
        summary["deviation_of_adv"] = outcome.deviation_of_adv
        summary["gamma_achieved"] = outcome.gamma_achieved
        summary["outcome"] = outcome.kind
    return summary


def save_transcript(transcript: AttackTranscript, path) -> None:
    """Write a transcript: packed header, support indices, response bytes,
    then the f64 arrays (signed sum, adversarial vector, deviation trace)."""
    spec = transcript.spec
    flags = 0
    if transcript.z_adv is not None:
        flags |= 1
    if transcript.per_step_deviation is not None:
        flags |= 2
    if transcript.w_fixed is not None:
        flags |= 4
    kind_code = 1 if transcript.kind == "lightweight" else 0
    header = struct.pack(
        _HEADER,
        _MAGIC,
        _VERSION,
        kind_code,
        flags,
        transcript.r,
        spec.n,
        spec.h,
        spec.m,
        spec.c,
        spec.alpha,
        transcript.w_fixed if transcript.w_fixed is not None else 0.0,
        transcript.seed & ((1 << 64) - 1),
        transcript.err_count,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(spec.M, dtype="<u8").tobytes())
        fh.write(np.ascontiguousarray(transcript.responses, dtype=np.int8).tobytes())
        fh.write(np.ascontiguousarray(transcript.signed_sum, dtype="<f8").tobytes())
        if transcript.z_adv is not None:
            fh.write(np.ascontiguousarray(transcript.z_adv, dtype="<f8").tobytes())
        if transcript.per_step_deviation is not None:
            fh.write(np.ascontiguousarray(transcript.per_step_deviation, dtype="<f8").tobytes())


def load_transcript(path) -> AttackTranscript:
    """Read a transcript written by :func:`save_transcript`."""
    header_size = struct.calcsize(_HEADER)
    with open(path, "rb") as fh:
        raw = fh.read(header_size)
        if len(raw) != header_size:
            raise ValueError(f"{path}: truncated header")
        (magic, version, kind_code, flags, r, n, h, m, c, alpha, w_fixed, seed, err_count) = (
            struct.unpack(_HEADER, raw)
        )
        if magic != _MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        M = np.frombuffer(fh.read(8 * m), dtype="<u8").astype(np.int64)
        responses = np.frombuffer(fh.read(r), dtype=np.int8).copy()
        signed_sum = np.frombuffer(fh.read(8 * n), dtype="<f8").copy()
        z_adv = np.frombuffer(fh.read(8 * n), dtype="<f8").copy() if flags & 1 else None
        trace = np.frombuffer(fh.read(8 * r), dtype="<f8").copy() if flags & 2 else None
    spec = QuerySpec(n=n, h=h, M=M, c=c, alpha=alpha)
    return AttackTranscript(
        spec=spec,
        r=r,
        seed=seed,
        kind="lightweight" if kind_code == 1 else "full",
        responses=responses,
        signed_sum=signed_sum,
        z_adv=z_adv,
        err_count=err_count,
        w_fixed=w_fixed if flags & 4 else None,
        per_step_deviation=trace,
    )


def _check_match(est: OptimalEstimator, spec: QuerySpec) -> None:
    if est.h != spec.h or not np.array_equal(est.M, spec.M):
        raise ValueError("estimator was built for a different (h, M) than this transcript")
