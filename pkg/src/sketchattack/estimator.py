"""The optimal linear signal estimator for a fixed sketch and query structure.

For queries v = w * e_h + c * z with z Gaussian on support M, the sketch
is y = A v = w * a + c * A z where a = A[:, h]. When a is nonzero there
is a linear statistic T(y) = <g, y> that is unbiased for w and has the
smallest variance among unbiased linear estimators; its error

    T(A v) - w = c * <g, A z>

depends only on the sketched noise and is N(0, c^2 * sigma_T^2)
distributed, with sigma_T^2 = (1/m) * sum_{j in M} <g, A[:, j]>^2.

The extraction vector g is the generalized-least-squares solution
g = Sigma^+ a / (a' Sigma^+ a) with Sigma = (1/m) A_M A_M', except when a
has a component outside range(Sigma): that component is orthogonal to
every sketched noise vector, so reading it off recovers w exactly and
sigma_T = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .sketches import SketchMatrix

# Singular values of the noise covariance below RANK_TOL * max are treated
# as zero when forming the pseudo-inverse.
RANK_TOL = 1e-10
# A signal column counts as zero when every entry is below this.
ZERO_COLUMN_TOL = 1e-12
# Relative mass of the signal column outside range(Sigma) that triggers the
# exact-recovery branch.
COMPLEMENT_TOL = 1e-8
# Off-support coordinates of noise arguments may not exceed this.
SUPPORT_TOL = 1e-12


@dataclass
class OptimalEstimator:
    """Extraction vector g with its standard deviation sigma_T.

    When ``column_zero`` is set the sketch carries no signal information;
    g and sigma_T are absent and all estimation operations raise.
    """

    h: int
    M: np.ndarray
    c: float
    column_zero: bool
    g: Optional[np.ndarray] = None
    sigma_T: Optional[float] = None
    # <g, A[:, j]> for j in M; deviation of a noise vector u is <q, u[M]>.
    q: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def sigma_T2(self) -> float:
        self._require_usable()
        return self.sigma_T**2

    def _require_usable(self):
        if self.column_zero:
            raise ValueError(
                f"signal column {self.h} is zero: the sketch carries no signal information"
            )


def build_optimal(A: SketchMatrix, h: int, M, c: float = 1.0) -> OptimalEstimator:
    """Construct the optimal unbiased linear estimator for (A, h, M, c)."""
    M = np.sort(np.asarray(M, dtype=np.int64))
    if not 0 <= h < A.n:
        raise ValueError(f"signal index h={h} out of range [0, {A.n})")
    if M.size == 0:
        raise ValueError("noise support must be nonempty")
    if M[0] < 0 or M[-1] >= A.n:
        raise ValueError("noise support indices out of range")
    if np.any(M == h):
        raise ValueError(f"signal index h={h} must not lie in the noise support")
    if M.size != np.unique(M).size:
        raise ValueError("noise support indices must be distinct")

    a = A.entries[:, h].copy()
    if np.max(np.abs(a)) < ZERO_COLUMN_TOL:
        return OptimalEstimator(h=h, M=M, c=c, column_zero=True)

    m = M.size
    A_M = A.entries[:, M]
    sigma = (A_M @ A_M.T) / m
    evals, vecs = np.linalg.eigh(sigma)
    evals = np.clip(evals, 0.0, None)
    cut = RANK_TOL * (evals[-1] if evals[-1] > 0 else 1.0)
    keep = evals > cut

    coords = vecs.T @ a
    a_range = vecs[:, keep] @ coords[keep]
    a_comp = a - a_range
    comp_norm2 = float(a_comp @ a_comp)

    if comp_norm2 > (COMPLEMENT_TOL * float(np.linalg.norm(a))) ** 2:
        # Part of the signal column is orthogonal to all sketched noise:
        # projecting on it recovers w exactly.
        g = a_comp / comp_norm2
        sigma_T = 0.0
    else:
        pinv_a = vecs[:, keep] @ (coords[keep] / evals[keep])
        denom = float(a @ pinv_a)
        g = pinv_a / denom
        sigma_T = math.sqrt(float(g @ sigma @ g))
    return OptimalEstimator(h=h, M=M, c=c, column_zero=False, g=g, sigma_T=sigma_T, q=A_M.T @ g)


def estimate_signal(est: OptimalEstimator, sketch) -> float:
    """T(y) = <g, y>; equals w + c * <g, A z> on a sketch of w*e_h + c*z."""
    est._require_usable()
    sketch = np.asarray(sketch, dtype=np.float64)
    if sketch.shape != est.g.shape:
        raise ValueError(f"sketch has shape {sketch.shape}, expected {est.g.shape}")
    if not np.isfinite(sketch).all():
        raise ValueError("sketch must be finite")
    return float(est.g @ sketch)


def deviation(est: OptimalEstimator, u) -> float:
    """Estimator error <g, A u> caused by a noise vector u with support M.

    For u drawn from the noise distribution at scale c the value
    c * deviation(u) is N(0, c^2 sigma_T^2) distributed.
    """
    est._require_usable()
    u = np.asarray(u, dtype=np.float64)
    _check_support(est, u)
    return float(est.q @ u[est.M])


def is_adversarial(est: OptimalEstimator, u, gamma: float) -> bool:
    """Whether the unit noise vector u drives the estimator off by more than gamma.

    The deviation is evaluated on u directly, with no noise-scale factor.
    """
    est._require_usable()
    if gamma < 0:
        raise ValueError(f"need gamma >= 0, got {gamma}")
    u = np.asarray(u, dtype=np.float64)
    norm = float(np.linalg.norm(u))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"adversarial candidates must be unit vectors, got norm {norm}")
    _check_support(est, u)
    return abs(float(est.q @ u[est.M])) > gamma


def sigma_T_via_characterization(A: SketchMatrix, h: int) -> float:
    """sigma_T for noise on all columns but h, by row orthogonalization.

    Row operations preserve the information in a sketch, so sigma_T can be
    read off any row-equivalent matrix whose rows are orthogonal on the
    noise columns: scaling each row with a nonzero entry in column h to 1
    there, the rows' noise-restricted squared norms n_i satisfy

        1 / sigma_T^2 = sum_i m / n_i,

    the total information the independent rows carry about the signal.
    This is an independent construction used to cross-check
    :func:`build_optimal`.
    """
    if not 0 <= h < A.n:
        raise ValueError(f"signal index h={h} out of range [0, {A.n})")
    a = A.entries[:, h]
    if np.max(np.abs(a)) < ZERO_COLUMN_TOL:
        raise ValueError(f"signal column {h} is zero")
    cols = np.concatenate([np.arange(h), np.arange(h + 1, A.n)])
    m = cols.size
    B = A.entries.copy()
    k = A.k

    # Modified Gram-Schmidt on the noise restriction, applied to full rows;
    # a second pass controls the loss of orthogonality.
    col_scale = float(np.max(np.abs(B[:, cols]))) or 1.0
    drop_tol = (1e-14 * col_scale) ** 2 * m
    for i in range(k):
        for _ in range(2):
            for j in range(i):
                nj = float(B[j, cols] @ B[j, cols])
                if nj > drop_tol:
                    B[i] -= (float(B[i, cols] @ B[j, cols]) / nj) * B[j]

    info = 0.0
    gamma_tol = 1e-12 * float(np.max(np.abs(B[:, h])))
    for i in range(k):
        gamma = float(B[i, h])
        if abs(gamma) <= gamma_tol:
            continue
        noise_norm2 = float(B[i, cols] @ B[i, cols])
        if noise_norm2 <= 1e-24 * gamma * gamma * m:
            # A row reads the signal with no noise at all: exact recovery.
            return 0.0
        info += gamma * gamma * m / noise_norm2
    return 1.0 / math.sqrt(info)


def _check_support(est: OptimalEstimator, u: np.ndarray) -> None:
    if u.ndim != 1:
        raise ValueError("noise vector must be 1-dimensional")
    if u.shape[0] <= int(est.M[-1]):
        raise ValueError(f"noise vector of length {u.shape[0]} cannot cover support {est.M[-1]}")
    off = np.ones(u.shape[0], dtype=bool)
    off[est.M] = False
    violations = np.abs(u) * off
    if np.any(violations > SUPPORT_TOL):
        bad = int(np.argmax(violations))
        raise ValueError(f"noise vector has mass off the support (coordinate {bad})")
