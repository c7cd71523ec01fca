"""Black-box query attacks on linear sketches for l2-norm estimation.

The package provides the sketching matrices under attack, the query
distribution, the optimal signal estimator the attack is measured
against, responder implementations, the attack loop itself, and an
empirical validation suite, all driven by explicit 64-bit seeds.
"""

from .analysis import (
    affine_orthogonalize,
    check_norm_signal_gap,
    estimate_psi,
    fragility_report,
    measure_gain,
    noise_norm_concentration,
    sigma_T_profile,
    signed_sum_bound_check,
)
from .attack import (
    AttackOutcome,
    AttackTranscript,
    deviation_trace,
    evaluate_attack,
    load_transcript,
    run_attack,
    run_lightweight_attack,
    save_transcript,
)
from .estimator import (
    OptimalEstimator,
    build_optimal,
    deviation,
    estimate_signal,
    is_adversarial,
    sigma_T_via_characterization,
)
from .queries import (
    NoiseSpec,
    QuerySpec,
    QueryVector,
    gap_label,
    sample_noise,
    sample_query,
    sample_signal,
    signal_pdf,
    spec_from_json,
    spec_to_json,
)
from .responders import (
    GapResponse,
    OptimalGapResponder,
    RandomSignResponder,
    RobustResponder,
    StandardResponder,
    gap_from_estimate,
    measure_err,
    optimal_gap_responder,
    robust_estimate,
    standard_estimate,
)
from .sketches import (
    SketchMatrix,
    apply,
    load_matrix,
    make_explicit,
    sample_ams,
    sample_jl,
    save_matrix,
    spectral_norm,
)
from .streams import derive_seed, stream

__version__ = "0.1.0"
