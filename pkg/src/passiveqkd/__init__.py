"""Passively seeded entanglement QKD: certified rates, sessions, extraction."""

from .channel import (
    ChannelDerived,
    ClickStatus,
    GainQber,
    WindowBatch,
    WindowOutcome,
    coincidence_gain_qber,
    coincidence_gain_qber_closed,
    derive_channel,
    pair_number_pmf,
    pair_number_tail,
    sample_window,
    sample_window_batch,
    truncation_order,
)
from .optimize import MuOptimum, optimize_mu, sweep_loss
from .rates import (
    binary_entropy,
    key_length_basis,
    key_length_total,
    min_entropy_error_corrected,
    min_entropy_mismatched_aggregate,
    min_entropy_mismatched_per_basis,
    passive_final_key_length,
    phase_error_upper_bound,
    rate_point,
    reassignment_demand,
    seed_requirement,
    solve_epsilon,
)
from .session import ClassicalMessage, SessionResult, run_session
from .toeplitz import (
    ToeplitzSpec,
    extract_local_randomness,
    gf2_convolve,
    modified_toeplitz_hash,
    toeplitz_hash,
)
from .types import (
    CSV_COLUMNS,
    Basis,
    BitString,
    ErrorRates,
    HashFamily,
    ParameterError,
    ProtocolParams,
    RateBreakdown,
    SessionTally,
    make_error_rates,
)

__version__ = "0.1.0"

__all__ = [
    "Basis",
    "BitString",
    "CSV_COLUMNS",
    "ChannelDerived",
    "ClassicalMessage",
    "ClickStatus",
    "ErrorRates",
    "GainQber",
    "HashFamily",
    "MuOptimum",
    "ParameterError",
    "ProtocolParams",
    "RateBreakdown",
    "SessionResult",
    "SessionTally",
    "ToeplitzSpec",
    "WindowBatch",
    "WindowOutcome",
    "binary_entropy",
    "coincidence_gain_qber",
    "coincidence_gain_qber_closed",
    "derive_channel",
    "extract_local_randomness",
    "gf2_convolve",
    "key_length_basis",
    "key_length_total",
    "make_error_rates",
    "min_entropy_error_corrected",
    "min_entropy_mismatched_aggregate",
    "min_entropy_mismatched_per_basis",
    "modified_toeplitz_hash",
    "optimize_mu",
    "pair_number_pmf",
    "pair_number_tail",
    "passive_final_key_length",
    "phase_error_upper_bound",
    "rate_point",
    "reassignment_demand",
    "run_session",
    "sample_window",
    "sample_window_batch",
    "seed_requirement",
    "solve_epsilon",
    "sweep_loss",
    "toeplitz_hash",
    "truncation_order",
    "__version__",
]
