"""Secure key length accounting for the passive scheme and its baseline.

The pipeline certifies two pools per block: the error-corrected sifted key
(length ``n_s``) and the mismatched-basis outcome pool (length
``n_r - n_s``) whose min-entropy funds the privacy-amplification seed.
Reassigning ``epsilon`` bits from the key into the pool trades final key
length for seed supply; :func:`solve_epsilon` finds the cheapest trade that
covers the configured hash family's budget.

All entropies stay real-valued through the pipeline and are floored to
integers only at the final key-length outputs.
"""

from __future__ import annotations

import math

from .channel import coincidence_gain_qber, derive_channel
from .types import ErrorRates, HashFamily, ParameterError, ProtocolParams, RateBreakdown, make_error_rates

__all__ = [
    "binary_entropy",
    "phase_error_upper_bound",
    "key_length_basis",
    "key_length_total",
    "min_entropy_mismatched_per_basis",
    "min_entropy_mismatched_aggregate",
    "min_entropy_error_corrected",
    "seed_requirement",
    "reassignment_demand",
    "solve_epsilon",
    "passive_final_key_length",
    "rate_point",
]


def binary_entropy(x: float) -> float:
    """Binary entropy H2(x) in bits, with H2(0) = H2(1) = 0.

    :raises ParameterError: if x is outside [0, 1].
    """
    if not 0.0 <= x <= 1.0:
        raise ParameterError(f"binary_entropy domain is [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def phase_error_upper_bound(
    e_obs: float, n_obs: float, n_target: float, eps_ph: float
) -> float:
    """Upper-bound the phase error of one pool from the bit errors of the other.

    Random sampling without replacement between two pools of sizes
    ``n_obs`` (where the error rate was measured) and ``n_target`` (where it
    is to be bounded) deviates by more than

        theta = sqrt((n_obs + n_target) ln(1/eps_ph) / (2 n_obs n_target))

    with probability below ``eps_ph``, so the bound is ``e_obs + theta``,
    clamped to one half.
    """
    if not 0.0 <= e_obs <= 0.5:
        raise ParameterError("e_obs must lie in [0, 0.5]")
    if n_obs < 1 or n_target < 1:
        raise ParameterError("pool sizes must be at least 1")
    if not 0.0 < eps_ph < 1.0:
        raise ParameterError("eps_ph must lie in (0, 1)")
    theta = math.sqrt(
        (n_obs + n_target) * math.log(1.0 / eps_ph) / (2.0 * n_obs * n_target)
    )
    return min(0.5, e_obs + theta)


def key_length_basis(n_s_basis: float, e_p_up: float, e_b: float, f: float) -> float:
    """Extractable key (real-valued bits) from one basis of the sifted pool."""
    if n_s_basis < 0:
        raise ParameterError("n_s_basis must be non-negative")
    return max(0.0, n_s_basis * (1.0 - binary_entropy(e_p_up) - f * binary_entropy(e_b)))


def key_length_total(n_f_x: float, n_f_z: float) -> float:
    return n_f_x + n_f_z


def min_entropy_mismatched_per_basis(
    m_x: float, m_z: float, e_pz_up: float, e_px_up: float
) -> float:
    """Min-entropy of the mismatched pool, split by measurement basis.

    Mismatched X outcomes are bounded through the Z-basis phase bound and
    vice versa, hence the crossed argument order.
    """
    return m_x * (1.0 - binary_entropy(e_pz_up)) + m_z * (1.0 - binary_entropy(e_px_up))


def min_entropy_mismatched_aggregate(n_r: float, n_s: float, e_p_tilde: float) -> float:
    """Single-pool form of the mismatched min-entropy, using the worst-case bound."""
    if n_s > n_r:
        raise ParameterError("n_s cannot exceed n_r")
    return (n_r - n_s) * (1.0 - binary_entropy(e_p_tilde))


def min_entropy_error_corrected(
    n_s: float, e_p_tilde: float, e_b_tilde: float, f: float
) -> float:
    """Min-entropy of the error-corrected key given the public transcript."""
    if n_s < 0:
        raise ParameterError("n_s must be non-negative")
    return max(
        0.0,
        n_s * (1.0 - binary_entropy(e_p_tilde) - f * binary_entropy(e_b_tilde)),
    )


def seed_requirement(family: HashFamily, n_s: float, n_f: float) -> float:
    """Seed bits the hash family consumes to compress ``n_s`` bits to ``n_f``.

    Budgets per family: F1R/F2R need ``n_s - n_f``, F3R/F4R need ``n_f``,
    a Toeplitz matrix is budgeted at ``n_s``, Trevisan's extractor at
    ``ceil(log2(n_s)**3)`` (zero for ``n_s`` of 0 or 1), the TSSR family at
    ``2 n_f`` and epsilon-almost pairwise independent hashing at ``4 n_f``.
    """
    if n_f < 0 or n_s < 0:
        raise ParameterError("lengths must be non-negative")
    if n_f > n_s:
        raise ParameterError("output cannot exceed input length")
    if family is HashFamily.F1R_F2R:
        return n_s - n_f
    if family is HashFamily.F3R_F4R:
        return n_f
    if family is HashFamily.TOEPLITZ:
        return n_s
    if family is HashFamily.TREVISAN:
        return 0.0 if n_s <= 1 else float(math.ceil(math.log2(n_s) ** 3))
    if family is HashFamily.TSSR:
        return 2.0 * n_f
    if family is HashFamily.EPS_ALMOST_PAIRWISE:
        return 4.0 * n_f
    raise ParameterError(f"unhandled hash family: {family}")


def reassignment_demand(family: HashFamily, n_s: float, n_f: float) -> float:
    """Seed demand as the reassignment solve charges it.

    Identical to :func:`seed_requirement` except that an empty key demands
    nothing: with no bits to hash there is no extraction step.  The Toeplitz
    family is the exception, budgeted at the input length regardless.
    """
    if n_f <= 0.0 and family is not HashFamily.TOEPLITZ:
        return 0.0
    return seed_requirement(family, n_s, n_f)


def _epsilon_sufficient(
    eps: int, n_r: float, n_s: float, rates: ErrorRates, f: float, family: HashFamily
) -> bool:
    supply = (n_r - n_s + eps) * (1.0 - binary_entropy(rates.e_p_tilde))
    n_f = max(
        0.0,
        (n_s - eps)
        * (1.0 - binary_entropy(rates.e_p_tilde) - f * binary_entropy(rates.e_b_tilde)),
    )
    return supply >= reassignment_demand(family, n_s - eps, n_f)


def solve_epsilon(
    n_r: float, n_s: float, rates: ErrorRates, f: float, family: HashFamily
) -> int:
    """Smallest integer reassignment that funds the family's seed budget.

    The certified supply ``(n_r - n_s + eps)(1 - H2(e_p_tilde))`` grows with
    ``eps`` while every family's demand shrinks, so the feasibility predicate
    is monotone and bisection is exact.  ``eps = n_s`` always satisfies the
    budget (the key is then empty), so a solution exists whenever the inputs
    are well-formed.
    """
    if n_s < 0 or n_s > n_r:
        raise ParameterError("need 0 <= n_s <= n_r")
    if f < 1.0:
        raise ParameterError("f must be at least 1")
    lo, hi = 0, int(math.floor(n_s))
    if _epsilon_sufficient(lo, n_r, n_s, rates, f, family):
        return lo
    while lo < hi:
        mid = (lo + hi) // 2
        if _epsilon_sufficient(mid, n_r, n_s, rates, f, family):
            hi = mid
        else:
            lo = mid + 1
    return lo


def passive_final_key_length(
    n_s: float, epsilon: int, rates: ErrorRates, f: float
) -> float:
    """Final passive key (real-valued bits) after reassigning ``epsilon`` bits."""
    if not 0 <= epsilon <= n_s:
        raise ParameterError("epsilon must lie in [0, n_s]")
    return max(
        0.0,
        (n_s - epsilon)
        * (1.0 - binary_entropy(rates.e_p_tilde) - f * binary_entropy(rates.e_b_tilde)),
    )


def rate_point(params: ProtocolParams) -> RateBreakdown:
    """Evaluate passive and baseline key rates at one channel configuration.

    One post-processing block holds ``block_size`` raw detections, of which
    a fraction ``q`` (the basis reconciliation factor) is sifted key and the
    rest is the mismatched pool, split evenly between bases.  Expected-value
    tallies are used throughout; the Monte Carlo sessions in
    :mod:`passiveqkd.session` reproduce them statistically.
    """
    ch = derive_channel(params)
    gq = coincidence_gain_qber(ch, params.misalignment_error)
    q = params.basis_reconciliation_factor
    f = params.ec_efficiency
    n_r = float(params.block_size)
    n_s = q * n_r
    n_s_x = n_s_z = n_s / 2.0
    e_b = gq.qber

    if n_s_x >= 1.0 and n_s_z >= 1.0:
        e_px_up = phase_error_upper_bound(e_b, n_s_z, n_s_x, params.phase_est_failure_prob)
        e_pz_up = phase_error_upper_bound(e_b, n_s_x, n_s_z, params.phase_est_failure_prob)
    else:
        e_px_up = e_pz_up = 0.5
    rates = make_error_rates(e_b, e_b, e_px_up, e_pz_up)

    epsilon = solve_epsilon(n_r, n_s, rates, f, params.hash_family)
    n_f_passive_real = passive_final_key_length(n_s, epsilon, rates, f)
    n_f_bbm92_real = key_length_total(
        key_length_basis(n_s_x, rates.e_px_up, rates.e_bx, f),
        key_length_basis(n_s_z, rates.e_pz_up, rates.e_bz, f),
    )
    n_f_passive = math.floor(n_f_passive_real)
    n_f_bbm92 = math.floor(n_f_bbm92_real)

    supply = (n_r - n_s + epsilon) * (1.0 - binary_entropy(rates.e_p_tilde))
    demand = reassignment_demand(params.hash_family, n_s - epsilon, n_f_passive_real)

    def per_pulse(n_f: int) -> float:
        return (n_f / n_s) * q * gq.gain if n_s > 0 else 0.0

    if gq.gain <= 0.0:
        status = "no-gain"
    elif n_f_passive == 0:
        status = "no-key"
    else:
        status = "ok"

    return RateBreakdown(
        loss_db=params.channel_loss_db,
        mu=params.mean_pair_number,
        family=params.hash_family,
        q_gain=gq.gain,
        e_qber=gq.qber,
        n_s=n_s,
        h_min_w=min_entropy_mismatched_aggregate(n_r, n_s, rates.e_p_tilde),
        h_min_kec=min_entropy_error_corrected(n_s, rates.e_p_tilde, rates.e_b_tilde, f),
        epsilon=epsilon,
        seed_demand=demand,
        seed_supply=supply,
        n_f_passive=n_f_passive,
        n_f_bbm92=n_f_bbm92,
        rate_per_pulse_passive=per_pulse(n_f_passive),
        rate_per_pulse_bbm92=per_pulse(n_f_bbm92),
        e_b_tilde=rates.e_b_tilde,
        e_p_tilde=rates.e_p_tilde,
        status=status,
    )
