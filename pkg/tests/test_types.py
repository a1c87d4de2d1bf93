"""Core type behavior: bit strings, parameters, tallies, breakdowns."""

import json

import numpy as np
import pytest

from passiveqkd import (
    Basis,
    BitString,
    HashFamily,
    ParameterError,
    ProtocolParams,
    RateBreakdown,
    SessionTally,
    make_error_rates,
)


def test_basis_other():
    assert Basis.X.other is Basis.Z
    assert Basis.Z.other is Basis.X


def test_hash_family_parse_aliases():
    assert HashFamily.parse("toeplitz") is HashFamily.TOEPLITZ
    assert HashFamily.parse("f1r") is HashFamily.F1R_F2R
    assert HashFamily.parse("f2r") is HashFamily.F1R_F2R
    assert HashFamily.parse("F3R-F4R") is HashFamily.F3R_F4R
    assert HashFamily.parse("f4r") is HashFamily.F3R_F4R
    assert HashFamily.parse("trevisan") is HashFamily.TREVISAN
    assert HashFamily.parse("tssr") is HashFamily.TSSR
    assert HashFamily.parse("pairwise") is HashFamily.EPS_ALMOST_PAIRWISE
    with pytest.raises(ParameterError):
        HashFamily.parse("md5")


def test_bitstring_roundtrips():
    bits = [1, 0, 1, 1, 0, 0, 1, 0, 1]
    b = BitString.from_bits(bits)
    assert len(b) == 9
    assert list(b.to_numpy()) == bits
    assert [b[i] for i in range(9)] == bits
    again = BitString.from_hex(b.to_hex(), 9)
    assert again == b
    assert hash(again) == hash(b)


def test_bitstring_slice_xor_concat():
    rng = np.random.default_rng(11)
    a = BitString.random(40, rng)
    b = BitString.random(40, rng)
    assert a != b
    x = a ^ b
    assert list(x.to_numpy()) == list(a.to_numpy() ^ b.to_numpy())
    assert (a ^ a) == BitString.zeros(40)
    cat = a + b
    assert len(cat) == 80
    assert cat[:40] == a and cat[40:] == b
    assert list(a[3:17].to_numpy()) == list(a.to_numpy()[3:17])


def test_bitstring_zero_length():
    empty = BitString.zeros(0)
    assert len(empty) == 0
    assert empty.to_hex() == ""
    assert empty + empty == empty


def test_bitstring_rejects_dirty_padding():
    # a byte payload with bits set beyond nbits must not be accepted
    with pytest.raises(ParameterError):
        BitString.from_hex("ff", 3)


def test_params_defaults_are_reference_operating_point():
    p = ProtocolParams()
    assert p.dark_count_prob == 1e-6
    assert p.detector_efficiency == 0.40
    assert p.misalignment_error == 0.015
    assert p.ec_efficiency == 1.15
    assert p.basis_reconciliation_factor == 0.5
    assert p.phase_est_failure_prob == 1e-7
    assert p.block_size == 1_000_000
    assert p.extractor_failure_prob == 2.0**-64
    assert p.hash_family is HashFamily.TOEPLITZ
    assert p.channel_loss_db == 0.0


@pytest.mark.parametrize(
    "field,value",
    [
        ("dark_count_prob", -1e-9),
        ("detector_efficiency", 1.5),
        ("misalignment_error", 1.5),
        ("ec_efficiency", 0.99),
        ("mean_pair_number", 0.0),
        ("basis_reconciliation_factor", -0.1),
        ("phase_est_failure_prob", 1.0),
        ("block_size", 0),
        ("extractor_failure_prob", 0.0),
        ("channel_loss_db", -2.0),
    ],
)
def test_params_validation(field, value):
    with pytest.raises(ParameterError):
        ProtocolParams(**{field: value})


def test_params_json_roundtrip():
    p = ProtocolParams(mean_pair_number=0.07, hash_family=HashFamily.TSSR)
    blob = json.dumps(p.to_json_dict())
    assert ProtocolParams.from_json_dict(json.loads(blob)) == p


def test_params_config_text_roundtrip():
    p = ProtocolParams(channel_loss_db=12.5, block_size=2_000_000)
    assert ProtocolParams.from_config_text(p.to_config_text()) == p


def test_params_config_text_comments_and_json_sniffing(tmp_path):
    text = "# comment line\nmean_pair_number = 0.2\n\nhash_family = f3r\n"
    p = ProtocolParams.from_config_text(text)
    assert p.mean_pair_number == 0.2
    assert p.hash_family is HashFamily.F3R_F4R

    path = tmp_path / "params.json"
    path.write_text(json.dumps(ProtocolParams().to_json_dict()))
    assert ProtocolParams.from_file(str(path)) == ProtocolParams()


def test_params_unknown_key_rejected():
    with pytest.raises(ParameterError):
        ProtocolParams.from_config_text("mean_photons = 0.1\n")


def test_error_rates_tilde_maxima():
    r = make_error_rates(0.01, 0.03, 0.05, 0.02)
    assert r.e_b_tilde == 0.03
    assert r.e_p_tilde == 0.05


def test_error_rates_clamped_to_half():
    r = make_error_rates(0.8, 0.0, 1.0, 0.0)
    assert r.e_bx == 0.5
    assert r.e_px_up == 0.5
    with pytest.raises(ParameterError):
        make_error_rates(1.2, 0.0, 0.0, 0.0)


def test_session_tally_identity_enforced():
    SessionTally(n_r=10, n_s=6, n_s_x=2, n_s_z=4, m_x=3, m_z=1, n_double_click=0, n_pulses=100)
    with pytest.raises(ParameterError):
        SessionTally(n_r=10, n_s=6, n_s_x=2, n_s_z=4, m_x=3, m_z=2, n_double_click=0, n_pulses=100)
    with pytest.raises(ParameterError):
        SessionTally(n_r=10, n_s=6, n_s_x=1, n_s_z=4, m_x=3, m_z=1, n_double_click=0, n_pulses=100)


def _breakdown(**overrides):
    base = dict(
        loss_db=10.0,
        mu=0.05,
        family=HashFamily.TOEPLITZ,
        q_gain=1e-3,
        e_qber=0.05,
        n_s=500_000.0,
        h_min_w=350_000.0,
        h_min_kec=200_000.0,
        epsilon=100,
        seed_demand=499_900.0,
        seed_supply=500_000.0,
        n_f_passive=1000,
        n_f_bbm92=1200,
        rate_per_pulse_passive=1e-6,
        rate_per_pulse_bbm92=1.2e-6,
        e_b_tilde=0.05,
        e_p_tilde=0.06,
    )
    base.update(overrides)
    return RateBreakdown(**base)


def test_breakdown_invariants():
    b = _breakdown()
    assert b.deviation_bound == "hoeffding-two-sample"
    with pytest.raises(ParameterError):
        _breakdown(epsilon=-1)
    with pytest.raises(ParameterError):
        _breakdown(n_f_passive=1300)  # passive must not exceed the baseline
    with pytest.raises(ParameterError):
        _breakdown(seed_supply=100.0)  # funded key needs supply >= demand


def test_breakdown_serialization():
    b = _breakdown()
    assert RateBreakdown.from_json_dict(b.to_json_dict()) == b
    row = b.csv_row()
    assert len(row) == 11
    assert row[0] == "10.0"
    assert row[2] == "toeplitz"
    assert all(isinstance(cell, str) for cell in row)
