"""GF(2) hashing layer: convolution core, Toeplitz maps, local extraction."""

import numpy as np
import pytest

from passiveqkd import (
    BitString,
    ParameterError,
    ToeplitzSpec,
    extract_local_randomness,
    gf2_convolve,
    modified_toeplitz_hash,
    toeplitz_hash,
)


def _bits(bs: BitString) -> list:
    return [int(b) for b in bs.to_numpy()]


def _naive_toeplitz(seed_bits, in_bits, n_out):
    """Explicit matrix-vector product; T[i][j] = seed[i - j + n_in - 1]."""
    n_in = len(in_bits)
    out = []
    for i in range(n_out):
        acc = 0
        for j in range(n_in):
            acc ^= seed_bits[i - j + n_in - 1] & in_bits[j]
        out.append(acc)
    return out


def test_gf2_convolve_matches_numpy():
    rng = np.random.default_rng(5)
    for _ in range(30):
        a = rng.integers(0, 2, size=int(rng.integers(1, 64)), dtype=np.uint8)
        b = rng.integers(0, 2, size=int(rng.integers(1, 64)), dtype=np.uint8)
        want = np.convolve(a, b) % 2
        got = gf2_convolve(BitString.from_bits(a), BitString.from_bits(b))
        assert got.dtype == np.uint8
        assert np.array_equal(got, want)


def test_gf2_convolve_empty():
    empty = BitString.zeros(0)
    one = BitString.from_bits([1])
    assert gf2_convolve(empty, one).size == 0
    assert gf2_convolve(one, empty).size == 0


def test_toeplitz_hash_zero_seed():
    spec = ToeplitzSpec(n_in=8, n_out=5, seed=BitString.zeros(12))
    out = toeplitz_hash(spec, BitString.from_bits([1, 0, 1, 1, 0, 1, 1, 1]))
    assert _bits(out) == [0, 0, 0, 0, 0]


def test_toeplitz_hash_identity_1x1():
    spec = ToeplitzSpec(n_in=1, n_out=1, seed=BitString.from_bits([1]))
    assert _bits(toeplitz_hash(spec, BitString.from_bits([1]))) == [1]
    assert _bits(toeplitz_hash(spec, BitString.from_bits([0]))) == [0]


def test_toeplitz_hash_exhaustive_small():
    """Every seed and every input for n_in=3, n_out=2 against the matrix oracle."""
    n_in, n_out = 3, 2
    for seed_val in range(2 ** (n_in + n_out - 1)):
        seed_bits = [(seed_val >> k) & 1 for k in range(n_in + n_out - 1)]
        spec = ToeplitzSpec(n_in=n_in, n_out=n_out, seed=BitString.from_bits(seed_bits))
        for in_val in range(2**n_in):
            in_bits = [(in_val >> k) & 1 for k in range(n_in)]
            got = _bits(toeplitz_hash(spec, BitString.from_bits(in_bits)))
            assert got == _naive_toeplitz(seed_bits, in_bits, n_out)


def test_toeplitz_hash_linearity():
    rng = np.random.default_rng(6)
    n_in, n_out = 2000, 500
    seed = BitString.random(n_in + n_out - 1, rng)
    spec = ToeplitzSpec(n_in=n_in, n_out=n_out, seed=seed)
    for _ in range(20):
        a = BitString.random(n_in, rng)
        b = BitString.random(n_in, rng)
        assert toeplitz_hash(spec, a ^ b) == toeplitz_hash(spec, a) ^ toeplitz_hash(spec, b)


def test_toeplitz_spec_validation():
    with pytest.raises(ParameterError):
        ToeplitzSpec(n_in=4, n_out=5, seed=BitString.zeros(8))
    with pytest.raises(ParameterError):
        ToeplitzSpec(n_in=4, n_out=2, seed=BitString.zeros(4))  # needs 5 bits


def _naive_modified(data_bits, seed_bits, n_out):
    """[identity | Toeplitz] applied to (head, tail) halves of the input."""
    tail = data_bits[n_out:]
    mixed = _naive_toeplitz(seed_bits, tail, n_out) if tail else [0] * n_out
    return [data_bits[i] ^ mixed[i] for i in range(n_out)]


def test_modified_toeplitz_edges():
    rng = np.random.default_rng(7)
    data = BitString.random(40, rng)
    assert len(modified_toeplitz_hash(data, 0, BitString.zeros(39))) == 0
    assert modified_toeplitz_hash(data, 40, BitString.zeros(39)) == data


def test_modified_toeplitz_matches_naive():
    rng = np.random.default_rng(8)
    for _ in range(40):
        n = int(rng.integers(1, 12))
        n_out = int(rng.integers(0, n + 1))
        data = [int(x) for x in rng.integers(0, 2, n)]
        seed = [int(x) for x in rng.integers(0, 2, max(0, n - 1))]
        got = _bits(
            modified_toeplitz_hash(BitString.from_bits(data), n_out, BitString.from_bits(seed))
        )
        # the oracle reads the leading tail_len + n_out - 1 seed taps
        tail_len = n - n_out
        if tail_len:
            want = _naive_modified(data, seed[: tail_len + n_out - 1], n_out)
        else:
            want = data[:n_out]
        assert got == want


def test_modified_toeplitz_seed_length():
    data = BitString.zeros(10)
    with pytest.raises(ParameterError):
        modified_toeplitz_hash(data, 4, BitString.zeros(3))


def test_extract_empty_cases():
    rng = np.random.default_rng(9)
    pool = BitString.random(64, rng)
    out = extract_local_randomness(pool, 0.0, BitString.zeros(0), 2.0**-64)
    assert len(out) == 0
    # entropy too small to survive the leftover-hash penalty
    out = extract_local_randomness(pool, 10.0, BitString.zeros(0), 2.0**-64)
    assert len(out) == 0


def test_extract_output_length():
    rng = np.random.default_rng(10)
    pool = BitString.random(2000, rng)
    n_out = 1128 - 128  # h_min minus twice the 64-bit failure exponent
    seed = BitString.random(len(pool) + n_out - 1, rng)
    out = extract_local_randomness(pool, 1128.0, seed, 2.0**-64)
    assert len(out) == 1000


def test_extract_validation():
    rng = np.random.default_rng(11)
    pool = BitString.random(100, rng)
    with pytest.raises(ParameterError):
        extract_local_randomness(pool, 101.0, BitString.zeros(0), 2.0**-64)
    with pytest.raises(ParameterError):
        extract_local_randomness(pool, 50.0, BitString.zeros(0), 1.5)
    big = BitString.random(300, rng)
    with pytest.raises(ParameterError):
        # n_out = 72, so the seed must hold 300 + 72 - 1 bits
        extract_local_randomness(big, 200.0, BitString.zeros(3), 2.0**-64)


def test_extract_deterministic():
    rng = np.random.default_rng(12)
    pool = BitString.random(512, rng)
    n_out = 256 - 128
    seed = BitString.random(512 + n_out - 1, rng)
    a = extract_local_randomness(pool, 256.0, seed, 2.0**-64)
    b = extract_local_randomness(pool, 256.0, seed, 2.0**-64)
    assert a == b and len(a) == n_out


def test_extract_statistical_sanity():
    """Aggregate bit mean over many extractions sits near one half."""
    rng = np.random.default_rng(13)
    ones = 0
    total = 0
    for _ in range(200):
        pool = BitString.random(256, rng)
        seed = BitString.random(256 + 64 - 1, rng)
        out = extract_local_randomness(pool, 192.0, seed, 2.0**-64)
        assert len(out) == 64
        ones += int(out.to_numpy().sum())
        total += len(out)
    assert 0.45 <= ones / total <= 0.55
