import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bitscan.core import BinaryCode, pack_bits
from bitscan.errors import DimensionMismatch
from bitscan.kernel import batch_hamming, hamming, its_score, its_scores

from oracles import naive_hamming


def random_codes(rng, n, dim):
    return pack_bits(rng.integers(0, 2, size=(n, dim)).astype(bool))


def test_hamming_word_example():
    # independent bit loop: 0xFF00 ^ 0x0F0F = 0xF00F, eight set bits
    a = BinaryCode([0xFF00], 16)
    b = BinaryCode([0x0F0F], 16)
    assert naive_hamming(a, b, 16) == 8
    assert hamming(a, b) == 8


def test_hamming_identity_and_complement(rng):
    bits = rng.integers(0, 2, size=200).astype(bool)
    a = BinaryCode.from_bits(bits)
    assert hamming(a, a) == 0
    assert hamming(a, BinaryCode.from_bits(~bits)) == 200


def test_hamming_dim_mismatch():
    with pytest.raises(DimensionMismatch):
        hamming(BinaryCode([0], 8), BinaryCode([0], 9))


def test_its_unit_weights_reduce_to_agreement():
    a = BinaryCode.from_bits([1, 0, 1, 1])
    b = BinaryCode.from_bits([1, 0, 1, 0])
    assert its_score(a, b, [1, 1, 1, 1]) == 3.0


def test_its_zero_weights(rng):
    for _ in range(10):
        a = BinaryCode.from_bits(rng.integers(0, 2, 33))
        b = BinaryCode.from_bits(rng.integers(0, 2, 33))
        assert its_score(a, b, np.zeros(33)) == 0.0


def test_its_two_dim_brute_force():
    w = [0.5, 0.25]
    # enumerate all 4 bit pairs per dimension and keep the pattern "agree only at 1"
    for qa in range(4):
        for da in range(4):
            qb = [(qa >> i) & 1 for i in range(2)]
            db = [(da >> i) & 1 for i in range(2)]
            expected = sum(w[i] for i in range(2) if qb[i] == db[i])
            assert its_score(BinaryCode.from_bits(qb), BinaryCode.from_bits(db), w) == expected
    assert its_score(BinaryCode.from_bits([1, 0]), BinaryCode.from_bits([0, 0]), w) == 0.25


def test_its_range(rng):
    w = rng.random(100)
    for _ in range(20):
        a = BinaryCode.from_bits(rng.integers(0, 2, 100))
        b = BinaryCode.from_bits(rng.integers(0, 2, 100))
        assert 0.0 <= its_score(a, b, w) <= w.sum() + 1e-12


def test_its_scores_matches_scalar(rng):
    codes = random_codes(rng, 30, 90)
    q = BinaryCode(codes[0], 90)
    w = rng.random(90)
    batch = its_scores(q, codes, w)
    for j in range(30):
        assert batch[j] == its_score(q, BinaryCode(codes[j], 90), w)


def test_its_dimension_checks():
    q = BinaryCode.from_bits([1, 0, 1])
    with pytest.raises(DimensionMismatch):
        its_score(q, q, [1.0, 1.0])


def test_batch_small_block(rng):
    codes = random_codes(rng, 3, 77)
    q = BinaryCode.from_bits(rng.integers(0, 2, 77))
    out = np.empty(3, dtype=np.int64)
    batch_hamming(q, codes, out)
    assert out.tolist() == [hamming(q, BinaryCode(c, 77)) for c in codes]


def test_batch_empty_block():
    q = BinaryCode.from_bits([1] * 10)
    out = np.empty(0, dtype=np.int64)
    batch_hamming(q, np.empty((0, 1), dtype=np.uint64), out)
    assert out.shape == (0,)


def test_batch_dim_mismatch(rng):
    q = BinaryCode.from_bits([1] * 70)
    with pytest.raises(DimensionMismatch):
        batch_hamming(q, random_codes(rng, 4, 60), np.empty(4, dtype=np.int64))


def test_batch_threaded_equals_serial(rng, monkeypatch):
    import bitscan.kernel as kernel

    monkeypatch.setattr(kernel, "BLOCK_ROWS", 7)
    codes = random_codes(rng, 100, 200)
    q = BinaryCode.from_bits(rng.integers(0, 2, 200))
    serial = np.empty(100, dtype=np.int64)
    threaded = np.empty(100, dtype=np.int64)
    batch_hamming(q, codes, serial, threads=1)
    batch_hamming(q, codes, threaded, threads=4)
    assert serial.tolist() == threaded.tolist()
    other = np.empty(100, dtype=np.int32)
    batch_hamming(q, codes, other)
    assert other.tolist() == serial.tolist()


def test_resolve_threads(monkeypatch):
    from bitscan.kernel import resolve_threads

    monkeypatch.setenv("BITSCAN_THREADS", "3")
    assert resolve_threads() == 3
    monkeypatch.setenv("BITSCAN_THREADS", "0")
    assert resolve_threads() >= 1


def test_metric_axioms_on_random_triples(rng):
    dim = 300
    codes = [BinaryCode(c, dim) for c in random_codes(rng, 3000, dim)]
    for i in range(1000):
        a, b, c = codes[3 * i : 3 * i + 3]
        assert hamming(a, a) == 0
        assert hamming(a, b) == hamming(b, a)
        assert hamming(a, c) <= hamming(a, b) + hamming(b, c)


def test_popcount_identity(rng):
    codes = random_codes(rng, 50, 129)
    for i in range(0, 50, 2):
        a, b = BinaryCode(codes[i], 129), BinaryCode(codes[i + 1], 129)
        per_word = sum(bin(int(x) ^ int(y)).count("1") for x, y in zip(a.words, b.words))
        assert hamming(a, b) == per_word == naive_hamming(a, b, 129)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 200), st.floats(0.01, 10.0), st.integers(0, 2**31))
def test_uniform_weight_order_matches_hamming(dim, w, seed):
    r = np.random.default_rng(seed)
    codes = pack_bits(r.integers(0, 2, size=(40, dim)).astype(bool))
    q = BinaryCode.from_bits(r.integers(0, 2, dim))
    dist = np.empty(40, dtype=np.int64)
    batch_hamming(q, codes, dist)
    scores = its_scores(q, codes, np.full(dim, w))
    by_ham = np.lexsort((np.arange(40), dist))
    by_its = np.lexsort((np.arange(40), -scores))
    assert by_ham.tolist() == by_its.tolist()
    # tie structure: equal distance <=> equal score
    assert all((dist[i] == dist[j]) == (scores[i] == scores[j]) for i in range(40) for j in range(40))
