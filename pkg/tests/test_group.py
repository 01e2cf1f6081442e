import random

import pytest
from scipy.stats import chisquare

from apake.errors import DecodeError, DomainError, OracleUnavailable, SearchExhausted
from apake.group import (
    ENUM_LIMIT,
    GroupParams,
    Pair,
    enumerate_L,
    generate_group,
    is_in_L,
    powmod,
    sample_L,
    sample_X_minus_L,
    sqrt_in_G,
    square_pair,
    subgroup_elements,
)
from conftest import StubRandom


def trial_division_prime(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def test_toy_group_is_23_11(toy_gp):
    # independent of the library's primality code: trial division at toy size
    assert toy_gp.p == 23 and toy_gp.q == 11
    assert trial_division_prime(toy_gp.p) and trial_division_prime(toy_gp.q)
    assert toy_gp.p == 2 * toy_gp.q + 1
    squares = {v * v % 23 for v in range(1, 23)}
    assert toy_gp.g1 in squares and toy_gp.g2 in squares
    assert toy_gp.g1 != toy_gp.g2


def test_generate_group_deterministic():
    a = generate_group(16, b"same-seed")
    b = generate_group(16, b"same-seed")
    assert a == b
    c = generate_group(16, b"other-seed")
    assert c.q != a.q or c.g1 != a.g1


@pytest.mark.parametrize("bits,seed", [(4, b"s1"), (8, b"s2"), (16, b"s3"), (24, b"s4")])
def test_generator_order(bits, seed):
    gp = generate_group(bits, seed)
    gp.validate()
    for g in (gp.g1, gp.g2):
        assert g != 1
        assert powmod(g, gp.q, gp.p) == 1


def test_generate_group_rejects_small_bits():
    with pytest.raises(DomainError):
        generate_group(3, b"x")


def test_search_exhaustion():
    with pytest.raises(SearchExhausted):
        generate_group(16, b"whatever", max_iter=1)


def test_rfc3526_group_structure(demo_gp):
    assert demo_gp.p.bit_length() == 2048
    assert demo_gp.p == 2 * demo_gp.q + 1
    assert powmod(demo_gp.g1, demo_gp.q, demo_gp.p) == 1
    assert powmod(demo_gp.g2, demo_gp.q, demo_gp.p) == 1


def test_sample_L_defining_relation(toy_gp):
    rng = random.Random(5)
    for _ in range(50):
        x, r = sample_L(toy_gp, rng)
        assert x.u1 == powmod(toy_gp.g1, r, toy_gp.p)
        assert x.u2 == powmod(toy_gp.g2, r, toy_gp.p)
        assert 0 <= r < toy_gp.q


def test_sample_L_identity_exponent(toy_gp):
    x, r = sample_L(toy_gp, StubRandom([0]))
    assert r == 0 and x == Pair(1, 1)


def test_sample_L_uniform_chi2(toy_gp):
    rng = random.Random(11)
    counts = {}
    for _ in range(100_000):
        x, _ = sample_L(toy_gp, rng)
        counts[x] = counts.get(x, 0) + 1
    support = list(enumerate_L(toy_gp))
    assert sorted(counts.keys()) == sorted(support)
    stat, pvalue = chisquare(list(counts.values()))
    assert pvalue > 1e-6


def test_sample_X_minus_L_postcondition(toy_gp):
    rng = random.Random(6)
    for _ in range(200):
        x = sample_X_minus_L(toy_gp, rng)
        assert not is_in_L(toy_gp, x)


def test_sample_X_minus_L_support(toy_gp):
    # |X \ L| = q^2 - q = 110 at p=23; enough draws must hit all of it
    rng = random.Random(7)
    seen = {sample_X_minus_L(toy_gp, rng) for _ in range(20_000)}
    assert len(seen) == toy_gp.q * toy_gp.q - toy_gp.q
    in_l = set(enumerate_L(toy_gp))
    assert not (seen & in_l)


def test_L_strict_subset_counts(toy_gp):
    gp = toy_gp
    L = set(enumerate_L(gp))
    X = {Pair(powmod(gp.g1, r1, gp.p), powmod(gp.g2, r2, gp.p))
         for r1 in range(gp.q) for r2 in range(gp.q)}
    assert len(L) == gp.q
    assert len(X) == gp.q ** 2
    assert L < X


def test_subgroup_closure_exhaustive(toy_gp):
    gp = toy_gp
    G = set(subgroup_elements(gp))
    assert len(G) == gp.q
    for a in G:
        for b in G:
            assert a * b % gp.p in G
        for e in range(gp.q):
            assert powmod(a, e, gp.p) in G


def test_is_in_L_cases(toy_gp):
    gp = toy_gp
    assert is_in_L(gp, Pair(powmod(gp.g1, 3, gp.p), powmod(gp.g2, 3, gp.p)))
    assert not is_in_L(gp, Pair(powmod(gp.g1, 3, gp.p), powmod(gp.g2, 4, gp.p)))
    assert is_in_L(gp, Pair(1, 1))


def test_is_in_L_rejects_non_group_component(toy_gp):
    # 5 is not a quadratic residue mod 23
    assert not is_in_L(toy_gp, Pair(5, 1))


def test_enumeration_oracles_unavailable_at_scale(demo_gp):
    with pytest.raises(OracleUnavailable):
        is_in_L(demo_gp, Pair(1, 1))
    with pytest.raises(OracleUnavailable):
        subgroup_elements(demo_gp)
    assert demo_gp.q > ENUM_LIMIT


def test_sqrt_in_G(toy_gp):
    gp = toy_gp
    assert sqrt_in_G(gp, 1) == 1
    s = sqrt_in_G(gp, 4)
    assert s == powmod(4, 6, 23)
    assert s in (2, 21) and s * s % 23 == 4
    for y in subgroup_elements(gp):
        r = sqrt_in_G(gp, y)
        assert r * r % gp.p == y


def test_sqrt_domain_error(toy_gp):
    with pytest.raises(DomainError):
        sqrt_in_G(toy_gp, 5)  # non-residue


def test_square_pair(toy_gp):
    gp = toy_gp
    assert square_pair(gp, Pair(1, 1)) == Pair(1, 1)
    rng = random.Random(8)
    for _ in range(100):
        yp = Pair(rng.randrange(1, gp.p), rng.randrange(1, gp.p))
        sq = square_pair(gp, yp)
        assert powmod(sq.u1, gp.q, gp.p) == 1
        assert powmod(sq.u2, gp.q, gp.p) == 1
    for a in subgroup_elements(gp):
        for b in subgroup_elements(gp):
            roots = Pair(sqrt_in_G(gp, a), sqrt_in_G(gp, b))
            assert square_pair(gp, roots) == Pair(a, b)


def test_square_pair_range_check(toy_gp):
    with pytest.raises(DomainError):
        square_pair(toy_gp, Pair(0, 1))


def test_element_encoding(bench_gp):
    gp = bench_gp
    rng = random.Random(9)
    for _ in range(200):
        v = rng.randrange(1, gp.p)
        enc = gp.encode_element(v)
        assert len(enc) == gp.element_width
        assert gp.decode_element(enc) == v
    with pytest.raises(DomainError):
        gp.encode_element(0)
    with pytest.raises(DecodeError):
        gp.decode_element(b"\x00" * gp.element_width)
    with pytest.raises(DecodeError):
        gp.decode_element(gp.p.to_bytes(gp.element_width, "big"))
    with pytest.raises(DecodeError):
        gp.decode_element(b"\x01")


def test_group_params_serialization(toy_gp, bench_gp, demo_gp):
    for gp in (toy_gp, bench_gp, demo_gp):
        blob = gp.to_bytes()
        back = GroupParams.from_bytes(blob)
        assert back == gp
    with pytest.raises(DecodeError):
        GroupParams.from_bytes(toy_gp.to_bytes()[:-1])
    with pytest.raises(DecodeError):
        GroupParams.from_bytes(toy_gp.to_bytes() + b"\x00")
