import random

import pytest
from scipy.stats import chisquare

from apake.errors import DomainError, OracleUnavailable
from apake.group import Pair, powmod, sample_L, subgroup_elements
from apake.hashproof import (
    PhfSecretKey,
    Projection,
    hash_private,
    hash_public,
    keygen,
    prehash,
    project,
    verify_local_1_uniqueness,
    verify_universal2_exhaustive,
)
from apake.primitives import hash_to_zq, kdf
from conftest import StubRandom


def test_keygen_zero_key_projects_to_identity(toy_pp):
    sk, proj = keygen(toy_pp, StubRandom([0, 0, 0, 0]))
    assert sk == PhfSecretKey(0, 0, 0, 0)
    assert proj == Projection(1, 1)


def test_keygen_projection_recomputes(bench_pp):
    gp = bench_pp.gp
    rng = random.Random(29)
    for _ in range(20):
        sk, proj = keygen(bench_pp, rng)
        assert proj.theta1 == powmod(gp.g1, sk.a1, gp.p) * powmod(gp.g2, sk.a2, gp.p) % gp.p
        assert proj.theta2 == powmod(gp.g1, sk.b1, gp.p) * powmod(gp.g2, sk.b2, gp.p) % gp.p


def test_keygen_covers_key_space_chi2(toy_pp):
    rng = random.Random(31)
    counts = {}
    for _ in range(100_000):
        sk, _ = keygen(toy_pp, rng)
        counts[sk.as_tuple()] = counts.get(sk.as_tuple(), 0) + 1
    q = toy_pp.gp.q
    observed = list(counts.values()) + [0] * (q ** 4 - len(counts))
    _, pvalue = chisquare(observed)
    assert pvalue > 1e-6


def test_hash_private_zero_key(toy_pp):
    gp = toy_pp.gp
    rng = random.Random(33)
    sk = PhfSecretKey(0, 0, 0, 0)
    for _ in range(20):
        x = Pair(rng.randrange(1, gp.p), rng.randrange(1, gp.p))
        expected = kdf(gp, 1, toy_pp.kappa, toy_pp.kdf_mode)
        assert hash_private(toy_pp, sk, b"tag", x) == expected


def test_hash_private_identity_point(toy_pp):
    rng = random.Random(34)
    expected = kdf(toy_pp.gp, 1, toy_pp.kappa, toy_pp.kdf_mode)
    for _ in range(20):
        sk, _ = keygen(toy_pp, rng)
        assert hash_private(toy_pp, sk, b"z", Pair(1, 1)) == expected


def test_hash_private_matches_schoolbook_modexp(toy_pp):
    # independent oracle: rebuild the value with builtin pow and direct,
    # unreduced exponent arithmetic; x drawn from X = G x G (the operation
    # assumes membership in X, where mod-q reduction is sound)
    gp = toy_pp.gp
    rng = random.Random(35)
    for _ in range(100):
        sk, _ = keygen(toy_pp, rng)
        x = Pair(pow(rng.randrange(1, gp.p), 2, gp.p), pow(rng.randrange(1, gp.p), 2, gp.p))
        tag = bytes([rng.randrange(256)])
        tau = hash_to_zq(toy_pp.idx, gp, tag, x.u1, x.u2)
        value = (pow(x.u1, sk.a1 + sk.b1 * tau, gp.p)
                 * pow(x.u2, sk.a2 + sk.b2 * tau, gp.p)) % gp.p
        assert prehash(toy_pp, sk, tau, x) == value
        assert hash_private(toy_pp, sk, tag, x) == kdf(gp, value, toy_pp.kappa,
                                                       toy_pp.kdf_mode)


def test_hash_private_rejects_out_of_range(toy_pp):
    sk = PhfSecretKey(1, 2, 3, 4)
    with pytest.raises(DomainError):
        hash_private(toy_pp, sk, b"z", Pair(0, 5))


def test_hash_public_zero_witness(toy_pp):
    rng = random.Random(36)
    sk, proj = keygen(toy_pp, rng)
    expected = kdf(toy_pp.gp, 1, toy_pp.kappa, toy_pp.kdf_mode)
    assert hash_public(toy_pp, proj, b"z", Pair(1, 1), 0) == expected


@pytest.mark.parametrize("pp_name", ["toy_pp", "bench_pp"])
def test_projective_property(pp_name, request):
    # the defining agreement: public and private evaluations coincide on the
    # diagonal with a valid witness
    pp = request.getfixturevalue(pp_name)
    rng = random.Random(37)
    for _ in range(300):
        sk, proj = keygen(pp, rng)
        x, w = sample_L(pp.gp, rng)
        tag = bytes([rng.randrange(256)])
        assert hash_public(pp, proj, tag, x, w) == hash_private(pp, sk, tag, x)


def test_hash_public_tampered_witness(toy_pp):
    rng = random.Random(38)
    sk, proj = keygen(toy_pp, rng)
    x, w = sample_L(toy_pp.gp, rng)
    with pytest.raises(DomainError):
        hash_public(toy_pp, proj, b"z", x, (w + 1) % toy_pp.gp.q)
    with pytest.raises(DomainError):
        hash_public(toy_pp, proj, b"z", x, -1)


def test_tag_separation(toy_pp):
    # changing only the tag moves tau and (generically) the pre-KDF value;
    # exhaustive over all diagonal points and a set of tag pairs
    gp = toy_pp.gp
    rng = random.Random(39)
    sk, _ = keygen(toy_pp, rng)
    changed = 0
    total = 0
    for r in range(gp.q):
        x = Pair(powmod(gp.g1, r, gp.p), powmod(gp.g2, r, gp.p))
        for t in range(8):
            tag_a, tag_b = b"A%d" % t, b"B%d" % t
            ka = hash_private(toy_pp, sk, tag_a, x)
            kb = hash_private(toy_pp, sk, tag_b, x)
            total += 1
            if ka != kb:
                changed += 1
    assert changed / total > 0.8  # q=11: collisions at rate ~1/q are expected


# ---------------------------------------------------------------------------
# exhaustive conditional-uniformity verifier


def test_universal2_uniform(toy_pp):
    rng = random.Random(41)
    rep = verify_universal2_exhaustive(toy_pp, rng)
    assert rep.keys_total == 11 ** 4
    assert rep.keys_consistent == 11
    assert rep.support_size == 11
    assert set(rep.histogram.values()) == {1}
    assert sorted(rep.histogram) == subgroup_elements(toy_pp.gp)
    assert rep.uniform and rep.passed


def test_universal2_second_point_on_diagonal(toy_pp):
    rng = random.Random(42)
    rep = verify_universal2_exhaustive(toy_pp, rng, x2_in_L=True)
    assert rep.support_size == 1
    assert not rep.passed


def test_universal2_tau_collision_flagged(toy_pp):
    rng = random.Random(43)
    rep = verify_universal2_exhaustive(toy_pp, rng, force_tau_collision=True)
    assert rep.degenerate
    assert not rep.passed


def test_universal2_unavailable_at_scale(bench_pp):
    with pytest.raises(OracleUnavailable):
        verify_universal2_exhaustive(bench_pp, random.Random(44))


def test_universal2_report_output(toy_pp, tmp_path):
    rep = verify_universal2_exhaustive(toy_pp, random.Random(45))
    lines = rep.summary_lines()
    assert any("PASS" in ln for ln in lines)
    out = tmp_path / "u2.csv"
    rep.write_csv(str(out))
    body = out.read_text().strip().splitlines()
    assert body[0] == "value,count"
    assert len(body) == 1 + rep.support_size


# ---------------------------------------------------------------------------
# local 1-uniqueness


def test_local_uniqueness_toy_rate(toy16_pp):
    # kappa=8: first-half collisions at ~2^-8 per pair, two-sided 3 sigma
    rng = random.Random(41)
    sk, _ = keygen(toy16_pp, rng)
    rep = verify_local_1_uniqueness(toy16_pp, sk, trials=4000, rng=rng, n_passwords=4)
    assert rep.comparisons == 4000 * 6
    assert rep.passed


def test_local_uniqueness_bench_zero_collisions(bench_pp):
    rng = random.Random(47)
    sk, _ = keygen(bench_pp, rng)
    rep = verify_local_1_uniqueness(bench_pp, sk, trials=2000, rng=rng, n_passwords=16)
    assert rep.collisions == 0
    assert rep.passed


def test_local_uniqueness_report_output(toy16_pp, tmp_path):
    rng = random.Random(48)
    sk, _ = keygen(toy16_pp, rng)
    rep = verify_local_1_uniqueness(toy16_pp, sk, trials=200, rng=rng, n_passwords=4)
    out = tmp_path / "l1u.csv"
    rep.write_csv(str(out))
    assert out.read_text().startswith("metric,value")
    assert any("verdict" in ln for ln in rep.summary_lines())


def test_local_uniqueness_dictionary_bound(toy_pp):
    sk = PhfSecretKey(1, 2, 3, 4)
    with pytest.raises(DomainError):
        verify_local_1_uniqueness(toy_pp, sk, trials=1, rng=random.Random(0),
                                  n_passwords=toy_pp.gp.q)


def test_key_and_projection_serialization(toy_pp, bench_pp):
    # fixed-width element concatenations for keys and projections
    for pp in (toy_pp, bench_pp):
        gp = pp.gp
        sk, proj = keygen(pp, random.Random(49))
        assert PhfSecretKey.from_bytes(gp, sk.to_bytes(gp)) == sk
        assert len(sk.to_bytes(gp)) == 4 * ((gp.q.bit_length() + 7) // 8)
        assert Projection.from_bytes(gp, proj.to_bytes(gp)) == proj
        assert len(proj.to_bytes(gp)) == 2 * gp.element_width
        assert project(pp, sk) == proj
    with pytest.raises(DomainError):
        PhfSecretKey.from_bytes(toy_pp.gp, b"\x00")
    with pytest.raises(DomainError):
        PhfSecretKey(toy_pp.gp.q, 0, 0, 0).to_bytes(toy_pp.gp)
