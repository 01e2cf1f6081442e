"""Tag-based projective hashing over the safe-prime group.

The secret key is four exponents (a1, a2, b1, b2); its public projection is
(g1^a1 g2^a2, g1^b1 g2^b2).  Hashing a pair (u1, u2) under tag z first maps
(z, u1, u2) to an exponent tau, then evaluates

    u1^(a1 + b1*tau) * u2^(a2 + b2*tau)

and feeds the group value through the KDF.  On diagonal pairs (g1^r, g2^r)
the same value equals (P1 * P2^tau)^r, computable from the projection and the
witness r alone - the projective property that makes the protocol work.

The two verifiers at the bottom check, at toy scale, the structural facts the
security argument needs: conditional uniformity of the pre-KDF value at a
second off-diagonal point (by full key-space enumeration), and rarity of
first-half collisions across de-transformations under distinct passwords.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field

from .errors import DomainError, OracleUnavailable
from .group import (
    GroupParams,
    Pair,
    g_exp,
    g_mul,
    invmod,
    powmod,
    sample_L,
    sample_X_minus_L,
)
from .primitives import (
    KDF_HASH,
    KeyMaterial,
    Profile,
    hash_to_zq,
    kdf,
    new_hash_index,
    rand_bytes,
)


@dataclass(frozen=True)
class PhfSecretKey:
    a1: int
    a2: int
    b1: int
    b2: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.a1, self.a2, self.b1, self.b2)

    def to_bytes(self, gp: GroupParams) -> bytes:
        """Fixed-width concatenation of the four exponents."""
        w = _exponent_width(gp)
        for e in self.as_tuple():
            if not 0 <= e < gp.q:
                raise DomainError("secret exponent outside Z_q")
        return b"".join(e.to_bytes(w, "big") for e in self.as_tuple())

    @classmethod
    def from_bytes(cls, gp: GroupParams, data: bytes) -> "PhfSecretKey":
        w = _exponent_width(gp)
        if len(data) != 4 * w:
            raise DomainError("bad secret key length")
        vals = [int.from_bytes(data[i * w : (i + 1) * w], "big") for i in range(4)]
        if any(v >= gp.q for v in vals):
            raise DomainError("secret exponent outside Z_q")
        return cls(*vals)


def _exponent_width(gp: GroupParams) -> int:
    return (gp.q.bit_length() + 7) // 8


@dataclass(frozen=True)
class Projection:
    theta1: int
    theta2: int

    def to_bytes(self, gp: GroupParams) -> bytes:
        """Fixed-width concatenation of the two group elements."""
        return gp.encode_element(self.theta1) + gp.encode_element(self.theta2)

    @classmethod
    def from_bytes(cls, gp: GroupParams, data: bytes) -> "Projection":
        w = gp.element_width
        if len(data) != 2 * w:
            raise DomainError("bad projection length")
        return cls(gp.decode_element(data[:w]), gp.decode_element(data[w:]))


@dataclass(frozen=True)
class PhfParams:
    """Public description: group, hash index, and symmetric sizes."""

    gp: GroupParams
    idx: bytes
    kappa: int
    kdf_mode: str = KDF_HASH

    @classmethod
    def create(cls, gp: GroupParams, profile: Profile, rng: random.Random) -> "PhfParams":
        return cls(gp=gp, idx=new_hash_index(rng, profile.kappa), kappa=profile.kappa,
                   kdf_mode=profile.kdf_mode)


def keygen(pp: PhfParams, rng: random.Random) -> tuple[PhfSecretKey, Projection]:
    """Uniform secret key and its projection."""
    q = pp.gp.q
    sk = PhfSecretKey(rng.randrange(q), rng.randrange(q), rng.randrange(q), rng.randrange(q))
    return sk, project(pp, sk)


def project(pp: PhfParams, sk: PhfSecretKey) -> Projection:
    gp = pp.gp
    t1 = g_mul(g_exp(gp.g1, sk.a1, gp.p), g_exp(gp.g2, sk.a2, gp.p), gp.p)
    t2 = g_mul(g_exp(gp.g1, sk.b1, gp.p), g_exp(gp.g2, sk.b2, gp.p), gp.p)
    return Projection(t1, t2)


def prehash(pp: PhfParams, sk: PhfSecretKey, tau: int, x: Pair) -> int:
    """The group value before key derivation; total on all of X."""
    gp = pp.gp
    e1 = (sk.a1 + sk.b1 * tau) % gp.q
    e2 = (sk.a2 + sk.b2 * tau) % gp.q
    return g_mul(g_exp(x.u1, e1, gp.p), g_exp(x.u2, e2, gp.p), gp.p)


def hash_private(pp: PhfParams, sk: PhfSecretKey, tag: bytes, x: Pair) -> KeyMaterial:
    """Evaluate the hash with the secret key; x need not lie on the diagonal."""
    gp = pp.gp
    if not (gp.in_zp_star(x.u1) and gp.in_zp_star(x.u2)):
        raise DomainError("hash input components outside Z_p^*")
    tau = hash_to_zq(pp.idx, gp, tag, x.u1, x.u2)
    return kdf(gp, prehash(pp, sk, tau, x), pp.kappa, pp.kdf_mode)


def hash_public(pp: PhfParams, proj: Projection, tag: bytes, x: Pair, w: int,
                check_witness: bool = True) -> KeyMaterial:
    """Evaluate the hash from the projection and a witness for x = (g1^w, g2^w).

    The witness check costs two extra exponentiations; protocol code that
    just computed x from w itself may skip it.
    """
    gp = pp.gp
    if not 0 <= w < gp.q:
        raise DomainError("witness outside Z_q")
    if check_witness:
        if x.u1 != powmod(gp.g1, w, gp.p) or x.u2 != powmod(gp.g2, w, gp.p):
            raise DomainError("witness inconsistent with the point")
    tau = hash_to_zq(pp.idx, gp, tag, x.u1, x.u2)
    base = g_mul(proj.theta1, g_exp(proj.theta2, tau, gp.p), gp.p)
    return kdf(gp, g_exp(base, w, gp.p), pp.kappa, pp.kdf_mode)


# ---------------------------------------------------------------------------
# Exhaustive conditional-uniformity verifier


@dataclass
class Universal2Report:
    """Outcome of the full key-space enumeration at one sampled scenario."""

    q: int
    keys_total: int
    keys_consistent: int
    tau1: int
    tau2: int
    x2_in_diagonal: bool
    degenerate: bool                 # tau collision was injected
    histogram: dict[int, int] = field(default_factory=dict)

    @property
    def support_size(self) -> int:
        return len(self.histogram)

    @property
    def uniform(self) -> bool:
        """Exactly uniform: every subgroup element hit equally often."""
        if self.support_size != self.q:
            return False
        counts = set(self.histogram.values())
        return len(counts) == 1

    @property
    def passed(self) -> bool:
        return self.uniform and not self.degenerate

    def summary_lines(self) -> list[str]:
        return [
            f"group order q={self.q}, keys enumerated={self.keys_total}",
            f"keys consistent with (projection, first value)={self.keys_consistent}",
            f"tau1={self.tau1} tau2={self.tau2}"
            + (" [collision injected]" if self.degenerate else ""),
            f"second point on diagonal: {self.x2_in_diagonal}",
            f"second-value support={self.support_size}, uniform={self.uniform}",
            f"verdict: {'PASS' if self.passed else 'FAIL' if not self.degenerate else 'DEGENERATE (excluded)'}",
        ]

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["value", "count"])
            for v in sorted(self.histogram):
                w.writerow([v, self.histogram[v]])


def verify_universal2_exhaustive(
    pp: PhfParams,
    rng: random.Random,
    x2_in_L: bool = False,
    force_tau_collision: bool = False,
    key_space_limit: int = 2_000_000,
) -> Universal2Report:
    """Enumerate every secret key consistent with a fixed projection and a fixed
    pre-KDF value at one off-diagonal point, then histogram the pre-KDF value
    at a second point.

    With distinct taus and both points off the diagonal the histogram must be
    exactly uniform over the subgroup.  A second point on the diagonal pins the
    value (support 1).  An injected tau collision is flagged degenerate and
    excluded from any PASS verdict.
    """
    gp = pp.gp
    if gp.q ** 4 > key_space_limit:
        raise OracleUnavailable(f"key space q^4 = {gp.q ** 4} exceeds limit {key_space_limit}")

    sk, proj = keygen(pp, rng)
    tag1 = rand_bytes(rng, 4)
    x1 = sample_X_minus_L(gp, rng)
    tau1 = hash_to_zq(pp.idx, gp, tag1, x1.u1, x1.u2)

    while True:
        tag2 = rand_bytes(rng, 4)
        x2 = sample_L(gp, rng)[0] if x2_in_L else sample_X_minus_L(gp, rng)
        if (tag2, x2) == (tag1, x1):
            continue
        tau2 = hash_to_zq(pp.idx, gp, tag2, x2.u1, x2.u2)
        if force_tau_collision:
            tau2 = tau1
            break
        if tau2 != tau1:
            break

    v1 = prehash(pp, sk, tau1, x1)

    # Per-base power tables make the q^4 sweep a matter of lookups and mults.
    q, p = gp.q, gp.p
    pow_g1 = _pow_table(gp.g1, q, p)
    pow_g2 = _pow_table(gp.g2, q, p)
    pow_x1u1 = _pow_table(x1.u1, q, p)
    pow_x1u2 = _pow_table(x1.u2, q, p)
    pow_x2u1 = _pow_table(x2.u1, q, p)
    pow_x2u2 = _pow_table(x2.u2, q, p)

    histogram: dict[int, int] = {}
    consistent = 0
    for a1 in range(q):
        for a2 in range(q):
            if pow_g1[a1] * pow_g2[a2] % p != proj.theta1:
                continue
            for b1 in range(q):
                for b2 in range(q):
                    if pow_g1[b1] * pow_g2[b2] % p != proj.theta2:
                        continue
                    e1 = (a1 + b1 * tau1) % q
                    e2 = (a2 + b2 * tau1) % q
                    if pow_x1u1[e1] * pow_x1u2[e2] % p != v1:
                        continue
                    consistent += 1
                    f1 = (a1 + b1 * tau2) % q
                    f2 = (a2 + b2 * tau2) % q
                    v2 = pow_x2u1[f1] * pow_x2u2[f2] % p
                    histogram[v2] = histogram.get(v2, 0) + 1

    return Universal2Report(
        q=q,
        keys_total=q ** 4,
        keys_consistent=consistent,
        tau1=tau1,
        tau2=tau2,
        x2_in_diagonal=x2_in_L,
        degenerate=(tau1 == tau2),
        histogram=histogram,
    )


def _pow_table(base: int, q: int, p: int) -> list[int]:
    out = [1] * q
    v = 1
    for e in range(1, q):
        v = v * base % p
        out[e] = v
    return out


# ---------------------------------------------------------------------------
# Local 1-uniqueness Monte Carlo


@dataclass
class LocalUniquenessReport:
    trials: int
    n_passwords: int
    comparisons: int
    collisions: int
    kappa: int

    @property
    def rate(self) -> float:
        return self.collisions / self.comparisons if self.comparisons else 0.0

    @property
    def expected_rate(self) -> float:
        return 2.0 ** (-self.kappa)

    @property
    def sigma(self) -> float:
        pexp = self.expected_rate
        return (pexp * (1 - pexp) / self.comparisons) ** 0.5 if self.comparisons else 0.0

    @property
    def passed(self) -> bool:
        return abs(self.rate - self.expected_rate) <= 3 * self.sigma

    def summary_lines(self) -> list[str]:
        return [
            f"trials={self.trials} dictionary={self.n_passwords} comparisons={self.comparisons}",
            f"collisions={self.collisions} rate={self.rate:.3e} "
            f"expected={self.expected_rate:.3e} 3sigma={3 * self.sigma:.3e}",
            f"verdict: {'PASS' if self.passed else 'FAIL'}",
        ]

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["metric", "value"])
            for k in ("trials", "n_passwords", "comparisons", "collisions", "kappa"):
                w.writerow([k, getattr(self, k)])
            w.writerow(["rate", self.rate])
            w.writerow(["expected_rate", self.expected_rate])
            w.writerow(["passed", self.passed])


def verify_local_1_uniqueness(
    pp: PhfParams,
    sk: PhfSecretKey,
    trials: int,
    rng: random.Random,
    n_passwords: int = 16,
) -> LocalUniquenessReport:
    """Measure how often the MAC-key halves of the hash collide between
    de-transformations of the same adversarial point under two distinct
    passwords.  Expected rate is 2^-kappa per pair (plus KDF distance)."""
    gp = pp.gp
    if not 1 <= n_passwords < gp.q:
        raise DomainError("dictionary size must satisfy 1 <= N < q")

    # g2^(-pi) for pi = 1..N, by cumulative multiplication.
    g2_inv = invmod(gp.g2, gp.p)
    inv_pows = [1] * (n_passwords + 1)
    for i in range(1, n_passwords + 1):
        inv_pows[i] = inv_pows[i - 1] * g2_inv % gp.p

    comparisons = 0
    collisions = 0
    for _ in range(trials):
        z = rand_bytes(rng, 8)
        # adversarial point: uniform over G x G via squaring
        y = Pair(pow(rng.randrange(1, gp.p), 2, gp.p), pow(rng.randrange(1, gp.p), 2, gp.p))
        halves = []
        for pi in range(1, n_passwords + 1):
            x = Pair(y.u1, y.u2 * inv_pows[pi] % gp.p)
            halves.append(hash_private(pp, sk, z, x).k0)
        for i in range(n_passwords):
            for j in range(i + 1, n_passwords):
                comparisons += 1
                if halves[i] == halves[j]:
                    collisions += 1

    return LocalUniquenessReport(
        trials=trials,
        n_passwords=n_passwords,
        comparisons=comparisons,
        collisions=collisions,
        kappa=pp.kappa,
    )
