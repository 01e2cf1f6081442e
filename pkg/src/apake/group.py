"""Safe-prime group arithmetic and the hard-subset-membership structure.

The group is the order-q subgroup (the quadratic residues) of Z_p^* for a
safe prime p = 2q + 1.  Pairs of subgroup elements form the ambient set
X = G x G; the language L = {(g1^r, g2^r)} is the diagonal sampled with a
known exponent r, which acts as the witness.

Everything that performs modular exponentiation goes through the counting
wrappers at the bottom so callers can meter per-session costs.
"""

from __future__ import annotations

import contextvars
import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, NamedTuple

import gmpy2

from .errors import DecodeError, DomainError, OracleUnavailable, SearchExhausted

# Largest q for which enumeration-based test oracles (discrete log tables,
# subgroup listings) are allowed to run.
ENUM_LIMIT = 1 << 16

# RFC 3526 group 14 modulus; a safe prime, so (p-1)/2 is prime as well.
_RFC3526_2048_P = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF",
    16,
)


def powmod(base: int, exp: int, mod: int) -> int:
    """Modular exponentiation (gmpy2-backed; much faster than pow() at 2048 bits)."""
    return int(gmpy2.powmod(base, exp, mod))


def invmod(a: int, mod: int) -> int:
    return int(gmpy2.invert(a, mod))


def is_prime(n: int) -> bool:
    return bool(gmpy2.is_prime(n, 32))


class Pair(NamedTuple):
    """An element of X = G x G, stored as two residues mod p."""

    u1: int
    u2: int


@dataclass(frozen=True)
class GroupParams:
    """Safe-prime group: p = 2q + 1, generators g1, g2 of the order-q subgroup."""

    p: int
    q: int
    g1: int
    g2: int
    bits: int

    @property
    def element_width(self) -> int:
        """Byte width of the fixed-width element encoding."""
        return (self.p.bit_length() + 7) // 8

    def in_group(self, v: int) -> bool:
        """True iff v is in the order-q subgroup of Z_p^*."""
        return 0 < v < self.p and powmod(v, self.q, self.p) == 1

    def in_zp_star(self, v: int) -> bool:
        return 0 < v < self.p

    def validate(self) -> None:
        """Check all structural invariants; raises DomainError on violation."""
        if not (is_prime(self.p) and is_prime(self.q)):
            raise DomainError("p and q must be prime")
        if self.p != 2 * self.q + 1:
            raise DomainError("p != 2q + 1")
        for g in (self.g1, self.g2):
            if g in (0, 1) or not self.in_group(g):
                raise DomainError("generator not a nontrivial subgroup element")

    def encode_element(self, v: int) -> bytes:
        if not self.in_zp_star(v):
            raise DomainError(f"element {v} outside [1, p-1]")
        return v.to_bytes(self.element_width, "big")

    def decode_element(self, data: bytes) -> int:
        if len(data) != self.element_width:
            raise DecodeError("bad element width")
        v = int.from_bytes(data, "big")
        if not self.in_zp_star(v):
            raise DecodeError("element outside [1, p-1]")
        return v

    def to_bytes(self) -> bytes:
        """Length-prefixed concatenation p | q | g1 | g2."""
        out = bytearray()
        for v in (self.p, self.q, self.g1, self.g2):
            raw = v.to_bytes((v.bit_length() + 7) // 8 or 1, "big")
            out += len(raw).to_bytes(4, "big") + raw
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "GroupParams":
        vals = []
        off = 0
        for _ in range(4):
            if off + 4 > len(data):
                raise DecodeError("truncated group params")
            n = int.from_bytes(data[off : off + 4], "big")
            off += 4
            if n == 0 or off + n > len(data):
                raise DecodeError("bad group params field length")
            vals.append(int.from_bytes(data[off : off + n], "big"))
            off += n
        if off != len(data):
            raise DecodeError("trailing bytes after group params")
        p, q, g1, g2 = vals
        return cls(p=p, q=q, g1=g1, g2=g2, bits=q.bit_length())


def generate_group(bits: int, seed: bytes | int | str, max_iter: int | None = None) -> GroupParams:
    """Search a safe prime p = 2q + 1 with q of exactly `bits` bits, deterministically.

    Generators are sampled as squares of random units, which forces order q.
    Intended for small/medium parameters; for 2048-bit groups use
    rfc3526_2048(), a pinned standard safe prime (searching at that size is
    impractical in pure Python).
    """
    if bits < 4:
        raise DomainError("bits must be >= 4")
    rng = random.Random(seed)
    limit = max_iter if max_iter is not None else 600 * bits
    for _ in range(limit):
        q = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if not is_prime(q):
            continue
        p = 2 * q + 1
        if is_prime(p):
            g1, g2 = _sample_generators(p, rng)
            return GroupParams(p=p, q=q, g1=g1, g2=g2, bits=bits)
    raise SearchExhausted(f"no safe prime found in {limit} iterations at {bits} bits")


def rfc3526_2048(seed: bytes | int | str = b"apake-demo") -> GroupParams:
    """The 2048-bit MODP safe prime (RFC 3526 group 14) with seeded generators."""
    p = _RFC3526_2048_P
    q = (p - 1) // 2
    rng = random.Random(seed)
    g1, g2 = _sample_generators(p, rng)
    return GroupParams(p=p, q=q, g1=g1, g2=g2, bits=q.bit_length())


def _sample_generators(p: int, rng: random.Random) -> tuple[int, int]:
    def one(avoid: int | None) -> int:
        while True:
            h = rng.randrange(2, p - 1)
            g = h * h % p
            if g != 1 and g != avoid:
                return g

    g1 = one(None)
    g2 = one(g1)
    return g1, g2


# ---------------------------------------------------------------------------
# Samplers for D(L) and D(X \ L)


def sample_L(gp: GroupParams, rng: random.Random) -> tuple[Pair, int]:
    """Draw (g1^r, g2^r) uniformly from L together with its witness r."""
    r = rng.randrange(gp.q)
    x = Pair(g_exp(gp.g1, r, gp.p), g_exp(gp.g2, r, gp.p))
    return x, r


def sample_X_minus_L(gp: GroupParams, rng: random.Random) -> Pair:
    """Draw (g1^r1, g2^r2) with r1 != r2, uniform over X \\ L."""
    r1 = rng.randrange(gp.q)
    r2 = rng.randrange(gp.q)
    while r2 == r1:
        r2 = rng.randrange(gp.q)
    return Pair(g_exp(gp.g1, r1, gp.p), g_exp(gp.g2, r2, gp.p))


@lru_cache(maxsize=8)
def _dlog_table(gp: GroupParams) -> dict[int, int]:
    table: dict[int, int] = {}
    v = 1
    for r in range(gp.q):
        table[v] = r
        v = v * gp.g1 % gp.p
    return table


def is_in_L(gp: GroupParams, x: Pair, enum_limit: int = ENUM_LIMIT) -> bool:
    """Membership oracle for L (test-only: costs a discrete log at toy sizes)."""
    if gp.q > enum_limit:
        raise OracleUnavailable(f"group order {gp.q} exceeds enumeration limit {enum_limit}")
    r = _dlog_table(gp).get(x.u1 % gp.p)
    if r is None:
        return False
    return x.u2 % gp.p == powmod(gp.g2, r, gp.p)


def subgroup_elements(gp: GroupParams, enum_limit: int = ENUM_LIMIT) -> list[int]:
    """All elements of the order-q subgroup (test-only enumeration)."""
    if gp.q > enum_limit:
        raise OracleUnavailable(f"group order {gp.q} exceeds enumeration limit {enum_limit}")
    return sorted(_dlog_table(gp).keys())


def enumerate_L(gp: GroupParams, enum_limit: int = ENUM_LIMIT) -> Iterator[Pair]:
    if gp.q > enum_limit:
        raise OracleUnavailable(f"group order {gp.q} exceeds enumeration limit {enum_limit}")
    for r in range(gp.q):
        yield Pair(powmod(gp.g1, r, gp.p), powmod(gp.g2, r, gp.p))


# ---------------------------------------------------------------------------
# Square-root trick helpers


def sqrt_in_G(gp: GroupParams, y: int) -> int:
    """Square root inside the subgroup: y^((q+1)/2) mod p.  Requires y in G."""
    if not gp.in_group(y):
        raise DomainError("sqrt_in_G argument not in the subgroup")
    return powmod(y, (gp.q + 1) // 2, gp.p)


def square_pair(gp: GroupParams, y_prime: Pair) -> Pair:
    """Componentwise squares; the result always lands in G x G."""
    for v in y_prime:
        if not gp.in_zp_star(v):
            raise DomainError("square_pair component outside Z_p^*")
    return Pair(g_sqr(y_prime.u1, gp.p), g_sqr(y_prime.u2, gp.p))


# ---------------------------------------------------------------------------
# Operation counting.
#
# A context-local counter records how many full exponentiations, membership
# checks, squarings, multiplications and inversions run inside a
# `with count_group_ops() as c:` block.  Threads get independent contexts, so
# concurrent server sessions never pollute a measurement.


@dataclass
class OpCounter:
    full_exp: int = 0
    membership_exp: int = 0
    square: int = 0
    mul: int = 0
    invert: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "full_exp": self.full_exp,
            "membership_exp": self.membership_exp,
            "square": self.square,
            "mul": self.mul,
            "invert": self.invert,
        }


_active_counter: contextvars.ContextVar[OpCounter | None] = contextvars.ContextVar(
    "apake_op_counter", default=None
)


class count_group_ops:
    """Context manager activating an OpCounter for the enclosed code."""

    def __enter__(self) -> OpCounter:
        self.counter = OpCounter()
        self._token = _active_counter.set(self.counter)
        return self.counter

    def __exit__(self, *exc) -> None:
        _active_counter.reset(self._token)


def g_exp(base: int, exp: int, p: int) -> int:
    c = _active_counter.get()
    if c is not None:
        c.full_exp += 1
    return powmod(base, exp, p)


def g_exp_membership(base: int, q: int, p: int) -> bool:
    c = _active_counter.get()
    if c is not None:
        c.membership_exp += 1
    return powmod(base, q, p) == 1


def g_sqr(v: int, p: int) -> int:
    c = _active_counter.get()
    if c is not None:
        c.square += 1
    return v * v % p


def g_mul(a: int, b: int, p: int) -> int:
    c = _active_counter.get()
    if c is not None:
        c.mul += 1
    return a * b % p


def g_inv(a: int, p: int) -> int:
    c = _active_counter.get()
    if c is not None:
        c.invert += 1
    return invmod(a, p)
