"""Symmetric building blocks: MAC, key derivation, and the hash into Z_q.

All composite inputs to the MAC and the Z_q hash are encoded with 4-byte
length prefixes (see encode_fields), so messages with different field
structure can never collide byte-wise.  The protocol relies on that for the
distinct input formats of its three authenticator tags.
"""

from __future__ import annotations

import hashlib
import hmac
import random
from dataclasses import dataclass

from .errors import DecodeError, DomainError
from .group import GroupParams

KDF_LEAST_BITS = "least_bits"
KDF_HASH = "hash"


@dataclass(frozen=True)
class Profile:
    """Parameter profile bundling the symmetric sizes with the KDF flavour.

    toy:  8-bit tags, least-significant-bits KDF, enumeration oracles usable.
    demo: 128-bit tags, hash KDF, groups too large for enumeration.
    """

    name: str
    kappa: int
    kdf_mode: str

    def __post_init__(self):
        if self.kappa % 8:
            raise DomainError("kappa must be a multiple of 8")
        if self.kdf_mode not in (KDF_LEAST_BITS, KDF_HASH):
            raise DomainError(f"unknown kdf mode {self.kdf_mode!r}")

    @classmethod
    def toy(cls) -> "Profile":
        return cls(name="toy", kappa=8, kdf_mode=KDF_LEAST_BITS)

    @classmethod
    def demo(cls) -> "Profile":
        return cls(name="demo", kappa=128, kdf_mode=KDF_HASH)

    @classmethod
    def bench(cls) -> "Profile":
        """Full-strength symmetric sizes on groups small enough for bulk Monte Carlo."""
        return cls(name="bench", kappa=128, kdf_mode=KDF_HASH)


@dataclass(frozen=True)
class KeyMaterial:
    """The 2*kappa-bit output of the hash family, split into (k0, k1)."""

    k0: bytes  # MAC key, kappa bits
    k1: bytes  # session key, kappa bits

    def __post_init__(self):
        if len(self.k0) != len(self.k1):
            raise DomainError("k0 and k1 must have equal length")


def encode_fields(*fields: bytes) -> bytes:
    """Concatenate byte fields, each preceded by a 4-byte big-endian length."""
    out = bytearray()
    for f in fields:
        out += len(f).to_bytes(4, "big") + f
    return bytes(out)


def decode_fields(data: bytes, count: int | None = None, max_field: int = 1 << 20) -> list[bytes]:
    fields: list[bytes] = []
    off = 0
    while off < len(data):
        if off + 4 > len(data):
            raise DecodeError("truncated field length")
        n = int.from_bytes(data[off : off + 4], "big")
        off += 4
        if n > max_field:
            raise DecodeError("field exceeds length cap")
        if off + n > len(data):
            raise DecodeError("truncated field body")
        fields.append(data[off : off + n])
        off += n
    if count is not None and len(fields) != count:
        raise DecodeError(f"expected {count} fields, got {len(fields)}")
    return fields


def mac(key: bytes, message: bytes, kappa: int) -> bytes:
    """HMAC-SHA256 truncated to kappa bits."""
    return hmac.digest(key, message, "sha256")[: kappa // 8]


def mac_verify(key: bytes, message: bytes, tag: bytes, kappa: int) -> bool:
    return hmac.compare_digest(mac(key, message, kappa), tag)


def least_bits(v: int, bits: int) -> tuple[int, int]:
    """Split the `2*bits` least-significant bits of v into (high half, low half)."""
    val = v & ((1 << (2 * bits)) - 1)
    return val >> bits, val & ((1 << bits) - 1)


def kdf(gp: GroupParams, v: int, kappa: int, mode: str = KDF_HASH) -> KeyMaterial:
    """Derive (k0, k1) from a subgroup element.

    hash mode: SHA-256 of the fixed-width encoding of v, chained if more than
    256 bits are needed.  least_bits mode: the 2*kappa least-significant bits
    of v itself, which keeps toy-scale outputs exhaustively analyzable.
    """
    nbytes = kappa // 8
    if mode == KDF_LEAST_BITS:
        hi, lo = least_bits(v, kappa)
        return KeyMaterial(hi.to_bytes(nbytes, "big"), lo.to_bytes(nbytes, "big"))
    buf = hashlib.sha256(gp.encode_element(v)).digest()
    while len(buf) < 2 * nbytes:
        buf += hashlib.sha256(buf[-32:]).digest()
    return KeyMaterial(buf[:nbytes], buf[nbytes : 2 * nbytes])


def hash_to_zq(idx: bytes, gp: GroupParams, tag: bytes, u1: int, u2: int) -> int:
    """Deterministic map (tag, u1, u2) -> Z_q, keyed by the public hash index.

    The SHA-256 output is reduced mod q; the reduction bias is below q/2^256,
    negligible at every supported size.
    """
    payload = idx + encode_fields(tag, gp.encode_element(u1), gp.encode_element(u2))
    return int.from_bytes(hashlib.sha256(payload).digest(), "big") % gp.q


def rand_bytes(rng: random.Random, n: int) -> bytes:
    """n random bytes from any Random-like source (works for SystemRandom too)."""
    return rng.getrandbits(8 * n).to_bytes(n, "big")


def new_hash_index(rng: random.Random, kappa: int) -> bytes:
    return rand_bytes(rng, kappa // 8)
