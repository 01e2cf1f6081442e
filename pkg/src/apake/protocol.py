"""The three-flow password key exchange: state machines and transformations.

Flow 1  client -> server   C | y | tau0
Flow 2  server -> client   S | tau1 | zeta
Flow 3  client -> server   tau2

The client hides a diagonal pair x = (g1^r, g2^r) behind its password via
T(pi, (u1, u2)) = (u1, u2 * g2^pi); the server strips the password with the
inverse map and both sides derive (k0, k1) from the projective hash at x,
tagged with the client identity.  k0 keys the three authenticators, k1
becomes the session key.

In square mode the first flow carries componentwise square roots
(g1^(r/2), g2^((r+pi)/2)); the server recovers y by squaring, which lands in
the subgroup by construction and removes the explicit membership check the
base mode needs.  All MAC inputs, the session identifier, and the session
state bind the recovered (squared) y, so both modes agree byte-for-byte
after that step.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field

from .errors import DomainError, ProtocolPhaseError
from .group import (
    GroupParams,
    Pair,
    g_exp,
    g_exp_membership,
    g_inv,
    g_mul,
    g_sqr,
    powmod,
)
from .hashproof import PhfParams, PhfSecretKey, Projection, hash_private, hash_public
from .primitives import KeyMaterial, encode_fields, mac, mac_verify, rand_bytes

MODE_BASE = "base"
MODE_SQUARE = "square"
MODES = (MODE_BASE, MODE_SQUARE)


@dataclass(frozen=True)
class Password:
    """A dictionary entry: an integer in {1..n} with n below the group order."""

    value: int
    n: int

    def __post_init__(self):
        if not 1 <= self.value <= self.n:
            raise DomainError(f"password {self.value} outside dictionary 1..{self.n}")


@dataclass(frozen=True)
class ClientIdentity:
    id: bytes
    index: int


class Phase(enum.Enum):
    INIT = "init"
    AWAITING_FLOW2 = "awaiting_flow2"
    AWAITING_FLOW3 = "awaiting_flow3"
    ACCEPTED = "accepted"
    REJECTED = "rejected"


@dataclass(frozen=True)
class Flow1:
    client_id: bytes
    y: Pair          # base mode: y itself; square mode: the root pair y'
    tau0: bytes


@dataclass(frozen=True)
class Flow2:
    server_id: bytes
    tau1: bytes
    zeta: bytes


@dataclass(frozen=True)
class Flow3:
    tau2: bytes


@dataclass
class SessionState:
    role: str                      # "client" | "server"
    owner: bytes                   # own identity label
    pid: bytes                     # presumed peer
    phase: Phase = Phase.INIT
    y: Pair | None = None          # recovered (base-mode) y
    zeta: bytes | None = None
    keys: KeyMaterial | None = None
    session_key: bytes | None = None
    sid: bytes | None = None
    stat: bytes | None = None
    reject_reason: str | None = None   # internal only; the wire carries an opaque reject

    @property
    def accepted(self) -> bool:
        return self.phase is Phase.ACCEPTED

    def _reject(self, reason: str) -> "SessionState":
        self.phase = Phase.REJECTED
        self.reject_reason = reason
        self.session_key = None
        return self


def partnered(a: SessionState, b: SessionState) -> bool:
    """Partnering: peer ids cross-match and session identifiers coincide."""
    if a.sid is None or b.sid is None:
        return False
    return a.pid == b.owner and b.pid == a.owner and a.sid == b.sid


# ---------------------------------------------------------------------------
# Password transformation pair


def transform(gp: GroupParams, pi: Password, x: Pair) -> Pair:
    """T(pi, (u1, u2)) = (u1, u2 * g2^pi)."""
    _check_password(gp, pi)
    return Pair(x.u1, g_mul(x.u2, g_exp(gp.g2, pi.value, gp.p), gp.p))


def untransform(gp: GroupParams, pi: Password, y: Pair) -> Pair:
    """T*(pi, (u1, u2)) = (u1, u2 * g2^-pi); inverse of transform, total on X."""
    _check_password(gp, pi)
    return Pair(y.u1, g_mul(y.u2, g_exp(gp.g2, gp.q - pi.value % gp.q, gp.p), gp.p))


def _check_password(gp: GroupParams, pi: Password) -> None:
    if pi.n >= gp.q:
        raise DomainError("dictionary size must be below the group order")


# ---------------------------------------------------------------------------
# MAC input layouts.  Length-prefixed fields keep the three tags in distinct
# formats: tau0 ends after y, tau1/tau2 append zeta and a 1-byte marker.


def tau0_input(gp: GroupParams, client_id: bytes, server_id: bytes, y: Pair) -> bytes:
    return encode_fields(client_id, server_id, gp.encode_element(y.u1), gp.encode_element(y.u2))


def omega(gp: GroupParams, client_id: bytes, server_id: bytes, y: Pair, zeta: bytes) -> bytes:
    return encode_fields(client_id, server_id, gp.encode_element(y.u1),
                         gp.encode_element(y.u2), zeta)


def tau_n_input(gp: GroupParams, client_id: bytes, server_id: bytes, y: Pair,
                zeta: bytes, marker: int) -> bytes:
    return encode_fields(client_id, server_id, gp.encode_element(y.u1),
                         gp.encode_element(y.u2), zeta, bytes([marker]))


# ---------------------------------------------------------------------------
# Configurations


@dataclass
class ClientConfig:
    gp: GroupParams
    pp: PhfParams
    projection: Projection
    identity: ClientIdentity
    server_id: bytes
    password: Password
    mode: str = MODE_SQUARE
    g2_pow_pi: int = 0
    g2_pow_pi_inv: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"unknown mode {self.mode!r}")
        _check_password(self.gp, self.password)
        if not self.g2_pow_pi:
            self.g2_pow_pi = powmod(self.gp.g2, self.password.value, self.gp.p)
            self.g2_pow_pi_inv = g_inv(self.g2_pow_pi, self.gp.p)


@dataclass
class ServerRecord:
    identity: ClientIdentity
    password: Password
    g2_pow_pi: int
    g2_pow_pi_inv: int


@dataclass
class ServerConfig:
    gp: GroupParams
    pp: PhfParams
    sk: PhfSecretKey
    projection: Projection
    server_id: bytes = b"S"
    mode: str = MODE_SQUARE
    records: dict[bytes, ServerRecord] = field(default_factory=dict)

    def register(self, identity: ClientIdentity, password: Password) -> ServerRecord:
        if identity.id in self.records:
            raise DomainError(f"client id {identity.id!r} already registered")
        _check_password(self.gp, password)
        cache = powmod(self.gp.g2, password.value, self.gp.p)
        rec = ServerRecord(identity, password, cache, g_inv(cache, self.gp.p))
        self.records[identity.id] = rec
        return rec

    def client_config(self, client_id: bytes, mode: str | None = None) -> ClientConfig:
        rec = self.records[client_id]
        return ClientConfig(
            gp=self.gp, pp=self.pp, projection=self.projection,
            identity=rec.identity, server_id=self.server_id, password=rec.password,
            mode=mode or self.mode,
            g2_pow_pi=rec.g2_pow_pi, g2_pow_pi_inv=rec.g2_pow_pi_inv,
        )


# ---------------------------------------------------------------------------
# Protocol steps


def client_start(cfg: ClientConfig, rng: random.Random) -> tuple[SessionState, Flow1]:
    """Step 1: sample a witnessed diagonal pair, mask it, key the first tag.

    Per session this costs 4 full exponentiations (plus two squarings in
    square mode); the password powers of g2 are cached in the config.
    """
    gp, pp = cfg.gp, cfg.pp
    q, p = gp.q, gp.p
    r = rng.randrange(q)
    pi = cfg.password.value

    if cfg.mode == MODE_SQUARE:
        half = (q + 1) // 2
        wire_y = Pair(g_exp(gp.g1, r * half % q, p), g_exp(gp.g2, (r + pi) * half % q, p))
        y = Pair(g_sqr(wire_y.u1, p), g_sqr(wire_y.u2, p))
    else:
        y = Pair(g_exp(gp.g1, r, p), g_exp(gp.g2, (r + pi) % q, p))
        wire_y = y

    x = Pair(y.u1, g_mul(y.u2, cfg.g2_pow_pi_inv, p))
    keys = hash_public(pp, cfg.projection, cfg.identity.id, x, r, check_witness=False)
    tau0 = mac(keys.k0, tau0_input(gp, cfg.identity.id, cfg.server_id, y), pp.kappa)

    st = SessionState(role="client", owner=cfg.identity.id, pid=cfg.server_id,
                      phase=Phase.AWAITING_FLOW2, y=y, keys=keys)
    st.stat = encode_fields(cfg.identity.id, cfg.server_id, gp.encode_element(y.u1),
                            gp.encode_element(y.u2), keys.k0, keys.k1)
    return st, Flow1(cfg.identity.id, wire_y, tau0)


def server_on_flow1(cfg: ServerConfig, msg: Flow1,
                    rng: random.Random) -> tuple[SessionState, Flow2 | None]:
    """Step 2: recover y (squaring in square mode), strip the password,
    re-derive the keys with the secret key, verify tau0.

    In base mode both components are checked for subgroup membership before
    any MAC verification; square mode needs no check.  Rejection is a single
    opaque signal - the reason is recorded internally for tests only.
    """
    gp, pp = cfg.gp, cfg.pp
    st = SessionState(role="server", owner=cfg.server_id, pid=msg.client_id)

    rec = cfg.records.get(msg.client_id)
    if rec is None:
        return st._reject("unknown-client"), None
    if not (gp.in_zp_star(msg.y.u1) and gp.in_zp_star(msg.y.u2)):
        return st._reject("range"), None

    if cfg.mode == MODE_SQUARE:
        y = Pair(g_sqr(msg.y.u1, gp.p), g_sqr(msg.y.u2, gp.p))
    else:
        y = msg.y
        if not (g_exp_membership(y.u1, gp.q, gp.p) and g_exp_membership(y.u2, gp.q, gp.p)):
            return st._reject("membership"), None
    st.y = y

    x = Pair(y.u1, g_mul(y.u2, rec.g2_pow_pi_inv, gp.p))
    keys = hash_private(pp, cfg.sk, msg.client_id, x)
    if not mac_verify(keys.k0, tau0_input(gp, msg.client_id, cfg.server_id, y),
                      msg.tau0, pp.kappa):
        return st._reject("mac-flow1"), None

    zeta = rand_bytes(rng, pp.kappa // 8)
    tau1 = mac(keys.k0, tau_n_input(gp, msg.client_id, cfg.server_id, y, zeta, 1), pp.kappa)

    st.phase = Phase.AWAITING_FLOW3
    st.keys = keys
    st.zeta = zeta
    st.sid = omega(gp, msg.client_id, cfg.server_id, y, zeta)
    st.stat = encode_fields(msg.client_id, cfg.server_id, gp.encode_element(y.u1),
                            gp.encode_element(y.u2), zeta, keys.k0, keys.k1)
    return st, Flow2(cfg.server_id, tau1, zeta)


def client_on_flow2(st: SessionState, cfg: ClientConfig,
                    msg: Flow2) -> tuple[SessionState, Flow3 | None]:
    """Step 3: verify tau1 against omega, emit tau2, output the session key."""
    if st.phase is not Phase.AWAITING_FLOW2:
        raise ProtocolPhaseError(f"flow2 delivered in phase {st.phase.value}")
    gp, pp = cfg.gp, cfg.pp

    if msg.server_id != st.pid:
        return st._reject("pid-mismatch"), None
    if len(msg.zeta) != pp.kappa // 8:
        return st._reject("zeta-length"), None

    st.zeta = msg.zeta
    st.sid = omega(gp, st.owner, st.pid, st.y, msg.zeta)

    if not mac_verify(st.keys.k0, tau_n_input(gp, st.owner, st.pid, st.y, msg.zeta, 1),
                      msg.tau1, pp.kappa):
        return st._reject("mac-flow2"), None

    tau2 = mac(st.keys.k0, tau_n_input(gp, st.owner, st.pid, st.y, msg.zeta, 2), pp.kappa)
    st.session_key = st.keys.k1
    st.stat = encode_fields(st.owner, st.pid, st.keys.k1)
    st.phase = Phase.ACCEPTED
    return st, Flow3(tau2)


def server_on_flow3(st: SessionState, cfg: ServerConfig, msg: Flow3) -> SessionState:
    """Step 4: verify tau2; on success output the session key."""
    if st.phase is not Phase.AWAITING_FLOW3:
        raise ProtocolPhaseError(f"flow3 delivered in phase {st.phase.value}")
    gp, pp = cfg.gp, cfg.pp

    if not mac_verify(st.keys.k0, tau_n_input(gp, st.pid, st.owner, st.y, st.zeta, 2),
                      msg.tau2, pp.kappa):
        return st._reject("mac-flow3")

    st.session_key = st.keys.k1
    st.stat = encode_fields(st.pid, st.owner, st.keys.k1)
    st.phase = Phase.ACCEPTED
    return st
