"""Persistent server store, the TCP demo server, and the login client.

The store file holds the group, the hashing key, the projection, and the
registered clients (the server must keep the raw password to strip it from
incoming flows).  It is written with owner-only permissions; the public
bundle written next to it contains everything a client may see - the
hashing key never leaves the store.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import socket
import threading
from dataclasses import dataclass, field

from .errors import ApakeError, DecodeError, DomainError
from .group import GroupParams, generate_group, rfc3526_2048
from .hashproof import PhfParams, PhfSecretKey, Projection, keygen
from .primitives import Profile, rand_bytes
from .protocol import (
    MODE_SQUARE,
    MODES,
    ClientConfig,
    ClientIdentity,
    Flow1,
    Flow2,
    Flow3,
    Password,
    ServerConfig,
    client_on_flow2,
    client_start,
    server_on_flow1,
    server_on_flow3,
)
from . import wire

log = logging.getLogger("apake.server")


class AuthenticationRejected(ApakeError):
    """The peer sent the opaque reject signal."""


def session_fingerprint(sk: bytes) -> str:
    return hashlib.sha256(b"fingerprint" + sk).hexdigest()[:16]


@dataclass
class ServerStore:
    gp: GroupParams
    pp: PhfParams
    sk: PhfSecretKey
    projection: Projection
    mode: str = MODE_SQUARE
    n_passwords: int = 16
    clients: dict[str, dict] = field(default_factory=dict)

    @classmethod
    def create(cls, bits: int = 48, seed: bytes | None = None,
               profile: Profile | None = None, mode: str = MODE_SQUARE,
               n_passwords: int = 16) -> "ServerStore":
        if mode not in MODES:
            raise DomainError(f"unknown mode {mode!r}")
        rng = random.Random(seed) if seed is not None else random.SystemRandom()
        profile = profile or Profile.bench()
        gp = rfc3526_2048(seed or b"apake-demo") if bits >= 2048 else \
            generate_group(bits, seed if seed is not None else rand_bytes(rng, 16))
        pp = PhfParams.create(gp, profile, rng)
        sk, proj = keygen(pp, rng)
        return cls(gp=gp, pp=pp, sk=sk, projection=proj, mode=mode,
                   n_passwords=n_passwords)

    def register(self, name: str, password: int) -> None:
        if name in self.clients:
            raise DomainError(f"client {name!r} already registered")
        Password(password, self.n_passwords)  # validates the range
        salt = os.urandom(8)
        self.clients[name] = {
            "index": len(self.clients) + 1,
            "password": password,
            "salt": salt.hex(),
            "verifier": _verifier(salt, name, password),
        }

    def server_config(self) -> ServerConfig:
        cfg = ServerConfig(gp=self.gp, pp=self.pp, sk=self.sk,
                           projection=self.projection, mode=self.mode)
        for name, rec in sorted(self.clients.items(), key=lambda kv: kv[1]["index"]):
            cfg.register(ClientIdentity(id=name.encode(), index=rec["index"]),
                         Password(rec["password"], self.n_passwords))
        return cfg

    def params_frame(self) -> bytes:
        return wire.encode_params(self.gp, self.pp, self.projection, self.mode,
                                  self.n_passwords)

    # -- persistence ---------------------------------------------------------

    def save(self, path: str) -> None:
        doc = {
            "group": {"p": hex(self.gp.p), "q": hex(self.gp.q),
                      "g1": hex(self.gp.g1), "g2": hex(self.gp.g2),
                      "bits": self.gp.bits},
            "hash_index": self.pp.idx.hex(),
            "kappa": self.pp.kappa,
            "kdf_mode": self.pp.kdf_mode,
            "mode": self.mode,
            "dictionary_size": self.n_passwords,
            "secret_key": self.sk.to_bytes(self.gp).hex(),
            "projection": self.projection.to_bytes(self.gp).hex(),
            "clients": self.clients,
        }
        data = json.dumps(doc, indent=1).encode()
        fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
        try:
            os.write(fd, data)
        finally:
            os.close(fd)
        os.chmod(path, 0o600)

    def save_public(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(self.params_frame())

    @classmethod
    def load(cls, path: str) -> "ServerStore":
        with open(path, "rb") as fh:
            doc = json.loads(fh.read())
        g = doc["group"]
        gp = GroupParams(p=int(g["p"], 16), q=int(g["q"], 16),
                         g1=int(g["g1"], 16), g2=int(g["g2"], 16), bits=g["bits"])
        pp = PhfParams(gp=gp, idx=bytes.fromhex(doc["hash_index"]),
                       kappa=doc["kappa"], kdf_mode=doc["kdf_mode"])
        sk = PhfSecretKey.from_bytes(gp, bytes.fromhex(doc["secret_key"]))
        proj = Projection.from_bytes(gp, bytes.fromhex(doc["projection"]))
        store = cls(gp=gp, pp=pp, sk=sk, projection=proj, mode=doc["mode"],
                    n_passwords=doc["dictionary_size"], clients=doc["clients"])
        for name, rec in store.clients.items():
            salt = bytes.fromhex(rec["salt"])
            if rec["verifier"] != _verifier(salt, name, rec["password"]):
                raise DomainError(f"registration record for {name!r} is corrupt")
        return store


def _verifier(salt: bytes, name: str, password: int) -> str:
    return hashlib.sha256(salt + name.encode() + password.to_bytes(8, "big")).hexdigest()


# ---------------------------------------------------------------------------
# TCP server


@dataclass
class CompletedSession:
    client_id: bytes
    session_key: bytes
    fingerprint: str


class PakeServer:
    """One session per connection; sessions share the immutable config."""

    def __init__(self, store: ServerStore, host: str = "127.0.0.1", port: int = 0,
                 rng: random.Random | None = None):
        self.store = store
        self.cfg = store.server_config()
        self.host = host
        self.port = port
        # OS entropy in real serving; tests may inject a seeded source.
        self.rng = rng if rng is not None else random.SystemRandom()
        self.completed: list[CompletedSession] = []
        self._lock = threading.Lock()
        self._sock: socket.socket | None = None
        self._threads: list[threading.Thread] = []
        self._stopping = threading.Event()

    def start(self) -> None:
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((self.host, self.port))
        self._sock.listen(64)
        self.port = self._sock.getsockname()[1]
        t = threading.Thread(target=self._accept_loop, daemon=True)
        t.start()
        self._threads.append(t)
        log.info("listening on %s:%d (mode=%s)", self.host, self.port, self.cfg.mode)

    def stop(self) -> None:
        self._stopping.set()
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass

    def serve_forever(self) -> None:
        self.start()
        try:
            self._stopping.wait()
        except KeyboardInterrupt:
            self.stop()

    def _accept_loop(self) -> None:
        while not self._stopping.is_set():
            try:
                conn, addr = self._sock.accept()
            except OSError:
                return
            t = threading.Thread(target=self._session, args=(conn, addr), daemon=True)
            t.start()
            self._threads.append(t)

    def _session(self, conn: socket.socket, addr) -> None:
        try:
            conn.sendall(self.store.params_frame())
            msg_type, payload = wire.read_frame(conn)
            flow1 = wire.decode_flow_payload(self.cfg.gp, self.cfg.pp.kappa,
                                             msg_type, payload)
            if not isinstance(flow1, Flow1):
                conn.sendall(wire.reject_frame())
                return
            state, flow2 = server_on_flow1(self.cfg, flow1, self.rng)
            if flow2 is None:
                conn.sendall(wire.reject_frame())
                return
            conn.sendall(wire.encode_flow(self.cfg.gp, flow2))
            msg_type, payload = wire.read_frame(conn)
            flow3 = wire.decode_flow_payload(self.cfg.gp, self.cfg.pp.kappa,
                                             msg_type, payload)
            if not isinstance(flow3, Flow3):
                conn.sendall(wire.reject_frame())
                return
            server_on_flow3(state, self.cfg, flow3)
            if state.accepted:
                fp = session_fingerprint(state.session_key)
                with self._lock:
                    self.completed.append(
                        CompletedSession(flow1.client_id, state.session_key, fp))
                log.info("session %s accepted sk_fp=%s", flow1.client_id, fp)
            else:
                conn.sendall(wire.reject_frame())
        except (DecodeError, OSError) as exc:
            log.debug("session from %s failed: %s", addr, exc)
            try:
                conn.sendall(wire.reject_frame())
            except OSError:
                pass
        finally:
            try:
                conn.close()
            except OSError:
                pass


# ---------------------------------------------------------------------------
# Login client


def login(
    host: str,
    port: int,
    client_name: str,
    password: int,
    expected_params: bytes | None = None,
    mode: str | None = None,
    rng: random.Random | None = None,
    timeout: float = 10.0,
) -> bytes:
    """Run one handshake; returns the session key or raises
    AuthenticationRejected.  When a local copy of the public parameter bundle
    is supplied, the server's greeting must match it byte-exactly."""
    rng = rng if rng is not None else random.SystemRandom()
    with socket.create_connection((host, port), timeout=timeout) as conn:
        msg_type, payload = wire.read_frame(conn)
        greeting = wire.encode_frame(msg_type, payload)
        if expected_params is not None and greeting != expected_params:
            raise ApakeError("server parameter bundle does not match the local copy")
        gp, pp, proj, server_mode, n_passwords = wire.decode_params(greeting)
        use_mode = mode or server_mode

        cfg = ClientConfig(
            gp=gp, pp=pp, projection=proj,
            identity=ClientIdentity(id=client_name.encode(), index=0),
            server_id=b"S", password=Password(password, n_passwords), mode=use_mode,
        )
        state, flow1 = client_start(cfg, rng)
        conn.sendall(wire.encode_flow(gp, flow1))

        msg_type, payload = wire.read_frame(conn)
        reply = wire.decode_flow_payload(gp, pp.kappa, msg_type, payload)
        if not isinstance(reply, Flow2):
            raise AuthenticationRejected("authentication rejected")
        state, flow3 = client_on_flow2(state, cfg, reply)
        if flow3 is None:
            raise AuthenticationRejected("authentication rejected")
        conn.sendall(wire.encode_flow(gp, flow3))
        return state.session_key
