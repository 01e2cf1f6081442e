"""Bit-exact wire formats: framed transport and flow payload encodings.

Frame layout: 1-byte version | 1-byte message type | 4-byte big-endian
payload length | payload.  Payloads are length-prefixed field sequences;
group elements travel fixed-width inside their fields.  Every malformed
input maps to DecodeError, never to an uncaught crash, and the length cap
keeps a hostile stream from forcing unbounded buffering.
"""

from __future__ import annotations

import struct

from .errors import DecodeError, DomainError
from .group import GroupParams, Pair
from .hashproof import PhfParams, Projection
from .primitives import decode_fields, encode_fields
from .protocol import Flow1, Flow2, Flow3

VERSION = 1

MSG_FLOW1 = 1
MSG_FLOW2 = 2
MSG_FLOW3 = 3
MSG_REJECT = 4
MSG_PARAMS = 5

_KNOWN_TYPES = (MSG_FLOW1, MSG_FLOW2, MSG_FLOW3, MSG_REJECT, MSG_PARAMS)

MAX_PAYLOAD = 1 << 20

_HEADER = struct.Struct(">BBI")


def encode_frame(msg_type: int, payload: bytes) -> bytes:
    if len(payload) > MAX_PAYLOAD:
        raise DecodeError("payload exceeds length cap")
    return _HEADER.pack(VERSION, msg_type, len(payload)) + payload


def decode_frame(data: bytes) -> tuple[int, bytes]:
    """Parse one complete frame; rejects trailing bytes."""
    if len(data) < _HEADER.size:
        raise DecodeError("short frame header")
    version, msg_type, length = _HEADER.unpack_from(data)
    if version != VERSION:
        raise DecodeError(f"unsupported version {version}")
    if msg_type not in _KNOWN_TYPES:
        raise DecodeError(f"unknown message type {msg_type}")
    if length > MAX_PAYLOAD:
        raise DecodeError("declared length exceeds cap")
    if len(data) != _HEADER.size + length:
        raise DecodeError("frame length mismatch")
    return msg_type, data[_HEADER.size :]


def read_frame(sock) -> tuple[int, bytes]:
    """Read exactly one frame from a socket-like object."""
    header = _read_exact(sock, _HEADER.size)
    version, msg_type, length = _HEADER.unpack(header)
    if version != VERSION:
        raise DecodeError(f"unsupported version {version}")
    if msg_type not in _KNOWN_TYPES:
        raise DecodeError(f"unknown message type {msg_type}")
    if length > MAX_PAYLOAD:
        raise DecodeError("declared length exceeds cap")
    return msg_type, _read_exact(sock, length)


def _read_exact(sock, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise DecodeError("connection closed mid-frame")
        buf += chunk
    return bytes(buf)


# ---------------------------------------------------------------------------
# Flow payloads


def encode_flow(gp: GroupParams, flow: Flow1 | Flow2 | Flow3) -> bytes:
    if isinstance(flow, Flow1):
        payload = encode_fields(flow.client_id, gp.encode_element(flow.y.u1),
                                gp.encode_element(flow.y.u2), flow.tau0)
        return encode_frame(MSG_FLOW1, payload)
    if isinstance(flow, Flow2):
        payload = encode_fields(flow.server_id, flow.tau1, flow.zeta)
        return encode_frame(MSG_FLOW2, payload)
    if isinstance(flow, Flow3):
        return encode_frame(MSG_FLOW3, encode_fields(flow.tau2))
    raise DecodeError(f"not a flow: {flow!r}")


def reject_frame() -> bytes:
    """The single opaque rejection signal."""
    return encode_frame(MSG_REJECT, b"")


def decode_flow(gp: GroupParams, kappa: int, data: bytes) -> Flow1 | Flow2 | Flow3 | None:
    """Decode one frame into a flow message; MSG_REJECT decodes to None."""
    msg_type, payload = decode_frame(data)
    return decode_flow_payload(gp, kappa, msg_type, payload)


def decode_flow_payload(gp: GroupParams, kappa: int, msg_type: int,
                        payload: bytes) -> Flow1 | Flow2 | Flow3 | None:
    tag_len = kappa // 8
    if msg_type == MSG_REJECT:
        if payload:
            raise DecodeError("reject carries no payload")
        return None
    if msg_type == MSG_FLOW1:
        cid, u1, u2, tau0 = decode_fields(payload, count=4)
        if not cid:
            raise DecodeError("empty client id")
        if len(tau0) != tag_len:
            raise DecodeError("bad tag length")
        return Flow1(cid, Pair(gp.decode_element(u1), gp.decode_element(u2)), tau0)
    if msg_type == MSG_FLOW2:
        sid, tau1, zeta = decode_fields(payload, count=3)
        if not sid:
            raise DecodeError("empty server id")
        if len(tau1) != tag_len or len(zeta) != tag_len:
            raise DecodeError("bad tag length")
        return Flow2(sid, tau1, zeta)
    if msg_type == MSG_FLOW3:
        (tau2,) = decode_fields(payload, count=1)
        if len(tau2) != tag_len:
            raise DecodeError("bad tag length")
        return Flow3(tau2)
    raise DecodeError(f"unexpected message type {msg_type}")


# ---------------------------------------------------------------------------
# Public parameter bundle (group, projection, hash index, sizes, mode)


def encode_params(gp: GroupParams, pp: PhfParams, proj: Projection, mode: str,
                  n_passwords: int) -> bytes:
    payload = encode_fields(
        gp.to_bytes(),
        pp.idx,
        pp.kappa.to_bytes(2, "big"),
        pp.kdf_mode.encode(),
        gp.encode_element(proj.theta1),
        gp.encode_element(proj.theta2),
        mode.encode(),
        n_passwords.to_bytes(8, "big"),
    )
    return encode_frame(MSG_PARAMS, payload)


def decode_params(data: bytes) -> tuple[GroupParams, PhfParams, Projection, str, int]:
    msg_type, payload = decode_frame(data)
    if msg_type != MSG_PARAMS:
        raise DecodeError("not a params frame")
    gp_raw, idx, kappa_raw, kdf_mode, t1, t2, mode, n_raw = decode_fields(payload, count=8)
    try:
        gp = GroupParams.from_bytes(gp_raw)
        kappa = int.from_bytes(kappa_raw, "big")
        if kappa <= 0 or kappa % 8 or not idx:
            raise DecodeError("bad symmetric parameters")
        pp = PhfParams(gp=gp, idx=idx, kappa=kappa, kdf_mode=kdf_mode.decode())
        proj = Projection(gp.decode_element(t1), gp.decode_element(t2))
        return gp, pp, proj, mode.decode(), int.from_bytes(n_raw, "big")
    except (ValueError, UnicodeDecodeError, DomainError) as exc:
        raise DecodeError(f"bad params payload: {exc}") from exc
