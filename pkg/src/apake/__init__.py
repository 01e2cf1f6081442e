"""Asymmetric password-authenticated key exchange over safe-prime groups.

A client holding a short password and a server additionally holding a
high-entropy hashing key run a three-flow handshake built on a tag-based
projective hash family.  The package also ships the verification machinery:
exhaustive small-group property checks, the box-drawing probability engine
that governs post-key-leak dictionary attacks, an oracle-model attack
harness, and a framed TCP demo with a CLI.
"""

from .errors import (
    ApakeError,
    DecodeError,
    DomainError,
    OracleUnavailable,
    ProtocolPhaseError,
    SearchExhausted,
)
from .group import GroupParams, Pair, generate_group, rfc3526_2048
from .hashproof import PhfParams, PhfSecretKey, Projection, hash_private, hash_public, keygen
from .primitives import KeyMaterial, Profile, kdf, mac
from .protocol import (
    MODE_BASE,
    MODE_SQUARE,
    ClientConfig,
    ClientIdentity,
    Flow1,
    Flow2,
    Flow3,
    Password,
    ServerConfig,
    SessionState,
    client_on_flow2,
    client_start,
    partnered,
    server_on_flow1,
    server_on_flow3,
    transform,
    untransform,
)
from .redball import (
    BoundParams,
    RedBallInstance,
    hoeffding_bound,
    simulate_greedy,
    theta_closed_form,
    theta_optimal_dp,
)

__version__ = "0.1.0"
