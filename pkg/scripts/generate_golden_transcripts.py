#!/usr/bin/env python3
"""Regenerate tests/fixtures/golden_transcripts.json.

The fixture freezes complete toy-profile handshakes (both modes) under fixed
seeds: the wire bytes of every frame plus the secrets needed to replay them.
Run only when the wire format intentionally changes, and review the diff.
"""

import json
import pathlib
import random

from apake import wire
from apake.group import generate_group
from apake.hashproof import PhfParams, keygen
from apake.primitives import Profile
from apake.protocol import (
    ClientIdentity,
    Password,
    ServerConfig,
    client_on_flow2,
    client_start,
    server_on_flow1,
    server_on_flow3,
)

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "golden_transcripts.json"


def build(mode: str, seed: int) -> dict:
    gp = generate_group(4, b"golden-toy")
    pp = PhfParams.create(gp, Profile.toy(), random.Random(1000 + seed))
    sk, proj = keygen(pp, random.Random(2000 + seed))
    server = ServerConfig(gp=gp, pp=pp, sk=sk, projection=proj, mode=mode)
    server.register(ClientIdentity(b"alice", 1), Password(5, 8))
    client = server.client_config(b"alice")

    crng = random.Random(3000 + seed)
    srng = random.Random(4000 + seed)
    cstate, f1 = client_start(client, crng)
    sstate, f2 = server_on_flow1(server, f1, srng)
    cstate, f3 = client_on_flow2(cstate, client, f2)
    sstate = server_on_flow3(sstate, server, f3)
    assert cstate.accepted and sstate.accepted
    assert cstate.session_key == sstate.session_key

    return {
        "mode": mode,
        "seed": seed,
        "dictionary_size": 8,
        "password": 5,
        "client_id": "alice",
        "hash_index": pp.idx.hex(),
        "kappa": pp.kappa,
        "kdf_mode": pp.kdf_mode,
        "secret_key": list(sk.as_tuple()),
        "frames": {
            "params": wire.encode_params(gp, pp, proj, mode, 8).hex(),
            "flow1": wire.encode_flow(gp, f1).hex(),
            "flow2": wire.encode_flow(gp, f2).hex(),
            "flow3": wire.encode_flow(gp, f3).hex(),
        },
        "session_key": cstate.session_key.hex(),
        "sid": cstate.sid.hex(),
    }


def main() -> None:
    doc = {
        "group": {"bits": 4, "seed": "golden-toy"},
        "transcripts": [build("base", 1), build("square", 2)],
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
