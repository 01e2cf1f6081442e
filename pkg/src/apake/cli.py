"""Command-line interface.

    apake keygen    --store server.json --public params.bin [--bits ...]
    apake register  --store server.json --client alice --password 7
    apake serve     --store server.json --addr 127.0.0.1:4711
    apake login     --addr 127.0.0.1:4711 --client alice --password 7
    apake redball   --boxes 2,2 --budget 3 --target 2 [--trials N] [--csv F] [--plot F]
    apake attack    --scenario guessing|insider|persistency|partnering|secrecy ...

Experiment subcommands emit a CSV row (stdout or --csv) and optionally render
the matching figure with --plot.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from fractions import Fraction

from .errors import ApakeError
from .harness import (
    run_correctness_and_partnering_suite,
    run_insider_attack,
    run_online_guessing_experiment,
    run_persistency_experiment,
    run_secrecy_smoke,
)
from .redball import (
    BoundParams,
    RedBallInstance,
    hoeffding_bound,
    simulate_greedy,
    theta_closed_form,
    theta_optimal_dp,
)
from .errors import OracleUnavailable
from .server import AuthenticationRejected, PakeServer, ServerStore, login, session_fingerprint


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ApakeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _add_store_arg(p: argparse.ArgumentParser) -> None:
    # APAKE_STORE provides the default store path; the flag overrides it
    env = os.environ.get("APAKE_STORE")
    p.add_argument("--store", default=env, required=env is None,
                   help="server store path (defaults to $APAKE_STORE)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apake")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="create a server store and its public bundle")
    _add_store_arg(p)
    p.add_argument("--public", required=True)
    p.add_argument("--bits", type=int, default=48,
                   help="group size; >= 2048 selects the pinned 2048-bit group")
    p.add_argument("--seed", default=None, help="deterministic parameter seed")
    p.add_argument("--mode", choices=["base", "square"], default="square")
    p.add_argument("--dict-size", type=int, default=16)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("register", help="add a client to the store")
    _add_store_arg(p)
    p.add_argument("--client", required=True)
    p.add_argument("--password", type=int, required=True,
                   help="dictionary index in [1, dict-size]")
    p.add_argument("--public", default=None, help="rewrite the public bundle too")
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("serve", help="run the TCP server")
    _add_store_arg(p)
    p.add_argument("--addr", default="127.0.0.1:4711")
    p.add_argument("--mode", choices=["base", "square"], default=None,
                   help="override the store's protocol mode")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("login", help="authenticate against a running server")
    p.add_argument("--addr", default="127.0.0.1:4711")
    p.add_argument("--client", required=True)
    p.add_argument("--password", type=int, required=True)
    p.add_argument("--params", default=None,
                   help="local public bundle to verify the server greeting against")
    p.add_argument("--mode", choices=["base", "square"], default=None)
    p.set_defaults(func=cmd_login)

    p = sub.add_parser("redball", help="evaluate a box-drawing instance")
    p.add_argument("--boxes", required=True, help="comma-separated box sizes, e.g. 2,2")
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", default=None, help="write the CSV row here instead of stdout")
    p.add_argument("--plot", default=None, help="render the probability curve to this file")
    p.set_defaults(func=cmd_redball)

    p = sub.add_parser("attack", help="run a named adversary experiment")
    p.add_argument("--scenario", required=True,
                   choices=["guessing", "insider", "persistency", "partnering", "secrecy"])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dict-size", type=int, default=16)
    p.add_argument("--guesses", type=int, default=4)
    p.add_argument("--alpha", default="0.3", help="step-budget fraction (persistency)")
    p.add_argument("--ell", type=int, default=10)
    p.add_argument("--clients", type=int, default=16)
    p.add_argument("--sessions", type=int, default=1000)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--plot", default=None, help="render the report figure to this file")
    p.set_defaults(func=cmd_attack)

    return parser


def cmd_keygen(args) -> int:
    seed = args.seed.encode() if args.seed is not None else None
    store = ServerStore.create(bits=args.bits, seed=seed, mode=args.mode,
                               n_passwords=args.dict_size)
    store.save(args.store)
    store.save_public(args.public)
    print(f"store written to {args.store} (mode={args.mode}, |D|={args.dict_size})")
    print(f"public bundle written to {args.public}")
    return 0


def cmd_register(args) -> int:
    store = ServerStore.load(args.store)
    store.register(args.client, args.password)
    store.save(args.store)
    if args.public:
        store.save_public(args.public)
    print(f"registered {args.client}")
    return 0


def cmd_serve(args) -> int:
    host, port = _addr(args.addr)
    store = ServerStore.load(args.store)
    if args.mode:
        store.mode = args.mode
    server = PakeServer(store, host=host, port=port)
    server.serve_forever()
    return 0


def cmd_login(args) -> int:
    host, port = _addr(args.addr)
    expected = None
    if args.params:
        with open(args.params, "rb") as fh:
            expected = fh.read()
    try:
        sk = login(host, port, args.client, args.password,
                   expected_params=expected, mode=args.mode)
    except AuthenticationRejected:
        print("authentication rejected", file=sys.stderr)
        return 1
    print(f"accepted sk_fp={session_fingerprint(sk)}")
    return 0


def cmd_redball(args) -> int:
    boxes = [int(v) for v in args.boxes.split(",") if v]
    inst = RedBallInstance.create(boxes, args.budget, args.target)
    closed = theta_closed_form(inst)
    try:
        dp_value = float(theta_optimal_dp(inst))
        dp_repr = repr(dp_value)
    except OracleUnavailable:
        dp_repr = ""
    mc = simulate_greedy(inst, args.trials, random.Random(args.seed))

    bound_repr = ""
    bound_val = None
    sizes = set(inst.boxes)
    if inst.ell and len(sizes) == 1:
        a = next(iter(sizes))
        ratio = Fraction(inst.t, inst.ell * a)
        if 0 < ratio < Fraction(1, 2):
            bound_val = hoeffding_bound(BoundParams(ratio), inst.ell)
            bound_repr = repr(bound_val)

    header = "boxes;t;ell;trials;closed_form;dp_value;empirical;sigma;hoeffding_bound"
    row = ";".join([
        ",".join(str(a) for a in inst.boxes), str(inst.t), str(inst.ell),
        str(args.trials), repr(float(closed)), dp_repr,
        repr(mc.frequency), repr(mc.sigma), bound_repr,
    ])
    _emit(args.csv, header + "\n" + row + "\n")
    print(f"closed_form={float(closed):.6g}")

    if args.plot:
        from .plots import save_redball_figure

        save_redball_figure(inst, mc, bound_val, args.plot)
        print(f"figure written to {args.plot}")
    return 0


def cmd_attack(args) -> int:
    rng = random.Random(args.seed)
    scenario = args.scenario
    if scenario == "guessing":
        report = run_online_guessing_experiment(args.dict_size, args.guesses,
                                                args.trials, rng)
    elif scenario == "insider":
        report = run_insider_attack(rng, attempts=args.trials,
                                    n_passwords=args.dict_size)
    elif scenario == "persistency":
        report = run_persistency_experiment(args.dict_size, args.clients,
                                            Fraction(args.alpha), args.ell,
                                            args.trials, rng)
    elif scenario == "partnering":
        report = run_correctness_and_partnering_suite(args.sessions, rng)
    else:
        report = run_secrecy_smoke(args.trials, rng)

    if args.format == "json":
        _emit(args.out, json.dumps(report.as_dict(), indent=1, default=str) + "\n")
    else:
        keys = ["scenario", *report.metrics.keys(), "passed"]
        vals = [report.scenario, *report.metrics.values(), report.passed]
        text = ";".join(keys) + "\n" + ";".join(str(v).replace(";", ",") for v in vals) + "\n"
        _emit(args.out, text)
    for line in report.summary_lines():
        print(line)

    if args.plot:
        from .plots import save_attack_figure

        save_attack_figure(report.scenario, report.metrics, args.plot)
        print(f"figure written to {args.plot}")
    return 0 if report.passed else 1


def _addr(spec: str) -> tuple[str, int]:
    host, _, port = spec.rpartition(":")
    return host or "127.0.0.1", int(port)


def _emit(path: str | None, text: str) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    sys.exit(main())
