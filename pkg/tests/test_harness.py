import random
from fractions import Fraction

import pytest

from apake.errors import DomainError
from apake.harness import (
    REJECTED,
    SERVER,
    QueryRefused,
    make_world,
    run_correctness_and_partnering_suite,
    run_insider_attack,
    run_online_guessing_experiment,
    run_persistency_experiment,
    run_secrecy_smoke,
)
from apake.protocol import Flow1, Flow3


@pytest.fixture(scope="module")
def shared_group(bench_gp):
    return bench_gp


def fresh_world(seed, **kw):
    rng = random.Random(seed)
    return make_world(rng, **kw), rng


def test_execute_produces_matching_keys(shared_group):
    world, _ = fresh_world(1, gp=shared_group)
    world.execute(b"C1", 1, 1)
    c = world.instances[(b"C1", 1)].state
    s = world.instances[(SERVER, 1)].state
    assert c.accepted and s.accepted
    assert c.session_key == s.session_key
    assert world.q_counts == {b"C1": 0, b"C2": 0}  # Execute is not a Send


def test_execute_transcripts_differ(shared_group):
    world, _ = fresh_world(2, gp=shared_group)
    t1 = world.execute(b"C1", 1, 1)
    t2 = world.execute(b"C1", 2, 2)
    assert t1.flow1.y != t2.flow1.y
    assert t1.flow2.zeta != t2.flow2.zeta


def test_stale_labels_rejected(shared_group):
    world, _ = fresh_world(3, gp=shared_group)
    world.execute(b"C1", 1, 1)
    with pytest.raises(DomainError):
        world.execute(b"C1", 1, 2)


def test_full_transcript_replay_never_completes(shared_group):
    world, _ = fresh_world(4, gp=shared_group)
    transcripts = [world.execute(b"C1", ("e", k), ("se", k)) for k in range(20)]
    for k, tr in enumerate(transcripts):
        # replaying flow1 opens a server instance (the point is valid), but
        # the replayed flow3 can never match the fresh zeta
        reply = world.send(1, SERVER, ("r", k), tr.flow1)
        if reply is not REJECTED:
            assert world.send(3, SERVER, ("r", k), tr.flow3) is REJECTED
            assert not world.instances[(SERVER, ("r", k))].state.accepted
        # replaying flow2 against a fresh client instance fails too
        world.send(0, b"C1", ("c", k), None)
        assert world.send(2, b"C1", ("c", k), tr.flow2) is REJECTED
    assert not any(world.non_auth_flags().values())


def test_send0_returns_flow1_and_counts(shared_group):
    world, _ = fresh_world(5, gp=shared_group)
    f1 = world.send(0, b"C1", 1, None)
    assert isinstance(f1, Flow1)
    assert world.q_counts[b"C1"] == 1
    assert world.q_counts[b"C2"] == 0


def test_q_attribution_follows_named_client(shared_group):
    world, _ = fresh_world(6, gp=shared_group)
    f1 = world.send(0, b"C1", 1, None)
    world.send(1, SERVER, 1, f1)
    assert world.q_counts == {b"C1": 2, b"C2": 0}
    outcome = world.outcome()
    assert outcome.total_sends == 2  # the invariant: sum Q_i = total Sends


def test_malformed_send_counted_and_rejected(shared_group):
    world, _ = fresh_world(7, gp=shared_group)
    world.send(0, b"C1", 1, None)
    assert world.send(2, b"C1", 1, object()) is REJECTED
    assert world.q_counts[b"C1"] == 2


def test_guess_accepted_iff_password_matches(shared_group):
    from apake.harness import _impersonation_attempt

    world, _ = fresh_world(8, gp=shared_group, n_passwords=16)
    true_pw = world.server_cfg.records[b"C1"].password.value
    for guess in range(1, 17):
        got = _impersonation_attempt(world, b"C1", guess, 16)
        assert got == (guess == true_pw)
    flags = world.non_auth_flags()
    assert flags[b"C1"] and not flags[b"C2"]  # disjoint attribution


def test_corrupt_then_impersonate_is_not_non_auth(shared_group):
    from apake.harness import _impersonation_attempt

    world, _ = fresh_world(9, gp=shared_group)
    pw, stats = world.corrupt(b"C1")
    assert _impersonation_attempt(world, b"C1", pw.value, 16)
    assert not world.non_auth_flags()[b"C1"]  # corrupted client is excluded


def test_corrupt_returns_password_and_states(shared_group):
    world, _ = fresh_world(10, gp=shared_group)
    world.execute(b"C1", 1, 1)
    pw, stats = world.corrupt(b"C1")
    assert pw == world.server_cfg.records[b"C1"].password
    assert stats[1] == world.instances[(b"C1", 1)].state.stat


def test_reveal_returns_session_key(shared_group):
    world, _ = fresh_world(11, gp=shared_group)
    world.execute(b"C1", 1, 1)
    assert world.reveal(b"C1", 1) == world.instances[(b"C1", 1)].state.session_key


def test_test_oracle_restrictions(shared_group):
    world, _ = fresh_world(12, gp=shared_group)
    world.execute(b"C1", 1, 1)
    world.execute(b"C1", 2, 2)

    # incomplete instance refused
    world.send(0, b"C1", 3, None)
    with pytest.raises(QueryRefused):
        world.test(b"C1", 3)

    # revealed instance refused
    world.reveal(b"C1", 2)
    with pytest.raises(QueryRefused):
        world.test(b"C1", 2)

    challenge = world.test(b"C1", 1)
    assert len(challenge) == world.pp.kappa // 8
    # reveal of the partnered instance refused after test
    with pytest.raises(QueryRefused):
        world.reveal(SERVER, 1)
    # corrupting a test party refused
    with pytest.raises(QueryRefused):
        world.corrupt(b"C1")
    # second test refused
    with pytest.raises(QueryRefused):
        world.test(b"C1", 1)


def test_test_coin_flip_baseline(shared_group):
    hits = 0
    trials = 400
    for k in range(trials):
        world, rng = fresh_world(1000 + k, gp=shared_group, n_clients=1)
        world.execute(b"C1", 1, 1)
        world.test(b"C1", 1)
        if world.test_guess(rng.getrandbits(1)):
            hits += 1
    rate = hits / trials
    assert abs(rate - 0.5) <= 3 * (0.25 / trials) ** 0.5


def test_metered_mac_counts_steps(shared_group):
    world, _ = fresh_world(13, gp=shared_group)
    for k in range(7):
        world.metered_mac(b"k", b"m%d" % k)
    assert world.mac_step_count == 7


def test_execute_queries_do_not_shift_guess_rate(shared_group):
    # paired experiment: interleaving eavesdropped executions must not move
    # the online-guess success frequency
    from apake.harness import _impersonation_attempt

    trials = 400
    rng = random.Random(14)

    def run(with_executes):
        hits = 0
        for _ in range(trials):
            world = make_world(rng, n_clients=2, n_passwords=16, gp=None, bits=32)
            if with_executes:
                world.execute(b"C1", "bg1", "bgs1")
                world.execute(b"C2", "bg2", "bgs2")
            guesses = rng.sample(range(1, 17), 4)
            if any(_impersonation_attempt(world, b"C1", g, 16) for g in guesses):
                hits += 1
        return hits / trials

    base, mixed = run(False), run(True)
    sigma = (0.25 * 0.75 / trials) ** 0.5
    assert abs(base - 0.25) <= 3 * sigma
    assert abs(mixed - 0.25) <= 3 * sigma


def test_guessing_experiment_small():
    rep = run_online_guessing_experiment(16, 4, 400, random.Random(15), bits=32)
    assert rep.passed
    assert rep.metrics["isolated_non_auth_rate"] == 0.0


def test_insider_experiment_small():
    rep = run_insider_attack(random.Random(16), attempts=60, bits=32)
    assert rep.passed
    assert rep.metrics["acceptances"] == 0
    assert rep.metrics["control_login_ok"]


def test_persistency_experiment_small():
    rep = run_persistency_experiment(32, 12, Fraction(3, 10), 10, 150,
                                     random.Random(17), bits=32)
    assert rep.metrics["budget_steps"] == 96
    assert rep.metrics["break_frequency"] <= rep.metrics["hoeffding_bound"]
    assert rep.passed


def test_persistency_step_budget_is_exact():
    rep = run_persistency_experiment(8, 4, Fraction(2, 5), 2, 40,
                                     random.Random(18), bits=32)
    assert rep.metrics["budget_steps"] == int(Fraction(2, 5) * 2 * 8)
    assert rep.metrics["mean_steps"] <= rep.metrics["budget_steps"]


def test_persistency_full_budget_always_breaks():
    # with budget >= ell * N the sweep cannot fail
    rep = run_persistency_experiment(8, 3, Fraction(49, 100), 1, 30,
                                     random.Random(19), bits=32)
    # alpha < 1/2 caps the budget below N; use the closed form instead:
    # here budget = floor(0.49*8) = 3, so this is a genuine tail case
    assert 0 <= rep.metrics["break_frequency"] <= 1


def test_persistency_rejects_vacuous_alpha():
    with pytest.raises(DomainError):
        run_persistency_experiment(8, 4, Fraction(1, 2), 2, 5, random.Random(20))


def test_partnering_suite_small():
    rep = run_correctness_and_partnering_suite(120, random.Random(21), bits=32)
    assert rep.passed
    assert rep.metrics["violations"] == 0
    assert rep.metrics["accepted_instances"] == 240


def test_dropped_flow3_is_not_non_auth(shared_group):
    world, _ = fresh_world(22, gp=shared_group)
    f1 = world.send(0, b"C1", 1, None)
    f2 = world.send(1, SERVER, 1, f1)
    f3 = world.send(2, b"C1", 1, f2)
    assert isinstance(f3, Flow3)  # client accepted; flow3 now dropped
    assert world.instances[(b"C1", 1)].state.accepted
    assert not world.instances[(SERVER, 1)].state.accepted
    assert not world.non_auth_flags()[b"C1"]


def test_duplicate_flow2_delivery_rejected(shared_group):
    world, _ = fresh_world(23, gp=shared_group)
    f1 = world.send(0, b"C1", 1, None)
    f2 = world.send(1, SERVER, 1, f1)
    f3 = world.send(2, b"C1", 1, f2)
    assert isinstance(f3, Flow3)
    assert world.send(2, b"C1", 1, f2) is REJECTED
    assert world.instances[(b"C1", 1)].state.accepted


def test_zeta_never_repeats_across_sessions(shared_group):
    world, _ = fresh_world(26, gp=shared_group)
    zetas = set()
    for k in range(500):
        tr = world.execute(b"C1", ("z", k), ("zs", k))
        assert tr.flow2.zeta not in zetas
        zetas.add(tr.flow2.zeta)


def test_secrecy_smoke_small():
    rep = run_secrecy_smoke(400, random.Random(24), bits=32)
    assert rep.passed


def test_report_serialization(tmp_path):
    rep = run_insider_attack(random.Random(25), attempts=10, bits=32)
    out = tmp_path / "rep.csv"
    rep.write_csv(str(out))
    header, row = out.read_text().strip().splitlines()
    assert header.startswith("scenario")
    assert row.startswith("insider")
    assert rep.as_dict()["scenario"] == "insider"
