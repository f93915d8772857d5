import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from mqpc.adversary import (
    BasisPolicy,
    ColludeObserve,
    FakeSubstitution,
    InterceptResend,
    NoAttack,
    PrematureMeasureParty,
    collude_observe,
    make_strategy,
    per_decoy_detection,
    per_decoy_undetected,
    positional_guess_success,
    premature_measure,
    tap_intercept_resend,
)
from mqpc.harness import ExperimentSpec, run_experiment
from mqpc.protocol import Aborted, Equal, ProtocolConfig, SecretTable, decoy_check, insert_decoys, party_encode, run_protocol
from mqpc.qudit import Basis, BasisState
from mqpc.registry import Registry
from oracles import binomial_ok, mutual_information
from oracles import per_decoy_detection as brute_force_detection

C, F = Basis.COMPUTATIONAL, Basis.FOURIER


def test_policy_pick(rng):
    assert BasisPolicy.ALWAYS_T1.pick(rng) is C
    assert BasisPolicy.ALWAYS_T2.pick(rng) is F
    picks = [BasisPolicy.RANDOM.pick(rng) for _ in range(2000)]
    assert binomial_ok(sum(p is F for p in picks), 2000, 0.5)


@pytest.mark.parametrize("d", [2, 3, 4, 5, 8])
@pytest.mark.parametrize("policy", ["t1", "t2", "random"])
def test_brute_force_matches_closed_form(d, policy):
    assert brute_force_detection(d, policy) == pytest.approx(per_decoy_detection(d), abs=1e-12)
    assert 1 - per_decoy_detection(d) == pytest.approx(per_decoy_undetected(d))


def test_t1_tap_on_computational_decoys_is_invisible(rng):
    reg = Registry(3)
    for _ in range(100):
        k = int(rng.integers(3))
        pid = reg.create_particle(BasisState(C, k))
        tap_intercept_resend([pid], BasisPolicy.ALWAYS_T1, reg, rng)
        assert reg.measure_particle(pid, C, rng) == k


def test_t1_tap_on_fourier_decoy_d3(rng, backend):
    # brute force over the 3 x 3 outcome table: 1 - 1/3 = 2/3
    d = 3
    table = np.abs(np.fft.ifft(np.eye(d), axis=0) * np.sqrt(d)) ** 2  # |<j|F_k>|^2
    exact = sum(table[j, k] * (1 - 1 / d) for j in range(d) for k in range(d)) / d
    assert exact == pytest.approx(2 / 3)
    n, wrong = 20_000, 0
    reg = Registry(d)
    for _ in range(n):
        k = int(rng.integers(d))
        pid = reg.create_particle(BasisState(F, k))
        tap_intercept_resend([pid], BasisPolicy.ALWAYS_T1, reg, rng)
        wrong += reg.measure_particle(pid, F, rng) != k
    assert binomial_ok(wrong, n, exact)


@pytest.mark.parametrize("policy", list(BasisPolicy))
def test_per_decoy_undetected_monte_carlo(policy, rng, backend):
    d, batches, size = 4, 40, 500
    reg = Registry(d)
    checked = bad = 0
    for _ in range(batches):
        seq = insert_decoys([], size, reg, rng)
        tap_intercept_resend(list(seq.particles), policy, reg, rng)
        res = decoy_check(seq.record, seq.particles, reg, rng, threshold=1.0)
        checked += res.checked
        bad += res.mismatches
    assert binomial_ok(bad, checked, per_decoy_detection(d))


def test_premature_measure_run_level_detection():
    d, L, trials = 3, 2, 4000
    cfg = ProtocolConfig(d, d, L, seed=9)
    report = run_experiment(ExperimentSpec(cfg, None, PrematureMeasureParty(2), trials))
    assert report.stats.count_at("reference-check") == report.stats.detected
    assert binomial_ok(report.stats.detected, trials, 1 - d**-L)


def test_premature_measure_observations(rng):
    reg = Registry(3)
    groups = [[reg.create_particle(BasisState(C, 2)), reg.create_particle(BasisState(C, 0))]]
    assert premature_measure(groups, reg, rng) == [[2, 0]]


@pytest.mark.parametrize("d", range(2, 9))
def test_premature_observation_independent_of_secret(d):
    """Party 2 sees k + q_1 + x_1 mod d; exact enumeration over uniform k and q_1."""
    dists = []
    for x in (0, 1):
        dist = [Fraction(0)] * d
        for k, q in itertools.product(range(d), repeat=2):
            dist[(k + q + x) % d] += Fraction(1, d * d)
        dists.append(dist)
    assert dists[0] == dists[1] == [Fraction(1, d)] * d


def test_premature_observations_recorded_in_run():
    cfg = ProtocolConfig(3, 3, 2, seed=4)
    res = run_protocol(cfg, SecretTable((1, 1, 1), 2), PrematureMeasureParty(3))
    obs = res.attack_log["observed"]
    assert len(obs) == 2 and all(len(g) == 2 for g in obs)


# -- collusion ------------------------------------------------------------


@pytest.mark.parametrize("d", [2, 3, 5])
def test_collude_observe_learns_masked_value(d, rng):
    for q, x in itertools.product(range(d), (0, 1)):
        learned = collude_observe([x], [q], Registry(d), rng)
        assert learned == [(q + x) % d]


@pytest.mark.parametrize("d", range(2, 9))
def test_collude_mutual_information_zero(d, rng):
    joint = {}
    for x, q in itertools.product((0, 1), range(d)):
        (y,) = collude_observe([x], [q], Registry(d), rng)
        joint[(x, y)] = joint.get((x, y), 0) + Fraction(1, 2 * d)
    assert mutual_information(joint) == pytest.approx(0.0, abs=1e-15)
    for y in range(d):
        assert joint[(0, y)] == joint[(1, y)]


@pytest.mark.parametrize("d", [2, 3])
def test_collusion_view_identical_for_both_bits(d):
    """Colluders see (fake value, measured value); enumerate fake value and key exactly."""
    views = {}
    for x in (0, 1):
        dist = {}
        for f, q in itertools.product(range(d), repeat=2):
            reg = Registry(d)
            g = [reg.create_particle(BasisState(C, f)) for _ in range(2)]
            party_encode([g], [x], [q], reg)
            seen = (f, reg.measure_particle(g[0], C, np.random.default_rng(0)))
            dist[seen] = dist.get(seen, 0) + Fraction(1, d * d)
        views[x] = dist
    assert views[0] == views[1]


def test_collusion_negative_control_with_known_keys(rng):
    for d in (2, 3, 5):
        for q, x in itertools.product(range(d), (0, 1)):
            (y,) = collude_observe([x], [q], Registry(d), rng)
            assert (y - q) % d == x


def test_collusion_full_run_undetected_and_correct():
    d, L = 3, 2
    for seed in range(200):
        cfg = ProtocolConfig(d, d, L, seed=seed)
        secrets = SecretTable((seed % 4, 3, seed % 4 if seed % 2 else 3), L)
        res = run_protocol(cfg, secrets, ColludeObserve(2))
        assert not res.aborted
        assert (res.outcome == Equal()) == secrets.all_equal
        expected = [(q + x) % d for q, x in zip(res.keys.party(2), secrets.bits(2))]
        assert res.attack_log["learned"] == expected


def test_collusion_victim_needs_colluding_neighbours():
    for m in (1, 3):
        with pytest.raises(ValueError):
            ColludeObserve(m).make(ProtocolConfig(3, 3, 1))
    with pytest.raises(ValueError):
        ColludeObserve(2).make(ProtocolConfig(2, 2, 1))


# -- fake substitution ------------------------------------------------


def test_fake_substitution_per_decoy_detection():
    d, L, trials = 3, 2, 3000
    checked = bad = 0
    for seed in range(trials):
        cfg = ProtocolConfig(d, d, L, threshold=1.0, seed=seed)
        res = run_protocol(cfg, SecretTable((0, 0, 0), L), FakeSubstitution(1))
        for rec in res.transcript.of_type("check"):
            if rec["hop"] == 3:
                checked += rec["checked"]
                bad += rec["mismatches"]
    assert checked == trials * 2 * L
    assert binomial_ok(bad, checked, per_decoy_detection(d))


def test_fake_substitution_without_decoys_goes_unnoticed():
    d, L = 3, 2
    for seed in range(200):
        cfg = ProtocolConfig(d, d, L, decoys_per_hop=0, seed=seed)
        secrets = SecretTable((1, 2, 1) if seed % 2 else (2, 2, 2), L)
        res = run_protocol(cfg, secrets, FakeSubstitution(1))
        assert not res.aborted
        assert (res.outcome == Equal()) == secrets.all_equal
        assert res.attack_log["located"] is True
        assert res.attack_log["learned"] == [(q + x) % d for q, x in zip(res.keys.party(2), secrets.bits(2))]


def test_fake_substitution_positional_guess_rate():
    d, L, decoys, trials = 2, 1, 2, 6000
    hits = 0
    for seed in range(trials):
        cfg = ProtocolConfig(d, d, L, decoys, threshold=1.0, seed=seed)
        res = run_protocol(cfg, SecretTable((0, 0), L), FakeSubstitution(1))
        hits += res.attack_log["located"]
    p = positional_guess_success(L, decoys)
    assert p == pytest.approx(math.factorial(2) * math.factorial(2) / math.factorial(4))
    assert binomial_ok(hits, trials, p)


def test_fake_substitution_range():
    with pytest.raises(ValueError):
        FakeSubstitution(3).make(ProtocolConfig(3, 3, 1))


# -- strategies at campaign scale ------------------------------------


@pytest.mark.parametrize(
    "attack,cfg",
    [
        (InterceptResend(2, BasisPolicy.RANDOM), ProtocolConfig(3, 3, 1, seed=101)),
        (InterceptResend(4, BasisPolicy.ALWAYS_T1), ProtocolConfig(3, 3, 1, seed=102)),
        (InterceptResend(1, BasisPolicy.ALWAYS_T2), ProtocolConfig(3, 3, 1, seed=103)),
        (PrematureMeasureParty(1), ProtocolConfig(3, 3, 1, seed=104)),
        (FakeSubstitution(2), ProtocolConfig(3, 3, 1, seed=105)),
    ],
    ids=lambda v: getattr(v, "name", ""),
)
def test_detection_converges_to_analytic(attack, cfg):
    trials = 10_000
    report = run_experiment(ExperimentSpec(cfg, None, attack, trials))
    ref = attack.analytic(cfg)
    assert report.stats.detected > 0
    assert binomial_ok(report.stats.detected, trials, ref["detection"])
    stage = attack.target_stage(cfg)
    assert binomial_ok(report.stats.count_at(stage), trials, ref["stage_detection"])


@pytest.mark.parametrize("attack", [ColludeObserve(2), FakeSubstitution(1)], ids=["collude", "fake-no-decoys"])
def test_undetectable_cases_never_abort(attack):
    cfg = ProtocolConfig(3, 3, 1, decoys_per_hop=0 if isinstance(attack, FakeSubstitution) else None, seed=7)
    report = run_experiment(ExperimentSpec(cfg, None, attack, 2000))
    assert report.stats.detected == 0 == attack.analytic(cfg)["detection"]


def test_no_attack_is_bit_identical_to_honest_run():
    cfg = ProtocolConfig(4, 4, 2, seed=77)
    s = SecretTable((3, 3, 1, 3), 2)
    assert run_protocol(cfg, s, NoAttack()).transcript.to_jsonl() == run_protocol(cfg, s).transcript.to_jsonl()


def test_intercept_hop_range():
    with pytest.raises(ValueError):
        InterceptResend(5).make(ProtocolConfig(3, 3, 1))
    with pytest.raises(ValueError):
        PrematureMeasureParty(0).make(ProtocolConfig(3, 3, 1))


def test_make_strategy():
    assert make_strategy("none") == NoAttack()
    assert make_strategy("intercept-resend", 3, "t1") == InterceptResend(3, BasisPolicy.ALWAYS_T1)
    assert make_strategy("premature-measure", 1) == PrematureMeasureParty(1)
    assert make_strategy("fake-substitution") == FakeSubstitution(1)
    assert make_strategy("collude-observe") == ColludeObserve(2)
    with pytest.raises(ValueError):
        make_strategy("trojan-horse")
    with pytest.raises(ValueError):
        make_strategy("intercept-resend", 1, "diagonal")


def test_intercept_aborts_at_tapped_hop():
    cfg = ProtocolConfig(2, 2, 4, seed=1)
    aborts = [run_protocol(ProtocolConfig(2, 2, 4, seed=s), SecretTable((1, 1), 4), InterceptResend(2)).outcome for s in range(50)]
    stages = {o.stage for o in aborts if isinstance(o, Aborted)}
    assert stages <= {"hop-2", "reference-check"}
    assert cfg.hops == 3
