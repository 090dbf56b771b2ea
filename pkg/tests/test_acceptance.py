"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Tolerances and runtime budgets are pinned here; nothing is deferred
to later calibration.
"""

import math
import random
import time
from collections import defaultdict
from fractions import Fraction

import dynproof as dp
import dynproof.cli as cli


def _elapsed(t_start):
    return time.monotonic() - t_start


# 1 -------------------------------------------------------------------------

def test_schedule_reproduction(capsys):
    t_start = time.monotonic()
    schedule = dp.FinalitySchedule(t0_ms=500, r_t=4, c0=100, r_c=0.7, max_step=10)
    assert dp.window_duration(0, schedule) == 500
    assert dp.window_duration(1, schedule) == 2000
    assert dp.window_duration(10, schedule) == 524_288_000
    days = dp.window_duration(10, schedule) / dp.schedule.MS_PER_DAY
    assert 6.0 <= days <= 6.1
    assert cli.main(["schedule", "--t0", "500", "--rt", "4", "--c0", "100",
                     "--rc", "0.7", "--max-step", "10"]) == 0
    out = capsys.readouterr().out
    assert "524288000" in out and "days" in out
    elapsed = _elapsed(t_start)
    assert elapsed < 1.0
    print(f"PASS schedule-reproduction: t0=500 t1=2000 t10=524288000 ({days:.3f} days) "
          f"[{elapsed:.2f}s]")


# 2 -------------------------------------------------------------------------

def test_threshold_reproduction():
    t_start = time.monotonic()
    schedule = dp.FinalitySchedule(t0_ms=500, r_t=4, c0=100, r_c=0.7, max_step=10)
    assert dp.required_challengers(1, schedule) == 70
    raw = float(dp.required_raw(10, schedule))
    assert abs(raw - 2.8248) <= 1e-4
    assert dp.required_challengers(10, schedule) == 2
    elapsed = _elapsed(t_start)
    assert elapsed < 1.0
    print(f"PASS threshold-reproduction: c1=70 c10_raw={raw:.8f} floored=2 [{elapsed:.2f}s]")


# 3 -------------------------------------------------------------------------

def test_probability_reproduction():
    t_start = time.monotonic()
    params = dp.SecurityParams(0.01, 0.9, 1.0, 100, 0.1)
    p = dp.p_challenge(params)
    fast = dp.p_fast_finality(params)
    assert abs(p - 0.0089998) <= 1e-6
    assert abs(fast - 0.9910) <= 1e-4
    elapsed = _elapsed(t_start)
    assert elapsed < 1.0
    print(f"PASS probability-reproduction: P(E)={p:.7f} fast={fast:.7f} [{elapsed:.2f}s]")


# 4 -------------------------------------------------------------------------

def test_monte_carlo_oracle():
    t_start = time.monotonic()
    params = dp.SecurityParams(0.01, 0.9, 1.0, 100, 0.1)
    big = dp.monte_carlo_p_challenge(params, trials=1_000_000, seed=0)
    assert abs(big.estimate - 0.0089998) <= 3 * big.std_error

    rng = random.Random(20_240_817)
    checked = 0
    for i in range(20):
        random_params = dp.SecurityParams(
            p_fraud=rng.uniform(0.2, 1.0),
            p_detect_given_fraud=rng.uniform(0.5, 1.0),
            p_window=rng.uniform(0.5, 1.0),
            n_nodes=rng.randint(1, 50),
            p_node_challenge=rng.uniform(0.05, 1.0),
        )
        estimate = dp.monte_carlo_p_challenge(random_params, trials=100_000, seed=i + 1)
        closed = dp.p_challenge(random_params)
        assert abs(estimate.estimate - closed) <= 3 * estimate.std_error, (
            f"set {i}: {estimate.estimate} vs {closed} (se {estimate.std_error})"
        )
        checked += 1
    elapsed = _elapsed(t_start)
    assert elapsed < 120.0
    print(f"PASS monte-carlo-oracle: 1e6-trial z={big.z_score(0.0089998):+.2f}, "
          f"{checked} random sets within 3 s.e. [{elapsed:.1f}s]")


# 5 -------------------------------------------------------------------------

def _random_safety_config(rng: random.Random, index: int) -> dp.ScenarioConfig:
    n_honest = rng.randint(1, 3)   # always-online honest watchers
    n_flaky = rng.randint(0, 3)
    n_lazy = rng.randint(0, 3)
    pool_size = n_honest + n_flaky + n_lazy
    schedule = dp.FinalitySchedule(
        t0_ms=rng.choice([200, 500, 1000]),
        r_t=rng.choice([2, 3, 4]),
        c0=rng.randint(0, pool_size),
        r_c=rng.choice([0.5, 0.7, 0.9]),
        max_step=rng.randint(3, 6),
    )
    population = [dp.operator_spec("op", fraud_rate=rng.uniform(0.2, 1.0), balance=10**6)]
    population += [dp.challenger_spec(f"h{i}", balance=10**6) for i in range(n_honest)]
    population += [
        dp.challenger_spec(f"f{i}", p_online=rng.uniform(0.2, 0.9)) for i in range(n_flaky)
    ]
    population += [dp.lazy_spec(f"l{i}", p_verify=rng.choice([0.0, 0.3])) for i in range(n_lazy)]
    if rng.random() < 0.4:
        # sign-off censorship is allowed; challenge censorship is not
        population.append(
            dp.censor_spec("cz", budget=rng.randint(5, 60),
                           p_suppress=rng.uniform(0.3, 1.0),
                           suppress_sign_offs=True, suppress_challenges=False)
        )
    return dp.ScenarioConfig(
        seed=10_000 + index,
        duration_ms=rng.choice([4000, 6000, 8000]),
        commitment_cadence_ms=rng.choice([600, 1000, 1500]),
        schedule=schedule,
        population=tuple(population),
        dispute_latency_ms=rng.choice([0, 50, 150]),
        probe_rate=rng.choice([0.0, 0.2]),
        operator_bond=rng.choice([500, 1000]),
    )


def test_safety_property_suite():
    t_start = time.monotonic()
    rng = random.Random(51_423)
    total_fraud = 0
    for index in range(200):
        config = _random_safety_config(rng, index)
        report = dp.run_scenario(config)
        assert report.fraud_finalized == 0, f"scenario {index} finalized fraud"
        total_fraud += report.fraud_attempted
    elapsed = _elapsed(t_start)
    assert elapsed < 300.0
    assert total_fraud > 0
    print(f"PASS safety-suite: 200 scenarios, {total_fraud} fraud attempts, "
          f"0 finalized [{elapsed:.1f}s]")


# 6 -------------------------------------------------------------------------

def test_liveness_property_suite():
    t_start = time.monotonic()
    rng = random.Random(61_423)
    total = 0
    for index in range(50):
        pool_size = rng.randint(1, 8)
        t0 = rng.choice([200, 500, 800])
        schedule = dp.FinalitySchedule(
            t0_ms=t0, r_t=rng.choice([2, 3, 4]),
            c0=rng.randint(0, pool_size), r_c=rng.choice([0.5, 0.7, 0.9]),
            max_step=rng.randint(3, 6),
        )
        population = (dp.operator_spec("op"),) + tuple(
            dp.challenger_spec(f"h{i}") for i in range(pool_size)
        )
        config = dp.ScenarioConfig(
            seed=20_000 + index,
            duration_ms=rng.choice([6000, 10_000]),
            commitment_cadence_ms=rng.choice([1000, 1600]),
            schedule=schedule,
            population=population,
        )
        report = dp.run_scenario(config)
        assert report.submitted > 0
        assert report.finalized == report.submitted
        assert report.pending == 0
        assert report.finalization_steps == {0: report.submitted}
        assert report.latency_p50_ms == report.latency_max_ms == t0
        total += report.submitted
    elapsed = _elapsed(t_start)
    print(f"PASS liveness-suite: 50 all-honest scenarios, {total} commitments all at "
          f"step 0 with latency exactly t0 [{elapsed:.1f}s]")


# 7 -------------------------------------------------------------------------

def _audit_window_durations(report: dp.SimReport, schedule: dp.FinalitySchedule) -> None:
    per_commitment = defaultdict(list)
    for record in report.trace.records:
        if record["kind"] in ("submitted", "extended", "finalized"):
            per_commitment[record["commitment"]].append(record)
    assert per_commitment
    for records in per_commitment.values():
        assert records[0]["kind"] == "submitted"
        t_prev = records[0]["ts"]
        for n, record in enumerate(records[1:]):
            expected = dp.window_duration(min(n, schedule.max_step), schedule)
            assert record["ts"] - t_prev == expected, "window duration drifted from t_n"
            t_prev = record["ts"]


def test_censorship_property():
    t_start = time.monotonic()
    schedule = dp.FinalitySchedule(t0_ms=500, r_t=4, c0=8, r_c=0.7, max_step=6)
    for k in (1, 2, 3):
        for seed in (1, 2):
            population = (dp.operator_spec("op"),) + tuple(
                dp.challenger_spec(f"h{i}") for i in range(8)
            ) + (dp.censor_spec("cz", budget=k * 8),)
            config = dp.ScenarioConfig(
                seed=30_000 + 10 * k + seed,
                duration_ms=4000,
                commitment_cadence_ms=4000,  # one commitment per run
                schedule=schedule,
                population=population,
            )
            report = dp.run_scenario(config)
            assert report.submitted == 1 and report.finalized == 1
            assert all(step >= k for step in report.finalization_steps)
            assert report.suppressed_events == k * 8
            assert report.latency_max_ms == dp.cumulative_duration(k, schedule)
            _audit_window_durations(report, schedule)
    elapsed = _elapsed(t_start)
    print(f"PASS censorship-property: k in {{1,2,3}} delays finalization to step >= k, "
          f"window durations exact [{elapsed:.1f}s]")


# 8 -------------------------------------------------------------------------

def test_ledger_conservation():
    t_start = time.monotonic()
    rng = random.Random(81_423)
    parties = [dp.NodeId(f"n{i}", dp.NodeRole.CHALLENGER) for i in range(8)]
    ledger = dp.BondLedger()
    for party in parties:
        ledger.mint(party, 2_000)
    purposes = list(dp.BondPurpose)
    reasons = {
        dp.BondPurpose.OPERATOR_BOND: dp.SlashReason.FRAUD_PROVEN,
        dp.BondPurpose.CHALLENGER_BOND: dp.SlashReason.FALSE_CHALLENGE,
    }
    applied = 0
    for _ in range(10_000):
        kind = rng.choice(["post", "release", "slash", "mint"])
        party, other = rng.choice(parties), rng.choice(parties)
        amount = rng.randrange(0, 500)
        purpose = rng.choice(purposes)
        try:
            if kind == "post":
                ledger.post_bond(party, amount, purpose)
            elif kind == "release":
                ledger.release_bond(party, purpose, amount)
            elif kind == "slash":
                share = Fraction(rng.randrange(0, 4), 3) if rng.random() < 0.9 else Fraction(1)
                share = min(share, Fraction(1))
                ledger.apply_verdict(
                    dp.SlashEvent(party, amount, reasons[purpose],
                                  other if share > 0 else None, share)
                )
            else:
                ledger.mint(party, amount)
            applied += 1
        except (dp.ProtocolError, ValueError):
            continue
        held = sum(ledger.balances.values()) + sum(ledger.escrow.values()) + ledger.burned
        assert held == ledger.total_supply  # exact, zero tolerance
    elapsed = _elapsed(t_start)
    assert applied > 1000
    print(f"PASS ledger-conservation: 10000 random ops ({applied} applied), "
          f"supply exact [{elapsed:.1f}s]")


# 9 -------------------------------------------------------------------------

def test_probe_effectiveness():
    t_start = time.monotonic()
    rng = random.Random(91_423)
    total_lazy_slashes = 0
    for index in range(50):
        n_lazy = rng.randint(1, 4)
        n_honest = rng.randint(1, 3)
        pool_size = n_lazy + n_honest
        schedule = dp.FinalitySchedule(
            t0_ms=500, r_t=4, c0=pool_size, r_c=0.7, max_step=4
        )
        population = (dp.operator_spec("op"),) + tuple(
            dp.lazy_spec(f"l{i}", p_verify=0.0) for i in range(n_lazy)
        ) + tuple(dp.challenger_spec(f"h{i}") for i in range(n_honest))
        config = dp.ScenarioConfig(
            seed=40_000 + index,
            duration_ms=rng.choice([10_000, 20_000]),
            schedule=schedule,
            population=tuple(population),
            probe_rate=rng.uniform(0.4, 0.8),
            dispute_latency_ms=rng.choice([0, 50]),
        )
        report = dp.run_scenario(config)
        lazy_names = {f"l{i}" for i in range(n_lazy)}
        for event in report.world.ledger.events:
            if event.reason is dp.SlashReason.LAZY_PROBE_FAILURE:
                assert event.party.name in lazy_names, "honest verifier slashed"
        for cid, probe in report.world.probes.items():
            window = report.world.windows[cid]
            lazy_signers = {n for n in window.sign_offs if n.name in lazy_names}
            slashed = {
                s.party for s in probe.slashes
                if s.reason is dp.SlashReason.LAZY_PROBE_FAILURE
            }
            assert lazy_signers == slashed, "a lazy signer escaped the probe slash"
            total_lazy_slashes += len(slashed)
    elapsed = _elapsed(t_start)
    assert total_lazy_slashes > 0
    print(f"PASS probe-effectiveness: 50 scenarios, {total_lazy_slashes} lazy signers "
          f"slashed, honest verifiers untouched [{elapsed:.1f}s]")


# 10 ------------------------------------------------------------------------

def test_determinism():
    t_start = time.monotonic()
    schedule = dp.FinalitySchedule(t0_ms=500, r_t=4, c0=4, r_c=0.7, max_step=6)
    population = (
        dp.operator_spec("op", fraud_rate=0.5),
        dp.challenger_spec("h0"), dp.challenger_spec("h1"),
        dp.challenger_spec("h2", p_online=0.6),
        dp.lazy_spec("l0"),
        dp.censor_spec("cz", budget=25),
    )
    config = dp.ScenarioConfig(
        seed=50_001, duration_ms=30_000, schedule=schedule, population=population,
        probe_rate=0.3, dispute_latency_ms=70,
    )
    first = dp.run_scenario(config)
    second = dp.run_scenario(config)
    assert first.trace_sha256 == second.trace_sha256
    assert first.trace.serialize() == second.trace.serialize()
    assert first.to_dict() == second.to_dict()
    elapsed = _elapsed(t_start)
    print(f"PASS determinism: trace sha256 {first.trace_sha256[:16]}... identical "
          f"across runs [{elapsed:.1f}s]")


# 11 ------------------------------------------------------------------------

def test_empirical_vs_analytical_bridge():
    t_start = time.monotonic()
    n_nodes, p_node, p_fraud = 12, 0.15, 0.2
    commitments = 10_000
    cadence = 600
    schedule = dp.FinalitySchedule(t0_ms=500, r_t=4, c0=0, r_c=1, max_step=2)
    population = (dp.operator_spec("op", fraud_rate=p_fraud, balance=10**7),) + tuple(
        dp.challenger_spec(f"h{i}", p_online=p_node, balance=10**6) for i in range(n_nodes)
    )
    config = dp.ScenarioConfig(
        seed=60_001,
        duration_ms=commitments * cadence,
        commitment_cadence_ms=cadence,
        schedule=schedule,
        population=population,
        dispute_latency_ms=50,
        operator_bond=1000,
        operator_slash=10,
    )
    report = dp.run_scenario(config)
    assert report.submitted == commitments
    params = dp.SecurityParams(p_fraud, 1.0, 1.0, n_nodes, p_node)
    expected = dp.p_challenge(params)
    observed = report.commitments_challenged / report.submitted
    sigma = math.sqrt(expected * (1 - expected) / report.submitted)
    assert abs(observed - expected) <= 3 * sigma, (
        f"empirical {observed:.4f} vs analytical {expected:.4f} (sigma {sigma:.4f})"
    )
    elapsed = _elapsed(t_start)
    print(f"PASS empirical-analytical-bridge: {report.submitted} commitments, "
          f"observed {observed:.4f} vs closed form {expected:.4f} "
          f"(|z|={abs(observed - expected) / sigma:.2f}) [{elapsed:.1f}s]")
