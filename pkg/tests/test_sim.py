"""Scenario simulator: liveness, safety, censorship, probes, determinism."""

import math
import random

import pytest

import dynproof as dp
from dynproof.errors import ConfigurationError

SCHED = dp.FinalitySchedule(t0_ms=500, r_t=4, c0=4, r_c=0.7, max_step=6)


def _honest_population(n=4):
    return (dp.operator_spec("op-1"),) + tuple(dp.challenger_spec(f"ch-{i}") for i in range(n))


# -- sampling -----------------------------------------------------------------

def test_sample_whole_pool():
    pool = [dp.NodeId(f"n{i}", dp.NodeRole.CHALLENGER) for i in range(100)]
    assert dp.sample_challengers(pool, 100, random.Random(1)) == frozenset(pool)


def test_sample_zero_is_empty():
    pool = [dp.NodeId("n0", dp.NodeRole.CHALLENGER)]
    assert dp.sample_challengers(pool, 0, random.Random(1)) == frozenset()


def test_sample_deterministic_per_seed():
    pool = [dp.NodeId(f"n{i}", dp.NodeRole.CHALLENGER) for i in range(50)]
    a = dp.sample_challengers(pool, 10, random.Random(42))
    b = dp.sample_challengers(pool, 10, random.Random(42))
    assert a == b


def test_sample_larger_than_pool_rejected():
    pool = [dp.NodeId("n0", dp.NodeRole.CHALLENGER)]
    with pytest.raises(ConfigurationError):
        dp.sample_challengers(pool, 2, random.Random(1))


# -- liveness -------------------------------------------------------------------

def test_all_honest_finalizes_every_commitment_at_step_zero():
    config = dp.ScenarioConfig(seed=1, duration_ms=10_000, schedule=SCHED,
                               population=_honest_population())
    report = dp.run_scenario(config)
    assert report.submitted == 10
    assert report.finalized == 10
    assert report.pending == 0
    assert report.finalization_steps == {0: 10}
    assert report.latency_p50_ms == report.latency_max_ms == 500


def test_cadence_shorter_than_window_skips_slots():
    config = dp.ScenarioConfig(seed=1, duration_ms=3_000, commitment_cadence_ms=300,
                               schedule=SCHED, population=_honest_population())
    report = dp.run_scenario(config)
    assert report.skipped_slots > 0
    assert report.finalized == report.submitted


# -- safety ----------------------------------------------------------------------

def _fraud_population(extra_lazy=0):
    members = [dp.operator_spec("op-1", fraud_rate=0.6)]
    members += [dp.challenger_spec(f"ch-{i}") for i in range(4)]
    members += [dp.lazy_spec(f"lz-{i}") for i in range(extra_lazy)]
    return tuple(members)


def test_fraud_never_finalizes_with_honest_watcher():
    config = dp.ScenarioConfig(seed=3, duration_ms=30_000, schedule=SCHED,
                               population=_fraud_population(), dispute_latency_ms=50)
    report = dp.run_scenario(config)
    assert report.fraud_attempted > 0
    assert report.fraud_finalized == 0
    assert report.fraud_caught == report.fraud_attempted
    assert report.challenges_upheld >= report.fraud_caught


def test_false_challenges_do_not_block_settlement():
    # lazy nodes with p_verify > 0 never challenge valid diffs, so force a
    # false challenge by injecting one through the protocol mid-run is out of
    # scope here; instead check rejected-challenge accounting stays zero in a
    # clean run
    config = dp.ScenarioConfig(seed=5, duration_ms=10_000, schedule=SCHED,
                               population=_honest_population())
    report = dp.run_scenario(config)
    assert report.challenges_rejected == 0
    assert report.commitments_challenged == 0


# -- censorship --------------------------------------------------------------------

@pytest.mark.parametrize("k", [1, 2])
def test_sign_off_censorship_delays_by_k_steps(k):
    population = _honest_population() + (dp.censor_spec("cz", budget=k * SCHED.c0),)
    config = dp.ScenarioConfig(seed=7, duration_ms=2_000, commitment_cadence_ms=2_000,
                               schedule=SCHED, population=population)
    report = dp.run_scenario(config)
    assert report.submitted == 1
    assert report.finalized == 1
    assert list(report.finalization_steps) == [k]
    assert report.suppressed_events == k * SCHED.c0
    # cumulative latency is exactly sum of the first k+1 window durations
    assert report.latency_max_ms == dp.cumulative_duration(k, SCHED)


def test_censored_fraud_still_never_finalizes():
    population = _fraud_population() + (dp.censor_spec("cz", budget=10_000),)
    config = dp.ScenarioConfig(seed=11, duration_ms=20_000, schedule=SCHED,
                               population=population, dispute_latency_ms=50)
    report = dp.run_scenario(config)
    assert report.fraud_attempted > 0
    assert report.fraud_finalized == 0


# -- probes ------------------------------------------------------------------------

def test_lazy_signers_slashed_honest_never():
    population = (
        dp.operator_spec("op-1"),
        dp.lazy_spec("lz-0"), dp.lazy_spec("lz-1"),
        dp.challenger_spec("ch-0"),
    )
    schedule = dp.FinalitySchedule(t0_ms=500, r_t=4, c0=3, r_c=0.7, max_step=6)
    config = dp.ScenarioConfig(seed=13, duration_ms=30_000, probe_rate=0.5, schedule=schedule,
                               population=population, dispute_latency_ms=50)
    report = dp.run_scenario(config)
    assert report.probes_issued > 0
    lazy_names = {"lz-0", "lz-1"}
    slashed = [e for e in report.world.ledger.events if e.reason is dp.SlashReason.LAZY_PROBE_FAILURE]
    assert slashed, "some lazy node should have signed a probe"
    assert all(e.party.name in lazy_names for e in slashed)
    # every lazy node that signed a decoy was slashed for it
    for cid, probe in report.world.probes.items():
        window = report.world.windows[cid]
        lazy_signers = {n for n in window.sign_offs if n.name in lazy_names}
        slashed_here = {s.party for s in probe.slashes
                        if s.reason is dp.SlashReason.LAZY_PROBE_FAILURE}
        assert lazy_signers == slashed_here


def test_probes_do_not_count_as_commitments():
    population = (dp.operator_spec("op-1"), dp.challenger_spec("ch-0"))
    schedule = dp.FinalitySchedule(t0_ms=500, r_t=4, c0=1, r_c=0.7, max_step=4)
    config = dp.ScenarioConfig(seed=17, duration_ms=20_000, probe_rate=1.0, schedule=schedule,
                               population=population, dispute_latency_ms=50)
    report = dp.run_scenario(config)
    assert report.probes_issued > 0
    assert report.submitted == 0
    assert report.fraud_attempted == 0


# -- determinism ----------------------------------------------------------------------

def _messy_config(seed):
    population = _fraud_population(extra_lazy=2) + (dp.censor_spec("cz", budget=20),)
    return dp.ScenarioConfig(seed=seed, duration_ms=25_000, probe_rate=0.3, schedule=SCHED,
                             population=population, dispute_latency_ms=70)


def test_same_seed_identical_trace_and_report():
    a = dp.run_scenario(_messy_config(21))
    b = dp.run_scenario(_messy_config(21))
    assert a.trace_sha256 == b.trace_sha256
    assert a.to_dict() == b.to_dict()


def test_different_seeds_diverge():
    a = dp.run_scenario(_messy_config(21))
    b = dp.run_scenario(_messy_config(22))
    assert a.trace_sha256 != b.trace_sha256


# -- report and trace audits ---------------------------------------------------------

def test_report_counts_are_consistent():
    report = dp.run_scenario(_messy_config(23))
    assert report.submitted == report.finalized + report.reverted + report.pending


def test_every_finalization_preceded_by_enough_sign_offs():
    report = dp.run_scenario(_messy_config(25))
    sign_offs_seen: dict[int, int] = {}
    for record in report.trace.records:
        if record["kind"] == "sign_off":
            sign_offs_seen[record["commitment"]] = record["sign_offs"]
        elif record["kind"] == "finalized":
            assert record["sign_offs"] >= record["required"]
            assert sign_offs_seen.get(record["commitment"], 0) >= record["required"]


def test_trace_timestamps_monotone():
    report = dp.run_scenario(_messy_config(27))
    times = [r["ts"] for r in report.trace.records]
    assert times == sorted(times)


# -- empirical vs analytical ------------------------------------------------------------

def test_empirical_challenge_rate_matches_closed_form_smoke():
    """Policies mirror the probability model: fraud rate P(F), per-node
    challenge probability P(C_i) via p_online, detection and window certain."""
    n_nodes, p_node, p_fraud = 8, 0.2, 0.3
    schedule = dp.FinalitySchedule(t0_ms=500, r_t=4, c0=0, r_c=1, max_step=2)
    population = (dp.operator_spec("op-1", fraud_rate=p_fraud, balance=10**6),) + tuple(
        dp.challenger_spec(f"ch-{i}", p_online=p_node) for i in range(n_nodes)
    )
    config = dp.ScenarioConfig(
        seed=31, duration_ms=2_000 * 600, commitment_cadence_ms=600, schedule=schedule,
        population=population, dispute_latency_ms=50, operator_bond=100, operator_slash=10,
    )
    report = dp.run_scenario(config)
    assert report.submitted == 2_000
    params = dp.SecurityParams(p_fraud, 1.0, 1.0, n_nodes, p_node)
    expected = dp.p_challenge(params)
    observed = report.commitments_challenged / report.submitted
    sigma = math.sqrt(expected * (1 - expected) / report.submitted)
    assert abs(observed - expected) <= 3 * sigma
