"""Seeded discrete-event simulator driving the protocol with node policies.

Virtual time only, integer milliseconds. Events process in (timestamp,
insertion sequence) order and handlers may only schedule events at the
same or a later timestamp, so a scenario is a pure function of its
config: same config, same seed, byte-identical trace.
"""

from __future__ import annotations

import heapq
import itertools
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .accounts import AccountId
from .errors import InvariantViolation, ProtocolError
from .execution import DaRecord, EphemeralTxn, VerifyOutcome, corrupt_diffs, honest_diffs, verify_diff
from .ledger import BondPurpose, SlashReason
from .nodes import NodeId
from .policies import Action, PolicyKind, decide_action, fraud_probability
from .protocol import (
    Commitment,
    CommitmentStatus,
    DelegationRecord,
    DisputeOutcome,
    DisputeVerdict,
    WindowOutcome,
    World,
)
from .scenario import NodeSpec, ScenarioConfig, scenario_to_dict
from .schedule import cumulative_duration
from .trace import TraceLog


class EventKind(Enum):
    SUBMIT_COMMITMENT = "submit_commitment"
    SIGN_OFF = "sign_off"
    RAISE_CHALLENGE = "raise_challenge"
    WINDOW_DEADLINE = "window_deadline"
    DISPUTE_VERDICT_ARRIVES = "dispute_verdict_arrives"
    PROBE_ISSUED = "probe_issued"


@dataclass
class SimReport:
    """Aggregate outcome of one scenario run."""

    config: dict
    submitted: int
    finalized: int
    reverted: int
    pending: int
    skipped_slots: int
    fraud_attempted: int
    fraud_finalized: int
    fraud_caught: int
    probes_issued: int
    probes_detected: int
    lazy_slash_events: int
    challenges_raised: int
    challenges_upheld: int
    challenges_rejected: int
    commitments_challenged: int
    dropped_actions: int
    suppressed_events: int
    latency_p50_ms: int | None
    latency_p90_ms: int | None
    latency_max_ms: int | None
    finalization_steps: dict[int, int]
    ledger: dict
    trace_records: int
    trace_sha256: str
    trace: TraceLog = field(repr=False, compare=False)
    world: World = field(repr=False, compare=False)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "config": self.config,
            "commitments": {
                "submitted": self.submitted,
                "finalized": self.finalized,
                "reverted": self.reverted,
                "pending": self.pending,
                "skipped_slots": self.skipped_slots,
            },
            "fraud": {
                "attempted": self.fraud_attempted,
                "finalized": self.fraud_finalized,
                "caught": self.fraud_caught,
            },
            "probes": {
                "issued": self.probes_issued,
                "detected": self.probes_detected,
                "lazy_slash_events": self.lazy_slash_events,
            },
            "challenges": {
                "raised": self.challenges_raised,
                "upheld": self.challenges_upheld,
                "rejected": self.challenges_rejected,
                "commitments_challenged": self.commitments_challenged,
                "dropped_actions": self.dropped_actions,
            },
            "censorship": {"suppressed_events": self.suppressed_events},
            "latency_ms": {
                "p50": self.latency_p50_ms,
                "p90": self.latency_p90_ms,
                "max": self.latency_max_ms,
            },
            "finalization_steps": {str(k): v for k, v in sorted(self.finalization_steps.items())},
            "ledger": self.ledger,
            "trace": {"records": self.trace_records, "sha256": self.trace_sha256},
        }
        return out


def _percentile(sorted_values: list[int], q: float) -> int | None:
    if not sorted_values:
        return None
    rank = max(1, math.ceil(q * len(sorted_values)))
    return sorted_values[rank - 1]


@dataclass
class _Session:
    spec: NodeSpec
    record: DelegationRecord
    accounts: list[AccountId]
    fraud_p: float


@dataclass
class _Censor:
    spec: NodeSpec
    remaining: int


class Simulator:
    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.rng = random.Random(config.seed)
        self.world = World(econ=config.economics(), rng=self.rng)
        self.queue: list[tuple[int, int, EventKind, Any]] = []
        self._seq = itertools.count()
        self.now = 0
        self.hard_stop = config.max_virtual_time_ms or self._default_hard_stop()
        self.sessions: dict[str, _Session] = {}
        self.censors: list[_Censor] = [_Censor(s, s.policy.budget) for s in config.censors()]
        self.responders = config.responders()
        self.fraudulent: set[int] = set()
        self.challenged: set[int] = set()
        # counters
        self.submitted = 0
        self.finalized = 0
        self.reverted = 0
        self.skipped = 0
        self.fraud_attempted = 0
        self.fraud_finalized = 0
        self.fraud_caught = 0
        self.probes_issued = 0
        self.probes_detected = 0
        self.challenges_raised = 0
        self.challenges_upheld = 0
        self.challenges_rejected = 0
        self.dropped = 0
        self.suppressed = 0
        self.latencies: list[int] = []
        self.steps: dict[int, int] = {}

    def _default_hard_stop(self) -> int:
        span = cumulative_duration(self.config.schedule.max_step, self.config.schedule)
        return self.config.duration_ms + 4 * span + 16 * (self.config.dispute_latency_ms + 1)

    def _push(self, at: int, kind: EventKind, payload: Any) -> None:
        if at < self.now:
            raise InvariantViolation(f"event scheduled in the past: {at} < {self.now}")
        heapq.heappush(self.queue, (at, next(self._seq), kind, payload))

    # -- setup ------------------------------------------------------------

    def setup(self) -> None:
        config = self.config
        for spec in config.population:
            if spec.balance > 0:
                self.world.ledger.mint(spec.node, spec.balance)
        for spec in config.population:
            if spec.node in config.challenger_pool() and config.challenger_stake > 0:
                stake = min(config.challenger_stake, self.world.ledger.balance(spec.node))
                if stake > 0:
                    self.world.ledger.post_bond(spec.node, stake, BondPurpose.CHALLENGER_BOND)
        pool = list(config.challenger_pool())
        for spec in config.operators():
            accounts = []
            for i in range(config.accounts_per_delegation):
                aid = AccountId.from_label(f"{spec.node.name}:acct{i}")
                self.world.create_account(aid)
                accounts.append(aid)
            record = self.world.delegate(
                accounts,
                spec.node,
                config.schedule,
                pool,
                max_lifetime_ms=self.hard_stop + 1,
                now=0,
            )
            slash_fraction = (
                1.0
                if config.operator_slash is None
                else min(1.0, config.operator_slash / config.operator_bond)
                if config.operator_bond > 0
                else 0.0
            )
            fraud_p = fraud_probability(
                spec.policy.p_fraud_attempt,
                config.operator_bond,
                slash_fraction,
                spec.policy.deterrence_scale,
            )
            self.sessions[spec.node.name] = _Session(spec, record, accounts, fraud_p)
            at = config.commitment_cadence_ms
            while at <= config.duration_ms:
                self._push(at, EventKind.SUBMIT_COMMITMENT, spec.node.name)
                at += config.commitment_cadence_ms

    # -- event loop ---------------------------------------------------------

    def run(self) -> SimReport:
        self.setup()
        handlers = {
            EventKind.SUBMIT_COMMITMENT: self._on_submit,
            EventKind.SIGN_OFF: self._on_sign_off,
            EventKind.RAISE_CHALLENGE: self._on_challenge,
            EventKind.WINDOW_DEADLINE: self._on_deadline,
            EventKind.DISPUTE_VERDICT_ARRIVES: self._on_verdict,
            EventKind.PROBE_ISSUED: self._on_probe,
        }
        while self.queue:
            at, _, kind, payload = heapq.heappop(self.queue)
            if at > self.hard_stop:
                break
            self.now = at
            handlers[kind](payload, at)
        return self._report()

    # -- handlers -----------------------------------------------------------

    def _on_submit(self, operator_name: str, now: int) -> None:
        session = self.sessions[operator_name]
        if self.world.has_inflight(session.record):
            self.skipped += 1
            return
        if self.config.probe_rate > 0 and self.rng.random() < self.config.probe_rate:
            self._push(now, EventKind.PROBE_ISSUED, operator_name)
            return
        n_txns = self.rng.randint(1, self.config.txns_per_commitment)
        txns = tuple(
            EphemeralTxn(self.rng.choice(session.accounts), self.rng.randbytes(8))
            for _ in range(n_txns)
        )
        touched = {t.account for t in txns}
        pre = {aid: self.world.accounts[aid] for aid in sorted(touched, key=lambda a: a.raw)}
        diffs = honest_diffs(pre, txns)
        is_fraud = (
            session.spec.policy.kind is PolicyKind.FRAUDULENT_OPERATOR
            and self.rng.random() < session.fraud_p
        )
        if is_fraud:
            diffs = corrupt_diffs(diffs, self.rng)
        pointer = f"da-{operator_name}-{now}"
        self.world.register_da(DaRecord(pointer, txns))
        commitment, window = self.world.submit_commitment(
            session.record, session.spec.node, diffs, pointer, now
        )
        self.submitted += 1
        if is_fraud:
            self.fraudulent.add(commitment.commitment_id)
            self.fraud_attempted += 1
        self._push(window.deadline, EventKind.WINDOW_DEADLINE, (commitment.commitment_id, window.window_seq))
        self._schedule_responses(commitment, window, now)

    def _on_probe(self, operator_name: str, now: int) -> None:
        session = self.sessions[operator_name]
        if self.world.has_inflight(session.record):
            self.skipped += 1
            return
        probe = self.world.issue_probe(session.record, now)
        self.probes_issued += 1
        commitment = self.world.commitments[probe.commitment_id]
        window = self.world.windows[probe.commitment_id]
        self._push(window.deadline, EventKind.WINDOW_DEADLINE, (probe.commitment_id, window.window_seq))
        self._schedule_responses(commitment, window, now)

    def _schedule_responses(self, commitment: Commitment, window, now: int) -> None:
        candidates = [
            spec
            for spec in self.responders
            if spec.node not in window.sign_offs
            and not self.world.has_challenged(commitment.commitment_id, spec.node)
        ]
        self.rng.shuffle(candidates)
        at = now + self.config.verification_latency_ms
        for spec in candidates:
            action = decide_action(spec.policy, commitment, self._verify, self.rng)
            if action is Action.SIGN_OFF and spec.node in window.sampled_challengers:
                self._push(at, EventKind.SIGN_OFF, (commitment.commitment_id, spec.node))
            elif action is Action.CHALLENGE:
                self._push(at, EventKind.RAISE_CHALLENGE, (commitment.commitment_id, spec.node))

    def _verify(self, commitment: Commitment) -> VerifyOutcome:
        da = None
        if commitment.da_pointer is not None:
            da = self.world.da_store.get(commitment.da_pointer)
        pre = [
            self.world.accounts[aid]
            for aid in sorted(commitment.delegation.accounts, key=lambda a: a.raw)
        ]
        return verify_diff(pre, commitment.diffs, da)

    def _censored(self, kind: EventKind, commitment_id: int, now: int) -> bool:
        for censor in self.censors:
            if censor.remaining <= 0:
                continue
            policy = censor.spec.policy
            wants = (kind is EventKind.SIGN_OFF and policy.suppress_sign_offs) or (
                kind is EventKind.RAISE_CHALLENGE and policy.suppress_challenges
            )
            if not wants:
                continue
            if self.rng.random() < policy.p_suppress:
                censor.remaining -= 1
                self.suppressed += 1
                window = self.world.windows.get(commitment_id)
                self.world.trace.append(
                    "suppressed",
                    ts=now,
                    commitment=commitment_id,
                    step=window.step if window else None,
                    sign_offs=len(window.sign_offs) if window else None,
                    required=window.required if window else None,
                )
                return True
        return False

    def _on_sign_off(self, payload: tuple[int, NodeId], now: int) -> None:
        commitment_id, node = payload
        if self._censored(EventKind.SIGN_OFF, commitment_id, now):
            return
        try:
            self.world.sign_off(commitment_id, node, now)
        except ProtocolError:
            self.dropped += 1

    def _on_challenge(self, payload: tuple[int, NodeId], now: int) -> None:
        commitment_id, node = payload
        if self._censored(EventKind.RAISE_CHALLENGE, commitment_id, now):
            return
        try:
            challenge = self.world.raise_challenge(
                commitment_id, node, self.config.challenge_bond, now
            )
        except ProtocolError:
            self.dropped += 1
            return
        self.challenges_raised += 1
        self.challenged.add(commitment_id)
        self._push(
            now + self.config.dispute_latency_ms,
            EventKind.DISPUTE_VERDICT_ARRIVES,
            challenge.challenge_id,
        )

    def _on_verdict(self, challenge_id: int, now: int) -> None:
        challenge = self.world.challenges[challenge_id]
        commitment = self.world.commitments[challenge.commitment_id]
        # The dispute game is ideal: the verdict always matches ground truth.
        invalid = commitment.commitment_id in self.fraudulent or commitment.decoy
        outcome = DisputeOutcome.FRAUD_PROVEN if invalid else DisputeOutcome.CHALLENGE_INVALID
        status = self.world.resolve_dispute(DisputeVerdict(challenge_id, outcome), now)
        if outcome is DisputeOutcome.FRAUD_PROVEN:
            self.challenges_upheld += 1
            if commitment.decoy:
                self.probes_detected += 1
            else:
                self.reverted += 1
                if commitment.commitment_id in self.fraudulent:
                    self.fraud_caught += 1
        else:
            self.challenges_rejected += 1
        if status is CommitmentStatus.PENDING:
            window = self.world.windows[commitment.commitment_id]
            if window.deadline <= now:
                # The deadline passed while the dispute was open: evaluate now.
                self._push(now, EventKind.WINDOW_DEADLINE, (commitment.commitment_id, window.window_seq))

    def _on_deadline(self, payload: tuple[int, int], now: int) -> None:
        commitment_id, window_seq = payload
        commitment = self.world.commitments[commitment_id]
        if commitment.status in (CommitmentStatus.FINALIZED, CommitmentStatus.REVERTED):
            return
        window = self.world.windows[commitment_id]
        if window.window_seq != window_seq:
            return  # stale: the window re-armed since this event was scheduled
        outcome, new_window = self.world.evaluate_window(commitment_id, now)
        if outcome is WindowOutcome.FINALIZED:
            self.finalized += 1
            self.latencies.append(now - commitment.submitted_at)
            self.steps[window.step] = self.steps.get(window.step, 0) + 1
            if commitment_id in self.fraudulent:
                self.fraud_finalized += 1
        elif outcome is WindowOutcome.EXTENDED:
            self._push(new_window.deadline, EventKind.WINDOW_DEADLINE, (commitment_id, new_window.window_seq))
            self._schedule_responses(commitment, new_window, now)
        # BLOCKED: the verdict handler re-arms evaluation when the dispute ends.
        # PROBE_CLOSED: assessment already happened inside the world.

    # -- report ---------------------------------------------------------------

    def _report(self) -> SimReport:
        real = [c for c in self.world.commitments.values() if not c.decoy]
        scan = {
            "submitted": len(real),
            "finalized": sum(1 for c in real if c.status is CommitmentStatus.FINALIZED),
            "reverted": sum(1 for c in real if c.status is CommitmentStatus.REVERTED),
            "pending": sum(
                1 for c in real if c.status in (CommitmentStatus.PENDING, CommitmentStatus.DISPUTED)
            ),
        }
        if scan["submitted"] != self.submitted or scan["finalized"] != self.finalized:
            raise InvariantViolation("report counters diverge from world state", len(self.world.trace))
        if scan["submitted"] != scan["finalized"] + scan["reverted"] + scan["pending"]:
            raise InvariantViolation("submitted != finalized + reverted + pending", len(self.world.trace))
        lazy_events = sum(
            1 for e in self.world.ledger.events if e.reason is SlashReason.LAZY_PROBE_FAILURE
        )
        latencies = sorted(self.latencies)
        return SimReport(
            config=scenario_to_dict(self.config),
            submitted=self.submitted,
            finalized=self.finalized,
            reverted=scan["reverted"],
            pending=scan["pending"],
            skipped_slots=self.skipped,
            fraud_attempted=self.fraud_attempted,
            fraud_finalized=self.fraud_finalized,
            fraud_caught=self.fraud_caught,
            probes_issued=self.probes_issued,
            probes_detected=self.probes_detected,
            lazy_slash_events=lazy_events,
            challenges_raised=self.challenges_raised,
            challenges_upheld=self.challenges_upheld,
            challenges_rejected=self.challenges_rejected,
            commitments_challenged=len(self.challenged),
            dropped_actions=self.dropped,
            suppressed_events=self.suppressed,
            latency_p50_ms=_percentile(latencies, 0.50),
            latency_p90_ms=_percentile(latencies, 0.90),
            latency_max_ms=latencies[-1] if latencies else None,
            finalization_steps=dict(sorted(self.steps.items())),
            ledger=self.world.ledger.snapshot(),
            trace_records=len(self.world.trace),
            trace_sha256=self.world.trace.digest(),
            trace=self.world.trace,
            world=self.world,
        )


def run_scenario(config: ScenarioConfig) -> SimReport:
    """Run one scenario to quiescence (bounded by the hard stop)."""
    return Simulator(config).run()
