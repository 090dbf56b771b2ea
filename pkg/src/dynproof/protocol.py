"""Assert/challenge settlement state machine over delegated accounts.

One World is one base layer: accounts, delegations, in-flight state
commitments with their challenge windows, the bond ledger, and the
transition trace. All mutations flow through the methods below on a
single logical writer; given the same initial state, call sequence, and
RNG seed, the resulting trace is byte-identical.

Lifecycle: delegate accounts to an operator, the operator submits a
commitment of account diffs, a challenge window opens at step 0, sampled
challengers sign off (or anyone challenges). At each deadline the window
either finalizes the bundle atomically, extends to the next step with a
longer duration and a lower threshold, or stays blocked while a dispute
is open. Dispute verdicts are injected; internals of the dispute game
live elsewhere.
"""

from __future__ import annotations

import enum
import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .accounts import AccountDiff, AccountId, AccountState
from .errors import (
    AuthorizationError,
    BondError,
    BundleRevertError,
    BusyError,
    ConfigurationError,
    ConflictError,
    InvariantViolation,
    NotDueError,
    NotSelectedError,
    RoleConflictError,
    StateError,
    TooLateError,
    UnknownAccountError,
)
from .execution import DaRecord, EphemeralTxn, corrupt_diffs, honest_diffs
from .ledger import BondLedger, BondPurpose, EconomicsConfig, SlashEvent, SlashReason
from .nodes import NodeId
from .probes import Probe, ProbeResponse, assess_probe
from .sampling import sample_challengers
from .schedule import FinalitySchedule, required_challengers, window_duration
from .trace import TraceLog


class DelegationStatus(enum.Enum):
    ACTIVE = "active"
    UNDELEGATED = "undelegated"


class CommitmentStatus(enum.Enum):
    PENDING = "pending"
    DISPUTED = "disputed"
    FINALIZED = "finalized"
    REVERTED = "reverted"


class ChallengeStatus(enum.Enum):
    OPEN = "open"
    UPHELD = "upheld"
    REJECTED = "rejected"


class DisputeOutcome(enum.Enum):
    FRAUD_PROVEN = "fraud_proven"
    CHALLENGE_INVALID = "challenge_invalid"


class WindowOutcome(enum.Enum):
    FINALIZED = "finalized"
    EXTENDED = "extended"
    BLOCKED = "blocked"
    PROBE_CLOSED = "probe_closed"


# Legal commitment status moves. Pending->Pending is a window extension,
# Disputed->Pending a rejected challenge resuming the old window.
_EDGES = {
    (CommitmentStatus.PENDING, CommitmentStatus.DISPUTED),
    (CommitmentStatus.PENDING, CommitmentStatus.FINALIZED),
    (CommitmentStatus.PENDING, CommitmentStatus.PENDING),
    (CommitmentStatus.PENDING, CommitmentStatus.REVERTED),
    (CommitmentStatus.DISPUTED, CommitmentStatus.PENDING),
    (CommitmentStatus.DISPUTED, CommitmentStatus.REVERTED),
}


@dataclass
class DelegationRecord:
    record_id: int
    accounts: frozenset[AccountId]
    operator: NodeId
    schedule: FinalitySchedule
    challenger_pool: tuple[NodeId, ...]
    max_lifetime_ms: int
    created_at: int
    update_frequency_ms: int = 0
    status: DelegationStatus = DelegationStatus.ACTIVE


@dataclass
class Commitment:
    commitment_id: int
    operator: NodeId
    diffs: tuple[AccountDiff, ...]
    da_pointer: str | None
    delegation: DelegationRecord
    submitted_at: int
    status: CommitmentStatus = CommitmentStatus.PENDING
    decoy: bool = False  # internally non-finalizable; invisible to policies


@dataclass
class ChallengeWindow:
    commitment_id: int
    window_seq: int
    step: int
    opened_at: int
    deadline: int
    required: int
    sampled_challengers: frozenset[NodeId]
    sign_offs: set[NodeId] = field(default_factory=set)
    challenges: list[int] = field(default_factory=list)


@dataclass
class Challenge:
    challenge_id: int
    commitment_id: int
    challenger: NodeId
    raised_at: int
    bond: int
    status: ChallengeStatus = ChallengeStatus.OPEN


@dataclass(frozen=True)
class DisputeVerdict:
    challenge_id: int
    outcome: DisputeOutcome


class World:
    def __init__(
        self,
        econ: EconomicsConfig | None = None,
        rng: random.Random | None = None,
        seed: int = 0,
        trace: TraceLog | None = None,
    ):
        self.econ = econ if econ is not None else EconomicsConfig()
        self.rng = rng if rng is not None else random.Random(seed)
        self.ledger = BondLedger()
        self.trace = trace if trace is not None else TraceLog()
        self.accounts: dict[AccountId, AccountState] = {}
        self.delegations: dict[int, DelegationRecord] = {}
        self.commitments: dict[int, Commitment] = {}
        self.windows: dict[int, ChallengeWindow] = {}
        self.challenges: dict[int, Challenge] = {}
        self.probes: dict[int, Probe] = {}
        self.da_store: dict[str, DaRecord] = {}
        self._inflight_accounts: set[AccountId] = set()
        self._open_commitments: set[int] = set()
        self._challenges_by_commitment: dict[int, list[int]] = {}
        self._ids = itertools.count(1)
        self._window_seq = itertools.count(1)

    # -- setup ------------------------------------------------------------

    def create_account(self, account: AccountId, data: bytes = b"") -> AccountState:
        if account in self.accounts:
            raise ConflictError(f"{account!r} already exists")
        state = AccountState(account=account, data=data)
        self.accounts[account] = state
        return state

    def register_da(self, record: DaRecord) -> None:
        self.da_store[record.pointer] = record

    # -- delegation -------------------------------------------------------

    def delegate(
        self,
        accounts: Iterable[AccountId],
        operator: NodeId,
        schedule: FinalitySchedule,
        pool: Sequence[NodeId],
        max_lifetime_ms: int,
        now: int,
        update_frequency_ms: int = 0,
    ) -> DelegationRecord:
        account_set = frozenset(accounts)
        if not account_set:
            raise ConfigurationError("delegation needs at least one account")
        if max_lifetime_ms <= 0:
            raise ConfigurationError(f"max_lifetime_ms must be > 0, got {max_lifetime_ms}")
        if len(set(pool)) != len(pool):
            raise ConfigurationError("challenger pool contains duplicates")
        if len(pool) < schedule.c0:
            raise ConfigurationError(
                f"challenger pool of {len(pool)} cannot satisfy c0={schedule.c0}"
            )
        for account in account_set:
            state = self.accounts.get(account)
            if state is None:
                raise UnknownAccountError(f"{account!r} does not exist")
            if state.delegated:
                raise ConflictError(f"{account!r} is already delegated")
        record = DelegationRecord(
            record_id=next(self._ids),
            accounts=account_set,
            operator=operator,
            schedule=schedule,
            challenger_pool=tuple(pool),
            max_lifetime_ms=max_lifetime_ms,
            created_at=now,
            update_frequency_ms=update_frequency_ms,
        )
        for account in account_set:
            self.accounts[account].delegated = True
        if self.econ.operator_bond > 0:
            self.ledger.post_bond(operator, self.econ.operator_bond, BondPurpose.OPERATOR_BOND)
        self.delegations[record.record_id] = record
        self.trace.append("delegated", ts=now, status=record.status.value)
        return record

    def undelegate(self, record: DelegationRecord, now: int) -> tuple[AccountId, ...]:
        if record.status is not DelegationStatus.ACTIVE:
            raise StateError("delegation is not active")
        busy = [
            cid
            for cid in self._open_commitments
            if self.commitments[cid].delegation is record
        ]
        if busy:
            raise BusyError(f"commitments {sorted(busy)} still in flight")
        for account in record.accounts:
            self.accounts[account].delegated = False
        record.status = DelegationStatus.UNDELEGATED
        held = self.ledger.escrowed(record.operator, BondPurpose.OPERATOR_BOND)
        if self.econ.operator_bond > 0 and held > 0:
            self.ledger.release_bond(
                record.operator, BondPurpose.OPERATOR_BOND, min(held, self.econ.operator_bond)
            )
        self.trace.append("undelegated", ts=now, status=record.status.value)
        return tuple(sorted(record.accounts, key=lambda a: a.raw))

    # -- commitments ------------------------------------------------------

    def submit_commitment(
        self,
        record: DelegationRecord,
        operator: NodeId,
        diffs: Sequence[AccountDiff],
        da_pointer: str | None,
        now: int,
    ) -> tuple[Commitment, ChallengeWindow]:
        return self._submit(record, operator, tuple(diffs), da_pointer, now, decoy=False)

    def _submit(
        self,
        record: DelegationRecord,
        operator: NodeId,
        diffs: tuple[AccountDiff, ...],
        da_pointer: str | None,
        now: int,
        decoy: bool,
        targets: frozenset[NodeId] | None = None,
    ) -> tuple[Commitment, ChallengeWindow]:
        if record.status is not DelegationStatus.ACTIVE:
            raise StateError("delegation is not active")
        if operator != record.operator:
            raise AuthorizationError(f"{operator!r} is not the delegation operator")
        if not diffs:
            raise ConfigurationError("commitment needs at least one diff")
        touched = [d.account for d in diffs]
        if len(set(touched)) != len(touched):
            raise ConflictError("multiple diffs for one account in a single bundle")
        for account in touched:
            if account not in record.accounts:
                raise UnknownAccountError(f"{account!r} is not delegated under this record")
        overlap = set(touched) & self._inflight_accounts
        if overlap:
            raise ConflictError(f"accounts {sorted(a.label or a.raw.hex()[:8] for a in overlap)} already have an in-flight commitment")
        schedule = record.schedule
        commitment = Commitment(
            commitment_id=next(self._ids),
            operator=operator,
            diffs=diffs,
            da_pointer=da_pointer,
            delegation=record,
            submitted_at=now,
            decoy=decoy,
        )
        sampled = (
            frozenset(targets)
            if targets is not None
            else sample_challengers(record.challenger_pool, schedule.c0, self.rng)
        )
        window = ChallengeWindow(
            commitment_id=commitment.commitment_id,
            window_seq=next(self._window_seq),
            step=0,
            opened_at=now,
            deadline=now + window_duration(0, schedule),
            required=required_challengers(0, schedule),
            sampled_challengers=sampled,
        )
        self.commitments[commitment.commitment_id] = commitment
        self.windows[commitment.commitment_id] = window
        self._challenges_by_commitment[commitment.commitment_id] = []
        self._inflight_accounts.update(touched)
        self._open_commitments.add(commitment.commitment_id)
        self.trace.append(
            "probe_issued" if decoy else "submitted",
            ts=now,
            commitment=commitment.commitment_id,
            step=0,
            sign_offs=0,
            required=window.required,
            status=commitment.status.value,
        )
        return commitment, window

    def issue_probe(
        self,
        record: DelegationRecord,
        now: int,
        targets: frozenset[NodeId] | None = None,
    ) -> Probe:
        """Push a decoy with a corrupted diff through the commitment pipeline."""
        if targets is not None and not targets:
            raise ConfigurationError("probe needs at least one target")
        ordered = sorted(record.accounts, key=lambda a: a.raw)
        victim = self.rng.choice(ordered)
        txns = (EphemeralTxn(victim, self.rng.randbytes(8)),)
        pre = {victim: self.accounts[victim]}
        decoy_diffs = corrupt_diffs(honest_diffs(pre, txns), self.rng)
        pointer = f"da-{next(self._ids)}"
        self.register_da(DaRecord(pointer, txns))
        commitment, window = self._submit(
            record, record.operator, decoy_diffs, pointer, now, decoy=True, targets=targets
        )
        probe = Probe(
            probe_id=next(self._ids),
            commitment_id=commitment.commitment_id,
            operator=record.operator,
            targets=window.sampled_challengers,
            issued_at=now,
        )
        self.probes[commitment.commitment_id] = probe
        return probe

    # -- window actions ---------------------------------------------------

    def current_window(self, commitment_id: int) -> ChallengeWindow:
        return self.windows[commitment_id]

    def has_inflight(self, record: DelegationRecord) -> bool:
        return any(account in self._inflight_accounts for account in record.accounts)

    def _commitment(self, commitment_id: int) -> Commitment:
        commitment = self.commitments.get(commitment_id)
        if commitment is None:
            raise StateError(f"unknown commitment {commitment_id}")
        return commitment

    def has_challenged(self, commitment_id: int, node: NodeId) -> bool:
        return any(
            self.challenges[cid].challenger == node
            for cid in self._challenges_by_commitment[commitment_id]
        )

    def _open_challenges(self, commitment_id: int) -> list[Challenge]:
        return [
            self.challenges[cid]
            for cid in self._challenges_by_commitment[commitment_id]
            if self.challenges[cid].status is ChallengeStatus.OPEN
        ]

    def sign_off(self, commitment_id: int, challenger: NodeId, now: int) -> ChallengeWindow:
        commitment = self._commitment(commitment_id)
        window = self.windows[commitment_id]
        if commitment.status is not CommitmentStatus.PENDING:
            raise StateError(f"commitment is {commitment.status.value}, not pending")
        if challenger not in window.sampled_challengers:
            raise NotSelectedError(f"{challenger!r} is not in the sampled challenger set")
        if now > window.deadline:
            raise TooLateError(f"sign-off at {now} after deadline {window.deadline}")
        if self.has_challenged(commitment_id, challenger):
            raise RoleConflictError(f"{challenger!r} already challenged this commitment")
        if challenger not in window.sign_offs:
            window.sign_offs.add(challenger)
            self.trace.append(
                "sign_off",
                ts=now,
                commitment=commitment_id,
                step=window.step,
                sign_offs=len(window.sign_offs),
                required=window.required,
                status=commitment.status.value,
            )
        return window

    def raise_challenge(
        self, commitment_id: int, challenger: NodeId, bond: int, now: int
    ) -> Challenge:
        commitment = self._commitment(commitment_id)
        window = self.windows[commitment_id]
        if commitment.status is not CommitmentStatus.PENDING:
            raise StateError(f"commitment is {commitment.status.value}, not pending")
        if now > window.deadline:
            raise TooLateError(f"challenge at {now} after deadline {window.deadline}")
        minimum = max(1, self.econ.min_challenger_bond)
        if bond < minimum:
            raise BondError(f"bond {bond} below minimum {minimum}")
        self.ledger.post_bond(challenger, bond, BondPurpose.CHALLENGER_BOND)
        challenge = Challenge(
            challenge_id=next(self._ids),
            commitment_id=commitment_id,
            challenger=challenger,
            raised_at=now,
            bond=bond,
        )
        self.challenges[challenge.challenge_id] = challenge
        self._challenges_by_commitment[commitment_id].append(challenge.challenge_id)
        window.challenges.append(challenge.challenge_id)
        self._set_status(commitment, CommitmentStatus.DISPUTED)
        self.trace.append(
            "challenged",
            ts=now,
            commitment=commitment_id,
            step=window.step,
            sign_offs=len(window.sign_offs),
            required=window.required,
            status=commitment.status.value,
        )
        return challenge

    def resolve_dispute(self, verdict: DisputeVerdict, now: int) -> CommitmentStatus:
        challenge = self.challenges.get(verdict.challenge_id)
        if challenge is None:
            raise StateError(f"unknown challenge {verdict.challenge_id}")
        if challenge.status is not ChallengeStatus.OPEN:
            raise StateError(f"challenge already {challenge.status.value}")
        commitment = self._commitment(challenge.commitment_id)
        if commitment.status is not CommitmentStatus.DISPUTED:
            raise InvariantViolation(
                f"open challenge on a {commitment.status.value} commitment", len(self.trace)
            )
        window = self.windows[commitment.commitment_id]
        operator = commitment.operator
        if verdict.outcome is DisputeOutcome.FRAUD_PROVEN:
            challenge.status = ChallengeStatus.UPHELD
            # Refund capped at what is still escrowed: probe penalties share
            # the challenger-bond pot and may have shrunk it meanwhile.
            refund = min(
                challenge.bond,
                self.ledger.escrowed(challenge.challenger, BondPurpose.CHALLENGER_BOND),
            )
            if refund:
                self.ledger.release_bond(challenge.challenger, BondPurpose.CHALLENGER_BOND, refund)
            held = self.ledger.escrowed(operator, BondPurpose.OPERATOR_BOND)
            amount = held if self.econ.operator_slash is None else min(held, self.econ.operator_slash)
            self.ledger.apply_verdict(
                SlashEvent(
                    party=operator,
                    amount=amount,
                    reason=SlashReason.FRAUD_PROVEN,
                    reward_to=challenge.challenger,
                    reward_share=self.econ.reward_share,
                )
            )
            self._set_status(commitment, CommitmentStatus.REVERTED)
            self._release_inflight(commitment)
        else:
            challenge.status = ChallengeStatus.REJECTED
            held = self.ledger.escrowed(challenge.challenger, BondPurpose.CHALLENGER_BOND)
            wanted = challenge.bond if self.econ.false_challenge_slash is None else self.econ.false_challenge_slash
            self.ledger.apply_verdict(
                SlashEvent(
                    party=challenge.challenger,
                    amount=min(held, wanted),
                    reason=SlashReason.FALSE_CHALLENGE,
                    reward_to=operator,
                    reward_share=self.econ.reward_share,
                )
            )
            # The old window resumes untouched: a rejected challenge must not
            # buy the operator or the challenger any extra time.
            self._set_status(commitment, CommitmentStatus.PENDING)
        self.trace.append(
            "verdict",
            ts=now,
            commitment=commitment.commitment_id,
            step=window.step,
            sign_offs=len(window.sign_offs),
            required=window.required,
            status=commitment.status.value,
        )
        if commitment.decoy and commitment.status is CommitmentStatus.REVERTED:
            self._close_probe(commitment, now)
        return commitment.status

    # -- evaluation -------------------------------------------------------

    def evaluate_window(
        self, commitment_id: int, now: int
    ) -> tuple[WindowOutcome, ChallengeWindow | None]:
        commitment = self._commitment(commitment_id)
        window = self.windows[commitment_id]
        if commitment.status in (CommitmentStatus.FINALIZED, CommitmentStatus.REVERTED):
            raise StateError(f"commitment already {commitment.status.value}")
        if now < window.deadline:
            raise NotDueError(f"deadline {window.deadline} not reached at {now}")
        if commitment.status is CommitmentStatus.DISPUTED:
            self.trace.append(
                "blocked",
                ts=now,
                commitment=commitment_id,
                step=window.step,
                sign_offs=len(window.sign_offs),
                required=window.required,
                status=commitment.status.value,
            )
            return WindowOutcome.BLOCKED, window
        if commitment.decoy:
            self._close_probe(commitment, now)
            return WindowOutcome.PROBE_CLOSED, None
        if len(window.sign_offs) >= window.required:
            self.finalize_bundle(commitment, now)
            return WindowOutcome.FINALIZED, None
        schedule = commitment.delegation.schedule
        # Past max_step the window re-arms at the terminal parameters, which
        # behaves like a traditional long challenge period.
        next_step = min(window.step + 1, schedule.max_step)
        new_window = ChallengeWindow(
            commitment_id=commitment_id,
            window_seq=next(self._window_seq),
            step=next_step,
            opened_at=now,
            deadline=now + window_duration(next_step, schedule),
            required=required_challengers(next_step, schedule),
            sampled_challengers=window.sampled_challengers,
            sign_offs=set(window.sign_offs),
            challenges=list(window.challenges),
        )
        self.windows[commitment_id] = new_window
        self._set_status(commitment, CommitmentStatus.PENDING)
        self.trace.append(
            "extended",
            ts=now,
            commitment=commitment_id,
            step=new_window.step,
            sign_offs=len(new_window.sign_offs),
            required=new_window.required,
            status=commitment.status.value,
        )
        return WindowOutcome.EXTENDED, new_window

    def finalize_bundle(self, commitment: Commitment, now: int) -> tuple[AccountState, ...]:
        """Apply every diff in the bundle, or none of them."""
        window = self.windows[commitment.commitment_id]
        seq = len(self.trace)
        if commitment.decoy:
            raise InvariantViolation("a probe can never finalize", seq)
        if commitment.status is not CommitmentStatus.PENDING:
            raise InvariantViolation(
                f"finalize on a {commitment.status.value} commitment", seq
            )
        if self._open_challenges(commitment.commitment_id):
            raise InvariantViolation("finalize with an open challenge", seq)
        if len(window.sign_offs) < window.required:
            raise InvariantViolation(
                f"finalize with {len(window.sign_offs)}/{window.required} sign-offs", seq
            )
        stale = [
            diff
            for diff in commitment.diffs
            if diff.new_version != self.accounts[diff.account].version + 1
        ]
        if stale:
            self._set_status(commitment, CommitmentStatus.REVERTED)
            self._release_inflight(commitment)
            self.trace.append(
                "reverted",
                ts=now,
                commitment=commitment.commitment_id,
                step=window.step,
                sign_offs=len(window.sign_offs),
                required=window.required,
                status=commitment.status.value,
            )
            raise BundleRevertError(
                f"version conflict on {len(stale)} account(s); whole bundle reverted"
            )
        for diff in commitment.diffs:
            self.accounts[diff.account].apply_diff(diff)
        self._set_status(commitment, CommitmentStatus.FINALIZED)
        self._release_inflight(commitment)
        self.trace.append(
            "finalized",
            ts=now,
            commitment=commitment.commitment_id,
            step=window.step,
            sign_offs=len(window.sign_offs),
            required=window.required,
            status=commitment.status.value,
        )
        return tuple(self.accounts[d.account] for d in commitment.diffs)

    # -- probes -----------------------------------------------------------

    def _close_probe(self, commitment: Commitment, now: int) -> None:
        probe = self.probes[commitment.commitment_id]
        if probe.assessed:
            return
        window = self.windows[commitment.commitment_id]
        responses = {node: ProbeResponse.SIGNED_OFF for node in window.sign_offs}
        assess_probe(self.ledger, probe, responses, self.econ)
        if commitment.status is not CommitmentStatus.REVERTED:
            self._set_status(commitment, CommitmentStatus.REVERTED)
        self._release_inflight(commitment)
        self.trace.append(
            "probe_closed",
            ts=now,
            commitment=commitment.commitment_id,
            step=window.step,
            sign_offs=len(window.sign_offs),
            required=window.required,
            status=commitment.status.value,
        )

    # -- internals --------------------------------------------------------

    def _set_status(self, commitment: Commitment, new: CommitmentStatus) -> None:
        edge = (commitment.status, new)
        if edge not in _EDGES:
            raise InvariantViolation(
                f"illegal status transition {edge[0].value} -> {edge[1].value}",
                len(self.trace),
            )
        commitment.status = new

    def _release_inflight(self, commitment: Commitment) -> None:
        self._inflight_accounts.difference_update(d.account for d in commitment.diffs)
        self._open_commitments.discard(commitment.commitment_id)
