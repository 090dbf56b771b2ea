"""Toy deterministic state-transition function and diff verification.

Real off-chain execution is replaced by a running checksum: applying a
transaction payload to an account maps its data to sha256(data || payload).
That keeps re-execution exact and cheap, which is all a verifier needs to
decide whether a committed diff matches the published transaction record.
"""

from __future__ import annotations

import enum
import hashlib
import random
from dataclasses import dataclass
from typing import Iterable, Mapping

from .accounts import AccountDiff, AccountId, AccountState


@dataclass(frozen=True)
class EphemeralTxn:
    """One off-chain transaction: a payload applied to a single account."""

    account: AccountId
    payload: bytes


@dataclass(frozen=True)
class DaRecord:
    """Published transaction data for one commitment, keyed by pointer."""

    pointer: str
    txns: tuple[EphemeralTxn, ...]


class VerifyOutcome(enum.Enum):
    VALID = "valid"
    INVALID = "invalid"
    DATA_UNAVAILABLE = "data_unavailable"


def apply_txn(data: bytes, payload: bytes) -> bytes:
    return hashlib.sha256(data + payload).digest()


def replay(pre_data: Mapping[AccountId, bytes], txns: Iterable[EphemeralTxn]) -> dict[AccountId, bytes]:
    """Replay transactions in order; returns end-state bytes for touched accounts."""
    state = dict(pre_data)
    touched: dict[AccountId, bytes] = {}
    for txn in txns:
        state[txn.account] = apply_txn(state.get(txn.account, b""), txn.payload)
        touched[txn.account] = state[txn.account]
    return touched


def honest_diffs(
    pre_states: Mapping[AccountId, AccountState], txns: Iterable[EphemeralTxn]
) -> tuple[AccountDiff, ...]:
    """The diff bundle a correct operator commits for these transactions."""
    end = replay({aid: st.data for aid, st in pre_states.items()}, txns)
    return tuple(
        AccountDiff(aid, data, pre_states[aid].version + 1) for aid, data in end.items()
    )


def corrupt_diffs(diffs: tuple[AccountDiff, ...], rng: random.Random) -> tuple[AccountDiff, ...]:
    """Flip one byte of one diff; the result never matches an honest replay."""
    if not diffs:
        raise ValueError("cannot corrupt an empty diff bundle")
    idx = rng.randrange(len(diffs))
    target = diffs[idx]
    data = bytearray(target.new_data or b"\x00")
    pos = rng.randrange(len(data))
    data[pos] ^= rng.randint(1, 255)
    corrupted = AccountDiff(target.account, bytes(data), target.new_version)
    return diffs[:idx] + (corrupted,) + diffs[idx + 1 :]


def verify_diff(
    pre_states: Iterable[AccountState],
    diffs: tuple[AccountDiff, ...],
    da_record: DaRecord | None,
) -> VerifyOutcome:
    """Re-execute the published transactions and compare with the commitment.

    A missing DA record is its own outcome: honest challengers treat it as
    grounds to challenge, since the diff cannot be checked at all.
    """
    if da_record is None:
        return VerifyOutcome.DATA_UNAVAILABLE
    pre = {st.account: st for st in pre_states}
    expected = replay({aid: st.data for aid, st in pre.items()}, da_record.txns)
    committed = {d.account: d for d in diffs}
    if set(expected) != set(committed):
        return VerifyOutcome.INVALID
    for aid, data in expected.items():
        diff = committed[aid]
        if diff.new_data != data:
            return VerifyOutcome.INVALID
        if aid not in pre or diff.new_version != pre[aid].version + 1:
            return VerifyOutcome.INVALID
    return VerifyOutcome.VALID
