"""Bond escrow, slashing, and reward accounting.

Every quantity is an integer number of lamports and the ledger re-checks
conservation (balances + escrow + burned == total supply) after each
mutation, so any accounting bug aborts immediately rather than leaking
value silently.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import EscrowError, InsufficientFundsError, InvariantViolation, ProtocolError
from .nodes import NodeId
from .schedule import RatioLike, exact_ratio


class BondPurpose(enum.Enum):
    OPERATOR_BOND = "operator_bond"
    CHALLENGER_BOND = "challenger_bond"


class SlashReason(enum.Enum):
    FRAUD_PROVEN = "fraud_proven"
    FALSE_CHALLENGE = "false_challenge"
    LAZY_PROBE_FAILURE = "lazy_probe_failure"


# Which escrow pot a slash reason draws from.
SLASH_SOURCE = {
    SlashReason.FRAUD_PROVEN: BondPurpose.OPERATOR_BOND,
    SlashReason.FALSE_CHALLENGE: BondPurpose.CHALLENGER_BOND,
    SlashReason.LAZY_PROBE_FAILURE: BondPurpose.CHALLENGER_BOND,
}


@dataclass(frozen=True)
class SlashEvent:
    """One confiscation, split between a reward recipient and the burn pile.

    Integer split rule: the reward gets floor(amount * reward_share), the
    burn gets the remainder, so conservation is exact.
    """

    party: NodeId
    amount: int
    reason: SlashReason
    reward_to: NodeId | None = None
    reward_share: Fraction = Fraction(0)
    burn_share: Fraction | None = None

    def __post_init__(self):
        share = exact_ratio(self.reward_share, "reward_share")
        object.__setattr__(self, "reward_share", share)
        burn = self.burn_share
        burn = 1 - share if burn is None else exact_ratio(burn, "burn_share")
        object.__setattr__(self, "burn_share", burn)
        if not 0 <= share <= 1:
            raise ValueError(f"reward_share must be in [0, 1], got {share}")
        if share + burn != 1:
            raise ValueError(f"reward_share + burn_share must equal 1, got {share} + {burn}")
        if self.amount < 0:
            raise ValueError(f"slash amount must be >= 0, got {self.amount}")
        if share > 0 and self.reward_to is None:
            raise ValueError("reward_share > 0 requires a reward_to party")

    @property
    def reward_amount(self) -> int:
        return math.floor(self.amount * self.reward_share)

    @property
    def burn_amount(self) -> int:
        return self.amount - self.reward_amount


@dataclass
class EconomicsConfig:
    """Knobs for bonds, slashes, and probe penalties."""

    min_challenger_bond: int = 1
    operator_bond: int = 0          # escrowed at delegation when > 0
    operator_slash: int | None = None   # None: slash the full operator escrow
    false_challenge_slash: int | None = None  # None: slash the challenge bond
    lazy_slash: int = 0
    probe_reward: int = 0
    reward_share: RatioLike = Fraction(1, 2)

    def __post_init__(self):
        self.reward_share = exact_ratio(self.reward_share, "reward_share")


class BondLedger:
    """Balances, per-purpose escrow, and burned total for all parties."""

    def __init__(self):
        self.balances: dict[NodeId, int] = {}
        self.escrow: dict[tuple[NodeId, BondPurpose], int] = {}
        self.burned: int = 0
        self.total_supply: int = 0
        self.events: list[SlashEvent] = []

    def balance(self, party: NodeId) -> int:
        return self.balances.get(party, 0)

    def escrowed(self, party: NodeId, purpose: BondPurpose) -> int:
        return self.escrow.get((party, purpose), 0)

    def mint(self, party: NodeId, amount: int) -> None:
        """Create supply; only meant for world/scenario setup."""
        if amount < 0:
            raise ValueError("mint amount must be >= 0")
        self.balances[party] = self.balance(party) + amount
        self.total_supply += amount
        self._check()

    def post_bond(self, party: NodeId, amount: int, purpose: BondPurpose) -> None:
        if amount <= 0:
            raise ProtocolError(f"bonds must be positive, got {amount}")
        if self.balance(party) < amount:
            raise InsufficientFundsError(
                f"{party!r} has {self.balance(party)}, cannot escrow {amount}"
            )
        self.balances[party] -= amount
        key = (party, purpose)
        self.escrow[key] = self.escrow.get(key, 0) + amount
        self._check()

    def release_bond(self, party: NodeId, purpose: BondPurpose, amount: int) -> None:
        """Return escrowed funds to the party's balance."""
        if amount < 0:
            raise ValueError("release amount must be >= 0")
        key = (party, purpose)
        held = self.escrow.get(key, 0)
        if amount > held:
            raise EscrowError(f"{party!r} holds {held} in {purpose.value}, cannot release {amount}")
        self.escrow[key] = held - amount
        self.balances[party] = self.balance(party) + amount
        self._check()

    def apply_verdict(self, slash: SlashEvent) -> SlashEvent:
        """Confiscate escrow per the slash event and split reward/burn."""
        source = SLASH_SOURCE[slash.reason]
        key = (slash.party, source)
        held = self.escrow.get(key, 0)
        if slash.amount > held:
            raise EscrowError(
                f"slash of {slash.amount} exceeds {slash.party!r} escrow {held} in {source.value}"
            )
        self.escrow[key] = held - slash.amount
        reward = slash.reward_amount
        if reward:
            self.balances[slash.reward_to] = self.balance(slash.reward_to) + reward
        self.burned += slash.burn_amount
        self.events.append(slash)
        self._check()
        return slash

    def snapshot(self) -> dict:
        """Deterministic export: nodes sorted by name."""
        rows = {}
        parties = {p for p in self.balances} | {p for p, _ in self.escrow}
        for party in sorted(parties, key=lambda p: p.name):
            rows[party.name] = {
                "balance": self.balance(party),
                "escrow_operator": self.escrowed(party, BondPurpose.OPERATOR_BOND),
                "escrow_challenger": self.escrowed(party, BondPurpose.CHALLENGER_BOND),
            }
        return {"nodes": rows, "burned": self.burned, "total_supply": self.total_supply}

    def _check(self) -> None:
        held = sum(self.balances.values()) + sum(self.escrow.values()) + self.burned
        if held != self.total_supply:
            raise InvariantViolation(
                f"ledger conservation broken: {held} held vs {self.total_supply} supply"
            )
        if any(v < 0 for v in self.balances.values()):
            raise InvariantViolation("negative balance")
        if any(v < 0 for v in self.escrow.values()):
            raise InvariantViolation("negative escrow")
