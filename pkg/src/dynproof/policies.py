"""Behavioral node policies for the simulator.

Challenger policies look at a commitment (real or decoy, they cannot
tell) and decide to sign, challenge, or abstain. Honest challengers pay
the cost of actually verifying; lazy ones usually rubber-stamp. The
censoring adversary does not act on commitments at all, it suppresses
other nodes' messages at the event layer.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from typing import Callable

from .errors import ConfigurationError
from .execution import VerifyOutcome


class PolicyKind(enum.Enum):
    HONEST_OPERATOR = "honest_operator"
    FRAUDULENT_OPERATOR = "fraudulent_operator"
    HONEST_CHALLENGER = "honest_challenger"
    LAZY_CHALLENGER = "lazy_challenger"
    CENSORING_ADVERSARY = "censoring_adversary"


CHALLENGER_KINDS = {PolicyKind.HONEST_CHALLENGER, PolicyKind.LAZY_CHALLENGER}
OPERATOR_KINDS = {PolicyKind.HONEST_OPERATOR, PolicyKind.FRAUDULENT_OPERATOR}


class Action(enum.Enum):
    SIGN_OFF = "sign_off"
    CHALLENGE = "challenge"
    ABSTAIN = "abstain"


@dataclass(frozen=True)
class NodePolicy:
    kind: PolicyKind
    p_fraud_attempt: float = 0.0   # fraudulent operator: base corruption rate
    deterrence_scale: int = 0      # fraudulent operator: 0 disables deterrence
    p_online: float = 1.0          # honest challenger: chance of responding at all
    p_verify: float = 1.0          # lazy challenger: chance of doing the real check
    p_suppress: float = 0.0        # censor: per-event suppression probability
    budget: int = 0                # censor: total events it can suppress
    suppress_sign_offs: bool = True
    suppress_challenges: bool = False

    def __post_init__(self):
        for name in ("p_fraud_attempt", "p_online", "p_verify", "p_suppress"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must be in [0, 1], got {value!r}")
        if self.budget < 0:
            raise ConfigurationError(f"censorship budget must be >= 0, got {self.budget}")
        if self.deterrence_scale < 0:
            raise ConfigurationError(f"deterrence_scale must be >= 0, got {self.deterrence_scale}")


def fraud_probability(base_rate: float, bond: int, slash_fraction: float, scale: int) -> float:
    """Effective fraud-attempt probability after economic deterrence.

    Non-increasing in bond * slash_fraction: the more value at risk, the
    less often the operator tries. scale = 0 disables deterrence.
    """
    if scale <= 0:
        return base_rate
    at_risk = max(0.0, bond * slash_fraction)
    return base_rate * math.exp(-at_risk / scale)


def decide_action(
    policy: NodePolicy,
    observation: object,
    verify: Callable[[object], VerifyOutcome],
    rng: random.Random,
) -> Action:
    """One node's response to one observed commitment.

    The verify callable is only invoked on the verification path, so a
    counting oracle can confirm lazy nodes skipped the check.
    """
    if policy.kind is PolicyKind.HONEST_CHALLENGER:
        if rng.random() >= policy.p_online:
            return Action.ABSTAIN
        outcome = verify(observation)
        return Action.SIGN_OFF if outcome is VerifyOutcome.VALID else Action.CHALLENGE
    if policy.kind is PolicyKind.LAZY_CHALLENGER:
        if rng.random() < policy.p_verify:
            outcome = verify(observation)
            return Action.SIGN_OFF if outcome is VerifyOutcome.VALID else Action.CHALLENGE
        return Action.SIGN_OFF
    return Action.ABSTAIN
